#pragma once

// The numbered acceptance suite.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace kolmo::acceptance {

struct Options {
  std::uint64_t seed = 20240611;
  std::set<int> only;  ///< empty runs every criterion
  std::size_t sde_paths = 100000;
  std::size_t blowup_paths = 100000;
};

struct Result {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the selected criteria, printing one line per criterion to out as it
/// finishes. Criterion 12 reruns 10 and 11, so selecting it runs them too.
std::vector<Result> run(const Options& opt, std::ostream& out);

std::string format_line(const Result& r);

}  // namespace kolmo::acceptance

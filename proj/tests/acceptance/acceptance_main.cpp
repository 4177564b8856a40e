#include <iostream>

#include "kolmo/acceptance.hpp"

int main() {
  const auto results = kolmo::acceptance::run(kolmo::acceptance::Options{}, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}

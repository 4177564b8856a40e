#include <doctest.h>

#include <sstream>

#include "kolmo/config.hpp"
#include "kolmo/error.hpp"

using namespace kolmo;

namespace {
Config from(const std::string& s) {
  std::istringstream in(s);
  return Config::parse(in, "test");
}
}  // namespace

TEST_CASE("key value lines with comments") {
  const auto c = from("# header\nq = 145/48   # exponent\n\n delta=0.36\nn_list = 2, 3,4\nd-range = 5:15\nflag = yes\n");
  CHECK(c.rational("q") == Rational(145, 48));
  CHECK(c.rational("delta") == Rational(9, 25));
  CHECK(c.integers("n_list") == std::vector<long long>{2, 3, 4});
  CHECK(c.range("d-range") == std::pair<long long, long long>{5, 15});
  CHECK(c.flag("flag"));
  CHECK(c.number("delta") == doctest::Approx(0.36));
}

TEST_CASE("malformed input is a validation error") {
  auto kind = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::domain;
  };
  CHECK(kind([] { from("no equals sign\n"); }) == ErrorKind::validation);
  CHECK(kind([] { from("a = 1\na = 2\n"); }) == ErrorKind::validation);
  CHECK(kind([] { from(" = 2\n"); }) == ErrorKind::validation);
  const auto c = from("a = 1.5\nb = x\nr = 3:1\n");
  CHECK(kind([&] { c.integer("a"); }) == ErrorKind::validation);
  CHECK(kind([&] { c.rational("b"); }) == ErrorKind::validation);
  CHECK(kind([&] { c.text("missing"); }) == ErrorKind::validation);
  CHECK(kind([&] { c.range("r"); }) == ErrorKind::validation);
  CHECK(kind([&] { c.reject_unknown({"a", "b"}); }) == ErrorKind::validation);
  CHECK_NOTHROW(c.reject_unknown({"a", "b", "r"}));
}

TEST_CASE("line numbers appear in messages") {
  try {
    from("a = 1\n\nbroken\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("test:3") != std::string::npos);
  }
}

TEST_CASE("merge and canonical output") {
  auto c = from("b = 2\na = 1\n");
  c.merge(from("b = 3\n"));
  std::ostringstream out;
  c.write(out);
  CHECK(out.str() == "a = 1\nb = 3\n");
  CHECK(c.to_json()["b"] == "3");
  CHECK(from(out.str()).values() == c.values());
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("kolmolab_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args, const fs::path& out = scratch()) {
  const std::string cmd = std::string(KOLMOLAB_EXE) + " --no-timestamp --out " + out.string() + " " + args + " > " +
                          (scratch() / "stdout.txt").string() + " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("admissibility report") {
  REQUIRE(run("admissibility --d 3 --q 145/48 --delta 0.36") == 0);
  const auto doc = nlohmann::json::parse(slurp(scratch() / "admissibility.json"));
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["config"]["q"] == "145/48");
  CHECK(doc.find("generated") == doc.end());
  CHECK(doc["result"]["admissible"] == true);
  CHECK(doc["result"]["star_margin"].get<double>() == doctest::Approx(0.013889).epsilon(1e-4));
}

TEST_CASE("figure1 and moser tables") {
  REQUIRE(run("figure1 --d-range 5:15 --eps 1") == 0);
  const auto csv = slurp(scratch() / "figure1.csv");
  CHECK(csv.find("# schema_version = 1") == 0);
  CHECK(csv.find("# config d-range = 5:15") != std::string::npos);
  REQUIRE(run("moser --d 5 --q 6 --r0 2 --k 3 --n 20") == 0);
  const auto doc = nlohmann::json::parse(slurp(scratch() / "moser.json"));
  CHECK(doc["result"]["r1"] == "10/3");
  CHECK(doc["result"]["alpha_bound"] == "12/25");
  CHECK(doc["result"]["gamma_lower"] == "1/25");
  CHECK(doc["result"]["verified"] == true);
}

TEST_CASE("exit codes") {
  CHECK(run("") == 2);
  CHECK(run("nonsense") == 2);
  CHECK(run("admissibility --bogus 1") == 2);
  CHECK(run("blowup --paths 10") == 2);  // seed is mandatory
  CHECK(run("admissibility --d 2 --q 3 --delta 0.1") == 3);
  CHECK(run("admissibility --q abc") == 3);
  CHECK(run("accept --only 1,2,3") == 0);
  // ten paths all hit for every delta, so the strict increase fails
  CHECK(run("accept --only 11 --paths 10 --seed 1") == 1);
}

TEST_CASE("config files") {
  const auto cfg = scratch() / "adm.cfg";
  std::ofstream(cfg) << "# reference pair\nd = 3\nq = 145/48\ndelta = 0.36  # decimal is exact\n";
  CHECK(run("admissibility --config " + cfg.string()) == 0);
  std::ofstream(cfg) << "d = 3\nwhatever = 1\n";
  CHECK(run("admissibility --config " + cfg.string()) == 3);
  CHECK(slurp(scratch() / "stderr.txt").find("unknown key 'whatever'") != std::string::npos);
  // flags override the file
  std::ofstream(cfg) << "d = 3\nq = 4\ndelta = 0.36\n";
  REQUIRE(run("admissibility --config " + cfg.string() + " --q 145/48") == 0);
  CHECK(nlohmann::json::parse(slurp(scratch() / "admissibility.json"))["config"]["q"] == "145/48");
}

TEST_CASE("stochastic artifacts are byte-identical for a fixed seed") {
  const auto a = scratch() / "a", b = scratch() / "b";
  REQUIRE(run("blowup --deltas 16,49 --paths 500 --seed 7", a) == 0);
  REQUIRE(run("--jobs 2 blowup --deltas 16,49 --paths 500 --seed 7", b) == 0);
  const auto ca = slurp(a / "blowup.csv");
  CHECK(ca == slurp(b / "blowup.csv"));
  CHECK(ca.find("delta,hit_fraction,n_paths,dt\n16,") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
  const auto env_dir = scratch() / "env";
  ::setenv("KOLMO_OUT_DIR", env_dir.string().c_str(), 1);
  const std::string cmd = std::string(KOLMOLAB_EXE) + " figure1 --d-range 5:6 > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  ::unsetenv("KOLMO_OUT_DIR");
  CHECK(fs::exists(env_dir / "figure1.csv"));
}

// kolmolab: batch driver for the experiments and the acceptance suite.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kolmo/acceptance.hpp"
#include "kolmo/admissibility.hpp"
#include "kolmo/config.hpp"
#include "kolmo/error.hpp"
#include "kolmo/formbound.hpp"
#include "kolmo/mollifier.hpp"
#include "kolmo/moser.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/pde.hpp"
#include "kolmo/sde.hpp"

namespace fs = std::filesystem;
using namespace kolmo;
using nlohmann::json;

namespace {

constexpr int kExitAcceptance = 1;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;

struct Key {
  std::string name;
  std::optional<std::string> fallback;  // nullopt: must be given
  std::string help;
};

const std::map<std::string, std::vector<Key>>& key_table() {
  static const std::map<std::string, std::vector<Key>> table{
      {"admissibility", {{"d", "3", "dimension"}, {"q", "145/48", "exponent q"}, {"delta", "0.36", "form-bound delta"},
                         {"mu", std::nullopt, "optional mu in (0,1) for the high-dimensional cap"}}},
      {"figure1", {{"d-range", "5:15", "dimensions a:b"}, {"eps", "1", "q = d + eps"}}},
      {"formbound", {{"d", "3", "dimension"}, {"delta", "0.36", "Hardy delta"}, {"r-max", "1", "mesh radius"},
                     {"log-range", "22", "log-space extent of the geometric mesh"}, {"n", "4000", "mesh nodes"}}},
      {"mollify", {{"d", "3", "dimension"}, {"delta", "0.36", "Hardy delta"}, {"index", "2", "sequence index n"},
                   {"eps", "0.01", "mollifier scale"}}},
      {"solve", {{"d", "3", "dimension"}, {"q", "145/48", "exponent q"}, {"delta", "0.36", "Hardy delta"},
                 {"drift", "hardy", "hardy | zero"}, {"mollified", "true", "use b_n instead of the exact drift"},
                 {"index", "4", "sequence index n"}, {"eps", "0.01", "mollifier scale"}, {"r-max", "8", "outer radius"},
                 {"n-r", "1000", "radial cells"}, {"t", "0.5", "final time"}, {"dt", "0.001", "time step"},
                 {"scheme", "implicit", "implicit | imex | crank_nicolson"}, {"cutoff", "4", "initial-data cutoff radius"},
                 {"snapshots", "", "comma list of snapshot times"}}},
      {"cauchy", {{"d", "3", "dimension"}, {"delta", "0.36", "Hardy delta"}, {"n-list", "2,3,4,5", "sequence indices"},
                  {"eps-list", "0.04,0.02,0.01,0.005", "scales, one per index"}, {"r-max", "8", "outer radius"},
                  {"n-r", "1000", "radial cells"}, {"t", "0.5", "final time"}, {"dt", "0.001", "time step"},
                  {"r-exponent", "4", "distance exponent"}, {"cutoff", "4", "initial-data cutoff radius"}}},
      {"moser", {{"d", "5", "dimension"}, {"q", "6", "exponent q"}, {"r0", "2", "seed exponent"}, {"k", "3", "k > 2"},
                 {"n", "20", "schedule length"}, {"delta", std::nullopt, "delta (default 1/d^2)"}}},
      {"sde-compare", {{"d", "3", "dimension"}, {"drift", "hardy", "zero | constant | hardy (mollified)"},
                       {"c", "0.5,0,0", "constant drift vector"}, {"delta", "0.36", "Hardy delta"}, {"index", "4", "sequence index n"},
                       {"eps", "0.01", "mollifier scale"}, {"x0", "1,0,0", "starting point"}, {"T", "0.5", "horizon"},
                       {"dt", "0.001", "Euler-Maruyama step"}, {"paths", "100000", "number of paths"},
                       {"n-r", "2000", "radial cells of the finer PDE grid"}, {"seed", std::nullopt, "RNG seed"}}},
      {"blowup", {{"d", "3", "dimension"}, {"deltas", "16,36,49", "comma list of delta"}, {"x0-radius", "0.05", "|x0|"},
                  {"rho", "0.001", "target radius"}, {"T", "1", "horizon"}, {"dt", "0.001", "largest step"},
                  {"paths", "100000", "number of paths"}, {"seed", std::nullopt, "RNG seed"}}},
      {"accept", {{"only", "", "comma list of criteria (default all)"}, {"paths", "100000", "paths for criteria 10-12"},
                  {"seed", "20240611", "RNG seed"}}},
  };
  return table;
}

struct Run {
  std::string name;
  Config cfg;
  fs::path out_dir;
  bool timestamp = true;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

fs::path artifact(const Run& run, const std::string& file) {
  fs::create_directories(run.out_dir);
  return run.out_dir / file;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  require(static_cast<bool>(out), ErrorKind::validation, "cannot write " + p.string());
  return out;
}

// CSV artifacts carry their provenance as leading '#' lines.
void write_csv(const Run& run, const std::string& file, const std::function<void(std::ostream&)>& body) {
  auto out = open_out(artifact(run, file));
  out << "# schema_version = " << kSchemaVersion << '\n' << "# command = " << run.name << '\n';
  if (run.timestamp) out << "# generated = " << utc_now() << '\n';
  for (const auto& [k, v] : run.cfg.values()) out << "# config " << k << " = " << v << '\n';
  body(out);
  std::cout << "wrote " << artifact(run, file).string() << '\n';
}

void write_json(const Run& run, const std::string& file, const json& result) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = run.name;
  if (run.timestamp) doc["generated"] = utc_now();
  doc["config"] = run.cfg.to_json();
  doc["result"] = result;
  auto out = open_out(artifact(run, file));
  out << doc.dump(2) << '\n';
  std::cout << "wrote " << artifact(run, file).string() << '\n';
}

int integer_key(const Config& c, const std::string& k) { return static_cast<int>(c.integer(k)); }

std::vector<double> point(const Config& c, const std::string& k) { return c.numbers(k); }

std::vector<Rational> rationals(const Config& c, const std::string& k) {
  std::vector<Rational> out;
  std::istringstream in(c.text(k));
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto a = part.find_first_not_of(' '), b = part.find_last_not_of(' ');
    require(a != std::string::npos, ErrorKind::validation, "key '" + k + "' has an empty entry");
    out.push_back(parse_rational(part.substr(a, b - a + 1)));
  }
  return out;
}

FormBoundedDrift radial_drift(const Config& c) {
  const int d = integer_key(c, "d");
  const std::string kind = c.text("drift");
  if (kind == "zero") return FormBoundedDrift::zero(d);
  require(kind == "hardy", ErrorKind::validation, "drift must be hardy or zero, got '" + kind + "'");
  const auto base = FormBoundedDrift::hardy(d, c.rational("delta"));
  if (!c.flag("mollified")) return base;
  return mollifier::build_regularized_drift(base, integer_key(c, "index"), c.number("eps"));
}

// ------------------------------------------------------------------ commands

int cmd_admissibility(const Run& run) {
  admissibility::AdmissibilityQuery q{integer_key(run.cfg, "d"), run.cfg.rational("q"), run.cfg.rational("delta"), std::nullopt};
  if (run.cfg.has("mu")) q.mu = run.cfg.rational("mu");
  const auto report = admissibility::make_report(q);
  const json j = admissibility::to_json(report);
  std::cout << j.dump(2) << '\n';
  write_json(run, "admissibility.json", j);
  return 0;
}

int cmd_figure1(const Run& run) {
  const auto [a, b] = run.cfg.range("d-range");
  const auto rows = admissibility::ratio_table(static_cast<int>(a), static_cast<int>(b), run.cfg.rational("eps"));
  write_csv(run, "figure1.csv", [&](std::ostream& out) { admissibility::write_ratio_csv(out, rows); });
  bool all = true;
  for (const auto& r : rows) all = all && r.ratio > 1.0;
  std::cout << "rows " << rows.size() << ", all ratios > 1: " << (all ? "yes" : "no") << '\n';
  return 0;
}

int cmd_formbound(const Run& run) {
  using namespace formbound;
  const int d = integer_key(run.cfg, "d");
  const auto b = FormBoundedDrift::hardy(d, run.cfg.rational("delta"));
  const double R = run.cfg.number("r-max"), lr = run.cfg.number("log-range");
  auto fam = near_optimizer_family(d, R, lr - 1.0);
  const auto shells = shell_packets(d, {0.1 * R, 0.2 * R, 0.4 * R, 0.6 * R}, 0.05 * R);
  fam.members.insert(fam.members.end(), shells.members.begin(), shells.members.end());
  const SpaceTimeGrid grid{TimeGrid{1.0, 1}, RadialMesh::geometric(d, R, lr, integer_key(run.cfg, "n"))};
  const auto est = estimate_form_bound(b, fam, grid);
  write_csv(run, "formbound.csv", [&](std::ostream& out) { write_form_csv(out, fam, est); });
  std::cout << "delta_hat = " << est.delta_hat << " (delta = " << to_double(b.delta()) << ")\n";
  return 0;
}

int cmd_mollify(const Run& run) {
  const auto base = FormBoundedDrift::hardy(integer_key(run.cfg, "d"), run.cfg.rational("delta"));
  const int n = integer_key(run.cfg, "index");
  const double eps = run.cfg.number("eps");
  const auto table = mollifier::mollified_radial_table(base, n, eps);
  write_csv(run, "mollify.csv", [&](std::ostream& out) {
    out << "r,beta\n" << std::setprecision(17);
    for (std::size_t i = 0; i < table.beta.size(); ++i) out << table.dr * static_cast<double>(i) << ',' << table.beta[i] << '\n';
  });
  const auto bn = mollifier::build_regularized_drift(base, n, eps);
  json j{{"sup_norm", bn.sup_norm()}, {"sup_norm_bound", mollifier::sup_norm_bound(base, eps)},
         {"support_radius", table.r_end()}, {"window", {{"horizon", n}, {"epsilon", eps}}}};
  std::cout << j.dump(2) << '\n';
  write_json(run, "mollify.json", j);
  return 0;
}

pde::SolveResult run_solve(const Run& run, std::optional<json>* verdict) {
  const auto& c = run.cfg;
  const auto drift = radial_drift(c);
  pde::SolveOptions o;
  o.t = c.number("t");
  o.dt = c.number("dt");
  o.q = c.rational("q");
  o.scheme = pde::parse_scheme(c.text("scheme"));
  if (!c.text("snapshots").empty()) o.snapshot_times = c.numbers("snapshots");
  const pde::RadialGrid grid{c.number("r-max"), integer_key(c, "n-r"), integer_key(c, "d")};
  auto res = pde::solve_radial(drift, pde::gaussian_initial(c.number("cutoff")), grid, o);
  write_csv(run, run.name + "_trace.csv", [&](std::ostream& out) { pde::write_trace_csv(out, res.trace); });
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    const auto stem = artifact(run, run.name + "_u" + std::to_string(i)).string();
    pde::write_snapshot(stem, res.snapshots[i], o.q);
  }
  if (verdict) {
    const auto rep = pde::verify_gradient_bound(res.trace, o.q, drift.delta(), drift.g());
    *verdict = json{{"status", rep.status},
                    {"kappa", rep.kappa},
                    {"time_coefficient", rep.time_coefficient},
                    {"C1", rep.C1},
                    {"max_relative_increase", rep.max_relative_increase},
                    {"worst_inequality_excess", rep.worst_inequality_excess},
                    {"integral_bound_lhs", rep.integral_bound_lhs},
                    {"integral_bound_rhs", rep.integral_bound_rhs},
                    {"min_value", res.min_value},
                    {"max_value", res.max_value},
                    {"boundary_outflow", res.boundary_outflow}};
  }
  return res;
}

int cmd_solve(const Run& run) {
  const auto res = run_solve(run, nullptr);
  std::cout << "steps " << res.steps << ", min " << res.min_value << ", max " << res.max_value << '\n';
  return 0;
}

int cmd_verify(const Run& run) {
  std::optional<json> verdict;
  run_solve(run, &verdict);
  std::cout << verdict->dump(2) << '\n';
  write_json(run, "verify-thm1.json", *verdict);
  return 0;
}

int cmd_cauchy(const Run& run) {
  const auto& c = run.cfg;
  const auto base = FormBoundedDrift::hardy(integer_key(c, "d"), c.rational("delta"));
  std::vector<int> ns;
  for (auto v : c.integers("n-list")) ns.push_back(static_cast<int>(v));
  pde::CauchyOptions o;
  o.t = c.number("t");
  o.dt = c.number("dt");
  o.r_exponent = c.number("r-exponent");
  const auto tab = pde::approximation_cauchy_check(base, pde::gaussian_initial(c.number("cutoff")),
                                                   pde::RadialGrid{c.number("r-max"), integer_key(c, "n-r"), integer_key(c, "d")},
                                                   ns, c.numbers("eps-list"), o);
  write_csv(run, "cauchy.csv", [&](std::ostream& out) { pde::write_cauchy_csv(out, tab); });
  std::cout << "decreasing L^r: " << (tab.decreasing_r ? "yes" : "no") << ", decreasing sup: " << (tab.decreasing_inf ? "yes" : "no")
            << '\n';
  return 0;
}

int cmd_moser(const Run& run) {
  const auto& c = run.cfg;
  std::optional<Rational> delta;
  if (c.has("delta")) delta = c.rational("delta");
  const auto s = moser::build_schedule(integer_key(c, "d"), c.rational("q"), c.rational("r0"), integer_key(c, "k"),
                                       integer_key(c, "n"), delta);
  write_csv(run, "moser.csv", [&](std::ostream& out) { moser::write_schedule_csv(out, s); });
  const auto lim = moser::schedule_limits(s);
  const auto rep = moser::verify_schedule(s);
  json j{{"beta", format_rational(s.beta)},
         {"r1", format_rational(s.r_seq.front())},
         {"alpha_bound", format_rational(lim.alpha_bound)},
         {"gamma_lower", format_rational(lim.gamma_lower)},
         {"log_Gamma_bound", lim.log_Gamma_bound},
         {"identities_checked", rep.identities_checked},
         {"verified", rep.passed}};
  std::cout << j.dump(2) << '\n';
  write_json(run, "moser.json", j);
  return 0;
}

int cmd_sde_compare(const Run& run) {
  const auto& c = run.cfg;
  const int d = integer_key(c, "d");
  const std::string kind = c.text("drift");
  const auto x0 = point(c, "x0");
  sde::WeakCompareOptions o;
  o.T = c.number("T");
  o.dt = c.number("dt");
  o.n_paths = static_cast<std::size_t>(c.integer("paths"));
  o.seed = static_cast<std::uint64_t>(c.integer("seed"));
  o.radial = pde::RadialGrid{8.0, integer_key(c, "n-r"), d};
  o.cartesian.d = d;
  FormBoundedDrift drift = FormBoundedDrift::zero(d);
  std::optional<double> closed;
  if (kind == "zero") {
    closed = sde::constant_drift_gaussian(std::vector<double>(static_cast<std::size_t>(d), 0.0), x0, o.T);
  } else if (kind == "constant") {
    const auto cv = point(c, "c");
    drift = FormBoundedDrift::constant(cv);
    closed = sde::constant_drift_gaussian(cv, x0, o.T);
  } else if (kind == "hardy") {
    drift = mollifier::build_regularized_drift(FormBoundedDrift::hardy(d, c.rational("delta")), integer_key(c, "index"), c.number("eps"));
  } else {
    raise(ErrorKind::validation, "drift must be zero, constant or hardy, got '" + kind + "'");
  }
  auto rep = sde::weak_compare(drift, {"gaussian", [](double r) { return std::exp(-r * r); }}, x0, o);
  rep.closed_form = closed;
  const json j = sde::to_json(rep);
  std::cout << j.dump(2) << '\n';
  write_json(run, "sde-compare.json", j);
  return 0;
}

int cmd_blowup(const Run& run) {
  const auto& c = run.cfg;
  const int d = integer_key(c, "d");
  std::vector<double> x0(static_cast<std::size_t>(d), 0.0);
  x0[0] = c.number("x0-radius");
  sde::BlowupOptions o;
  o.rho = c.number("rho");
  o.T = c.number("T");
  o.dt = c.number("dt");
  o.n_paths = static_cast<std::size_t>(c.integer("paths"));
  o.seed = static_cast<std::uint64_t>(c.integer("seed"));
  const auto rows = sde::blowup_probe(d, rationals(c, "deltas"), x0, o);
  write_csv(run, "blowup.csv", [&](std::ostream& out) { sde::write_blowup_csv(out, rows); });
  for (const auto& r : rows) std::cout << "delta " << format_rational(r.delta) << ": " << r.hit_fraction << '\n';
  return 0;
}

int cmd_accept(const Run& run) {
  acceptance::Options o;
  if (!run.cfg.text("only").empty())
    for (auto v : run.cfg.integers("only")) o.only.insert(static_cast<int>(v));
  o.sde_paths = o.blowup_paths = static_cast<std::size_t>(run.cfg.integer("paths"));
  o.seed = static_cast<std::uint64_t>(run.cfg.integer("seed"));
  const auto results = acceptance::run(o, std::cout);
  json j = json::array();
  bool ok = true;
  for (const auto& r : results) {
    j.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}});
    ok = ok && r.pass;
  }
  write_json(run, "accept.json", j);
  return ok ? 0 : kExitAcceptance;
}

const std::map<std::string, int (*)(const Run&)>& handlers() {
  static const std::map<std::string, int (*)(const Run&)> h{
      {"admissibility", cmd_admissibility}, {"figure1", cmd_figure1}, {"formbound", cmd_formbound},
      {"mollify", cmd_mollify},             {"solve", cmd_solve},     {"verify-thm1", cmd_verify},
      {"cauchy", cmd_cauchy},               {"moser", cmd_moser},     {"sde-compare", cmd_sde_compare},
      {"blowup", cmd_blowup},               {"accept", cmd_accept}};
  return h;
}

const std::vector<Key>& keys_of(const std::string& cmd) {
  const auto& t = key_table();
  const auto it = t.find(cmd == "verify-thm1" ? "solve" : cmd);
  return it->second;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kolmolab: experiments on parabolic equations with form-bounded drift"};
  app.require_subcommand(1);
  std::string out_dir;
  int jobs = 1;
  bool no_timestamp = false;
  app.add_option("--out", out_dir, "output directory (default $KOLMO_OUT_DIR or .)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", no_timestamp, "omit the generation time from artifacts");

  std::map<std::string, std::map<std::string, std::string>> given;
  std::map<std::string, std::string> config_files;
  for (const auto& [name, fn] : handlers()) {
    (void)fn;
    auto* sub = app.add_subcommand(name, name == "verify-thm1" ? "solve and check the gradient bound" : name);
    sub->add_option("--config", config_files[name], "key = value file");
    for (const auto& k : keys_of(name)) {
      std::string help = k.help;
      if (k.fallback && !k.fallback->empty()) help += " [" + *k.fallback + "]";
      if (!k.fallback) help += k.name == "seed" ? " (required)" : " (optional)";
      sub->add_option("--" + k.name, given[name][k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  set_jobs(jobs);
  try {
    Run run;
    run.name = name;
    run.timestamp = !no_timestamp;
    if (out_dir.empty()) {
      const char* env = std::getenv("KOLMO_OUT_DIR");
      out_dir = env && *env ? env : ".";
    }
    run.out_dir = out_dir;

    std::set<std::string> allowed;
    for (const auto& k : keys_of(name)) {
      allowed.insert(k.name);
      if (k.fallback) run.cfg.set(k.name, *k.fallback);
    }
    if (!config_files[name].empty()) {
      const Config file = Config::load(config_files[name]);
      file.reject_unknown(allowed);
      run.cfg.merge(file);
    }
    for (const auto& k : keys_of(name))
      if (sub->count("--" + k.name) > 0) run.cfg.set(k.name, given[name][k.name]);
    if (allowed.count("seed") && !run.cfg.has("seed")) {
      std::cerr << name << ": --seed is required\n";
      return kExitUsage;
    }
    return handlers().at(name)(run);
  } catch (const Error& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kExitValidation;
  }
}

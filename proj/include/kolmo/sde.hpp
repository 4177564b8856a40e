#pragma once

// Euler-Maruyama for X_t = x - int_0^t b(s, X_s) ds + sqrt(2) B_t.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kolmo/drift.hpp"
#include "kolmo/pde.hpp"

namespace kolmo::sde {

struct EnsembleSpec {
  FormBoundedDrift drift = FormBoundedDrift::zero(3);
  std::vector<double> x0;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
};

using TerminalFunction = std::function<double(std::span<const double>)>;

struct Functional {
  std::string name;
  TerminalFunction f;
};

struct MeanEstimate {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
};

/// Ball B(0, radius) entered at some step time <= horizon.
struct HitTarget {
  double radius = 0.0;
  double horizon = 0.0;
};

struct EnsembleStats {
  std::size_t n_paths = 0;
  double T = 0.0;
  double dt = 0.0;
  std::vector<MeanEstimate> means;
  std::vector<double> position_mean;
  std::vector<double> position_variance;
  std::vector<double> hit_fractions;  ///< one per target
};

/// Domain error for singular drifts, dt <= 0, n_paths == 0 or a bad x0.
EnsembleStats euler_maruyama(const EnsembleSpec& spec, const std::vector<Functional>& functionals,
                             const std::vector<HitTarget>& targets = {});

/// Coupled runs at dt and dt/2: the coarse increment is the sum of the two
/// fine ones, so the difference of means has a small standard error.
struct RichardsonPair {
  MeanEstimate coarse;
  MeanEstimate fine;
  double difference = 0.0;  ///< fine - coarse
  double difference_se = 0.0;
};
RichardsonPair euler_maruyama_pair(const EnsembleSpec& spec, const Functional& f);

/// f(x) = profile(|x|) so the PDE side can use the radial solver.
struct RadialFunction {
  std::string name;
  std::function<double(double)> profile;
};

struct WeakCompareOptions {
  double T = 0.5;
  double dt = 1e-3;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  pde::RadialGrid radial{8.0, 2000, 3};
  double pde_dt = 1e-3;
  pde::CartesianGrid cartesian{7.0, 56, 3};
};

struct WeakReport {
  std::string functional;
  std::string drift;
  std::vector<double> x0;
  double T = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  double mean = 0.0;          ///< at dt/2
  double se = 0.0;
  double mean_coarse = 0.0;   ///< at dt
  double pde_value = 0.0;
  double pde_error = 0.0;     ///< fine minus coarse PDE grid
  double richardson = 0.0;    ///< |mean(dt/2) - mean(dt)|
  double discretization_estimate = 0.0;
  double discrepancy = 0.0;
  double band = 0.0;
  std::optional<double> closed_form;
  bool pass = false;
};

/// E_x0 f(X_T) against u(T, x0), where u_tau = Delta u - b~ . grad u, u(0) = f,
/// b~(tau) = b(T - tau). Radial drifts use the radial solver, others the
/// Cartesian one. Pass iff |mean - pde| <= 3 SE + |Richardson| + PDE grid error.
WeakReport weak_compare(const FormBoundedDrift& drift, const RadialFunction& f, const std::vector<double>& x0,
                        const WeakCompareOptions& opt);

nlohmann::json to_json(const WeakReport& r);

/// exp(-|x0 - cT|^2 / (a + 4T)) (a / (a + 4T))^{d/2}: E f(X_T) for constant c, f = exp(-|x|^2/a).
double constant_drift_gaussian(const std::vector<double>& c, const std::vector<double>& x0, double T, double a = 1.0);

struct BlowupOptions {
  double rho = 1e-3;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
};

struct BlowupRow {
  Rational delta;
  double hit_fraction = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

/// Exact Hardy drift, step min(dt, (|X|/10)^2), |b| clamped at 1/sqrt(step).
/// Every delta reuses the same random numbers.
std::vector<BlowupRow> blowup_probe(int d, const std::vector<Rational>& deltas, const std::vector<double>& x0,
                                    const BlowupOptions& opt);

void write_blowup_csv(std::ostream& out, const std::vector<BlowupRow>& rows);

}  // namespace kolmo::sde

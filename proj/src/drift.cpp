#include "kolmo/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kolmo/error.hpp"

namespace kolmo {

const char* to_string(DriftKind kind) noexcept {
  switch (kind) {
    case DriftKind::hardy: return "hardy";
    case DriftKind::bounded_smooth: return "bounded_smooth";
    case DriftKind::zero: return "zero";
    case DriftKind::custom_radial: return "custom_radial";
  }
  return "?";
}

GClass GClass::constant(double v) {
  require(v >= 0 && std::isfinite(v), ErrorKind::domain, "g must be a finite nonnegative constant");
  GClass g;
  g.type = v == 0.0 ? Type::zero : Type::constant;
  g.value = v;
  return g;
}

GClass GClass::tabulated(std::vector<double> times, std::vector<double> values) {
  require(times.size() == values.size() && times.size() >= 2, ErrorKind::domain,
          "tabulated g needs matching time and value lists of length >= 2");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], ErrorKind::domain, "tabulated g times must increase");
  for (double v : values) require(v >= 0 && std::isfinite(v), ErrorKind::domain, "g values must be nonnegative");
  GClass g;
  g.type = Type::tabulated;
  g.times = std::move(times);
  g.values = std::move(values);
  return g;
}

double GClass::operator()(double t) const {
  switch (type) {
    case Type::zero: return 0.0;
    case Type::constant: return value;
    case Type::tabulated: {
      if (t < times.front() || t > times.back()) return 0.0;
      auto it = std::upper_bound(times.begin(), times.end(), t);
      if (it == times.end()) return values.back();
      const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
      const double w = (t - times[i]) / (times[i + 1] - times[i]);
      return (1 - w) * values[i] + w * values[i + 1];
    }
  }
  return 0.0;
}

double GClass::integral(double t) const {
  if (t <= 0) return 0.0;
  switch (type) {
    case Type::zero: return 0.0;
    case Type::constant: return value * t;
    case Type::tabulated: {
      // exact for the piecewise linear interpolant
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double a = std::max(times[i], 0.0);
        const double b = std::min(times[i + 1], t);
        if (b <= a) continue;
        acc += 0.5 * (b - a) * ((*this)(a) + (*this)(b));
      }
      return acc;
    }
  }
  return 0.0;
}

bool GClass::is_zero() const {
  if (type == Type::zero) return true;
  if (type == Type::constant) return value == 0.0;
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double RadialTable::operator()(double r) const {
  if (beta.empty()) return 0.0;
  const double s = r / dr;
  if (s >= static_cast<double>(beta.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(i);
  return (1 - w) * beta[i] + w * beta[i + 1];
}

double TimeWindow::operator()(double t) const {
  if (epsilon <= 0) return (t >= 0 && t <= horizon) ? 1.0 : 0.0;
  const double s = 2.0 * std::sqrt(epsilon);
  return 0.5 * (std::erf((horizon - t) / s) + std::erf(t / s));
}

std::size_t GriddedVectorField::points() const {
  std::size_t p = 1;
  for (int k = 0; k < d; ++k) p *= static_cast<std::size_t>(n);
  return p;
}

void GriddedVectorField::eval_into(std::span<const double> x, std::span<double> out) const {
  const double h = spacing();
  const std::size_t np = points();
  std::fill(out.begin(), out.end(), 0.0);
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int k = 0; k < d; ++k) {
    if (std::abs(x[k]) > half_width) return;
    // node i sits at -L + (i + 1/2) h; clamp within half a cell of the wall
    double s = (x[k] + half_width) / h - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(s), n - 2);
    base[k] = i;
    frac[k] = s - i;
  }
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int k = 0; k < d; ++k) {
      const int bit = (c >> k) & 1;
      w *= bit ? frac[k] : 1.0 - frac[k];
      flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(base[k] + bit);
    }
    if (w == 0.0) continue;
    for (int comp = 0; comp < d; ++comp) out[comp] += w * values[comp * np + flat];
  }
}

double RadialProfile::smooth_part(double t, double r) const {
  if (!table) return 0.0;
  const double f = time_factor ? time_factor(t) : 1.0;
  return f * (*table)(r);
}

double RadialProfile::operator()(double t, double r) const {
  double b = smooth_part(t, r);
  if (hardy_coefficient != 0.0) b += hardy_coefficient / r;
  return b;
}

double RadialProfile::smooth_sup() const {
  if (!table) return 0.0;
  double m = 0.0;
  for (double v : table->beta) m = std::max(m, std::abs(v));
  return m;
}

Rational nonexistence_threshold(int d) {
  require(d >= 3, ErrorKind::domain, "dimension must be at least 3");
  Rational r(d, d - 2);
  r.canonicalize();
  return 4 * r * r;
}

double hardy_coefficient(int d, const Rational& delta) {
  return std::sqrt(to_double(delta)) * (d - 2) / 2.0;
}

FormBoundedDrift FormBoundedDrift::zero(int d) {
  require(d >= 1, ErrorKind::domain, "dimension must be positive");
  FormBoundedDrift b;
  b.kind_ = DriftKind::zero;
  b.d_ = d;
  b.delta_ = 0;
  return b;
}

FormBoundedDrift FormBoundedDrift::hardy(int d, const Rational& delta) {
  require(d >= 3, ErrorKind::domain, "Hardy drift is not locally square integrable for d < 3");
  require(delta > 0, ErrorKind::domain, "Hardy drift needs delta > 0");
  FormBoundedDrift b;
  b.kind_ = DriftKind::hardy;
  b.d_ = d;
  b.delta_ = delta;
  b.hardy_c_ = hardy_coefficient(d, delta);
  return b;
}

FormBoundedDrift FormBoundedDrift::constant(std::vector<double> c) {
  require(!c.empty(), ErrorKind::domain, "constant drift needs a vector");
  double m2 = 0.0;
  for (double v : c) {
    require(std::isfinite(v), ErrorKind::domain, "constant drift must be finite");
    m2 += v * v;
  }
  FormBoundedDrift b;
  b.kind_ = DriftKind::bounded_smooth;
  b.d_ = static_cast<int>(c.size());
  // |b f|^2 <= |c|^2 |f|^2, so any delta works with g = |c|^2; record a small one
  b.delta_ = Rational(1, 100);
  b.g_ = GClass::constant(m2);
  b.constant_ = std::move(c);
  return b;
}

FormBoundedDrift FormBoundedDrift::bump(std::vector<double> center, std::vector<double> direction, double width) {
  require(center.size() == direction.size() && !center.empty(), ErrorKind::domain,
          "bump center and direction must have the same dimension");
  require(width > 0, ErrorKind::domain, "bump width must be positive");
  double m2 = 0.0;
  for (double v : direction) m2 += v * v;
  FormBoundedDrift b;
  b.kind_ = DriftKind::bounded_smooth;
  b.d_ = static_cast<int>(center.size());
  b.delta_ = Rational(1, 100);
  b.g_ = GClass::constant(m2);
  b.bump_ = std::make_shared<const Bump>(Bump{std::move(center), std::move(direction), width});
  return b;
}

FormBoundedDrift FormBoundedDrift::radial_table(int d, RadialTable table, const Rational& delta, GClass g,
                                                DriftKind kind, std::optional<TimeWindow> window) {
  require(d >= 1, ErrorKind::domain, "dimension must be positive");
  require(table.dr > 0 && table.beta.size() >= 2, ErrorKind::domain, "radial table needs dr > 0 and two nodes");
  require(kind == DriftKind::custom_radial || kind == DriftKind::bounded_smooth, ErrorKind::domain,
          "radial tables are custom_radial or bounded_smooth");
  for (double v : table.beta) require(std::isfinite(v), ErrorKind::domain, "radial table must be finite");
  FormBoundedDrift b;
  b.kind_ = kind;
  b.d_ = d;
  b.delta_ = delta;
  b.g_ = std::move(g);
  b.table_ = std::make_shared<const RadialTable>(std::move(table));
  b.window_ = window;
  return b;
}

FormBoundedDrift FormBoundedDrift::gridded(GriddedVectorField field, const Rational& delta, GClass g,
                                           std::optional<TimeWindow> window) {
  require(field.d == 2 || field.d == 3, ErrorKind::domain, "gridded drifts are 2D or 3D");
  require(field.n >= 2 && field.half_width > 0, ErrorKind::domain, "gridded drift needs n >= 2 and L > 0");
  require(field.values.size() == field.points() * static_cast<std::size_t>(field.d), ErrorKind::domain,
          "gridded drift value array has the wrong size");
  FormBoundedDrift b;
  b.kind_ = DriftKind::bounded_smooth;
  b.d_ = field.d;
  b.delta_ = delta;
  b.g_ = std::move(g);
  b.grid_ = std::make_shared<const GriddedVectorField>(std::move(field));
  b.window_ = window;
  return b;
}

bool FormBoundedDrift::radial() const {
  return kind_ == DriftKind::zero || kind_ == DriftKind::hardy || table_ != nullptr;
}

bool FormBoundedDrift::time_dependent() const { return window_.has_value(); }

bool FormBoundedDrift::supercritical() const {
  return kind_ == DriftKind::hardy && delta_ > nonexistence_threshold(d_);
}

double FormBoundedDrift::window_at(double t) const { return window_ ? (*window_)(time_of(t)) : 1.0; }

void FormBoundedDrift::eval_spatial_into(std::span<const double> x, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(d_);
  require(x.size() >= d && out.size() >= d, ErrorKind::domain, "point has the wrong dimension");
  if (kind_ == DriftKind::zero) {
    std::fill_n(out.begin(), d, 0.0);
    return;
  }
  if (!constant_.empty()) {
    std::copy(constant_.begin(), constant_.end(), out.begin());
    return;
  }
  if (bump_) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double z = x[k] - bump_->center[k];
      r2 += z * z;
    }
    const double e = std::exp(-r2 / (bump_->width * bump_->width));
    for (std::size_t k = 0; k < d; ++k) out[k] = e * bump_->direction[k];
    return;
  }
  if (grid_) {
    grid_->eval_into(x, out);
    return;
  }
  double r2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) r2 += x[k] * x[k];
  if (kind_ == DriftKind::hardy) {
    require(r2 > 0, ErrorKind::singularity, "Hardy drift is singular at x = 0");
    const double s = hardy_c_ / r2;
    for (std::size_t k = 0; k < d; ++k) out[k] = s * x[k];
    return;
  }
  // radial table: beta(0) is finite for bounded profiles and the direction is irrelevant there
  const double r = std::sqrt(r2);
  if (r == 0.0) {
    std::fill_n(out.begin(), d, 0.0);
    return;
  }
  const double s = (*table_)(r) / r;
  for (std::size_t k = 0; k < d; ++k) out[k] = s * x[k];
}

void FormBoundedDrift::eval_into(double t, std::span<const double> x, std::span<double> out) const {
  eval_spatial_into(x, out);
  if (window_) {
    const double f = window_at(t);
    for (std::size_t k = 0; k < static_cast<std::size_t>(d_); ++k) out[k] *= f;
  }
}

std::vector<double> FormBoundedDrift::eval(double t, std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(d_));
  eval_into(t, x, out);
  return out;
}

std::vector<double> FormBoundedDrift::eval(double t, std::initializer_list<double> x) const {
  return eval(t, std::span<const double>(x.begin(), x.size()));
}

RadialProfile FormBoundedDrift::radial_profile() const {
  require(radial(), ErrorKind::not_radial, std::string(to_string(kind_)) + " drift is not radial");
  RadialProfile p;
  if (kind_ == DriftKind::hardy) p.hardy_coefficient = hardy_c_;
  if (table_) {
    p.table = table_;
    if (window_) {
      const TimeWindow w = *window_;
      const double a = time_offset_, s = time_sign_;
      p.time_factor = [w, a, s](double t) { return w(a + s * t); };
    }
  }
  return p;
}

double FormBoundedDrift::sup_norm() const {
  if (kind_ == DriftKind::zero) return 0.0;
  if (kind_ == DriftKind::hardy) return std::numeric_limits<double>::infinity();
  if (!constant_.empty()) return std::sqrt(g_.value);
  if (bump_) return std::sqrt(g_.value);
  if (table_) return radial_profile().smooth_sup();
  double m = 0.0;
  const std::size_t np = grid_->points();
  for (std::size_t i = 0; i < np; ++i) {
    double s = 0.0;
    for (int c = 0; c < d_; ++c) s += grid_->values[c * np + i] * grid_->values[c * np + i];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

FormBoundedDrift FormBoundedDrift::time_reversed(double T) const {
  FormBoundedDrift b = *this;
  // new time_of(t) = old time_of(T - t)
  b.time_offset_ = time_offset_ + time_sign_ * T;
  b.time_sign_ = -time_sign_;
  if (g_.type == GClass::Type::tabulated) {
    std::vector<double> ts, vs;
    for (std::size_t i = g_.times.size(); i-- > 0;) {
      ts.push_back(T - g_.times[i]);
      vs.push_back(g_.values[i]);
    }
    b.g_ = GClass::tabulated(std::move(ts), std::move(vs));
  }
  return b;
}

std::string FormBoundedDrift::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << " d=" << d_ << " delta=" << format_rational(delta_);
  if (kind_ == DriftKind::hardy) os << (supercritical() ? " supercritical" : "");
  if (time_dependent()) os << " time-windowed";
  return os.str();
}

namespace {

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<double> split_doubles(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      raise(ErrorKind::validation, "bad number '" + item + "' in " + key);
    }
  }
  return out;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::validation, "missing key " + key);
  return it->second;
}

}  // namespace

std::map<std::string, std::string> FormBoundedDrift::to_config() const {
  std::map<std::string, std::string> kv;
  kv["drift.d"] = std::to_string(d_);
  kv["drift.delta"] = format_rational(delta_);
  if (kind_ == DriftKind::zero) kv["drift.kind"] = "zero";
  else if (kind_ == DriftKind::hardy) kv["drift.kind"] = "hardy";
  else if (!constant_.empty()) {
    kv["drift.kind"] = "constant";
    kv["drift.c"] = join(constant_);
  } else if (bump_) {
    kv["drift.kind"] = "bump";
    kv["drift.center"] = join(bump_->center);
    kv["drift.direction"] = join(bump_->direction);
    std::ostringstream os;
    os.precision(17);
    os << bump_->width;
    kv["drift.width"] = os.str();
  } else {
    kv["drift.kind"] = table_ ? "radial_table" : "gridded";
  }
  switch (g_.type) {
    case GClass::Type::zero: kv["drift.g"] = "zero"; break;
    case GClass::Type::constant: {
      std::ostringstream os;
      os.precision(17);
      os << "constant:" << g_.value;
      kv["drift.g"] = os.str();
      break;
    }
    case GClass::Type::tabulated: kv["drift.g"] = "tabulated"; break;
  }
  return kv;
}

FormBoundedDrift drift_from_config(const std::map<std::string, std::string>& kv) {
  const std::string& kind = need(kv, "drift.kind");
  if (kind == "zero") {
    int d = 3;
    if (auto it = kv.find("drift.d"); it != kv.end()) d = static_cast<int>(split_doubles(it->second, "drift.d").at(0));
    return FormBoundedDrift::zero(d);
  }
  if (kind == "hardy") {
    const int d = static_cast<int>(split_doubles(need(kv, "drift.d"), "drift.d").at(0));
    return FormBoundedDrift::hardy(d, parse_rational(need(kv, "drift.delta")));
  }
  if (kind == "constant") return FormBoundedDrift::constant(split_doubles(need(kv, "drift.c"), "drift.c"));
  if (kind == "bump") {
    const auto w = split_doubles(need(kv, "drift.width"), "drift.width");
    require(w.size() == 1, ErrorKind::validation, "drift.width takes one number");
    return FormBoundedDrift::bump(split_doubles(need(kv, "drift.center"), "drift.center"),
                                  split_doubles(need(kv, "drift.direction"), "drift.direction"), w[0]);
  }
  raise(ErrorKind::validation, "unknown drift.kind '" + kind + "'");
}

}  // namespace kolmo

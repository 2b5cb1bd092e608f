#include "fcb/zeta.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "fcb/quadrature.hpp"

namespace fcb {

namespace {

double exp_integral_e1(double x) { return -std::expint(-x); }

// Local cubic interpolation of the samples in u = log t.
class LogInterpolant {
 public:
  LogInterpolant(const std::vector<double>& times, const std::vector<double>& values) : y_(values) {
    u_.reserve(times.size());
    for (double t : times) u_.push_back(std::log(t));
  }

  double operator()(double t) const {
    const double u = std::log(t);
    const std::size_t n = u_.size();
    auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t hi = static_cast<std::size_t>(it - u_.begin());
    hi = std::clamp<std::size_t>(hi, 2, n - 2);
    const std::size_t lo = hi - 2;
    double acc = 0.0;
    for (std::size_t i = lo; i < lo + 4; ++i) {
      double basis = 1.0;
      for (std::size_t j = lo; j < lo + 4; ++j)
        if (j != i) basis *= (u - u_[j]) / (u_[i] - u_[j]);
      acc += basis * y_[i];
    }
    return acc;
  }

 private:
  std::vector<double> u_;
  std::vector<double> y_;
};

}  // namespace

double HeatInvariants::evaluate(double t) const {
  double acc = 0.0;
  double power = 1.0 / t;
  for (double a : coefficients) {
    acc += a * power;
    power *= t;
  }
  return acc;
}

HeatInvariants fit_heat_invariants(const std::vector<double>& times, const std::vector<double>& values, int K,
                                   const FitOptions& options) {
  if (K < 0) throw std::invalid_argument("fit order must be nonnegative");
  if (times.size() != values.size()) throw std::invalid_argument("times and values differ in length");
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= options.window.lo && times[i] <= options.window.hi) {
      t.push_back(times[i]);
      y.push_back(values[i]);
    }
  }
  const int needed = std::max(3 * K, K + 1);
  if (static_cast<int>(t.size()) < needed)
    throw FitError("fit window holds " + std::to_string(t.size()) + " samples, need " + std::to_string(needed));

  HeatInvariants inv;
  inv.fit_window = options.window;
  inv.samples = static_cast<int>(t.size());
  inv.coefficients.assign(static_cast<std::size_t>(K + 1), 0.0);
  for (double v : y) inv.scale = std::max(inv.scale, std::abs(v));
  if (inv.scale == 0.0) return inv;

  // Columns t^{k-1}, rescaled to unit size at the window end so the problem stays well conditioned.
  const double tref = options.window.hi;
  const Eigen::Index rows = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd A(rows, K + 1);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = t[static_cast<std::size_t>(i)] / tref;
    double power = 1.0 / x;
    for (int k = 0; k <= K; ++k) {
      A(i, k) = power;
      power *= x;
    }
    b(i) = y[static_cast<std::size_t>(i)] / inv.scale;
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  for (int k = 0; k <= K; ++k) inv.coefficients[static_cast<std::size_t>(k)] = c(k) * inv.scale * std::pow(tref, 1 - k);

  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(inv.evaluate(t[i]) - y[i]));
  inv.residual = worst / inv.scale;
  if (inv.residual > options.residual_threshold)
    throw FitError("heat-invariant fit residual " + std::to_string(inv.residual) + " exceeds threshold " +
                   std::to_string(options.residual_threshold));
  return inv;
}

HeatInvariants fit_heat_invariants(const TraceSeries& series, int K, const FitOptions& options) {
  return fit_heat_invariants(series.times, series.values, K, options);
}

ZetaResult relative_zeta_prime_at_zero(const std::function<double(double)>& rel_trace, const HeatInvariants& inv,
                                       const ZetaOptions& options) {
  const double tau = options.split;
  const double t_lo = options.t_lower.value_or(inv.fit_window.lo);
  if (!(t_lo > 0.0 && t_lo < tau && tau < options.t_max))
    throw std::invalid_argument("zeta: need 0 < t_lower < split < t_max");
  const int K = inv.order();
  if (K < 1) throw std::invalid_argument("zeta: need at least a_0 and a_1");

  ZetaResult out;
  const double a1 = inv.coefficient(1);
  out.pieces.euler_correction = kEulerGamma * a1;
  double singular = a1 * std::log(tau);
  for (int k = 0; k <= K; ++k) {
    if (k == 1) continue;
    singular += inv.coefficient(k) * std::pow(tau, k - 1) / (k - 1);
  }
  out.pieces.singular_sum = singular;

  const double tol = options.quadrature_tolerance;
  auto small = [&](double u) {
    const double t = std::exp(u);
    return rel_trace(t) - inv.evaluate(t);
  };
  const auto f = adaptive_simpson(small, std::log(t_lo), std::log(tau), tol, 32);
  auto large = [&](double u) { return rel_trace(std::exp(u)); };
  const auto g = adaptive_simpson(large, std::log(tau), std::log(options.t_max), tol, 32);

  double tail = 0.0;
  double tail_uncertainty = 0.0;
  if (options.tail_integral) {
    tail = options.tail_integral(options.t_max);
  } else {
    const double tail_value = rel_trace(options.t_max);
    double mu = 0.0;
    if (options.decay_rate) {
      mu = *options.decay_rate;
    } else {
      const double before = rel_trace(options.t_max - 1.0);
      if (before != 0.0 && tail_value / before > 0.0 && std::abs(tail_value) < std::abs(before))
        mu = std::log(before / tail_value);
    }
    if (tail_value != 0.0) {
      if (!(mu > 0.0)) throw std::runtime_error("zeta: relative trace does not decay at t_max");
      tail = tail_value * std::exp(mu * options.t_max) * exp_integral_e1(mu * options.t_max);
    }
    tail_uncertainty = 0.5 * std::abs(tail);
  }
  out.pieces.small_t_integral = f.value;
  out.pieces.large_t_integral = g.value + tail;
  out.zeta_prime_zero = out.pieces.euler_correction + out.pieces.singular_sum + out.pieces.small_t_integral +
                        out.pieces.large_t_integral;

  out.budget.quadrature = f.error + g.error + tol;
  // A misfit of size delta in the window moves a_0 by about delta * t_lo and a_1 by about delta;
  // only their effect on [0, t_lo] survives the cancellation against F.
  const double delta = inv.residual * inv.scale;
  out.budget.fit = delta * (2.0 + std::abs(kEulerGamma + std::log(t_lo)));
  out.budget.tail = tail_uncertainty;
  return out;
}

ZetaResult relative_zeta_prime_at_zero(const TraceSeries& series, const HeatInvariants& inv,
                                       const ZetaOptions& options) {
  if (series.size() < 4) throw std::invalid_argument("zeta: series too short");
  const double t_lo = options.t_lower.value_or(inv.fit_window.lo);
  if (series.times.front() > t_lo * (1 + 1e-12) || series.times.back() < options.t_max * (1 - 1e-12))
    throw std::invalid_argument("zeta: series does not cover [t_lower, t_max]");
  LogInterpolant interp(series.times, series.values);
  ZetaOptions opts = options;
  if (!opts.decay_rate) {
    const std::size_t n = series.size();
    const double r1 = series.values[n - 1];
    const double r0 = series.values[n - 2];
    if (r0 != 0.0 && r1 / r0 > 0.0 && std::abs(r1) < std::abs(r0))
      opts.decay_rate = std::log(r0 / r1) / (series.times[n - 1] - series.times[n - 2]);
    else
      opts.decay_rate = 1.0;
  }
  ZetaResult out = relative_zeta_prime_at_zero([&](double t) { return interp(t); }, inv, opts);
  double tail_area = 0.0;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    if (series.times[i + 1] > opts.split) break;
    tail_area += 0.5 * (series.tail_bound[i] + series.tail_bound[i + 1]) *
                 std::log(series.times[i + 1] / series.times[i]);
  }
  out.budget.tail += tail_area;
  return out;
}

double relative_trace_tail_integral(const Eigensystem& a, const Eigensystem& b, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("tail integral needs T > 0");
  auto side = [&](const Eigensystem& sys) {
    double acc = 0.0;
    for (const auto& mode : sys.modes) {
      double partial = 0.0;
      for (double lambda : mode.eigenvalues) {
        if (lambda <= kKernelThreshold) throw std::invalid_argument("tail integral: spectrum has a kernel");
        const double x = lambda * T;
        if (x > 700.0) break;
        partial += exp_integral_e1(x);
      }
      acc += mode.multiplicity * partial;
    }
    return acc;
  };
  return side(a) - side(b);
}

DeterminantResult relative_determinant(const Eigensystem& a, const Eigensystem& b, const DeterminantConfig& config) {
  DeterminantResult out;
  out.series = relative_trace_series(a, b, config.times);
  out.invariants = fit_heat_invariants(out.series, config.order, config.fit);
  ZetaOptions opts = config.zeta;
  if (!opts.decay_rate) opts.decay_rate = std::min(spectral_gap(a), spectral_gap(b));
  out.decay_rate = *opts.decay_rate;
  if (!opts.tail_integral) opts.tail_integral = [&](double T) { return relative_trace_tail_integral(a, b, T); };
  auto trace = [&](double t) { return relative_trace(a, b, t).value; };
  const ZetaResult z = relative_zeta_prime_at_zero(trace, out.invariants, opts);
  out.zeta_prime_zero = z.zeta_prime_zero;
  out.pieces = z.pieces;
  out.budget = z.budget;
  // Eigenvalues above lambda_cut are missing from both sides; bound what they could add to F.
  const double t_lo = opts.t_lower.value_or(config.fit.window.lo);
  const double darea = discrete_area(a) - discrete_area(b);
  out.budget.tail += adaptive_simpson([&](double u) { return weyl_tail(darea, a.lambda_cut, std::exp(u)); },
                                      std::log(t_lo), std::log(opts.split), 1e-12, 16)
                         .value;
  out.determinant = std::exp(-out.zeta_prime_zero);
  return out;
}

DeterminantResult finite_spectrum_determinant(const std::vector<double>& a, const std::vector<double>& b,
                                              const DeterminantConfig& config) {
  if (a.size() != b.size()) throw std::invalid_argument("finite spectra must have equal length");
  for (double v : a)
    if (!(v > 0.0)) throw std::invalid_argument("finite spectra must be positive");
  for (double v : b)
    if (!(v > 0.0)) throw std::invalid_argument("finite spectra must be positive");
  auto trace = [&](double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::exp(-a[i] * t) - std::exp(-b[i] * t);
    return acc;
  };
  DeterminantResult out;
  out.series.pair_id = "finite";
  out.series.times = config.times;
  for (double t : config.times) {
    out.series.values.push_back(trace(t));
    out.series.tail_bound.push_back(0.0);
  }
  out.invariants = fit_heat_invariants(out.series, config.order, config.fit);
  ZetaOptions opts = config.zeta;
  if (!opts.decay_rate)
    opts.decay_rate = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
  out.decay_rate = *opts.decay_rate;
  if (!opts.tail_integral)
    opts.tail_integral = [&](double T) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += exp_integral_e1(a[i] * T) - exp_integral_e1(b[i] * T);
      return acc;
    };
  const ZetaResult z = relative_zeta_prime_at_zero(trace, out.invariants, opts);
  out.zeta_prime_zero = z.zeta_prime_zero;
  out.pieces = z.pieces;
  out.budget = z.budget;
  out.determinant = std::exp(-out.zeta_prime_zero);
  return out;
}

std::string to_json(const DeterminantResult& r) {
  nlohmann::json j;
  j["zeta_prime_zero"] = r.zeta_prime_zero;
  j["determinant"] = r.determinant;
  j["log_determinant"] = -r.zeta_prime_zero;
  j["pieces"] = {{"singular_sum", r.pieces.singular_sum},
                 {"small_t_integral", r.pieces.small_t_integral},
                 {"large_t_integral", r.pieces.large_t_integral},
                 {"euler_correction", r.pieces.euler_correction}};
  j["error_budget"] = {{"quadrature", r.budget.quadrature},
                       {"fit", r.budget.fit},
                       {"tail", r.budget.tail},
                       {"total", r.budget.total()}};
  j["heat_invariants"] = {{"coefficients", r.invariants.coefficients},
                          {"window", {r.invariants.fit_window.lo, r.invariants.fit_window.hi}},
                          {"residual", r.invariants.residual},
                          {"samples", r.invariants.samples}};
  j["decay_rate"] = r.decay_rate;
  j["pair"] = r.series.pair_id;
  return j.dump(2);
}

}  // namespace fcb

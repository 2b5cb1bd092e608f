#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcb/spectral.hpp"

namespace fcb {

inline constexpr double kEulerGamma = 0.57721566490153286061;

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HeatInvariants {
  /// a_0 .. a_K of RelTr(t) ~ sum_k a_k t^{k-1}.
  std::vector<double> coefficients;
  Interval fit_window;
  /// max |fit - data| / max |data| over the window (0 when the data vanish).
  double residual = 0.0;
  /// max |data| over the window.
  double scale = 0.0;
  int samples = 0;

  int order() const { return static_cast<int>(coefficients.size()) - 1; }
  double coefficient(int k) const { return k < static_cast<int>(coefficients.size()) ? coefficients[k] : 0.0; }
  double evaluate(double t) const;
};

struct FitOptions {
  Interval window{0.02, 0.3};
  double residual_threshold = 1e-4;
};

/// Least-squares fit of sum_{k<=K} a_k t^{k-1} to the samples inside the window.
/// Throws FitError if there are fewer than max(3K, K+1) samples or the residual exceeds the threshold.
HeatInvariants fit_heat_invariants(const TraceSeries& series, int K, const FitOptions& options = {});
HeatInvariants fit_heat_invariants(const std::vector<double>& times, const std::vector<double>& values, int K,
                                   const FitOptions& options = {});

struct ZetaPieces {
  /// -a_0/tau + sum_{k>=2} a_k tau^{k-1}/(k-1) + a_1 log(tau).
  double singular_sum = 0.0;
  double small_t_integral = 0.0;  // F(0)
  double large_t_integral = 0.0;  // G(0), including the analytic tail
  double euler_correction = 0.0;  // gamma * a_1
};

struct ZetaBudget {
  double quadrature = 0.0;
  double fit = 0.0;
  double tail = 0.0;
  double total() const { return quadrature + fit + tail; }
};

struct ZetaOptions {
  /// Split point between the small-t and large-t integrals.
  double split = 1.0;
  /// Upper end of the explicit large-t integral; beyond it RelTr ~ A e^{-mu t}.
  double t_max = 20.0;
  /// Decay rate of the tail. When absent it is estimated from the trace itself.
  std::optional<double> decay_rate;
  /// Exact value of the integral of RelTr(t)/t over [T, inf) when the spectra are known.
  /// Replaces the fitted exponential tail.
  std::function<double(double)> tail_integral;
  double quadrature_tolerance = 1e-9;
  /// Lower end of the small-t integral; defaults to the fit window start.
  std::optional<double> t_lower;
};

struct ZetaResult {
  double zeta_prime_zero = 0.0;
  ZetaPieces pieces;
  ZetaBudget budget;
};

/// zeta'(0) = gamma a_1 - a_0 + sum_{k>=2} a_k/(k-1) + F(0) + G(0) (split at t = 1), evaluated
/// with the exact relative trace available as a function of t.
ZetaResult relative_zeta_prime_at_zero(const std::function<double(double)>& rel_trace, const HeatInvariants& inv,
                                       const ZetaOptions& options = {});

/// Same, with the trace known only through its samples (cubic interpolation in log t).
/// The series must cover [fit window start, t_max].
ZetaResult relative_zeta_prime_at_zero(const TraceSeries& series, const HeatInvariants& inv,
                                       const ZetaOptions& options = {});

struct DeterminantConfig {
  std::vector<double> times = log_time_grid(0.02, 20.0, 60);
  int order = 3;
  FitOptions fit;
  ZetaOptions zeta;
};

struct DeterminantResult {
  double zeta_prime_zero = 0.0;
  double determinant = 1.0;
  ZetaPieces pieces;
  ZetaBudget budget;
  HeatInvariants invariants;
  TraceSeries series;
  double decay_rate = 0.0;
};

/// det(A, B) = exp(-zeta'(0)) with zeta(s) = sum lambda_a^{-s} - lambda_b^{-s}.
DeterminantResult relative_determinant(const Eigensystem& a, const Eigensystem& b,
                                       const DeterminantConfig& config = {});

/// Integral over [T, inf) of the relative trace divided by t, summed exactly from the spectra as
/// sum mult * (E_1(lambda_a T) - E_1(lambda_b T)). Kernel eigenvalues are not allowed.
double relative_trace_tail_integral(const Eigensystem& a, const Eigensystem& b, double T);

/// The zeta pipeline applied to two finite spectra of equal length.
DeterminantResult finite_spectrum_determinant(const std::vector<double>& a, const std::vector<double>& b,
                                              const DeterminantConfig& config);

std::string to_json(const DeterminantResult& result);

}  // namespace fcb

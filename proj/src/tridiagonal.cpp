#include "fcb/tridiagonal.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fcb {

namespace {

constexpr int kLanes = 32;

struct PreparedPencil {
  const double* diag;
  const double* mass;
  std::vector<double> off2;
  std::size_t n;
  double pivmin;
};

PreparedPencil prepare(const TridiagonalPencil& pencil) {
  const std::size_t n = pencil.size();
  if (n == 0) throw std::invalid_argument("tridiagonal pencil is empty");
  if (pencil.off.size() + 1 != n || pencil.mass.size() != n)
    throw std::invalid_argument("tridiagonal pencil has inconsistent sizes");
  PreparedPencil p{pencil.diag.data(), pencil.mass.data(), std::vector<double>(n), n, 0.0};
  double big = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    p.off2[i] = pencil.off[i] * pencil.off[i];
    big = std::max(big, p.off2[i]);
  }
  p.off2[n - 1] = 0.0;
  p.pivmin = DBL_MIN * big / DBL_EPSILON;
  return p;
}

// Negative-pivot counts of K - sigma_p M for kLanes shifts at once. The lanes are
// independent recurrences, so several vectors in flight hide the division latency.
constexpr int kWidth = 8;
constexpr int kVectors = kLanes / kWidth;
typedef double Lanes __attribute__((vector_size(kWidth * sizeof(double))));
typedef long long LaneMask __attribute__((vector_size(kWidth * sizeof(long long))));

__attribute__((target_clones("avx512f", "avx2", "default")))
void sturm_counts_batch(const PreparedPencil& p, const double* sigma, int* counts) {
  Lanes sig[kVectors], d[kVectors];
  LaneMask c[kVectors];
  const Lanes pivmin = Lanes{} + p.pivmin;
  const Lanes neg_pivmin = -pivmin;
  auto guard = [&](Lanes v) {
    const Lanes mag = v < 0.0 ? -v : v;
    return mag < pivmin ? neg_pivmin : v;
  };
  for (int v = 0; v < kVectors; ++v) {
    for (int l = 0; l < kWidth; ++l) sig[v][l] = sigma[v * kWidth + l];
    d[v] = guard(p.diag[0] - sig[v] * p.mass[0]);
    c[v] = -(d[v] < 0.0);
  }
  for (std::size_t i = 1; i < p.n; ++i) {
    const double a = p.diag[i], m = p.mass[i], b = p.off2[i - 1];
    for (int v = 0; v < kVectors; ++v) {
      d[v] = guard((a - sig[v] * m) - b / d[v]);
      c[v] -= (d[v] < 0.0);
    }
  }
  for (int v = 0; v < kVectors; ++v)
    for (int l = 0; l < kWidth; ++l) counts[v * kWidth + l] = static_cast<int>(c[v][l]);
}

int count_one(const PreparedPencil& p, double sigma) {
  double sig[kLanes];
  int out[kLanes];
  std::fill(sig, sig + kLanes, sigma);
  sturm_counts_batch(p, sig, out);
  return out[0];
}

struct Bracket {
  double lo, hi;
  int clo, chi;
};

bool converged(const Bracket& b, const BisectionTolerance& tol) {
  const double scale = std::max(std::abs(b.lo), std::abs(b.hi));
  return b.hi - b.lo <= std::max(tol.absolute, tol.relative * scale);
}

// Tridiagonal LU with partial pivoting (LAPACK dgttrf layout).
struct TridiagonalLU {
  std::vector<double> dl, d, du, du2;
  std::vector<std::uint8_t> swapped;

  void factor(std::size_t n) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        swapped[i] = 0;
        if (d[i] != 0.0) {
          const double fact = dl[i] / d[i];
          dl[i] = fact;
          d[i + 1] -= fact * du[i];
        }
        du2[i] = 0.0;
      } else {
        swapped[i] = 1;
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = temp - fact * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        } else {
          du2[i] = 0.0;
        }
      }
    }
    double norm = 0.0;
    for (double v : d) norm = std::max(norm, std::abs(v));
    const double floor = DBL_EPSILON * std::max(norm, DBL_MIN);
    for (double& v : d)
      if (std::abs(v) < floor) v = v < 0.0 ? -floor : floor;
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl[i] * b[i];
      }
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t k = n; k-- > 2;) {
      const std::size_t i = k - 2;
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
  }
};

double mass_dot(const TridiagonalPencil& p, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += x[i] * p.mass[i] * y[i];
  return acc;
}

}  // namespace

int sturm_count(const TridiagonalPencil& pencil, double sigma) { return count_one(prepare(pencil), sigma); }

std::vector<double> pencil_eigenvalues(const TridiagonalPencil& pencil, double lo, double hi,
                                       BisectionTolerance tol) {
  if (!(hi > lo)) throw std::invalid_argument("pencil_eigenvalues: empty search interval");
  const PreparedPencil p = prepare(pencil);
  const int clo = count_one(p, lo);
  const int chi = count_one(p, hi);
  std::vector<double> result(static_cast<std::size_t>(chi - clo), 0.0);
  if (result.empty()) return result;

  std::vector<Bracket> active{{lo, hi, clo, chi}};
  std::vector<Bracket> next;
  double sig[kLanes];
  int cnt[kLanes];
  double pts[kLanes + 2];
  int cts[kLanes + 2];
  auto settle = [&](const Bracket& child) {
    if (child.chi == child.clo) return;
    if (converged(child, tol)) {
      const double value = 0.5 * (child.lo + child.hi);
      for (int j = child.clo; j < child.chi; ++j) result[static_cast<std::size_t>(j - clo)] = value;
    } else {
      next.push_back(child);
    }
  };
  while (!active.empty()) {
    next.clear();
    // With few brackets, spend the spare lanes on multisection.
    const std::size_t per = std::max<std::size_t>(1, kLanes / active.size());
    const std::size_t group = kLanes / per;
    for (std::size_t start = 0; start < active.size(); start += group) {
      const std::size_t members = std::min(group, active.size() - start);
      std::size_t lane = 0;
      for (std::size_t g = 0; g < members; ++g) {
        const Bracket& b = active[start + g];
        for (std::size_t q = 1; q <= per; ++q)
          sig[lane++] = b.lo + (b.hi - b.lo) * static_cast<double>(q) / static_cast<double>(per + 1);
      }
      for (std::size_t l = lane; l < static_cast<std::size_t>(kLanes); ++l) sig[l] = sig[lane - 1];
      sturm_counts_batch(p, sig, cnt);
      for (std::size_t g = 0; g < members; ++g) {
        const Bracket& b = active[start + g];
        pts[0] = b.lo;
        cts[0] = b.clo;
        for (std::size_t q = 1; q <= per; ++q) {
          pts[q] = sig[g * per + q - 1];
          cts[q] = std::clamp(cnt[g * per + q - 1], cts[q - 1], b.chi);
        }
        pts[per + 1] = b.hi;
        cts[per + 1] = b.chi;
        for (std::size_t q = 0; q <= per; ++q)
          settle(Bracket{pts[q], pts[q + 1], cts[q], cts[q + 1]});
      }
    }
    active.swap(next);
  }
  return result;
}

std::vector<double> pencil_eigenvectors(const TridiagonalPencil& pencil, std::span<const double> eigenvalues,
                                        std::vector<double>* residuals) {
  const std::size_t n = pencil.size();
  const std::size_t k = eigenvalues.size();
  std::vector<double> vectors(n * k, 0.0);
  if (residuals) residuals->assign(k, 0.0);
  TridiagonalLU lu;
  std::vector<double> rhs(n);
  std::size_t cluster_start = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double lambda = eigenvalues[j];
    if (j > 0) {
      const double prev = eigenvalues[j - 1];
      const double gap = std::abs(lambda - prev);
      if (gap > 1e-3 * std::max({std::abs(lambda), std::abs(prev), 1e-3})) cluster_start = j;
    }
    lu.dl.assign(pencil.off.begin(), pencil.off.end());
    lu.du.assign(pencil.off.begin(), pencil.off.end());
    lu.d.resize(n);
    for (std::size_t i = 0; i < n; ++i) lu.d[i] = pencil.diag[i] - lambda * pencil.mass[i];
    lu.du2.assign(n > 1 ? n - 1 : 0, 0.0);
    lu.swapped.assign(n > 1 ? n - 1 : 0, 0);
    lu.factor(n);

    double* x = vectors.data() + j * n;
    // Deterministic start vector with no special structure.
    std::uint64_t state = 0x9E3779B97F4A7C15ULL ^ (j + 1);
    for (std::size_t i = 0; i < n; ++i) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      x[i] = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    for (int iter = 0; iter < 4; ++iter) {
      for (std::size_t i = 0; i < n; ++i) rhs[i] = pencil.mass[i] * x[i];
      lu.solve(rhs);
      std::copy(rhs.begin(), rhs.end(), x);
      for (std::size_t q = cluster_start; q < j; ++q) {
        const double* y = vectors.data() + q * n;
        const double proj = mass_dot(pencil, x, y);
        for (std::size_t i = 0; i < n; ++i) x[i] -= proj * y[i];
      }
      const double norm = std::sqrt(mass_dot(pencil, x, x));
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw std::runtime_error("inverse iteration broke down");
      for (std::size_t i = 0; i < n; ++i) x[i] /= norm;
    }
    // Fix the sign so that the first significant entry is positive.
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(x[i]) > 1e-8) {
        if (x[i] < 0.0)
          for (std::size_t q = 0; q < n; ++q) x[q] = -x[q];
        break;
      }
    }
    if (residuals) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double r = (pencil.diag[i] - lambda * pencil.mass[i]) * x[i];
        if (i > 0) r += pencil.off[i - 1] * x[i - 1];
        if (i + 1 < n) r += pencil.off[i] * x[i + 1];
        acc += r * r;
      }
      (*residuals)[j] = std::sqrt(acc) / std::max(std::abs(lambda), 1.0);
    }
  }
  return vectors;
}

}  // namespace fcb

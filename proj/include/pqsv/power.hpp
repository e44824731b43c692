#pragma once

// Generalized power method (Boyd) for (p,q)-singular vectors of a LinearMap,
// plus the exact small-matrix algorithms for the (inf,inf) and (1,1) norms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pqsv/linop.hpp"
#include "pqsv/rng.hpp"

namespace pqsv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// r' with 1/r + 1/r' = 1; conj(inf) = 1, conj(1) = inf
inline double conjugate_exponent(double r) {
  if (r < 1.0) throw std::invalid_argument("conjugate_exponent: r must be >= 1");
  if (std::isinf(r)) return 1.0;
  if (r == 1.0) return kInf;
  return r / (r - 1.0);
}

// Problem exponents. p = 1 is rejected (its conjugate makes the iteration
// ill-defined) and q must be finite; a large finite q stands in for q = inf.
struct HolderPair {
  double p = kInf;
  double q = 5.0;
  double p_conj = 1.0;
  double q_conj = 1.25;

  static HolderPair make(double p, double q) {
    if (!(p > 1.0)) throw std::invalid_argument("HolderPair: p must lie in (1, inf]");
    if (!(q >= 1.0) || std::isinf(q))
      throw std::invalid_argument("HolderPair: q must lie in [1, inf)");
    HolderPair hp;
    hp.p = p;
    hp.q = q;
    hp.p_conj = conjugate_exponent(p);
    hp.q_conj = conjugate_exponent(q);
    return hp;
  }
};

enum class PowerInit { SeededUniform, SeededSigns, UserVector };

struct PowerSettings {
  std::size_t max_iters = 100;
  double rel_tol = 1e-5;
  std::uint64_t seed = 0;
  PowerInit init = PowerInit::SeededUniform;
  std::vector<double> init_vector;  // used only with PowerInit::UserVector

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("PowerSettings: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("PowerSettings: rel_tol must be > 0");
  }
};

struct PowerReport {
  std::vector<double> vector;   // unit p-norm iterate at exit
  double singular_value = 0.0;  // |A x|_q recomputed at exit
  std::vector<double> history;  // s per iteration, history[0] is the initial guess value
  std::size_t iterations = 0;
  bool converged = false;
};

// psi_r(x) = sign(x) |x|^(r-1), elementwise; psi_1 is sign with psi_1(0) = 0
inline void psi_inplace(double r, std::span<double> v) {
  if (r < 1.0) throw std::invalid_argument("psi: r must be >= 1");
  if (r == 2.0) return;
  if (r == 1.0) {
    for (double& x : v) x = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    return;
  }
  for (double& x : v) {
    if (x > 0.0)
      x = std::pow(x, r - 1.0);
    else if (x < 0.0)
      x = -std::pow(-x, r - 1.0);
  }
}

inline std::vector<double> psi(double r, std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  psi_inplace(r, out);
  return out;
}

inline double p_norm(std::span<const double> v, double p) {
  if (p < 1.0) throw std::invalid_argument("p_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) {
      const double a = std::abs(x);
      if (a > m) m = a;
    }
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (p == 2.0) return norm2(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

namespace detail {

inline void power_init_vector(std::vector<double>& x, const PowerSettings& settings,
                              Rng& rng, std::size_t n) {
  x.resize(n);
  switch (settings.init) {
    case PowerInit::SeededUniform:
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      break;
    case PowerInit::SeededSigns:
      for (double& v : x) v = rng.sign();
      break;
    case PowerInit::UserVector:
      if (settings.init_vector.size() != n)
        throw std::invalid_argument("power_method: init_vector length does not match in_dim");
      x = settings.init_vector;
      break;
  }
}

}  // namespace detail

// Algorithm: x <- x/|x|_p; repeat Sx <- psi_{p'}(A' psi_q(A x)),
// x <- Sx/|Sx|_p, s <- |A x|_q; stop when the relative change of s drops
// below rel_tol or max_iters is reached. Every iterate has unit p-norm, so
// each s is a certified lower bound on the (p,q)-norm of the map.
inline PowerReport power_method(const LinearMap& map, const HolderPair& pair,
                                const PowerSettings& settings) {
  settings.validate();
  const std::size_t n = map.in_dim();
  const std::size_t m = map.out_dim();
  if (n == 0 || m == 0) throw std::invalid_argument("power_method: map dimensions must be positive");

  Rng rng(settings.seed);
  std::vector<double> x;
  detail::power_init_vector(x, settings, rng, n);

  PowerReport report;
  auto normalize = [&](std::vector<double>& v) -> bool {
    const double nv = p_norm(v, pair.p);
    if (nv == 0.0 || !std::isfinite(nv)) return false;
    for (double& e : v) e /= nv;
    return true;
  };

  if (!normalize(x)) {
    // all-zero/non-finite start: one retry from the seed stream
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    if (!normalize(x)) {
      report.vector = std::move(x);
      return report;
    }
  }

  std::vector<double> ax(m), z(n);
  map.apply(x, ax);
  double s = p_norm(ax, pair.q);
  report.history.push_back(s);

  bool reinit_used = false;
  for (std::size_t k = 1; k <= settings.max_iters; ++k) {
    psi_inplace(pair.q, ax);         // psi_q(Ax), in place
    map.apply_adjoint(ax, z);
    psi_inplace(pair.p_conj, z);     // Sx
    const double nsx = p_norm(z, pair.p);
    if (nsx == 0.0 || !std::isfinite(nsx)) {
      if (!reinit_used) {
        // degenerate step (e.g. zero operator): one fresh start before giving up
        reinit_used = true;
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        if (normalize(x)) {
          map.apply(x, ax);
          s = p_norm(ax, pair.q);
          report.history.push_back(s);
          report.iterations = k;
          continue;
        }
      }
      report.converged = false;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = z[i] / nsx;
    map.apply(x, ax);
    const double s_new = p_norm(ax, pair.q);
    report.history.push_back(s_new);
    report.iterations = k;
    const double rel_change = std::abs(s_new - s) / std::max(s_new, 1e-300);
    s = s_new;
    if (rel_change < settings.rel_tol) {
      report.converged = true;
      break;
    }
  }

  map.apply(x, ax);
  report.singular_value = p_norm(ax, pair.q);
  report.vector = std::move(x);
  return report;
}

// Exact (inf,inf) operator norm: max absolute row sum; the maximizer is the
// sign pattern of that row (zeros mapped to +1).
inline std::pair<double, std::vector<double>> exact_inf_inf(const DenseMap& map) {
  const std::size_t m = map.rows(), n = map.cols();
  double best = -1.0;
  std::size_t best_row = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(map.entry(i, j));
    if (s > best) {
      best = s;
      best_row = i;
    }
  }
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = map.entry(best_row, j) < 0.0 ? -1.0 : 1.0;
  return {best, std::move(v)};
}

// Exact (1,1) operator norm: max absolute column sum, attained at a standard
// basis vector.
inline std::pair<double, std::vector<double>> exact_one_one(const DenseMap& map) {
  const std::size_t m = map.rows(), n = map.cols();
  double best = -1.0;
  std::size_t best_col = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::abs(map.entry(i, j));
    if (s > best) {
      best = s;
      best_col = j;
    }
  }
  std::vector<double> v(n, 0.0);
  v[best_col] = 1.0;
  return {best, std::move(v)};
}

}  // namespace pqsv

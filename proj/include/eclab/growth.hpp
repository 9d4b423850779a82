#pragma once
// Orbit growth rates for the k-th compound of the differential.
//
// For a window of j consecutive orbit steps the chain rule gives
// Lambda^k D(f^j) as the product of the per-step compounds.  We sample seed
// points on a grid, run each orbit, and take
//
//     u_j = max over all seeds and all length-j windows of || product ||_2.
//
// Maximising over *windows* (not just orbit prefixes) makes the sequence
// deterministically submultiplicative: a window of length j + l splits into
// adjacent windows of lengths j and l whose norms are themselves counted.
// The growth exponent reported is the Fekete root u_J^{1/J}; the inverse
// sequence (products of inverse compounds) gives the contraction rate.
// Products are accumulated with periodic renormalisation so long windows
// never overflow; logarithms are kept alongside the raw values.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "eclab/multiindex.hpp"
#include "eclab/torus_map.hpp"

namespace eclab {

struct GrowthSequence {
  int k = 0;
  int J = 0;
  std::vector<double> log_u;  // log u_j, j = 1..J (index j-1)
  std::vector<double> u;      // exp(log_u), may overflow to inf for huge J
  std::vector<double> roots;  // u_j^{1/j}
  double hat = 0.0;           // u_J^{1/J}
  bool submultiplicative_ok = true;
  double worst_submult_slack = 0.0;  // max of log u_{j+l} - log u_j - log u_l (<= ~0)
};

namespace detail {

inline double op_norm(const Eigen::MatrixXd& M) {
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  if (M.rows() == 2 && M.cols() == 2) {
    const double a = M.squaredNorm();
    const double d = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    const double disc = std::max(0.0, a * a - 4.0 * d * d);
    return std::sqrt(0.5 * (a + std::sqrt(disc)));
  }
  return M.jacobiSvd().singularValues()(0);
}

inline void finalize_growth(GrowthSequence& g) {
  g.u.resize(g.log_u.size());
  g.roots.resize(g.log_u.size());
  for (std::size_t j = 0; j < g.log_u.size(); ++j) {
    g.u[j] = std::exp(g.log_u[j]);
    g.roots[j] = std::exp(g.log_u[j] / double(j + 1));
  }
  g.hat = g.roots.empty() ? 1.0 : g.roots.back();
  g.worst_submult_slack = -std::numeric_limits<double>::infinity();
  for (int j = 1; j < g.J; ++j)
    for (int l = 1; j + l <= g.J; ++l) {
      const double slack = g.log_u[std::size_t(j + l - 1)] - g.log_u[std::size_t(j - 1)] -
                           g.log_u[std::size_t(l - 1)];
      g.worst_submult_slack = std::max(g.worst_submult_slack, slack);
    }
  if (g.J < 2) g.worst_submult_slack = 0.0;
  g.submultiplicative_ok = g.worst_submult_slack <= 1e-9;
}

// Shared engine: step matrices are the k-th compounds of Df along sampled
// orbits (or their inverses), windows accumulate left- or right-products.
template <typename StepFn>
inline GrowthSequence window_growth(const TorusMap& f, int k, int J, int seeds_per_axis,
                                    StepFn step_matrix, bool multiply_on_left) {
  const int n = f.dim();
  if (k < 0 || k > n) throw std::invalid_argument("growth: need 0 <= k <= n");
  if (J < 1) throw std::invalid_argument("growth: need J >= 1");
  GrowthSequence g;
  g.k = k;
  g.J = J;
  g.log_u.assign(std::size_t(J), -std::numeric_limits<double>::infinity());
  if (k == 0) {  // Lambda^0 Df is the identity on R: every window has norm 1
    g.log_u.assign(std::size_t(J), 0.0);
    finalize_growth(g);
    return g;
  }
  const int c = binomial(n, k);
  const std::size_t seeds =
      (n == 1) ? std::size_t(seeds_per_axis) : std::size_t(seeds_per_axis) * seeds_per_axis;
  std::vector<Eigen::MatrixXd> steps(static_cast<std::size_t>(J));
  for (std::size_t s = 0; s < seeds; ++s) {
    Eigen::VectorXd x(n);
    if (n == 1) {
      x[0] = double(s) / seeds_per_axis;
    } else {
      x[0] = double(s / std::size_t(seeds_per_axis)) / seeds_per_axis;
      x[1] = double(s % std::size_t(seeds_per_axis)) / seeds_per_axis;
    }
    for (int t = 0; t < J; ++t) {
      steps[std::size_t(t)] = step_matrix(x);
      x = f.evaluate(x);
    }
    // Window products, grown incrementally in length; renormalise to keep
    // magnitudes finite and carry the log factor.
    std::vector<Eigen::MatrixXd> prod(static_cast<std::size_t>(J));
    std::vector<double> log_scale(std::size_t(J), 0.0);
    for (int t = 0; t < J; ++t) prod[std::size_t(t)] = Eigen::MatrixXd::Identity(c, c);
    for (int j = 1; j <= J; ++j) {
      for (int t = 0; t + j <= J; ++t) {
        Eigen::MatrixXd& P = prod[std::size_t(t)];
        const Eigen::MatrixXd& S = steps[std::size_t(t + j - 1)];
        P = multiply_on_left ? (S * P).eval() : (P * S).eval();
        double nrm = op_norm(P);
        if (nrm > 1e100 || (nrm < 1e-100 && nrm > 0.0)) {
          P /= nrm;
          log_scale[std::size_t(t)] += std::log(nrm);
          nrm = 1.0;
        }
        if (nrm > 0.0) {
          const double lg = log_scale[std::size_t(t)] + std::log(nrm);
          g.log_u[std::size_t(j - 1)] = std::max(g.log_u[std::size_t(j - 1)], lg);
        }
      }
    }
  }
  finalize_growth(g);
  return g;
}

}  // namespace detail

// Expansion sequence: u_j = max window norm of products of Lambda^k Df.
inline GrowthSequence upsilon(const TorusMap& f, int k, int J, int seeds_per_axis = 24) {
  const int n = f.dim();
  auto step = [&](const Eigen::VectorXd& x) {
    return compound_matrix(f.jacobian(x), k);
  };
  (void)n;
  return detail::window_growth(f, k, J, seeds_per_axis, step, /*multiply_on_left=*/true);
}

// Contraction sequence: windows of inverse compounds (covering maps only).
// nu_hat below 1 certifies backward contraction on k-vectors.
inline GrowthSequence nu(const TorusMap& f, int k, int J, int seeds_per_axis = 24) {
  auto step = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd C = compound_matrix(f.jacobian(x), k);
    if (C.rows() == 1) {
      if (std::abs(C(0, 0)) < 1e-14)
        throw std::domain_error("nu: compound not invertible (map is not a covering)");
      C(0, 0) = 1.0 / C(0, 0);
      return C;
    }
    const double d = C.determinant();
    if (std::abs(d) < 1e-14)
      throw std::domain_error("nu: compound not invertible (map is not a covering)");
    return Eigen::MatrixXd(C.inverse());
  };
  // (S_t ... S_{t+j-1}) inverted reverses the order, so inverse windows
  // multiply on the right.
  return detail::window_growth(f, k, J, seeds_per_axis, step, /*multiply_on_left=*/false);
}

}  // namespace eclab

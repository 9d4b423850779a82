#pragma once

// Rescaled-pullback fixed-point engine.
//
// A candidate invariant current of degree k is represented as
//
//     C = h_w + d(tau),
//
// a constant-coefficient ("harmonic") form with class vector w plus the
// exterior derivative of a potential of degree k - 1.  One pullback step maps
//
//     f* C / lambda = h_w + d( (eta_w + f* tau) / lambda ),
//
// where eta_w is the coexact driver solving f* h_w = h_{M_k w} + d(eta_w)
// (exactly computable for our map families), so the whole iteration lives in
// the potential.  Potentials are evaluated by orbit sums
//
//     tau_J(x) = sum_{j<J} (f^j)*(eta_w)(x) / lambda^{j+1}
//                + (f^J)*(tau_0)(x) / lambda^J,
//
// pointwise at grid nodes: no resampling or interpolation ever touches the
// cascade, so the Hoelder-critical small scales are sampled exactly.  Weak
// residuals against the Fourier test dictionary are obtained by integration
// by parts from the potential increments, which keeps them meaningful even
// when the limiting density is too rough to resolve on the grid.
//
// The engine refuses to iterate when the contract between the rescaling
// eigenvalue and the lower-degree growth rate fails: |lambda| must exceed
// Upsilon_hat_{k-1} (or nu_hat_{k-1} on the covering-space path).  See
// hypothesis_gap / HypothesisError.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohomology.hpp"
#include "currents.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "growth.hpp"
#include "multiindex.hpp"
#include "spectral.hpp"
#include "torus_map.hpp"

namespace eclab {

// ---------------------------------------------------------------------------
// Configuration and hypothesis gating.

struct SolverConfig {
  int N = 512;              // run resolution (grid nodes per axis)
  double tol_weak = 1e-10;  // convergence threshold on the weak residual
  int min_iterates = 0;     // run at least this many pullback steps
  int max_iterates = 80;    // give up (converged = false) after this many
  int dict_cutoff = 8;      // |m|_inf cutoff of the Fourier test dictionary
  bool covering_path = false;  // gate against nu_hat instead of Upsilon_hat
  int growth_window = 12;      // iterate window for the growth-rate estimates
  double gap_tol = 1e-9;       // relative guard on the spectral-gap margin
};

struct GapReport {
  int k = 1;                   // candidate degree
  double lambda_abs = 0.0;     // |lambda| of the rescaling
  double growth_hat = 0.0;     // Upsilon_hat_{k-1} (or nu_hat_{k-1})
  double margin = 0.0;         // lambda_abs - growth_hat
  bool covering_path = false;  // which rate was used
  bool admissible = false;     // margin clears the guard
};

class HypothesisError : public std::domain_error {
 public:
  GapReport report;
  explicit HypothesisError(const GapReport& r) : std::domain_error(describe(r)), report(r) {}

 private:
  static std::string describe(const GapReport& r) {
    std::ostringstream os;
    os << "spectral-gap hypothesis rejected for degree " << r.k << ": |lambda| = " << r.lambda_abs
       << " does not exceed the degree-" << (r.k - 1)
       << (r.covering_path ? " covering contraction rate nu_hat = " : " growth rate Upsilon_hat = ")
       << r.growth_hat << " (margin " << r.margin << ")";
    return os.str();
  }
};

// Estimate the relevant lower-degree growth rate and compare it to |lambda|.
// Degree-0 compound products are empty, so Upsilon_hat_0 = nu_hat_0 = 1.
inline GapReport hypothesis_gap(const TorusMap& f, int k, double lambda,
                                const SolverConfig& cfg = {}) {
  if (k < 1 || k > f.dim()) throw std::invalid_argument("hypothesis_gap: degree out of range");
  GapReport r;
  r.k = k;
  r.lambda_abs = std::abs(lambda);
  r.covering_path = cfg.covering_path;
  if (k == 1)
    r.growth_hat = 1.0;
  else
    r.growth_hat = (cfg.covering_path ? nu(f, k - 1, cfg.growth_window)
                                      : upsilon(f, k - 1, cfg.growth_window))
                       .hat;
  r.margin = r.lambda_abs - r.growth_hat;
  r.admissible = r.margin > cfg.gap_tol * std::max(1.0, r.growth_hat);
  return r;
}

inline GapReport require_gap(const TorusMap& f, int k, double lambda, const SolverConfig& cfg = {}) {
  GapReport r = hypothesis_gap(f, k, lambda, cfg);
  if (!r.admissible) throw HypothesisError(r);
  return r;
}

// ---------------------------------------------------------------------------
// Harmonic sections and dictionary pairings of potential-represented candidates.

inline FormField harmonic_section(const PeriodicGrid& g, int k, const Eigen::VectorXd& w) {
  if (w.size() != binomial(g.n, k))
    throw std::invalid_argument("harmonic_section: class vector has wrong dimension");
  std::vector<double> coeffs(static_cast<std::size_t>(w.size()));
  for (long i = 0; i < w.size(); ++i) coeffs[std::size_t(i)] = w(i);
  return constant_form(g, k, coeffs);
}

// Pairings of the candidate h_w + d(tau) against every dictionary entry,
// computed from the potential samples by integration by parts:
//   int (d tau)_a e^{-2 pi i m.x} = 2 pi i m_a tauhat(m)        (k = 1)
//   int (d tau)_{01} e^{-2 pi i m.x}
//       = 2 pi i (m_0 tauhat_1(m) - m_1 tauhat_0(m))            (k = n = 2).
// This agrees bin-for-bin with pairing the spectral derivative field, but it
// never forms the (possibly much rougher) derivative samples.
inline std::vector<double> candidate_pairings(const FourierDictionary& D, int k,
                                              const Eigen::VectorXd& w, const FormField& tau) {
  const int n = tau.grid.n, N = tau.grid.N;
  if (tau.degree != k - 1)
    throw std::invalid_argument("candidate_pairings: potential degree must be k - 1");
  if (D.n != n || D.test_degree != n - k)
    throw std::invalid_argument("candidate_pairings: dictionary degree mismatch");
  if (2 * D.cutoff >= N)
    throw std::invalid_argument("candidate_pairings: cutoff beyond grid resolution");
  if (k != 1 && k != n) throw std::invalid_argument("candidate_pairings: degree must be 1 or n");
  const bool have_w = w.size() > 0;
  if (have_w && w.size() != binomial(n, k))
    throw std::invalid_argument("candidate_pairings: class vector has wrong dimension");

  const auto test_idx = increasing_multi_indices(n, D.test_degree);
  const auto cur_idx = increasing_multi_indices(n, k);
  std::vector<int> signs(test_idx.size(), 0);
  std::vector<std::size_t> partner(test_idx.size(), 0);
  std::vector<int> partner_axis(test_idx.size(), 0);  // meaningful for k = 1
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    MultiIndex comp_idx;
    for (int a = 0; a < n; ++a)
      if (std::find(test_idx[i].begin(), test_idx[i].end(), a) == test_idx[i].end())
        comp_idx.push_back(a);
    partner[i] = std::size_t(index_position(cur_idx, comp_idx));
    partner_axis[i] = comp_idx.empty() ? 0 : comp_idx[0];
    signs[i] = shuffle_sign(comp_idx, test_idx[i]);
  }

  std::vector<std::vector<cplx>> that(tau.comp.size());
  for (std::size_t c = 0; c < tau.comp.size(); ++c) {
    that[c].assign(tau.comp[c].begin(), tau.comp[c].end());
    Fft::forward(n, N, that[c]);
  }
  const double inv_count = 1.0 / double(tau.grid.point_count());
  const int sgn_k = form_current_sign(k);

  std::vector<double> out;
  out.reserve(D.entries.size());
  for (const auto& e : D.entries) {
    const std::size_t bin = (n == 1) ? std::size_t(freq_bin(e.m[0], N))
                                     : std::size_t(freq_bin(e.m[0], N)) * N + freq_bin(e.m[1], N);
    cplx dhat;  // integral of (d tau)_{partner} against e^{-2 pi i m.x}
    if (k == 1) {
      const int ma = e.m[partner_axis[e.comp]];
      dhat = cplx(0.0, kTwoPi * double(ma)) * that[0][bin];
    } else {  // k = n = 2, partner component is dx0^dx1
      dhat = cplx(0.0, kTwoPi) * (double(e.m[0]) * that[1][bin] - double(e.m[1]) * that[0][bin]);
    }
    cplx I = dhat * inv_count;
    if (have_w && e.m[0] == 0 && e.m[1] == 0) I += cplx(w(long(partner[e.comp])), 0.0);
    const double integral = (e.trig == 0) ? I.real() : -I.imag();
    out.push_back(sgn_k * signs[e.comp] * integral);
  }
  return out;
}

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Coexact driver eta_w with f* h_w = h_{M_k w} + d(eta_w), returned as an
// analytic (band-limited) form function of degree k - 1.
//
//  * k = 1 (any n):  f* (w.dx) = (A^T w).dx + d(w.p), so eta = w.p with p the
//    periodic part of the lift.
//  * k = n = 2:      f* (w0 vol) = w0 det(Df) vol and int det(Df) = det A, so
//    eta is a 1-form potential of w0 (det Df - det A) vol, recovered exactly
//    from the band-limited Jacobian by a flat Hodge solve.
inline FormFunction coexact_driver(const TorusMap& f, int k, const Eigen::VectorXd& w) {
  const int n = f.dim();
  FormFunction eta;
  eta.n = n;
  eta.degree = k - 1;
  if (k == 1) {
    const Eigen::MatrixXd A = f.linear_part();
    eta.eval = [f, A, w, n](const double* x, double* out) {
      double lift[2] = {0.0, 0.0};
      f.lift_raw(x, lift);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        double ax = 0.0;
        for (int j = 0; j < n; ++j) ax += A(i, j) * x[j];
        acc += w(i) * (lift[i] - ax);
      }
      out[0] = acc;
    };
    return eta;
  }
  // k = n = 2: solve on a fixed auxiliary grid; det Df is band-limited so the
  // sampled solve is exact once the perturbation frequencies are resolved.
  const int N_eta = 128;
  PeriodicGrid g{2, N_eta};
  FormField rhs(g, 2);
  const double det_lin = f.linear_part().determinant();
  std::array<double, 2> x{};
  for (int i0 = 0; i0 < N_eta; ++i0) {
    x[0] = double(i0) / N_eta;
    for (int i1 = 0; i1 < N_eta; ++i1) {
      x[1] = double(i1) / N_eta;
      rhs.comp[0][std::size_t(i0) * N_eta + i1] = w(0) * (f.det_jacobian(x.data()) - det_lin);
    }
  }
  const HodgeDecomposition hd = hodge_potential(rhs, 1e-8);
  const SpectralForm spec = spectral_form(hd.potential, 1e-14);
  eta.eval = [spec](const double* x, double* out) {
    for (std::size_t c = 0; c < spec.comps.size(); ++c) out[c] = spec.comps[c].eval(x);
  };
  return eta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Eigencurrent iteration.

struct SolverTrace {
  std::vector<double> weak_residual;    // per iterate: weak norm of C_{j+1} - C_j
  std::vector<double> potential_delta;  // per iterate: sup norm of tau_{j+1} - tau_j
  double ratio_fit = std::numeric_limits<double>::quiet_NaN();  // tail decay ratio
  double predicted_ratio = std::numeric_limits<double>::quiet_NaN();  // growth_hat / |lambda|
  bool converged = false;
  int iterates = 0;
};

namespace detail {

inline void fit_trace_ratio(SolverTrace& t) {
  const auto& d = t.potential_delta;
  std::vector<double> ratios;
  for (std::size_t i = 1; i < d.size() && ratios.size() < 6; ++i) {
    const std::size_t j = d.size() - i;  // walk backwards over the tail
    if (d[j] > 1e-290 && d[j - 1] > 1e-290) ratios.push_back(d[j] / d[j - 1]);
  }
  if (ratios.empty()) return;
  double acc = 0.0;
  for (double r : ratios) acc += std::log(r);
  t.ratio_fit = std::exp(acc / double(ratios.size()));
}

}  // namespace detail

struct EigencurrentResult {
  int k = 1;
  Eigen::VectorXd w;           // cohomology class of the candidate
  double lambda = 0.0;         // rescaling eigenvalue
  FormField potential;         // degree k-1, exact orbit-sum samples at cfg.N
  FormCurrent current;         // h_w + d(potential), spectral derivative field
  std::vector<double> pairings;  // dictionary pairings of the limit candidate
  SolverTrace trace;
  GapReport gap;
};

// Run the rescaled-pullback iteration for the degree-k candidate with class w
// and eigenvalue lambda; (w, lambda) must be an eigenpair of the induced
// action M_k.  An optional initial potential (degree k - 1, evaluated
// analytically along orbits) selects the initializer C_0 = h_w + d(tau_0).
inline EigencurrentResult eigencurrent(const TorusMap& f, int k, const Eigen::VectorXd& w,
                                       double lambda, const FormFunction* initial_potential,
                                       const SolverConfig& cfg = {}) {
  const int n = f.dim();
  if (k != 1 && k != n) throw std::invalid_argument("eigencurrent: degree must be 1 or n");
  if (w.size() != binomial(n, k))
    throw std::invalid_argument("eigencurrent: class vector has wrong dimension");
  if (std::abs(lambda) < 1e-14) throw std::invalid_argument("eigencurrent: lambda must be nonzero");
  const Eigen::MatrixXd Mk = induced_action(f.linear_part_int(), k).cast<double>();
  if ((Mk * w - lambda * w).lpNorm<Eigen::Infinity>() >
      1e-8 * (std::abs(lambda) + Mk.lpNorm<Eigen::Infinity>()) * w.lpNorm<Eigen::Infinity>())
    throw std::invalid_argument("eigencurrent: (w, lambda) is not an eigenpair of the induced action");
  if (initial_potential &&
      (initial_potential->n != n || initial_potential->degree != k - 1 || !initial_potential->eval))
    throw std::invalid_argument("eigencurrent: initial potential has wrong shape");

  EigencurrentResult res;
  res.k = k;
  res.w = w;
  res.lambda = lambda;
  res.gap = require_gap(f, k, lambda, cfg);

  const PeriodicGrid g{n, cfg.N};
  const std::size_t P = g.point_count();
  const FourierDictionary D = fourier_dictionary(n, n - k, cfg.dict_cutoff);
  const FormFunction eta = detail::coexact_driver(f, k, w);
  const long pc = binomial(n, k - 1);  // potential component count (1 or 2)

  // Orbit state per grid node: current point, accumulated (Df^j)^T (only for
  // vector potentials), and the initializer term (f^j)*(tau_0) / lambda^j.
  std::vector<double> curx(P * std::size_t(n));
  for (std::size_t p = 0; p < P; ++p) g.coord(p, &curx[p * std::size_t(n)]);
  const bool vector_potential = (pc == 2);
  std::vector<double> jac_t;  // row-major 2x2 (Df^j)^T per node
  if (vector_potential) {
    jac_t.assign(P * 4, 0.0);
    for (std::size_t p = 0; p < P; ++p) jac_t[p * 4 + 0] = jac_t[p * 4 + 3] = 1.0;
  }

  FormField tau(g, k - 1);
  std::vector<std::vector<double>> init_term(std::size_t(pc), std::vector<double>(P, 0.0));
  if (initial_potential) {
    std::array<double, 2> out{};
    for (std::size_t p = 0; p < P; ++p) {
      initial_potential->eval(&curx[p * std::size_t(n)], out.data());
      for (long c = 0; c < pc; ++c) {
        init_term[std::size_t(c)][p] = out[std::size_t(c)];
        tau.comp[std::size_t(c)][p] = out[std::size_t(c)];
      }
    }
  }

  FormField delta(g, k - 1);
  double pw = 1.0;  // 1 / lambda^j
  const Eigen::VectorXd w_zero;
  for (int j = 0; j < cfg.max_iterates; ++j) {
    pw /= lambda;  // now 1 / lambda^{j+1}
    double sup_delta = 0.0;
    std::array<double, 2> ev{}, y{}, ti{};
    double Jf[4];
    for (std::size_t p = 0; p < P; ++p) {
      double* x = &curx[p * std::size_t(n)];
      eta.eval(x, ev.data());
      f.eval_raw(x, y.data());
      if (!vector_potential) {
        double d = ev[0] * pw;
        if (initial_potential) {
          initial_potential->eval(y.data(), ti.data());
          const double next = ti[0] * pw;
          d += next - init_term[0][p];
          init_term[0][p] = next;
        }
        tau.comp[0][p] += d;
        delta.comp[0][p] = d;
        sup_delta = std::max(sup_delta, std::abs(d));
      } else {
        double* Pt = &jac_t[p * 4];
        const double d0 = (Pt[0] * ev[0] + Pt[1] * ev[1]) * pw;
        const double d1 = (Pt[2] * ev[0] + Pt[3] * ev[1]) * pw;
        f.jacobian_raw(x, Jf);
        // (Df^{j+1})^T = (Df^j)^T (Df at f^j x)^T; Jf is row-major, so its
        // transpose has rows (Jf[0], Jf[2]) and (Jf[1], Jf[3]).
        const double n0 = Pt[0] * Jf[0] + Pt[1] * Jf[1];
        const double n1 = Pt[0] * Jf[2] + Pt[1] * Jf[3];
        const double n2 = Pt[2] * Jf[0] + Pt[3] * Jf[1];
        const double n3 = Pt[2] * Jf[2] + Pt[3] * Jf[3];
        double dd0 = d0, dd1 = d1;
        Pt[0] = n0;
        Pt[1] = n1;
        Pt[2] = n2;
        Pt[3] = n3;
        if (initial_potential) {
          initial_potential->eval(y.data(), ti.data());
          const double i0 = (Pt[0] * ti[0] + Pt[1] * ti[1]) * pw;
          const double i1 = (Pt[2] * ti[0] + Pt[3] * ti[1]) * pw;
          dd0 += i0 - init_term[0][p];
          dd1 += i1 - init_term[1][p];
          init_term[0][p] = i0;
          init_term[1][p] = i1;
        }
        tau.comp[0][p] += dd0;
        tau.comp[1][p] += dd1;
        delta.comp[0][p] = dd0;
        delta.comp[1][p] = dd1;
        sup_delta = std::max(sup_delta, std::max(std::abs(dd0), std::abs(dd1)));
      }
      for (int a = 0; a < n; ++a) x[a] = y[std::size_t(a)];
    }
    const double resid = detail::max_abs(candidate_pairings(D, k, w_zero, delta));
    res.trace.weak_residual.push_back(resid);
    res.trace.potential_delta.push_back(sup_delta);
    res.trace.iterates = j + 1;
    if (j + 1 >= cfg.min_iterates && resid < cfg.tol_weak) {
      res.trace.converged = true;
      break;
    }
  }
  res.trace.predicted_ratio = res.gap.growth_hat / std::abs(lambda);
  detail::fit_trace_ratio(res.trace);

  res.potential = tau;
  res.current.alpha = harmonic_section(g, k, w) + exterior_derivative(tau);
  res.pairings = candidate_pairings(D, k, w, tau);
  return res;
}

inline EigencurrentResult eigencurrent(const TorusMap& f, int k, const Eigen::VectorXd& w,
                                       double lambda, const SolverConfig& cfg = {}) {
  return eigencurrent(f, k, w, lambda, nullptr, cfg);
}

// ---------------------------------------------------------------------------
// Invariant planes: joint iteration of a basis of degree-1 candidates under
// the inverse of the induced block, f* kappa(w_i) mapsto kappa(M w_i).

struct InvariantPlaneResult {
  Eigen::MatrixXd W;  // basis columns in H^1 coordinates
  Eigen::MatrixXd g;  // induced block: M_1 W = W g
  std::vector<FormField> potentials;
  std::vector<FormCurrent> currents;
  Eigen::VectorXd commutation;  // weak residual of f* kappa(w_i) - kappa(M_1 w_i)
  SolverTrace trace;
  GapReport gap;
};

inline InvariantPlaneResult invariant_plane(const TorusMap& f, const Eigen::MatrixXd& W,
                                            const SolverConfig& cfg = {}) {
  const int n = f.dim();
  const long d = W.cols();
  if (W.rows() != n || d < 1 || d > n)
    throw std::invalid_argument("invariant_plane: basis must be n x d with 1 <= d <= n");
  const Eigen::MatrixXd M1 = induced_action(f.linear_part_int(), 1).cast<double>();
  const Eigen::MatrixXd g_blk =
      (W.transpose() * W).ldlt().solve(W.transpose() * (M1 * W));
  if ((M1 * W - W * g_blk).lpNorm<Eigen::Infinity>() >
      1e-9 * M1.lpNorm<Eigen::Infinity>() * std::max(1.0, W.lpNorm<Eigen::Infinity>()))
    throw std::invalid_argument("invariant_plane: basis does not span an M-invariant plane");

  InvariantPlaneResult res;
  res.W = W;
  res.g = g_blk;

  // Gate on the slowest eigenvalue of the block: every direction in the plane
  // must outrun the degree-0 growth rate.
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXd>(g_blk, false).eigenvalues();
  double r_min = std::numeric_limits<double>::infinity();
  for (long i = 0; i < ev.size(); ++i) r_min = std::min(r_min, std::abs(ev(i)));
  res.gap = require_gap(f, 1, r_min, cfg);

  const PeriodicGrid grid{n, cfg.N};
  const std::size_t P = grid.point_count();
  const FourierDictionary D = fourier_dictionary(n, n - 1, cfg.dict_cutoff);
  const Eigen::MatrixXd g_inv = g_blk.inverse();
  const Eigen::MatrixXd A = f.linear_part();

  // tau^{(J)} = sum_{j<J} (eta_vec o f^j) g^{-(j+1)}, eta_l = w_l . p, with the
  // row vector eta_vec = p^T W evaluated along the orbit of each node.  The
  // same sums started at f(x) give tau o f for the commutation check.
  // force_iters > 0 pins the step count (for the matched commutation rerun);
  // force_iters == 0 runs the configured convergence loop.
  const auto run_series = [&](bool from_image, std::vector<FormField>& out_tau, SolverTrace* trace,
                              int force_iters) {
    out_tau.assign(std::size_t(d), FormField(grid, 0));
    std::vector<double> curx(P * std::size_t(n));
    std::array<double, 2> y{};
    for (std::size_t p = 0; p < P; ++p) {
      grid.coord(p, &curx[p * std::size_t(n)]);
      if (from_image) {
        f.eval_raw(&curx[p * std::size_t(n)], y.data());
        for (int a = 0; a < n; ++a) curx[p * std::size_t(n) + a] = y[std::size_t(a)];
      }
    }
    FormField delta(grid, 0);
    std::vector<std::vector<double>> etabuf(std::size_t(d), std::vector<double>(P, 0.0));
    Eigen::MatrixXd R = g_inv;  // g^{-(j+1)}
    const Eigen::VectorXd w_zero;
    const int budget = (force_iters > 0) ? force_iters : cfg.max_iterates;
    std::array<double, 2> lift{};
    for (int j = 0; j < budget; ++j) {
      for (std::size_t p = 0; p < P; ++p) {
        const double* x = &curx[p * std::size_t(n)];
        f.lift_raw(x, lift.data());
        for (long l = 0; l < d; ++l) {
          double pl = 0.0;  // eta_l(x) = w_l . (lift(x) - A x)
          for (int r = 0; r < n; ++r) {
            double ax = 0.0;
            for (int c = 0; c < n; ++c) ax += A(r, c) * x[c];
            pl += W(r, l) * (lift[std::size_t(r)] - ax);
          }
          etabuf[std::size_t(l)][p] = pl;
        }
      }
      double resid = 0.0, sup_delta = 0.0;
      for (long i = 0; i < d; ++i) {
        for (std::size_t p = 0; p < P; ++p) {
          double term = 0.0;
          for (long l = 0; l < d; ++l) term += etabuf[std::size_t(l)][p] * R(l, i);
          delta.comp[0][p] = term;
          out_tau[std::size_t(i)].comp[0][p] += term;
          sup_delta = std::max(sup_delta, std::abs(term));
        }
        resid = std::max(resid, detail::max_abs(candidate_pairings(D, 1, w_zero, delta)));
      }
      for (std::size_t p = 0; p < P; ++p) {
        double* x = &curx[p * std::size_t(n)];
        f.eval_raw(x, y.data());
        for (int a = 0; a < n; ++a) x[a] = y[std::size_t(a)];
      }
      R = R * g_inv;
      if (trace) {
        trace->weak_residual.push_back(resid);
        trace->potential_delta.push_back(sup_delta);
        trace->iterates = j + 1;
      }
      if (force_iters == 0 && j + 1 >= cfg.min_iterates && resid < cfg.tol_weak) {
        if (trace) trace->converged = true;
        break;
      }
    }
  };

  std::vector<FormField> tau, tau_f;
  run_series(false, tau, &res.trace, 0);
  res.trace.predicted_ratio = res.gap.growth_hat / r_min;
  detail::fit_trace_ratio(res.trace);

  // Commutation: f* kappa(w_i) = h_{M w_i} + d(eta_i + tau_i o f) must agree
  // with kappa(M w_i) = h_{M w_i} + d(sum_l g_{li} tau_l).  Rerun the series
  // from the image points for the same number of steps.
  run_series(true, tau_f, nullptr, res.trace.iterates);

  res.commutation = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd w_zero;
  std::array<double, 2> lift{};
  for (long i = 0; i < d; ++i) {
    FormField diff(grid, 0);
    std::array<double, 2> xp{};
    for (std::size_t p = 0; p < P; ++p) {
      grid.coord(p, xp.data());
      f.lift_raw(xp.data(), lift.data());
      double eta_i = 0.0;
      for (int r = 0; r < n; ++r) {
        double ax = 0.0;
        for (int c = 0; c < n; ++c) ax += A(r, c) * xp[c];
        eta_i += W(r, i) * (lift[std::size_t(r)] - ax);
      }
      double mix = 0.0;
      for (long l = 0; l < d; ++l) mix += g_blk(l, i) * tau[std::size_t(l)].comp[0][p];
      diff.comp[0][p] = eta_i + tau_f[std::size_t(i)].comp[0][p] - mix;
    }
    res.commutation(i) = detail::max_abs(candidate_pairings(D, 1, w_zero, diff));
  }

  res.potentials = tau;
  res.currents.reserve(std::size_t(d));
  for (long i = 0; i < d; ++i) {
    FormCurrent C;
    C.alpha = harmonic_section(grid, 1, W.col(i)) + exterior_derivative(tau[std::size_t(i)]);
    res.currents.push_back(std::move(C));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Uniqueness: two admissible initializers in the same class, run through the
// identical pipeline for the same number of steps, must produce the same
// limit.  The reported distance is the dictionary sup of the difference.

struct UniquenessReport {
  double distance = 0.0;
  int iterates = 0;
  EigencurrentResult a, b;
};

inline UniquenessReport uniqueness_test(const TorusMap& f, int k, const Eigen::VectorXd& w,
                                        double lambda, const FormFunction* tau_a,
                                        const FormFunction* tau_b, const SolverConfig& cfg = {}) {
  SolverConfig fixed = cfg;
  fixed.min_iterates = fixed.max_iterates = cfg.max_iterates;  // identical step counts
  UniquenessReport rep;
  rep.a = eigencurrent(f, k, w, lambda, tau_a, fixed);
  rep.b = eigencurrent(f, k, w, lambda, tau_b, fixed);
  rep.iterates = rep.a.trace.iterates;
  double dist = 0.0;
  for (std::size_t i = 0; i < rep.a.pairings.size(); ++i)
    dist = std::max(dist, std::abs(rep.a.pairings[i] - rep.b.pairings[i]));
  rep.distance = dist;
  return rep;
}

// ---------------------------------------------------------------------------
// Transfer-operator oracle (circle covers): iterate the normalized counting
// transfer (L phi)(x) = (1/deg) sum_{f(y)=x} phi(y) in Fourier-Galerkin
// coordinates until the function is constant; the constant is the integral of
// phi against the limit measure of the rescaled-pullback iteration.

struct TransferOracleConfig {
  int modes = 128;    // Galerkin truncation |m| <= modes
  int grid_N = 4096;  // quadrature grid for the matrix rows
  double tol = 1e-9;  // constancy threshold on the nonconstant part
  int max_iters = 400;
};

inline double transfer_oracle(const TorusMap& f, const FormFunction& phi,
                              const TransferOracleConfig& ocfg = {}) {
  if (f.dim() != 1) throw std::invalid_argument("transfer_oracle: circle maps only");
  if (std::llabs(f.degree()) < 2)
    throw std::invalid_argument("transfer_oracle: map must be a covering of degree >= 2");
  if (phi.n != 1 || phi.degree != 0 || !phi.eval)
    throw std::invalid_argument("transfer_oracle: scalar test function required");
  const int M = ocfg.modes, N = ocfg.grid_N, K = 2 * M + 1;
  if (2 * M >= N) throw std::invalid_argument("transfer_oracle: modes beyond grid resolution");

  // Row m' of the Galerkin matrix: Fourier coefficients of
  //   e^{-2 pi i m' f(x)} f'(x) / deg,
  // the kernel of the counting transfer after the change of variables x = f(y).
  std::vector<double> fx(static_cast<std::size_t>(N)), dfx(static_cast<std::size_t>(N));
  double J;
  for (int i = 0; i < N; ++i) {
    const double x = double(i) / N;
    double y;
    f.lift_raw(&x, &y);
    fx[std::size_t(i)] = y;
    f.jacobian_raw(&x, &J);
    dfx[std::size_t(i)] = J;
  }
  const double inv_deg = 1.0 / double(f.degree());
  Eigen::MatrixXcd L(K, K);
  std::vector<cplx> row(static_cast<std::size_t>(N));
  for (int mp = -M; mp <= M; ++mp) {
    for (int i = 0; i < N; ++i) {
      const double ph = -kTwoPi * mp * fx[std::size_t(i)];
      row[std::size_t(i)] = cplx(std::cos(ph), std::sin(ph)) * (dfx[std::size_t(i)] * inv_deg);
    }
    Fft::forward(1, N, row);
    for (int m = -M; m <= M; ++m)
      L(mp + M, m + M) = row[std::size_t(freq_bin(-m, N))] / double(N);
  }

  std::vector<cplx> samples(static_cast<std::size_t>(N));
  double val;
  for (int i = 0; i < N; ++i) {
    const double x = double(i) / N;
    phi.eval(&x, &val);
    samples[std::size_t(i)] = val;
  }
  Fft::forward(1, N, samples);
  Eigen::VectorXcd v(K);
  for (int m = -M; m <= M; ++m) v(m + M) = samples[std::size_t(freq_bin(m, N))] / double(N);

  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  for (int it = 0; it < ocfg.max_iters; ++it) {
    double rough = 0.0;
    for (int m = -M; m <= M; ++m)
      if (m != 0) rough += std::abs(v(m + M));
    if (rough < ocfg.tol * scale) return v(M).real();
    v = L * v;
  }
  throw std::runtime_error("transfer_oracle: iteration did not reach a constant field");
}

// ---------------------------------------------------------------------------
// Invariant-measure moments (circle covers) via the smoothing adjoint of the
// Koopman operator: muhat(m) = delta_{m,0} + 2 pi i m sum_j t_j(m) / d^{j+1}
// with t_j(m) = int e^{-2 pi i m x} p(f^j(x)) dx = int (T^j e_{-m}) p, where T
// is the L^2 adjoint of phi mapsto phi o f.  T halves frequencies, so the
// Galerkin truncation is exact up to spectrally small tails.

struct MeasureMoments {
  int M = 64;                // moment window |m| <= M
  std::vector<cplx> mu_hat;  // mu_hat[M + m], m = -M..M
  double tail_bound = 0.0;   // bound on the truncated part of the largest moment
};

inline MeasureMoments invariant_measure_moments(const TorusMap& f, int M = 64, int modes = 160,
                                                int grid_N = 4096, int J = 48) {
  if (f.dim() != 1) throw std::invalid_argument("invariant_measure_moments: circle maps only");
  if (std::llabs(f.degree()) < 2)
    throw std::invalid_argument("invariant_measure_moments: map must be a covering of degree >= 2");
  if (modes < M) throw std::invalid_argument("invariant_measure_moments: modes < moment window");
  const int N = grid_N, K = 2 * modes + 1;
  if (2 * modes >= N)
    throw std::invalid_argument("invariant_measure_moments: modes beyond grid resolution");
  const double lambda = f.linear_part()(0, 0);

  // T_{m'm} = int e^{2 pi i m x} e^{-2 pi i m' f(x)} dx: one FFT per row.
  std::vector<double> fx(static_cast<std::size_t>(N)), px(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const double x = double(i) / N;
    double y;
    f.lift_raw(&x, &y);
    fx[std::size_t(i)] = y;
    px[std::size_t(i)] = y - lambda * x;  // periodic part of the lift
  }
  Eigen::MatrixXcd T(K, K);
  std::vector<cplx> row(static_cast<std::size_t>(N));
  for (int mp = -modes; mp <= modes; ++mp) {
    for (int i = 0; i < N; ++i) {
      const double ph = -kTwoPi * mp * fx[std::size_t(i)];
      row[std::size_t(i)] = cplx(std::cos(ph), std::sin(ph));
    }
    Fft::forward(1, N, row);
    for (int m = -modes; m <= modes; ++m)
      T(mp + modes, m + modes) = row[std::size_t(freq_bin(-m, N))] / double(N);
  }
  std::vector<cplx> phat_raw(px.begin(), px.end());
  Fft::forward(1, N, phat_raw);
  Eigen::VectorXcd phat_neg(K);  // phat(-m') indexed by m': int psi p = sum psihat(m') phat(-m')
  for (int mp = -modes; mp <= modes; ++mp)
    phat_neg(mp + modes) = phat_raw[std::size_t(freq_bin(-mp, N))] / double(N);

  MeasureMoments mm;
  mm.M = M;
  mm.mu_hat.assign(std::size_t(2 * M + 1), cplx(0.0, 0.0));
  mm.mu_hat[std::size_t(M)] = cplx(1.0, 0.0);
  const double sup_p = detail::max_abs(px);
  double worst_tail = 0.0;
  Eigen::VectorXcd v(K);
  for (int m = 1; m <= M; ++m) {
    v.setZero();
    v(-m + modes) = cplx(1.0, 0.0);  // e_{-m}
    cplx acc(0.0, 0.0);
    double pw = 1.0;
    for (int j = 0; j < J; ++j) {
      pw /= lambda;  // 1 / lambda^{j+1}
      cplx t(0.0, 0.0);
      for (int mp = -modes; mp <= modes; ++mp) t += v(mp + modes) * phat_neg(mp + modes);
      acc += t * pw;
      if (j + 1 < J) v = T * v;
    }
    const double tail = kTwoPi * m * sup_p * std::abs(pw) / std::max(1e-300, std::abs(lambda) - 1.0);
    worst_tail = std::max(worst_tail, tail);
    const cplx mu = cplx(0.0, kTwoPi * m) * acc;
    mm.mu_hat[std::size_t(M + m)] = mu;
    mm.mu_hat[std::size_t(M - m)] = std::conj(mu);
  }
  mm.tail_bound = worst_tail;
  return mm;
}

// Integral of a band-limited test function against the measure.
inline double measure_integral(const MeasureMoments& mm, const FormFunction& phi,
                               int grid_N = 4096) {
  if (phi.n != 1 || phi.degree != 0 || !phi.eval)
    throw std::invalid_argument("measure_integral: scalar test function required");
  const int N = grid_N, M = mm.M;
  std::vector<cplx> samples(static_cast<std::size_t>(N));
  double val;
  for (int i = 0; i < N; ++i) {
    const double x = double(i) / N;
    phi.eval(&x, &val);
    samples[std::size_t(i)] = val;
  }
  Fft::forward(1, N, samples);
  cplx acc(0.0, 0.0);
  for (int m = -M; m <= M; ++m) {
    const cplx ph = samples[std::size_t(freq_bin(m, N))] / double(N);
    acc += ph * mm.mu_hat[std::size_t(M - m)];  // int e_m dmu = mu_hat(-m)
  }
  return acc.real();
}

inline std::vector<double> sharp_density(const MeasureMoments& mm, int N_out) {
  std::vector<double> rho(std::size_t(N_out), 0.0);
  for (int i = 0; i < N_out; ++i) {
    const double x = double(i) / N_out;
    double acc = 1.0;
    for (int m = 1; m <= mm.M; ++m) {
      const cplx mu = mm.mu_hat[std::size_t(mm.M + m)];
      acc += 2.0 * (mu.real() * std::cos(kTwoPi * m * x) - mu.imag() * std::sin(kTwoPi * m * x));
    }
    rho[std::size_t(i)] = acc;
  }
  return rho;
}

// Fejer (positive-kernel) density at the moment window: nonnegative up to the
// moment error even when the measure itself is singular.
inline std::vector<double> fejer_density(const MeasureMoments& mm, int N_out) {
  std::vector<double> rho(std::size_t(N_out), 0.0);
  const double Mp1 = double(mm.M + 1);
  for (int i = 0; i < N_out; ++i) {
    const double x = double(i) / N_out;
    double acc = 1.0;
    for (int m = 1; m <= mm.M; ++m) {
      const double wgt = 1.0 - double(m) / Mp1;
      const cplx mu = mm.mu_hat[std::size_t(mm.M + m)];
      acc += 2.0 * wgt *
             (mu.real() * std::cos(kTwoPi * m * x) - mu.imag() * std::sin(kTwoPi * m * x));
    }
    rho[std::size_t(i)] = acc;
  }
  return rho;
}

// ---------------------------------------------------------------------------
// Positivity of top-degree limits.

struct PositivityReport {
  double min_density = 0.0;
  double max_density = 0.0;
  double mass = 0.0;
  bool positive = false;
};

inline PositivityReport positivity_check(const std::vector<double>& density,
                                         double tol_scale = 1e-8) {
  if (density.empty()) throw std::invalid_argument("positivity_check: empty density");
  PositivityReport r;
  r.min_density = std::numeric_limits<double>::infinity();
  r.max_density = -std::numeric_limits<double>::infinity();
  double acc = 0.0, amax = 0.0;
  for (double v : density) {
    r.min_density = std::min(r.min_density, v);
    r.max_density = std::max(r.max_density, v);
    acc += v;
    amax = std::max(amax, std::abs(v));
  }
  r.mass = acc / double(density.size());
  r.positive = r.min_density >= -tol_scale * std::max(1.0, amax);
  return r;
}

// Top-degree field current: check the representing density samples directly.
inline PositivityReport positivity_check(const FormCurrent& C, double tol_scale = 1e-8) {
  if (C.alpha.degree != C.alpha.grid.n)
    throw std::invalid_argument("positivity_check: top-degree current required");
  return positivity_check(C.alpha.comp[0], tol_scale);
}

// Density samples of a top-degree limit, normalized so the measure of the
// whole torus is the (positive) harmonic mass: the functional acting on a
// test function phi is the grid mean of density * phi.
inline std::vector<double> top_density(const EigencurrentResult& res) {
  const int n = res.current.alpha.grid.n;
  if (res.k != n) throw std::invalid_argument("top_density: top-degree result required");
  return res.current.alpha.comp[0];
}

// ---------------------------------------------------------------------------
// Hoelder verification of extracted potentials.

inline double lipschitz_constant(const TorusMap& f, int scan_N = 2048) {
  const int n = f.dim();
  const int sN = (n == 1) ? scan_N : std::min(scan_N, 256);  // band-limited entries: coarse is exact enough
  const std::size_t count = (n == 1) ? std::size_t(sN) : std::size_t(sN) * sN;
  double lip = 0.0;
  double J[4];
  std::array<double, 2> x{};
  for (std::size_t p = 0; p < count; ++p) {
    if (n == 1) {
      x[0] = double(p) / sN;
    } else {
      x[0] = double(p / std::size_t(sN)) / sN;
      x[1] = double(p % std::size_t(sN)) / sN;
    }
    f.jacobian_raw(x.data(), J);
    if (n == 1) {
      lip = std::max(lip, std::abs(J[0]));
    } else {
      // Exact 2x2 operator norm via the singular values of J.
      const double a = J[0] * J[0] + J[2] * J[2], b = J[0] * J[1] + J[2] * J[3],
                   c = J[1] * J[1] + J[3] * J[3];
      const double tr = a + c, disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
      lip = std::max(lip, std::sqrt(0.5 * (tr + disc)));
    }
  }
  return lip;
}

struct HolderVerification {
  double lambda_abs = 0.0;
  double growth_hat = 0.0;  // Upsilon_hat_{k-1} (or nu_hat on the covering path)
  double lip = 0.0;         // Lipschitz constant of the map
  double m = 0.0, M = 0.0;  // contraction / expansion ratios fed to the bound
  double alpha_bound = 0.0;
  double alpha_emp = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;  // flat potential: the limit is smooth, nothing to verify
  bool passed = false;
};

inline HolderVerification holder_verify(const TorusMap& f, int k, double lambda,
                                        const FormField& potential, const SolverConfig& cfg = {},
                                        double ratio_floor = 0.8) {
  if (potential.degree != k - 1)
    throw std::invalid_argument("holder_verify: potential degree must be k - 1");
  HolderVerification v;
  v.lambda_abs = std::abs(lambda);
  const GapReport gap = require_gap(f, k, lambda, cfg);
  v.growth_hat = gap.growth_hat;
  v.lip = lipschitz_constant(f);
  v.m = v.growth_hat / v.lambda_abs;
  v.M = v.lip / v.lambda_abs;

  double alpha_emp = std::numeric_limits<double>::infinity();
  double r2 = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < potential.comp.size(); ++c) {
    FormField scalar(potential.grid, 0);
    scalar.comp[0] = potential.comp[c];
    const HolderEstimate est = empirical_holder(scalar);
    if (est.degenerate) continue;
    if (est.alpha_empirical < alpha_emp) {
      alpha_emp = est.alpha_empirical;
      r2 = est.r_squared;
    }
    any = true;
  }
  if (!any) {
    v.degenerate = true;
    v.passed = true;
    return v;
  }
  v.alpha_emp = alpha_emp;
  v.r_squared = r2;
  if (v.M <= 1.0 + 1e-12) {
    // The cascade contracts in sup norm faster than it oscillates: the limit
    // is Lipschitz and the quantitative bound degenerates to alpha = 1.
    v.alpha_bound = 1.0;
  } else {
    v.alpha_bound = holder_bound(v.m, v.M);
  }
  v.passed = v.alpha_emp >= ratio_floor * v.alpha_bound;
  return v;
}

inline HolderVerification holder_verify(const TorusMap& f, const EigencurrentResult& res,
                                        const SolverConfig& cfg = {}, double ratio_floor = 0.8) {
  return holder_verify(f, res.k, res.lambda, res.potential, cfg, ratio_floor);
}

// Field-current input: strip the harmonic part and extract the potential with
// the flat Hodge solve, then verify that.
inline HolderVerification holder_verify(const TorusMap& f, const FormCurrent& C, double lambda,
                                        const SolverConfig& cfg = {}, double ratio_floor = 0.8) {
  const HodgeDecomposition hd = hodge_potential(C.alpha, 1e-6);
  return holder_verify(f, C.alpha.degree, lambda, hd.potential, cfg, ratio_floor);
}

// ---------------------------------------------------------------------------
// Rescaled curve preimages: iterate Y <- f^{-1}(Y) on the 2-torus and rescale
// the pairings by the block eigenvalue of the matching degree-1 class.  The
// preimage of a curve doubles its vertex budget per step, so each step
// refines to segment length delta before the pullback and then drops
// vertices closer than 0.6 delta afterwards, keeping the count near
// length / delta throughout.

// Drop consecutive vertices closer than min_spacing.  Windings are
// preserved; a component never decimates below a quadrilateral.
inline CurveCurrent decimate_curve(const CurveCurrent& c, double min_spacing) {
  CurveCurrent out;
  out.components.reserve(c.components.size());
  for (const auto& comp : c.components) {
    if (comp.vertices.empty()) continue;
    CurveCurrent::Component rc;
    rc.winding = comp.winding;
    Eigen::Vector2d last = comp.vertices[0];
    rc.vertices.push_back(last);
    for (std::size_t i = 1; i < comp.vertices.size(); ++i) {
      if ((comp.vertices[i] - last).norm() >= min_spacing) {
        rc.vertices.push_back(comp.vertices[i]);
        last = comp.vertices[i];
      }
    }
    if (rc.vertices.size() < 4) rc = comp;
    out.components.push_back(std::move(rc));
  }
  return out;
}

struct CurveTrace {
  CurveCurrent curve;                       // final preimage curve
  std::vector<double> pairings;             // rescaled pairings of the final curve
  std::vector<double> distance;             // per-pairing-step weak distance to the reference
  std::vector<double> pairing_delta;        // change of rescaled pairings between steps
  std::vector<std::size_t> vertex_counts;   // per-iterate vertex totals
  std::vector<double> lengths;              // per-iterate curve lengths
  int iterates = 0;
};

// Trace `iterates` rescaled preimage steps of `start` under f.  Pairings are
// rescaled by block_eig^-(j+1); when `reference` pairings are given, the weak
// distance to them is recorded at every paired step.  With pair_each = false
// only the final step is paired (pairing dominates the cost for small delta).
inline CurveTrace curve_preimage_trace(const TorusMap& f, const CurveCurrent& start,
                                       double block_eig, int iterates, double delta,
                                       const FourierDictionary& D,
                                       const std::vector<double>* reference = nullptr,
                                       bool pair_each = false) {
  if (f.dim() != 2) throw std::invalid_argument("curve_preimage_trace: 2-torus maps only");
  if (iterates < 1) throw std::invalid_argument("curve_preimage_trace: need at least one iterate");
  if (!(delta > 0.0) || delta >= 0.5)
    throw std::invalid_argument("curve_preimage_trace: delta must lie in (0, 0.5)");
  if (std::abs(block_eig) < 1e-14)
    throw std::invalid_argument("curve_preimage_trace: block eigenvalue must be nonzero");
  CurveTrace out;
  out.iterates = iterates;
  CurveCurrent Y = start;
  std::vector<double> prev;
  double scale = 1.0;
  for (int j = 0; j < iterates; ++j) {
    Y = decimate_curve(pullback_curve(f, refine_curve(Y, delta)), 0.6 * delta);
    scale /= block_eig;
    std::size_t nv = 0;
    for (const auto& c : Y.components) nv += c.vertices.size();
    out.vertex_counts.push_back(nv);
    out.lengths.push_back(curve_length(Y));
    const bool last = (j + 1 == iterates);
    if (pair_each || last) {
      std::vector<double> pc = dictionary_pairings(D, Y);
      for (double& v : pc) v *= scale;
      if (reference != nullptr) out.distance.push_back(weak_distance(pc, *reference));
      if (!prev.empty()) {
        double d = 0.0;
        for (std::size_t i = 0; i < pc.size(); ++i)
          d = std::max(d, std::abs(pc[i] - prev[i]));
        out.pairing_delta.push_back(d);
      }
      prev = std::move(pc);
      if (last) out.pairings = prev;
    }
  }
  out.curve = std::move(Y);
  return out;
}

// ---------------------------------------------------------------------------
// Expansion diagnostic: diameters of iterated sample balls.

struct ExpansionDiagnostic {
  std::vector<double> diameters;  // index j: diameter of f^j(ball samples)
  double growth_rate = std::numeric_limits<double>::quiet_NaN();
  int saturation_step = -1;  // first step at the saturation threshold, -1 if none
};

namespace detail {

inline double torus_dist_pts(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = std::abs(a[i] - b[i]);
    d -= std::floor(d);
    d = std::min(d, 1.0 - d);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace detail

inline ExpansionDiagnostic expansion_diagnostic(const TorusMap& f, const Eigen::VectorXd& x0,
                                                double eps, int k_max, int samples = 64,
                                                double saturation_frac = 0.6) {
  const int n = f.dim();
  if (x0.size() != n) throw std::invalid_argument("expansion_diagnostic: center has wrong dimension");
  if (!(eps > 0.0) || eps >= 0.25)
    throw std::invalid_argument("expansion_diagnostic: radius must lie in (0, 0.25)");
  if (k_max < 1 || samples < 4)
    throw std::invalid_argument("expansion_diagnostic: need k_max >= 1 and samples >= 4");

  std::vector<double> pts;
  if (n == 1) {
    for (int i = 0; i < samples; ++i)
      pts.push_back(x0(0) + eps * (2.0 * i / double(samples - 1) - 1.0));
  } else {
    for (int i = 0; i < samples; ++i) {
      const double th = kTwoPi * i / double(samples);
      pts.push_back(x0(0) + eps * std::cos(th));
      pts.push_back(x0(1) + eps * std::sin(th));
    }
    pts.push_back(x0(0));
    pts.push_back(x0(1));
  }
  const std::size_t count = pts.size() / std::size_t(n);
  const double max_diam = (n == 1) ? 0.5 : std::sqrt(0.5);
  const double sat = saturation_frac * max_diam;

  ExpansionDiagnostic diag;
  std::array<double, 2> y{};
  for (int j = 0; j <= k_max; ++j) {
    double diam = 0.0;
    for (std::size_t a = 0; a < count; ++a)
      for (std::size_t b = a + 1; b < count; ++b)
        diam = std::max(diam, detail::torus_dist_pts(&pts[a * std::size_t(n)],
                                                     &pts[b * std::size_t(n)], n));
    diag.diameters.push_back(diam);
    if (diag.saturation_step < 0 && diam >= sat) diag.saturation_step = j;
    if (j == k_max) break;
    for (std::size_t a = 0; a < count; ++a) {
      double* x = &pts[a * std::size_t(n)];
      f.eval_raw(x, y.data());
      for (int i = 0; i < n; ++i) x[i] = y[std::size_t(i)];
    }
  }

  // Geometric-mean growth over the pre-saturation range.
  double acc = 0.0;
  int used = 0;
  for (std::size_t j = 0; j + 1 < diag.diameters.size(); ++j) {
    if (diag.diameters[j + 1] >= sat || diag.diameters[j] <= 0.0) break;
    acc += std::log(diag.diameters[j + 1] / diag.diameters[j]);
    ++used;
  }
  if (used > 0) diag.growth_rate = std::exp(acc / double(used));
  return diag;
}

}  // namespace eclab

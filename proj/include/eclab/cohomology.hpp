#pragma once
// Cohomology of the n-torus and the machinery around it:
//
//  * induced_action: the matrix of the pullback on degree-k classes in the
//    lexicographic wedge basis (the k-th compound of A^T);
//  * class_of_closed_form: period integrals, i.e. componentwise means;
//  * chronically_expanding_subspace: real basis of the sum of generalized
//    eigenspaces with |lambda| > r, via a Schur decomposition whose diagonal
//    is reordered by adjacent unitary swaps;
//  * hodge_potential: splits a closed field as harmonic-plus-exact with a
//    minimal-norm coexact potential recovered by Fourier mode inversion;
//  * holder_bound / empirical_holder: the regularity exponent predicted from
//    decay/growth rates, and a dyadic modulus-of-continuity regression that
//    measures it on sampled fields.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eclab/fft.hpp"
#include "eclab/grid.hpp"
#include "eclab/multiindex.hpp"

namespace eclab {

// Matrix of the pullback action on degree-k coefficient vectors: for
// f(x) = A x, f*(dx_i) = sum_j A_ij dx_j, so coefficients transform by A^T
// and wedge products by its k-th compound.
inline Eigen::MatrixXi induced_action(const Eigen::MatrixXi& A, int k) {
  return compound_matrix(Eigen::MatrixXi(A.transpose()), k);
}

struct CohomologySpectrum {
  int k = 0;
  Eigen::MatrixXd M_k;
  std::vector<std::complex<double>> eigenvalues;
};

inline CohomologySpectrum cohomology_spectrum(const Eigen::MatrixXi& A, int k) {
  CohomologySpectrum s;
  s.k = k;
  s.M_k = induced_action(A, k).cast<double>();
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXd>(s.M_k, false).eigenvalues();
  for (long i = 0; i < ev.size(); ++i) s.eigenvalues.push_back(ev(i));
  return s;
}

// ---------------------------------------------------------------------------
// Class extraction: the deRham class of a closed field in the dx_I basis is
// the vector of component means (zero Fourier modes).

inline double closedness_residual(const FormField& f) {
  if (f.degree >= f.grid.n) return 0.0;
  FormField g = f;
  g.diff_mode = DiffMode::spectral;
  return sup_norm(exterior_derivative(g));
}

inline Eigen::VectorXd class_of_closed_form(const FormField& f, double tol = 1e-8,
                                            double* residual_out = nullptr) {
  const double resid = closedness_residual(f);
  if (residual_out) *residual_out = resid;
  if (resid > tol)
    throw std::domain_error("class_of_closed_form: field is not closed to tolerance");
  Eigen::VectorXd c(long(f.comp.size()));
  for (std::size_t i = 0; i < f.comp.size(); ++i) {
    double acc = 0.0;
    for (double v : f.comp[i]) acc += v;
    c(long(i)) = acc / double(f.comp[i].size());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Chronically expanding subspace.

struct ExpandingSubspace {
  Eigen::MatrixXd basis;  // orthonormal columns spanning the subspace (may be 0 cols)
  std::vector<std::complex<double>> selected_eigenvalues;
  std::vector<std::complex<double>> all_eigenvalues;
  double gap = std::numeric_limits<double>::infinity();  // min | |lambda| - r |
  double invariance_residual = 0.0;                      // ||(I - B B^T) M B||
};

namespace detail {

// Swap the adjacent diagonal entries j, j+1 of an upper-triangular complex T
// by a unitary similarity, updating U accordingly.
inline void schur_swap(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, long j) {
  const std::complex<double> a = T(j, j), b = T(j, j + 1), c = T(j + 1, j + 1);
  // Eigenvector of [[a,b],[0,c]] for eigenvalue c.
  std::complex<double> v1 = b, v2 = c - a;
  const double nrm = std::sqrt(std::norm(v1) + std::norm(v2));
  if (nrm == 0.0) return;  // a == c and b == 0: nothing to move
  v1 /= nrm;
  v2 /= nrm;
  Eigen::Matrix2cd G;
  G << v1, -std::conj(v2), v2, std::conj(v1);
  T.block(0, j, j + 2, 2) = (T.block(0, j, j + 2, 2) * G).eval();
  T.block(j, j, 2, T.cols() - j) = (G.adjoint() * T.block(j, j, 2, T.cols() - j)).eval();
  U.middleCols(j, 2) = (U.middleCols(j, 2) * G).eval();
  T(j + 1, j) = 0.0;  // exact zero by construction; clear rounding residue
}

}  // namespace detail

// Real orthonormal basis of the sum of generalized eigenspaces of M with
// |lambda| > r.  The split must be spectrally unambiguous: any eigenvalue
// with | |lambda| - r | below gap_tol (relative) raises an error.
inline ExpandingSubspace chronically_expanding_subspace(const Eigen::MatrixXd& M, double r,
                                                        double gap_tol = 1e-9) {
  if (M.rows() != M.cols()) throw std::invalid_argument("chronically_expanding_subspace: square matrix required");
  const long n = M.rows();
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(M.cast<std::complex<double>>(),
                                              /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("chronically_expanding_subspace: Schur iteration failed");
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  ExpandingSubspace out;
  for (long i = 0; i < n; ++i) {
    const std::complex<double> lam = T(i, i);
    out.all_eigenvalues.push_back(lam);
    const double margin = std::abs(std::abs(lam) - r);
    out.gap = std::min(out.gap, margin);
    if (margin < gap_tol * std::max(1.0, std::abs(lam)))
      throw std::domain_error(
          "chronically_expanding_subspace: eigenvalue modulus too close to the threshold "
          "(ambiguous spectral split)");
  }

  // Bubble selected eigenvalues (|lambda| > r) to the leading diagonal.
  auto selected = [&](long i) { return std::abs(T(i, i)) > r; };
  bool moved = true;
  while (moved) {
    moved = false;
    for (long j = 0; j + 1 < n; ++j)
      if (!selected(j) && selected(j + 1)) {
        detail::schur_swap(T, U, j);
        moved = true;
      }
  }
  long d = 0;
  while (d < n && selected(d)) ++d;
  for (long i = 0; i < d; ++i) out.selected_eigenvalues.push_back(T(i, i));

  if (d == 0) {
    out.basis = Eigen::MatrixXd(n, 0);
    return out;
  }
  // The leading d columns of U span the invariant subspace over C; the
  // selection is conjugation-symmetric, so the span of their real and
  // imaginary parts is the underlying real invariant subspace.
  Eigen::MatrixXd RI(n, 2 * d);
  RI.leftCols(d) = U.leftCols(d).real();
  RI.rightCols(d) = U.leftCols(d).imag();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(RI);
  qr.setThreshold(1e-10);
  if (qr.rank() != d)
    throw std::runtime_error("chronically_expanding_subspace: realification rank mismatch");
  Eigen::MatrixXd Q = qr.householderQ();
  out.basis = Q.leftCols(d);
  out.invariance_residual =
      (M * out.basis - out.basis * (out.basis.transpose() * M * out.basis)).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Hodge potential: phi closed of degree k >= 1 splits as h + d(beta) with h
// the constant-coefficient representative of [phi] and beta coexact,
// recovered mode-by-mode (minimal-norm pseudoinverse of d on nonzero modes).

struct HodgeDecomposition {
  FormField harmonic;   // degree k, constant coefficients = class
  FormField potential;  // degree k-1
  Eigen::VectorXd harmonic_class;
  double closedness_residual = 0.0;
  double reconstruction_residual = 0.0;  // || h + d(beta) - phi ||_sup
};

inline HodgeDecomposition hodge_potential(const FormField& phi, double tol = 1e-8) {
  const int n = phi.grid.n, k = phi.degree, N = phi.grid.N;
  if (k < 1 || k > n) throw std::invalid_argument("hodge_potential: need 1 <= degree <= n");
  const double resid = closedness_residual(phi);
  if (resid > tol) throw std::domain_error("hodge_potential: field is not closed to tolerance");

  HodgeDecomposition out;
  out.closedness_residual = resid;
  out.harmonic_class = Eigen::VectorXd(long(phi.comp.size()));
  for (std::size_t i = 0; i < phi.comp.size(); ++i) {
    double acc = 0.0;
    for (double v : phi.comp[i]) acc += v;
    out.harmonic_class(long(i)) = acc / double(phi.comp[i].size());
  }
  std::vector<double> coeffs(out.harmonic_class.data(),
                             out.harmonic_class.data() + out.harmonic_class.size());
  out.harmonic = constant_form(phi.grid, k, coeffs);

  // Fourier transforms of every component.
  const int rank = n;
  std::vector<std::vector<cplx>> hat(phi.comp.size());
  for (std::size_t c = 0; c < phi.comp.size(); ++c) {
    hat[c].assign(phi.comp[c].begin(), phi.comp[c].end());
    Fft::forward(rank, N, hat[c]);
  }

  FormField beta(phi.grid, k - 1, phi.diff_mode);
  const std::size_t count = phi.grid.point_count();
  std::vector<std::vector<cplx>> bhat(beta.comp.size(),
                                      std::vector<cplx>(count, cplx(0.0)));
  const int half = N / 2;
  for (std::size_t p = 0; p < count; ++p) {
    int m[2] = {0, 0};
    if (n == 1) {
      m[0] = signed_freq(int(p), N);
    } else {
      m[0] = signed_freq(int(p / std::size_t(N)), N);
      m[1] = signed_freq(int(p % std::size_t(N)), N);
    }
    const bool zero_mode = (m[0] == 0 && m[1] == 0);
    const bool nyquist = (std::abs(m[0]) == half) || (n == 2 && std::abs(m[1]) == half);
    if (zero_mode || nyquist) continue;  // harmonic part / unrepresentable derivative
    const cplx d0(0.0, kTwoPi * m[0]);
    const cplx d1(0.0, kTwoPi * m[1]);
    const double den = std::norm(d0) + std::norm(d1);
    if (k == 1) {
      // beta is a scalar: least-squares solve of (d_l beta = phi_l).
      cplx acc = std::conj(d0) * hat[0][p];
      if (n == 2) acc += std::conj(d1) * hat[1][p];
      bhat[0][p] = acc / den;
    } else {  // k == 2, n == 2: d(b1 dx1 + b2 dx2) = (d1 b2 - d2 b1) dx1^dx2
      bhat[0][p] = -std::conj(d1) * hat[0][p] / den;
      bhat[1][p] = std::conj(d0) * hat[0][p] / den;
    }
  }
  for (std::size_t c = 0; c < beta.comp.size(); ++c) {
    Fft::inverse(rank, N, bhat[c]);
    for (std::size_t p = 0; p < count; ++p) beta.comp[c][p] = bhat[c][p].real();
  }
  out.potential = beta;

  FormField recon = out.harmonic;
  FormField beta_spec = beta;
  beta_spec.diff_mode = DiffMode::spectral;
  recon += exterior_derivative(beta_spec);
  recon -= phi;
  out.reconstruction_residual = sup_norm(recon);
  return out;
}

// ---------------------------------------------------------------------------
// Regularity exponents.

struct HolderEstimate {
  double m = 0.0, M = 0.0;
  double alpha_bound = 0.0;      // log(m)/log(m/M)
  double alpha_empirical = 0.0;  // dyadic regression slope, reported up to 1.5
  double r_squared = 0.0;
  bool degenerate = false;  // constant field: exponent undefined
  std::vector<double> separations;  // dyadic scales used
  std::vector<double> moduli;       // omega(separation)
};

// Exponent of a series whose j-th term has sup norm ~ m^j while oscillating
// at spatial scale (m/M)^j: splitting the sum at the scale of |x - y| gives
// |u(x) - u(y)| <~ |x - y|^alpha with alpha = log(m)/log(m/M).
inline double holder_bound(double m, double M) {
  if (!(m > 0.0 && m < 1.0 && M > 1.0))
    throw std::invalid_argument("holder_bound: need 0 < m < 1 < M");
  return std::log(m) / std::log(m / M);
}

// Dyadic modulus-of-continuity regression for a sampled scalar field:
// omega(delta) = max |u(x) - u(y)| over grid pairs at axis separation delta,
// fit log omega against log delta over the fine-scale range.
inline HolderEstimate empirical_holder(const FormField& field) {
  if (field.degree != 0) throw std::invalid_argument("empirical_holder: scalar field required");
  const int n = field.grid.n, N = field.grid.N;
  const auto& u = field.comp[0];
  HolderEstimate est;

  double lo = u[0], hi = u[0];
  for (double v : u) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  if (range < 1e-13 * std::max(1.0, std::abs(hi))) {
    est.degenerate = true;
    return est;
  }

  for (int lag = N / 2; lag >= 1; lag /= 2) {
    double omega = 0.0;
    if (n == 1) {
      for (int i = 0; i < N; ++i)
        omega = std::max(omega, std::abs(u[std::size_t((i + lag) % N)] - u[std::size_t(i)]));
    } else {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const std::size_t p = std::size_t(i) * N + j;
          const std::size_t q0 = std::size_t((i + lag) % N) * N + j;
          const std::size_t q1 = std::size_t(i) * N + (j + lag) % N;
          omega = std::max(omega, std::abs(u[q0] - u[p]));
          omega = std::max(omega, std::abs(u[q1] - u[p]));
        }
    }
    est.separations.push_back(double(lag) / N);
    est.moduli.push_back(omega);
  }

  // Regression over the resolved fine-scale range: skip the coarsest scales
  // (saturated at the field's oscillation) and any vanishing moduli.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < est.separations.size(); ++i) {
    if (est.separations[i] > 1.0 / 8 + 1e-15) continue;
    if (est.moduli[i] <= 1e-15 * range) continue;
    xs.push_back(std::log(est.separations[i]));
    ys.push_back(std::log(est.moduli[i]));
  }
  if (xs.size() < 3) {
    est.degenerate = true;
    return est;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double cnt = double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vxx = cnt * sxx - sx * sx;
  const double vyy = cnt * syy - sy * sy;
  const double vxy = cnt * sxy - sx * sy;
  est.alpha_empirical = std::min(vxy / vxx, 1.5);
  est.r_squared = (vyy > 0) ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return est;
}

}  // namespace eclab

#pragma once
// Smooth endomorphisms of the torus T^n, n = 1 or 2:
//
//     f(x) = A x + p(x)   (mod 1),
//
// with A an integer matrix, det A != 0, and p a finite Fourier perturbation
// given per coordinate by cosine/sine terms.  The topological degree is
// det A; when f is a local diffeomorphism everywhere it is a |det A|-sheeted
// covering map and every point has exactly |det A| preimages, one per coset
// of A Z^n inside Z^n.  Preimage branches are found by Newton iteration on
// the lift, seeded at the linear-part solution for each coset representative
// (enumerated through a column-style Hermite normal form of A).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/grid.hpp"

namespace eclab {

struct FourierTerm {
  std::array<int, 2> freq = {0, 0};  // integer frequency vector (unused tail = 0)
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

struct RegularityReport {
  double min_abs_det = 0.0;
  double max_abs_det = 0.0;
  bool det_sign_changes = false;
  bool is_local_diffeo = false;  // min |det Df| above tolerance and no sign change
  double mean_det = 0.0;         // grid quadrature of det Df; equals deg f for any valid p
  int scan_N = 0;
};

class TorusMap {
 public:
  TorusMap(const Eigen::MatrixXi& A, std::vector<std::vector<FourierTerm>> perturbation = {})
      : n_(int(A.rows())), A_int_(A), pert_(std::move(perturbation)) {
    if (A.rows() != A.cols() || (n_ != 1 && n_ != 2))
      throw std::invalid_argument("TorusMap: A must be square with n = 1 or 2");
    deg_ = (n_ == 1) ? A(0, 0)
                     : static_cast<long long>(A(0, 0)) * A(1, 1) -
                           static_cast<long long>(A(0, 1)) * A(1, 0);
    if (deg_ == 0) throw std::invalid_argument("TorusMap: det A must be nonzero");
    if (pert_.empty()) pert_.assign(std::size_t(n_), {});
    if (pert_.size() != std::size_t(n_))
      throw std::invalid_argument("TorusMap: perturbation needs one term list per coordinate");
    A_ = A.cast<double>();
    A_inv_ = A_.inverse();
    check_degree_quadrature();
  }

  int dim() const { return n_; }
  long long degree() const { return deg_; }
  const Eigen::MatrixXd& linear_part() const { return A_; }
  const Eigen::MatrixXi& linear_part_int() const { return A_int_; }
  const std::vector<std::vector<FourierTerm>>& perturbation() const { return pert_; }
  bool is_linear() const {
    for (const auto& terms : pert_)
      if (!terms.empty()) return false;
    return true;
  }

  // Lift of f evaluated without reduction mod 1.
  void lift_raw(const double* x, double* y) const {
    for (int i = 0; i < n_; ++i) {
      double v = 0.0;
      for (int j = 0; j < n_; ++j) v += A_(i, j) * x[j];
      for (const auto& t : pert_[std::size_t(i)]) {
        const double ph = kTwoPi * (t.freq[0] * x[0] + (n_ == 2 ? t.freq[1] * x[1] : 0.0));
        v += t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph);
      }
      y[i] = v;
    }
  }

  void eval_raw(const double* x, double* y) const {
    lift_raw(x, y);
    for (int i = 0; i < n_; ++i) {
      y[i] -= std::floor(y[i]);
      if (y[i] >= 1.0) y[i] = 0.0;  // guard against floor rounding at the seam
    }
  }

  // Row-major n x n Jacobian A + Dp(x) (analytic).
  void jacobian_raw(const double* x, double* J) const {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) J[i * n_ + j] = A_(i, j);
    for (int i = 0; i < n_; ++i)
      for (const auto& t : pert_[std::size_t(i)]) {
        const double ph = kTwoPi * (t.freq[0] * x[0] + (n_ == 2 ? t.freq[1] * x[1] : 0.0));
        const double d = -t.cos_coef * std::sin(ph) + t.sin_coef * std::cos(ph);
        for (int j = 0; j < n_; ++j) J[i * n_ + j] += kTwoPi * t.freq[j] * d;
      }
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd y(n_);
    eval_raw(x.data(), y.data());
    return y;
  }

  Eigen::VectorXd lift_evaluate(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd y(n_);
    lift_raw(x.data(), y.data());
    return y;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::MatrixXd J(n_, n_);
    // jacobian_raw writes row-major; Eigen default storage is column-major.
    std::vector<double> buf(std::size_t(n_) * n_);
    jacobian_raw(x.data(), buf.data());
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) J(i, j) = buf[std::size_t(i) * n_ + j];
    return J;
  }

  double det_jacobian(const double* x) const {
    double J[4];
    jacobian_raw(x, J);
    return (n_ == 1) ? J[0] : J[0] * J[3] - J[1] * J[2];
  }

  const Eigen::MatrixXd& linear_inverse() const { return A_inv_; }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw std::invalid_argument("TorusMap: point dimension mismatch");
  }

  // The grid mean of det Df equals det A for every periodic perturbation;
  // a mismatch means the perturbation terms are malformed.
  void check_degree_quadrature() const {
    const int N = 64;
    double acc = 0.0;
    double x[2];
    const std::size_t count = (n_ == 1) ? std::size_t(N) : std::size_t(N) * N;
    for (std::size_t p = 0; p < count; ++p) {
      if (n_ == 1) {
        x[0] = double(p) / N;
      } else {
        x[0] = double(p / N) / N;
        x[1] = double(p % N) / N;
      }
      acc += det_jacobian(x);
    }
    acc /= double(count);
    if (std::abs(acc - double(deg_)) > 1e-6)
      throw std::invalid_argument(
          "TorusMap: quadrature of det Df disagrees with det A (bad perturbation)");
  }

  int n_;
  Eigen::MatrixXi A_int_;
  Eigen::MatrixXd A_, A_inv_;
  std::vector<std::vector<FourierTerm>> pert_;
  long long deg_ = 0;
};

// ---------------------------------------------------------------------------
// Map spec JSON: {"A": [[...]], "perturbation": [{"coord": i, "freq": [...],
// "cos": a, "sin": b}, ...]} with 1-based coord and per-axis frequencies.

inline TorusMap map_from_json(const nlohmann::json& j) {
  const auto& rows = j.at("A");
  const int n = int(rows.size());
  Eigen::MatrixXi A(n, n);
  for (int r = 0; r < n; ++r) {
    if (int(rows[std::size_t(r)].size()) != n)
      throw std::invalid_argument("map spec: A must be square");
    for (int c = 0; c < n; ++c) A(r, c) = rows[std::size_t(r)][std::size_t(c)].get<int>();
  }
  std::vector<std::vector<FourierTerm>> pert(static_cast<std::size_t>(n));
  if (j.contains("perturbation")) {
    for (const auto& term : j.at("perturbation")) {
      const int coord = term.at("coord").get<int>();
      if (coord < 1 || coord > n) throw std::invalid_argument("map spec: coord out of range");
      FourierTerm t;
      const auto& fr = term.at("freq");
      if (int(fr.size()) != n) throw std::invalid_argument("map spec: freq length mismatch");
      for (int a = 0; a < n; ++a) t.freq[std::size_t(a)] = fr[std::size_t(a)].get<int>();
      t.cos_coef = term.value("cos", 0.0);
      t.sin_coef = term.value("sin", 0.0);
      pert[std::size_t(coord - 1)].push_back(t);
    }
  }
  return TorusMap(A, std::move(pert));
}

inline nlohmann::json map_to_json(const TorusMap& f) {
  nlohmann::json j;
  j["A"] = nlohmann::json::array();
  for (int r = 0; r < f.dim(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < f.dim(); ++c) row.push_back(f.linear_part_int()(r, c));
    j["A"].push_back(row);
  }
  j["perturbation"] = nlohmann::json::array();
  for (int i = 0; i < f.dim(); ++i)
    for (const auto& t : f.perturbation()[std::size_t(i)]) {
      nlohmann::json term;
      term["coord"] = i + 1;
      term["freq"] = nlohmann::json::array();
      for (int a = 0; a < f.dim(); ++a) term["freq"].push_back(t.freq[std::size_t(a)]);
      term["cos"] = t.cos_coef;
      term["sin"] = t.sin_coef;
      j["perturbation"].push_back(term);
    }
  return j;
}

// ---------------------------------------------------------------------------
// Regularity scan: min/max |det Df| and sign uniformity over a sample grid.

inline RegularityReport regularity_report(const TorusMap& f, int scan_N = 256,
                                          double eps_det = 1e-10) {
  RegularityReport r;
  r.scan_N = scan_N;
  const int n = f.dim();
  const std::size_t count = (n == 1) ? std::size_t(scan_N) : std::size_t(scan_N) * scan_N;
  double x[2];
  bool pos = false, neg = false;
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0, mean = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    if (n == 1) {
      x[0] = double(p) / scan_N;
    } else {
      x[0] = double(p / std::size_t(scan_N)) / scan_N;
      x[1] = double(p % std::size_t(scan_N)) / scan_N;
    }
    const double d = f.det_jacobian(x);
    mean += d;
    mn = std::min(mn, std::abs(d));
    mx = std::max(mx, std::abs(d));
    (d > 0 ? pos : neg) = true;
  }
  r.min_abs_det = mn;
  r.max_abs_det = mx;
  r.mean_det = mean / double(count);
  r.det_sign_changes = pos && neg;
  r.is_local_diffeo = !r.det_sign_changes && mn > eps_det;
  return r;
}

// ---------------------------------------------------------------------------
// Preimages.

struct PreimageBranch {
  Eigen::VectorXd x;             // preimage point in [0,1)^n
  int sigma = 1;                 // sign of det Df at the branch
  double newton_residual = 0.0;  // lift-equation residual, sup norm
  int newton_iterations = 0;
};

struct PreimageSet {
  Eigen::VectorXd y;
  std::vector<PreimageBranch> branches;
};

namespace detail {

// Column-style Hermite form: returns lower-triangular H with positive
// diagonal and H Z^n = A Z^n (column operations only).
inline Eigen::MatrixXi hermite_lower(Eigen::MatrixXi A) {
  const int n = int(A.rows());
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      while (A(r, c) != 0) {
        if (A(r, r) == 0) {
          A.col(r).swap(A.col(c));
          continue;
        }
        const int q = A(r, c) / A(r, r);
        A.col(c) -= q * A.col(r);
        if (A(r, c) != 0) A.col(r).swap(A.col(c));
      }
    }
    if (A(r, r) < 0) A.col(r) = -A.col(r);
    if (A(r, r) == 0) throw std::invalid_argument("hermite_lower: singular matrix");
  }
  return A;
}

}  // namespace detail

// Coset representatives of Z^n / A Z^n (|det A| of them), via the Hermite
// form: every vector reduces top-down against the triangular columns.
inline std::vector<Eigen::VectorXi> coset_representatives(const Eigen::MatrixXi& A) {
  const Eigen::MatrixXi H = detail::hermite_lower(A);
  const int n = int(A.rows());
  std::vector<Eigen::VectorXi> reps;
  if (n == 1) {
    for (int t = 0; t < H(0, 0); ++t) {
      Eigen::VectorXi v(1);
      v << t;
      reps.push_back(v);
    }
  } else {
    for (int a = 0; a < H(0, 0); ++a)
      for (int b = 0; b < H(1, 1); ++b) {
        Eigen::VectorXi v(2);
        v << a, b;
        reps.push_back(v);
      }
  }
  return reps;
}

// All |det A| preimage branches of y under a covering map, by Newton on the
// lift seeded at the linear-part solution of each coset.
inline PreimageSet preimages(const TorusMap& f, const Eigen::VectorXd& y, double tol = 1e-12,
                             int max_iter = 50) {
  const int n = f.dim();
  if (y.size() != n) throw std::invalid_argument("preimages: point dimension mismatch");
  PreimageSet out;
  out.y = y;
  const auto reps = coset_representatives(f.linear_part_int());
  for (const auto& t : reps) {
    Eigen::VectorXd target = y + t.cast<double>();
    Eigen::VectorXd x = f.linear_inverse() * target;
    double resid = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      Eigen::VectorXd r = f.lift_evaluate(x) - target;
      resid = r.lpNorm<Eigen::Infinity>();
      if (resid < tol) break;
      Eigen::MatrixXd J = f.jacobian(x);
      const double d = (n == 1) ? J(0, 0) : J.determinant();
      if (std::abs(d) < 1e-14)
        throw std::runtime_error("preimages: singular Jacobian on Newton path");
      x -= J.colPivHouseholderQr().solve(r);
    }
    if (resid >= tol)
      throw std::runtime_error("preimages: Newton failed to converge for a branch");
    PreimageBranch br;
    br.x = x;
    for (int i = 0; i < n; ++i) {
      br.x[i] -= std::floor(br.x[i]);
      if (br.x[i] >= 1.0) br.x[i] = 0.0;
    }
    br.newton_residual = resid;
    br.newton_iterations = it;
    br.sigma = (f.det_jacobian(br.x.data()) >= 0.0) ? 1 : -1;
    out.branches.push_back(std::move(br));
  }
  // Branches from distinct cosets are distinct points of the torus; a
  // collision means Newton jumped basins.
  for (std::size_t a = 0; a < out.branches.size(); ++a)
    for (std::size_t b = a + 1; b < out.branches.size(); ++b) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) {
        double c = std::abs(out.branches[a].x[i] - out.branches[b].x[i]);
        c = std::min(c, 1.0 - c);
        d += c * c;
      }
      if (std::sqrt(d) < 1e-9)
        throw std::runtime_error("preimages: duplicate branches (Newton basin jump)");
    }
  return out;
}

}  // namespace eclab

#pragma once
// Concrete current representations on the torus and their calculus:
//
//  * FormCurrent: a degree-k field acting on degree (n-k) test forms via
//    (-1)^{k(k+1)/2} Integral(alpha ^ phi);
//  * AtomCurrent: weighted point masses acting on functions;
//  * CurveCurrent: closed oriented polylines on T^2 acting on 1-forms by
//    line integrals (per-segment Gauss quadrature, order 4);
//  * pushforward of forms under covering maps (branch average), pullback of
//    forms, atoms, and curves, with the dual pairing
//        <f* C, phi> = deg f * <C, pushforward(phi)>
//    as the reference semantics every representation must reproduce;
//  * a Fourier test dictionary and the weak distance it induces.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <variant>
#include <vector>

#include "eclab/fft.hpp"
#include "eclab/grid.hpp"
#include "eclab/multiindex.hpp"
#include "eclab/spectral.hpp"
#include "eclab/torus_map.hpp"

namespace eclab {

// Sign (-1)^{binom(k+1,2)} turning a k-form into a current.
inline int form_current_sign(int k) { return (((k * (k + 1)) / 2) % 2 == 0) ? 1 : -1; }

struct FormCurrent {
  FormField alpha;
  int degree() const { return alpha.degree; }
};

struct Atom {
  Eigen::VectorXd x;
  double weight = 0.0;
};

struct AtomCurrent {
  int n = 1;
  std::vector<Atom> atoms;
  double mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += std::abs(a.weight);
    return m;
  }
};

// Closed oriented polylines on T^2 in lift coordinates.  A component's
// vertices do not repeat the closure point: the final segment runs from the
// last vertex to vertices[0] + winding, with winding the integer vector of
// wraparound counts.
struct CurveCurrent {
  struct Component {
    std::vector<Eigen::Vector2d> vertices;
    Eigen::Vector2i winding = Eigen::Vector2i::Zero();
  };
  std::vector<Component> components;
};

inline double curve_length(const CurveCurrent& c) {
  double len = 0.0;
  for (const auto& comp : c.components) {
    const std::size_t m = comp.vertices.size();
    for (std::size_t s = 0; s < m; ++s) {
      const Eigen::Vector2d a = comp.vertices[s];
      const Eigen::Vector2d b = (s + 1 < m)
                                    ? comp.vertices[s + 1]
                                    : comp.vertices[0] + comp.winding.cast<double>();
      len += (b - a).norm();
    }
  }
  return len;
}

// Total winding vector: the pairings with (dx1, dx2), i.e. the homology
// class of the cycle in coordinates.
inline Eigen::Vector2i curve_class(const CurveCurrent& c) {
  Eigen::Vector2i w = Eigen::Vector2i::Zero();
  for (const auto& comp : c.components) w += comp.winding;
  return w;
}

// ---------------------------------------------------------------------------
// Pairings.

inline double pair(const FormCurrent& C, const FormField& phi) {
  const int n = C.alpha.grid.n;
  if (phi.degree != n - C.alpha.degree)
    throw std::invalid_argument("pair: test degree must complement the current degree");
  return form_current_sign(C.alpha.degree) * integrate(wedge(C.alpha, phi));
}

inline double pair(const FormCurrent& C, const FormFunction& phi) {
  return pair(C, sample(C.alpha.grid, phi));
}

inline double pair(const AtomCurrent& C, const FormFunction& phi) {
  if (phi.degree != 0) throw std::invalid_argument("pair: atoms act on 0-forms");
  double acc = 0.0;
  double v = 0.0;
  for (const auto& a : C.atoms) {
    phi.eval(a.x.data(), &v);
    acc += a.weight * v;
  }
  return acc;
}

namespace detail {
// Gauss-Legendre nodes/weights on [0,1], order 4.
inline const std::array<double, 4>& gauss4_nodes() {
  static const std::array<double, 4> t = {
      0.5 - 0.43056815579702629, 0.5 - 0.16999052179242813,
      0.5 + 0.16999052179242813, 0.5 + 0.43056815579702629};
  return t;
}
inline const std::array<double, 4>& gauss4_weights() {
  static const std::array<double, 4> w = {0.17392742256872693, 0.32607257743127307,
                                          0.32607257743127307, 0.17392742256872693};
  return w;
}
}  // namespace detail

inline double pair(const CurveCurrent& C, const FormFunction& phi) {
  if (phi.degree != 1 || phi.n != 2)
    throw std::invalid_argument("pair: curves act on 1-forms on T^2");
  const auto& tq = detail::gauss4_nodes();
  const auto& wq = detail::gauss4_weights();
  double acc = 0.0;
  double val[2];
  for (const auto& comp : C.components) {
    const std::size_t m = comp.vertices.size();
    for (std::size_t s = 0; s < m; ++s) {
      const Eigen::Vector2d a = comp.vertices[s];
      const Eigen::Vector2d b = (s + 1 < m)
                                    ? comp.vertices[s + 1]
                                    : comp.vertices[0] + comp.winding.cast<double>();
      const Eigen::Vector2d d = b - a;
      for (int q = 0; q < 4; ++q) {
        const Eigen::Vector2d x = a + tq[std::size_t(q)] * d;
        phi.eval(x.data(), val);
        acc += wq[std::size_t(q)] * (val[0] * d[0] + val[1] * d[1]);
      }
    }
  }
  return acc;
}

using CurrentRep = std::variant<FormCurrent, AtomCurrent, CurveCurrent>;

inline double pair(const CurrentRep& C, const FormFunction& phi) {
  return std::visit([&](const auto& c) { return pair(c, phi); }, C);
}

// ---------------------------------------------------------------------------
// Pushforward of forms under a covering map (branch average):
//     (push beta)(y) = (1/deg f) sum_b sigma_b * Compound((Df(x_b))^{-T}, k) beta(x_b),
// which satisfies push(1) = 1 and push(f* beta) = beta on covers.

inline FormField pushforward_form(const TorusMap& f, const FormFunction& beta,
                                  const PeriodicGrid& g,
                                  DiffMode mode = DiffMode::spectral) {
  const int n = f.dim(), k = beta.degree;
  if (beta.n != n || g.n != n) throw std::invalid_argument("pushforward_form: dimension mismatch");
  const auto reg = regularity_report(f, 64);
  if (!reg.is_local_diffeo)
    throw std::domain_error("pushforward_form: map is not a covering (degenerate Jacobian)");
  FormField out(g, k, mode);
  const long nc = binomial(n, k);
  Eigen::VectorXd y(n), bval(nc), acc(nc);
  std::vector<double> buf(static_cast<std::size_t>(nc));
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    g.coord(p, y.data());
    const PreimageSet pre = preimages(f, y);
    acc.setZero();
    for (const auto& br : pre.branches) {
      beta.eval(br.x.data(), buf.data());
      for (long c = 0; c < nc; ++c) bval(c) = buf[std::size_t(c)];
      const Eigen::MatrixXd Jit = f.jacobian(br.x).inverse().transpose();
      acc += double(br.sigma) * (compound_matrix(Eigen::MatrixXd(Jit), k) * bval);
    }
    acc /= double(f.degree());
    for (long c = 0; c < nc; ++c) out.comp[std::size_t(c)][p] = acc(c);
  }
  return out;
}

inline FormField pushforward_form(const TorusMap& f, const FormField& beta) {
  return pushforward_form(f, spectral_form(beta).as_function(), beta.grid, beta.diff_mode);
}

// ---------------------------------------------------------------------------
// Pullback of forms: (f* beta)_J(x) = sum_I Compound(Df(x)^T, k)_{J,I} beta_I(f(x)).

inline FormField pullback_form(const TorusMap& f, const FormFunction& beta,
                               const PeriodicGrid& g, DiffMode mode = DiffMode::spectral) {
  const int n = f.dim(), k = beta.degree;
  if (beta.n != n || g.n != n) throw std::invalid_argument("pullback_form: dimension mismatch");
  FormField out(g, k, mode);
  const long nc = binomial(n, k);
  Eigen::VectorXd x(n), bval(nc);
  std::vector<double> buf(static_cast<std::size_t>(nc));
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    g.coord(p, x.data());
    const Eigen::VectorXd fx = f.evaluate(x);
    beta.eval(fx.data(), buf.data());
    for (long c = 0; c < nc; ++c) bval(c) = buf[std::size_t(c)];
    const Eigen::MatrixXd Jt = f.jacobian(x).transpose();
    const Eigen::VectorXd v = compound_matrix(Eigen::MatrixXd(Jt), k) * bval;
    for (long c = 0; c < nc; ++c) out.comp[std::size_t(c)][p] = v(c);
  }
  return out;
}

inline FormField pullback_form(const TorusMap& f, const FormField& beta) {
  return pullback_form(f, spectral_form(beta).as_function(), beta.grid, beta.diff_mode);
}

inline FormCurrent pullback_form_current(const TorusMap& f, const FormCurrent& C) {
  return FormCurrent{pullback_form(f, C.alpha)};
}

// Reference semantics for every pullback representation: currents pull back
// dually through the pushforward on test forms, scaled by the covering
// degree so that pulling back a form-current agrees with the pointwise form
// pullback (and atom/curve pullbacks with their geometric branch sums).
inline double pullback_current_dual(const TorusMap& f, const CurrentRep& C,
                                    const FormFunction& phi, const PeriodicGrid& g) {
  const FormField pushed = pushforward_form(f, phi, g);
  return double(f.degree()) *
         std::visit([&](const auto& c) { return pair(c, spectral_form(pushed).as_function()); },
                    C);
}

// ---------------------------------------------------------------------------
// Geometric pullbacks.

inline AtomCurrent pullback_atoms(const TorusMap& f, const AtomCurrent& C) {
  AtomCurrent out;
  out.n = C.n;
  for (const auto& a : C.atoms) {
    const PreimageSet pre = preimages(f, a.x);
    for (const auto& br : pre.branches) {
      if (std::abs(f.det_jacobian(br.x.data())) < 1e-8)
        throw std::domain_error("pullback_atoms: atom branch lands near a critical point");
      out.atoms.push_back(Atom{br.x, a.weight * double(br.sigma)});
    }
  }
  return out;
}

// Insert vertices so every lift segment has length at most max_seg.
inline CurveCurrent refine_curve(const CurveCurrent& c, double max_seg) {
  if (!(max_seg > 0)) throw std::invalid_argument("refine_curve: max_seg must be positive");
  CurveCurrent out;
  for (const auto& comp : c.components) {
    CurveCurrent::Component rc;
    rc.winding = comp.winding;
    const std::size_t m = comp.vertices.size();
    for (std::size_t s = 0; s < m; ++s) {
      const Eigen::Vector2d a = comp.vertices[s];
      const Eigen::Vector2d b = (s + 1 < m)
                                    ? comp.vertices[s + 1]
                                    : comp.vertices[0] + comp.winding.cast<double>();
      const int pieces = std::max(1, int(std::ceil((b - a).norm() / max_seg)));
      for (int t = 0; t < pieces; ++t)
        rc.vertices.push_back(a + (double(t) / pieces) * (b - a));
    }
    out.components.push_back(std::move(rc));
  }
  return out;
}

namespace detail {

inline Eigen::Vector2d newton_lift(const TorusMap& f, const Eigen::Vector2d& target,
                                   Eigen::Vector2d x, double tol = 1e-12, int max_iter = 50) {
  Eigen::VectorXd xv(2);
  for (int it = 0; it < max_iter; ++it) {
    xv = x;
    const Eigen::VectorXd r = f.lift_evaluate(xv) - target;
    if (r.lpNorm<Eigen::Infinity>() < tol) return x;
    const Eigen::Matrix2d J = f.jacobian(xv);
    x -= J.inverse() * Eigen::Vector2d(r);
  }
  throw std::runtime_error("pullback_curve: branch continuation Newton failed");
}

}  // namespace detail

// Geometric preimage of a closed polyline under a covering map: lift each
// component, continue a preimage branch segment by segment (Newton seeded by
// the linear prediction), and follow the monodromy until the branch closes.
// Every preimage of the base vertex is consumed by exactly one component.
inline CurveCurrent pullback_curve(const TorusMap& f, const CurveCurrent& Y) {
  if (f.dim() != 2) throw std::invalid_argument("pullback_curve: curves live on T^2");
  const Eigen::Matrix2d Ainv = f.linear_inverse();
  CurveCurrent out;
  for (const auto& comp : Y.components) {
    const std::size_t m = comp.vertices.size();
    if (m < 2) throw std::invalid_argument("pullback_curve: component needs at least 2 vertices");
    Eigen::VectorXd base(2);
    base = comp.vertices[0];
    for (int i = 0; i < 2; ++i) base[i] -= std::floor(base[i]);
    const PreimageSet seeds = preimages(f, base);
    std::vector<bool> used(seeds.branches.size(), false);
    for (std::size_t s0 = 0; s0 < seeds.branches.size(); ++s0) {
      if (used[s0]) continue;
      used[s0] = true;
      CurveCurrent::Component trace;
      Eigen::Vector2d x = seeds.branches[s0].x;
      trace.vertices.push_back(x);
      Eigen::Vector2d target = f.lift_evaluate(Eigen::VectorXd(x));
      const std::size_t max_passes = seeds.branches.size();
      bool closed = false;
      for (std::size_t pass = 0; pass < max_passes && !closed; ++pass) {
        for (std::size_t s = 1; s <= m; ++s) {
          const Eigen::Vector2d prev = comp.vertices[s - 1];
          const Eigen::Vector2d next =
              (s < m) ? comp.vertices[s] : comp.vertices[0] + comp.winding.cast<double>();
          target += next - prev;
          x = detail::newton_lift(f, target, Eigen::Vector2d(x + Ainv * (next - prev)));
          trace.vertices.push_back(x);
        }
        // Which seed did we land on?
        Eigen::Vector2d frac = x;
        for (int i = 0; i < 2; ++i) frac[i] -= std::floor(frac[i]);
        std::size_t hit = seeds.branches.size();
        for (std::size_t s = 0; s < seeds.branches.size(); ++s) {
          double d = 0.0;
          for (int i = 0; i < 2; ++i) {
            double c = std::abs(frac[i] - seeds.branches[s].x[i]);
            c = std::min(c, 1.0 - c);
            d = std::max(d, c);
          }
          if (d < 1e-7) {
            hit = s;
            break;
          }
        }
        if (hit == seeds.branches.size())
          throw std::runtime_error("pullback_curve: continuation missed the seed fibre");
        if (hit == s0) {
          closed = true;
        } else {
          if (used[hit])
            throw std::runtime_error("pullback_curve: monodromy revisited a consumed seed");
          used[hit] = true;
        }
      }
      if (!closed) throw std::runtime_error("pullback_curve: component failed to close");
      const Eigen::Vector2d jump = x - trace.vertices[0];
      trace.winding = Eigen::Vector2i(int(std::lround(jump[0])), int(std::lround(jump[1])));
      if ((jump - trace.winding.cast<double>()).lpNorm<Eigen::Infinity>() > 1e-8)
        throw std::runtime_error("pullback_curve: closure offset is not integral");
      trace.vertices.pop_back();  // drop the duplicated closure point
      out.components.push_back(std::move(trace));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fourier test dictionary and the weak distance.
//
// Entries are cos/sin(2 pi m.x) dx_I over all multi-indices I of the test
// degree and all frequencies with |m|_inf <= cutoff, deduplicated over the
// m <-> -m symmetry; every entry has comass 1.

struct DictionaryEntry {
  std::array<int, 2> m = {0, 0};
  int trig = 0;  // 0 = cos, 1 = sin
  std::size_t comp = 0;
};

struct FourierDictionary {
  int n = 1;
  int test_degree = 0;
  int cutoff = 8;
  std::vector<DictionaryEntry> entries;
};

inline FourierDictionary fourier_dictionary(int n, int test_degree, int cutoff = 8) {
  if (cutoff < 0) throw std::invalid_argument("fourier_dictionary: cutoff must be >= 0");
  FourierDictionary D;
  D.n = n;
  D.test_degree = test_degree;
  D.cutoff = cutoff;
  const long nc = binomial(n, test_degree);
  const int lo1 = (n == 2) ? -cutoff : 0;
  for (int m0 = 0; m0 <= cutoff; ++m0)
    for (int m1 = (m0 == 0 ? 0 : lo1); m1 <= (n == 2 ? cutoff : 0); ++m1)
      for (long c = 0; c < nc; ++c)
        for (int trig = 0; trig < ((m0 == 0 && m1 == 0) ? 1 : 2); ++trig)
          D.entries.push_back(DictionaryEntry{{m0, m1}, trig, std::size_t(c)});
  if (D.entries.empty()) throw std::invalid_argument("fourier_dictionary: empty dictionary");
  return D;
}

inline FormFunction dictionary_form(const FourierDictionary& D, const DictionaryEntry& e) {
  FormFunction fn;
  fn.n = D.n;
  fn.degree = D.test_degree;
  const long nc = binomial(D.n, D.test_degree);
  fn.eval = [e, n = D.n, nc](const double* x, double* out) {
    const double ph = kTwoPi * (e.m[0] * x[0] + (n == 2 ? e.m[1] * x[1] : 0.0));
    const double v = (e.trig == 0) ? std::cos(ph) : std::sin(ph);
    for (long c = 0; c < nc; ++c) out[std::size_t(c)] = 0.0;
    out[e.comp] = v;
  };
  return fn;
}

// FFT fast path: pairing a grid field-current against every dictionary
// entry reads low-frequency transform bins of the complementary components.
inline std::vector<double> dictionary_pairings(const FourierDictionary& D, const FormCurrent& C) {
  const int n = C.alpha.grid.n, N = C.alpha.grid.N, k = C.alpha.degree;
  if (D.n != n || D.test_degree != n - k)
    throw std::invalid_argument("dictionary_pairings: degree mismatch");
  if (2 * D.cutoff >= N)
    throw std::invalid_argument("dictionary_pairings: cutoff beyond grid resolution");
  const auto test_idx = increasing_multi_indices(n, D.test_degree);
  const auto cur_idx = increasing_multi_indices(n, k);
  // For each test component I: alpha ^ dx_I = sign * alpha_{Ic} vol.
  std::vector<int> signs(test_idx.size(), 0);
  std::vector<std::size_t> partner(test_idx.size(), 0);
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    MultiIndex comp_idx;
    for (int a = 0; a < n; ++a)
      if (std::find(test_idx[i].begin(), test_idx[i].end(), a) == test_idx[i].end())
        comp_idx.push_back(a);
    partner[i] = std::size_t(index_position(cur_idx, comp_idx));
    signs[i] = shuffle_sign(comp_idx, test_idx[i]);
  }
  std::vector<std::vector<cplx>> hat(C.alpha.comp.size());
  for (std::size_t c = 0; c < C.alpha.comp.size(); ++c) {
    hat[c].assign(C.alpha.comp[c].begin(), C.alpha.comp[c].end());
    Fft::forward(n, N, hat[c]);
  }
  const double inv_count = 1.0 / double(C.alpha.grid.point_count());
  const int sgn_k = form_current_sign(k);
  std::vector<double> out;
  out.reserve(D.entries.size());
  for (const auto& e : D.entries) {
    const std::size_t bin = (n == 1) ? std::size_t(freq_bin(e.m[0], N))
                                     : std::size_t(freq_bin(e.m[0], N)) * N + freq_bin(e.m[1], N);
    const cplx z = hat[partner[e.comp]][bin] * inv_count;
    const double integral = (e.trig == 0) ? z.real() : -z.imag();
    out.push_back(sgn_k * signs[e.comp] * integral);
  }
  return out;
}

inline std::vector<double> dictionary_pairings(const FourierDictionary& D, const AtomCurrent& C) {
  if (D.test_degree != 0) throw std::invalid_argument("dictionary_pairings: atoms need 0-forms");
  std::vector<double> out;
  out.reserve(D.entries.size());
  for (const auto& e : D.entries) {
    double acc = 0.0;
    for (const auto& a : C.atoms) {
      const double ph = kTwoPi * (e.m[0] * a.x[0] + (D.n == 2 ? e.m[1] * a.x[1] : 0.0));
      acc += a.weight * ((e.trig == 0) ? std::cos(ph) : std::sin(ph));
    }
    out.push_back(acc);
  }
  return out;
}

namespace detail {
inline cplx phi1(cplx z) {  // (e^z - 1)/z, stable near 0
  if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return (std::exp(z) - 1.0) / z;
}
}  // namespace detail

// Exact per-segment line integrals of Fourier modes: along x(t) = p + t d,
// Integral cos/sin(2 pi m.x) dx_a = Re/Im[e^{2 pi i m.p} phi1(2 pi i m.d)] * d_a.
inline std::vector<double> dictionary_pairings(const FourierDictionary& D,
                                               const CurveCurrent& C) {
  if (D.n != 2 || D.test_degree != 1)
    throw std::invalid_argument("dictionary_pairings: curves need 1-forms on T^2");
  std::vector<double> out(D.entries.size(), 0.0);
  for (const auto& comp : C.components) {
    const std::size_t m = comp.vertices.size();
    for (std::size_t s = 0; s < m; ++s) {
      const Eigen::Vector2d p = comp.vertices[s];
      const Eigen::Vector2d q = (s + 1 < m)
                                    ? comp.vertices[s + 1]
                                    : comp.vertices[0] + comp.winding.cast<double>();
      const Eigen::Vector2d d = q - p;
      // One complex evaluation per frequency serves cos/sin and both axes.
      int last_m0 = std::numeric_limits<int>::min(), last_m1 = 0;
      cplx seg = 0.0;
      for (std::size_t ei = 0; ei < D.entries.size(); ++ei) {
        const auto& e = D.entries[ei];
        if (e.m[0] != last_m0 || e.m[1] != last_m1) {
          last_m0 = e.m[0];
          last_m1 = e.m[1];
          const double mp = e.m[0] * p[0] + e.m[1] * p[1];
          const double md = e.m[0] * d[0] + e.m[1] * d[1];
          seg = std::exp(cplx(0.0, kTwoPi * mp)) * detail::phi1(cplx(0.0, kTwoPi * md));
        }
        const double integral = (e.trig == 0) ? seg.real() : seg.imag();
        out[ei] += integral * d[int(e.comp)];
      }
    }
  }
  return out;
}

inline std::vector<double> dictionary_pairings(const FourierDictionary& D, const CurrentRep& C) {
  return std::visit([&](const auto& c) { return dictionary_pairings(D, c); }, C);
}

inline double weak_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("weak_distance: pairing vectors differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

template <typename C1, typename C2>
inline double weak_distance(const FourierDictionary& D, const C1& a, const C2& b) {
  return weak_distance(dictionary_pairings(D, a), dictionary_pairings(D, b));
}

}  // namespace eclab

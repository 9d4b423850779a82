#pragma once
// Box flows and the smear (mollification) operator on forms and currents.
//
// A SmearSpec holds a product of open intervals strictly inside the
// fundamental domain, one smooth bump profile per axis (positive exactly on
// its interval, vanishing to all orders at the endpoints), and a smooth,
// compactly supported, even parameter density.  The associated box flow
// integrates sigma_i(x_i) d/dx_i independently per axis, so it is the
// identity outside the box and never leaves it.  Smearing a form averages
// flow pullbacks over the density:
//
//     S(phi)(x) = sum_q W_q (h_{t_q}^* phi)(x),
//
// where {t_q, W_q} is a tensor Gauss-Legendre rule over the parameter box
// with the density folded into the weights and the weights normalized to
// total mass one (so constants are preserved exactly by the discrete
// operator).  Currents are smeared through the dual action S_{-h}; because
// the rule is symmetric under t -> -t, the dual of a form-as-current is
// again a form-as-current with the forward-smeared form.  Smeared point
// masses are reported as an explicit density obtained from the change of
// variables t -> z = h_{-t}(y), which is closed-form in the per-axis flow
// coordinate s (ds = dx / sigma).

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "eclab/currents.hpp"
#include "eclab/fft.hpp"
#include "eclab/grid.hpp"
#include "eclab/multiindex.hpp"

namespace eclab {

struct SmearSpec {
  int n = 1;  // ambient dimension, 1 or 2
  std::array<double, 2> box_lo{0.25, 0.25};
  std::array<double, 2> box_hi{0.75, 0.75};
  double flow_time = 0.1;  // parameter density is supported on [-flow_time, flow_time]^n
  int quad_order = 8;      // Gauss-Legendre nodes per parameter axis
  int rk4_steps = 64;      // RK4 steps used to integrate a time span of flow_time
};

inline void validate(const SmearSpec& s) {
  if (s.n != 1 && s.n != 2) throw std::invalid_argument("SmearSpec: n must be 1 or 2");
  for (int i = 0; i < s.n; ++i) {
    if (!(0.0 < s.box_lo[std::size_t(i)]) || !(s.box_lo[std::size_t(i)] < s.box_hi[std::size_t(i)]) ||
        !(s.box_hi[std::size_t(i)] < 1.0))
      throw std::invalid_argument("SmearSpec: box must satisfy 0 < lo < hi < 1 on every axis");
  }
  if (!(s.flow_time > 0.0)) throw std::invalid_argument("SmearSpec: flow_time must be positive");
  if (s.quad_order < 2 || s.quad_order > 4096)
    throw std::invalid_argument("SmearSpec: quad_order out of range");
  if (s.rk4_steps < 4 || s.rk4_steps > (1 << 20))
    throw std::invalid_argument("SmearSpec: rk4_steps out of range");
}

// ---------------------------------------------------------------------------
// Profiles.

// Bump on (a, b), zero outside with all derivatives: exp(-1/((x-a)(b-x)))
// with the argument affinely rescaled to unit half-width and the peak scaled
// to 1.  Without the rescaling the exponent carries a 1/width^2 factor that
// turns narrow intervals into needle profiles, which no fixed-order
// parameter quadrature can resolve; the unit shape keeps both the flow speeds
// and the quadrature resolution width-independent.
inline double bump_profile(double a, double b, double x) {
  if (!(x > a) || !(x < b)) return 0.0;
  const double w = b - a;
  const double u = (2.0 * x - a - b) / w;
  const double e = 1.0 - 1.0 / (1.0 - u * u);
  return (e < -700.0) ? 0.0 : std::exp(e);
}

inline double sigma_profile(const SmearSpec& s, int axis, double x) {
  return bump_profile(s.box_lo[std::size_t(axis)], s.box_hi[std::size_t(axis)], x);
}

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1], any order, by Newton iteration
// on the three-term recurrence.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  GaussRule r;
  r.x.resize(std::size_t(order));
  r.w.resize(std::size_t(order));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < order; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[std::size_t(order - 1 - i)] = x;
    r.w[std::size_t(order - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Composite Gauss-Legendre integration (order 8 per panel), used for the
// continuum normalizations where the single-panel smear rule is not accurate
// enough.
template <class F>
double gl8_composite(F&& f, double a, double b, int panels) {
  static const GaussRule g8 = gauss_legendre(8);
  double acc = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int q = 0; q < 8; ++q) {
      const double u = lo + 0.5 * h * (g8.x[std::size_t(q)] + 1.0);
      acc += 0.5 * h * g8.w[std::size_t(q)] * f(u);
    }
  }
  return acc;
}

}  // namespace detail

// Per-axis parameter density with continuum normalization: an even bump on
// (-flow_time, flow_time) scaled so its exact integral is 1.  The n-axis
// density is the product of these factors.
inline double rho_axis(const SmearSpec& s, double t) {
  const double T = s.flow_time;
  const double norm = detail::gl8_composite([&](double u) { return bump_profile(-T, T, u); },
                                            -T, T, 256);
  return bump_profile(-T, T, t) / norm;
}

// ---------------------------------------------------------------------------
// Flows.

// Integrate x' = sigma(x) on one axis for time t (either sign) with fixed-step
// RK4; the step size is flow_time / rk4_steps regardless of |t| so every call
// resolves the vector field equally well and the group law closes.
inline double flow_axis(const SmearSpec& s, int axis, double x, double t) {
  if (t == 0.0) return x;
  const double sx = sigma_profile(s, axis, x);
  if (sx == 0.0) return x;  // outside the open interval the field vanishes
  const double step_ref = s.flow_time / s.rk4_steps;
  const int steps = std::max(1, int(std::ceil(std::abs(t) / step_ref)));
  const double h = t / steps;
  double y = x;
  for (int i = 0; i < steps; ++i) {
    const double k1 = sigma_profile(s, axis, y);
    const double k2 = sigma_profile(s, axis, y + 0.5 * h * k1);
    const double k3 = sigma_profile(s, axis, y + 0.5 * h * k2);
    const double k4 = sigma_profile(s, axis, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

inline Eigen::VectorXd flow(const SmearSpec& s, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& t) {
  validate(s);
  if (x.size() != s.n || t.size() != s.n)
    throw std::invalid_argument("flow: dimension mismatch");
  Eigen::VectorXd y(s.n);
  for (int i = 0; i < s.n; ++i) y[i] = flow_axis(s, i, x[i], t[i]);
  return y;
}

// d/dx of the time-t interval flow.  Both the spatial derivative and
// sigma(h_t(x)) solve the same linear variational equation along the orbit,
// so the derivative is the ratio of endpoint speeds; outside the interval the
// flow is the identity.
inline double flow_axis_derivative(const SmearSpec& s, int axis, double x, double flowed_x) {
  const double sx = sigma_profile(s, axis, x);
  if (sx < 1e-280) return 1.0;
  return sigma_profile(s, axis, flowed_x) / sx;
}

// ---------------------------------------------------------------------------
// The discrete smear rule and per-axis flow tables.

namespace detail {

// Per-axis quadrature for the parameter integral: Gauss-Legendre nodes on
// (-T, T) with the density folded in, then normalized to unit total weight so
// the discrete operator fixes constants exactly (the continuum density
// already integrates to 1; the renormalization only absorbs the single-panel
// quadrature error of integrating the density itself).
struct SmearRule {
  std::vector<double> t;
  std::vector<double> w;
};

inline SmearRule smear_rule(const SmearSpec& s) {
  const GaussRule g = gauss_legendre(s.quad_order);
  const double T = s.flow_time;
  SmearRule r;
  r.t.resize(g.x.size());
  r.w.resize(g.x.size());
  double total = 0.0;
  for (std::size_t q = 0; q < g.x.size(); ++q) {
    r.t[q] = T * g.x[q];
    r.w[q] = T * g.w[q] * bump_profile(-T, T, r.t[q]);
    total += r.w[q];
  }
  for (double& w : r.w) w /= total;
  return r;
}

// Flowed grid coordinates and flow derivatives for one axis: y[q*N + j] is
// the image of grid point j under the time t_q (or -t_q) interval flow.
struct AxisFlowTable {
  int N = 0;
  int Q = 0;
  std::vector<double> y;
  std::vector<double> d;
};

inline AxisFlowTable axis_flow_table(const SmearSpec& s, int axis, int N, const SmearRule& r,
                                     bool reverse) {
  AxisFlowTable t;
  t.N = N;
  t.Q = static_cast<int>(r.t.size());
  t.y.resize(std::size_t(t.Q) * std::size_t(N));
  t.d.resize(std::size_t(t.Q) * std::size_t(N));
  for (int q = 0; q < t.Q; ++q) {
    const double tq = reverse ? -r.t[std::size_t(q)] : r.t[std::size_t(q)];
    for (int j = 0; j < N; ++j) {
      const double x = double(j) / N;
      const double y = flow_axis(s, axis, x, tq);
      t.y[std::size_t(q) * std::size_t(N) + std::size_t(j)] = y;
      t.d[std::size_t(q) * std::size_t(N) + std::size_t(j)] = flow_axis_derivative(s, axis, x, y);
    }
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Smearing forms.
//
// Pullback under the box flow is diagonal: component J of h_t^* phi at x is
// prod_{i in J} (d h_i / d x_i) * phi_J(h_t(x)).

// Exact-evaluation path: phi is given as a coefficient function, evaluated
// directly at the flowed points (no interpolation anywhere).
inline FormField smear_form(const SmearSpec& s, const FormFunction& phi, const PeriodicGrid& g,
                            bool reverse = false) {
  validate(s);
  if (phi.n != g.n || s.n != g.n)
    throw std::invalid_argument("smear_form: dimension mismatch");
  const detail::SmearRule rule = detail::smear_rule(s);
  FormField out(g, phi.degree);
  const auto idx = increasing_multi_indices(g.n, phi.degree);
  const int nc = out.component_count();
  std::vector<double> buf(std::size_t(std::max(nc, 1)));
  const int N = g.N;
  const int Q = static_cast<int>(rule.t.size());
  if (g.n == 1) {
    const detail::AxisFlowTable t0 = detail::axis_flow_table(s, 0, N, rule, reverse);
    for (int j = 0; j < N; ++j) {
      for (int q = 0; q < Q; ++q) {
        const std::size_t e = std::size_t(q) * std::size_t(N) + std::size_t(j);
        const double y = t0.y[e];
        phi.eval(&y, buf.data());
        for (int c = 0; c < nc; ++c) {
          const double der = idx[std::size_t(c)].empty() ? 1.0 : t0.d[e];
          out.comp[std::size_t(c)][std::size_t(j)] += rule.w[std::size_t(q)] * der * buf[std::size_t(c)];
        }
      }
    }
  } else {
    const detail::AxisFlowTable t0 = detail::axis_flow_table(s, 0, N, rule, reverse);
    const detail::AxisFlowTable t1 = detail::axis_flow_table(s, 1, N, rule, reverse);
    double y[2];
    for (int j0 = 0; j0 < N; ++j0) {
      for (int j1 = 0; j1 < N; ++j1) {
        const std::size_t p = std::size_t(j0) * std::size_t(N) + std::size_t(j1);
        for (int q0 = 0; q0 < Q; ++q0) {
          const std::size_t e0 = std::size_t(q0) * std::size_t(N) + std::size_t(j0);
          for (int q1 = 0; q1 < Q; ++q1) {
            const std::size_t e1 = std::size_t(q1) * std::size_t(N) + std::size_t(j1);
            y[0] = t0.y[e0];
            y[1] = t1.y[e1];
            phi.eval(y, buf.data());
            const double W = rule.w[std::size_t(q0)] * rule.w[std::size_t(q1)];
            for (int c = 0; c < nc; ++c) {
              double der = 1.0;
              for (int ax : idx[std::size_t(c)]) der *= (ax == 0) ? t0.d[e0] : t1.d[e1];
              out.comp[std::size_t(c)][p] += W * der * buf[std::size_t(c)];
            }
          }
        }
      }
    }
  }
  return out;
}

// Grid-field path: phi is evaluated at the flowed points through its
// trigonometric interpolant.  The evaluation is organised per axis (partial
// mode sums as matrix products) so the cost is O(Q N^2) in one dimension and
// O(Q^2 N^3) in two, instead of a full mode sum per point.
inline FormField smear_form(const SmearSpec& s, const FormField& phi, bool reverse = false) {
  validate(s);
  const PeriodicGrid& g = phi.grid;
  if (s.n != g.n) throw std::invalid_argument("smear_form: dimension mismatch");
  const detail::SmearRule rule = detail::smear_rule(s);
  const int N = g.N;
  const int Q = static_cast<int>(rule.t.size());
  const auto idx = increasing_multi_indices(g.n, phi.degree);
  const int nc = phi.component_count();
  FormField out(g, phi.degree, phi.diff_mode);

  const detail::AxisFlowTable t0 = detail::axis_flow_table(s, 0, N, rule, reverse);
  if (g.n == 1) {
    for (int c = 0; c < nc; ++c) {
      std::vector<cplx> w(phi.comp[std::size_t(c)].begin(), phi.comp[std::size_t(c)].end());
      Fft::forward(1, N, w);
      const double inv_count = 1.0 / double(N);
      const bool with_der = !idx[std::size_t(c)].empty();
      for (int q = 0; q < Q; ++q) {
        for (int j = 0; j < N; ++j) {
          const std::size_t e = std::size_t(q) * std::size_t(N) + std::size_t(j);
          const double y = t0.y[e];
          double acc = 0.0;
          for (int i = 0; i < N; ++i) {
            const double ph = kTwoPi * signed_freq(i, N) * y;
            const cplx& cm = w[std::size_t(i)];
            acc += cm.real() * std::cos(ph) - cm.imag() * std::sin(ph);
          }
          acc *= inv_count;
          const double der = with_der ? t0.d[e] : 1.0;
          out.comp[std::size_t(c)][std::size_t(j)] += rule.w[std::size_t(q)] * der * acc;
        }
      }
    }
    return out;
  }

  const detail::AxisFlowTable t1 = detail::axis_flow_table(s, 1, N, rule, reverse);
  using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
  // Phase matrices per node: E0[q](j0, m0) and E1[q](m1, j1).
  std::vector<Mat> E0(std::size_t(Q), Mat(N, N)), E1(std::size_t(Q), Mat(N, N));
  for (int q = 0; q < Q; ++q) {
    for (int j = 0; j < N; ++j) {
      const double y0 = t0.y[std::size_t(q) * std::size_t(N) + std::size_t(j)];
      const double y1 = t1.y[std::size_t(q) * std::size_t(N) + std::size_t(j)];
      for (int m = 0; m < N; ++m) {
        const double f = double(signed_freq(m, N));
        E0[std::size_t(q)](j, m) = std::polar(1.0, kTwoPi * f * y0);
        E1[std::size_t(q)](m, j) = std::polar(1.0, kTwoPi * f * y1);
      }
    }
  }
  for (int c = 0; c < nc; ++c) {
    std::vector<cplx> wbuf(phi.comp[std::size_t(c)].begin(), phi.comp[std::size_t(c)].end());
    Fft::forward(2, N, wbuf);
    Mat C(N, N);
    const double inv_count = 1.0 / double(g.point_count());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) C(i, j) = wbuf[std::size_t(i) * std::size_t(N) + std::size_t(j)] * inv_count;
    bool use0 = false, use1 = false;
    for (int ax : idx[std::size_t(c)]) (ax == 0 ? use0 : use1) = true;
    std::vector<Mat> G(static_cast<std::size_t>(Q));
    for (int q = 0; q < Q; ++q) G[std::size_t(q)] = C * E1[std::size_t(q)];
    auto& dst = out.comp[std::size_t(c)];
    for (int q0 = 0; q0 < Q; ++q0) {
      for (int q1 = 0; q1 < Q; ++q1) {
        const Mat P = E0[std::size_t(q0)] * G[std::size_t(q1)];
        const double W = rule.w[std::size_t(q0)] * rule.w[std::size_t(q1)];
        for (int j0 = 0; j0 < N; ++j0) {
          const double d0 = use0 ? t0.d[std::size_t(q0) * std::size_t(N) + std::size_t(j0)] : 1.0;
          for (int j1 = 0; j1 < N; ++j1) {
            const double d1 = use1 ? t1.d[std::size_t(q1) * std::size_t(N) + std::size_t(j1)] : 1.0;
            dst[std::size_t(j0) * std::size_t(N) + std::size_t(j1)] += W * d0 * d1 * P(j0, j1).real();
          }
        }
      }
    }
  }
  return out;
}

// Lazily evaluated smear of a coefficient function at arbitrary points; this
// is the test form S_{-h}(phi) needed to pair smeared atom and curve currents
// without putting anything on a grid.
inline FormFunction smear_form_function(const SmearSpec& s, const FormFunction& phi,
                                        bool reverse = false) {
  validate(s);
  if (phi.n != s.n) throw std::invalid_argument("smear_form_function: dimension mismatch");
  const detail::SmearRule rule = detail::smear_rule(s);
  const auto idx = increasing_multi_indices(s.n, phi.degree);
  const int nc = static_cast<int>(idx.size());
  FormFunction out;
  out.n = phi.n;
  out.degree = phi.degree;
  out.eval = [s, phi, rule, idx, nc, reverse](const double* x, double* res) {
    const int Q = static_cast<int>(rule.t.size());
    std::vector<double> buf(std::size_t(std::max(nc, 1)));
    for (int c = 0; c < nc; ++c) res[c] = 0.0;
    double y[2], der[2];
    if (s.n == 1) {
      for (int q = 0; q < Q; ++q) {
        const double tq = reverse ? -rule.t[std::size_t(q)] : rule.t[std::size_t(q)];
        y[0] = flow_axis(s, 0, x[0], tq);
        der[0] = flow_axis_derivative(s, 0, x[0], y[0]);
        phi.eval(y, buf.data());
        for (int c = 0; c < nc; ++c) {
          const double d = idx[std::size_t(c)].empty() ? 1.0 : der[0];
          res[c] += rule.w[std::size_t(q)] * d * buf[std::size_t(c)];
        }
      }
      return;
    }
    for (int q0 = 0; q0 < Q; ++q0) {
      const double tq0 = reverse ? -rule.t[std::size_t(q0)] : rule.t[std::size_t(q0)];
      const double y0 = flow_axis(s, 0, x[0], tq0);
      const double d0 = flow_axis_derivative(s, 0, x[0], y0);
      for (int q1 = 0; q1 < Q; ++q1) {
        const double tq1 = reverse ? -rule.t[std::size_t(q1)] : rule.t[std::size_t(q1)];
        y[0] = y0;
        y[1] = flow_axis(s, 1, x[1], tq1);
        der[0] = d0;
        der[1] = flow_axis_derivative(s, 1, x[1], y[1]);
        phi.eval(y, buf.data());
        const double W = rule.w[std::size_t(q0)] * rule.w[std::size_t(q1)];
        for (int c = 0; c < nc; ++c) {
          double d = 1.0;
          for (int ax : idx[std::size_t(c)]) d *= der[std::size_t(ax)];
          res[c] += W * d * buf[std::size_t(c)];
        }
      }
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// Smearing currents.

namespace detail {

// Cumulative flow coordinate s(x) = int dx / sigma on one axis, tabulated at
// grid points inside the interval, measured from the interval midpoint and
// clamped once |s| exceeds a cap (the density vanishes long before the cap
// matters, so clamped entries never contribute).
inline std::vector<double> flow_coordinate_table(const SmearSpec& s, int axis,
                                                 const PeriodicGrid& g) {
  const int N = g.N;
  const double cap = 1e6;
  const double lo = s.box_lo[std::size_t(axis)], hi = s.box_hi[std::size_t(axis)];
  const double mid = 0.5 * (lo + hi);
  std::vector<double> table(std::size_t(N), cap);
  auto inv_sigma = [&](double u) {
    const double sv = sigma_profile(s, axis, u);
    return (sv < 1e-250) ? 1e250 : 1.0 / sv;
  };
  auto panel = [&](double a, double b) {
    const double v = gl8_composite(inv_sigma, a, b, 4);
    return std::min(v, cap);
  };
  // Walk right from the midpoint, then left.
  const int j_mid = int(std::floor(mid * N));
  double acc = -panel(double(j_mid) / N, mid);  // s at grid point j_mid (just below mid)
  for (int j = j_mid; j >= 0 && double(j) / N > lo; --j) {
    table[std::size_t(j)] = std::max(acc, -cap);
    if (j > 0 && double(j - 1) / N > lo && acc > -cap)
      acc -= panel(double(j - 1) / N, double(j) / N);
  }
  acc = panel(mid, double(j_mid + 1) / N);
  for (int j = j_mid + 1; j < N && double(j) / N < hi; ++j) {
    table[std::size_t(j)] = std::min(acc, cap);
    if (j + 1 < N && double(j + 1) / N < hi && acc < cap)
      acc += panel(double(j) / N, double(j + 1) / N);
  }
  return table;
}

// Flow coordinate of an arbitrary interior point: nearest tabulated grid
// point plus one partial panel.
inline double flow_coordinate_at(const SmearSpec& s, int axis, const PeriodicGrid& g,
                                 const std::vector<double>& table, double x) {
  const double lo = s.box_lo[std::size_t(axis)], hi = s.box_hi[std::size_t(axis)];
  if (!(x > lo) || !(x < hi)) return 1e6;
  const int N = g.N;
  const int j = int(std::floor(x * N));
  const double xg = double(j) / N;
  auto inv_sigma = [&](double u) {
    const double sv = sigma_profile(s, axis, u);
    return (sv < 1e-250) ? 1e250 : 1.0 / sv;
  };
  double base;
  double add = 0.0;
  if (xg > lo) {
    base = table[std::size_t(j)];
    if (x > xg) add = gl8_composite(inv_sigma, xg, x, 4);
  } else {
    // x lies in the first partial cell above the interval edge; integrate
    // backwards from the next grid point.
    base = table[std::size_t(j + 1)];
    add = -gl8_composite(inv_sigma, x, double(j + 1) / N, 4);
  }
  const double v = base + add;
  return std::max(std::min(v, 1e6), -1e6);
}

}  // namespace detail

inline bool point_in_box(const SmearSpec& s, const double* x) {
  for (int i = 0; i < s.n; ++i)
    if (!(x[i] > s.box_lo[std::size_t(i)]) || !(x[i] < s.box_hi[std::size_t(i)])) return false;
  return true;
}

// Density of the smeared unit point mass at y, with respect to Lebesgue
// measure: rho(s(y) - s(x)) / prod_i sigma_i(x_i) via the change of variables
// from flow time to position; it is smooth, supported inside the box, and
// integrates to 1 exactly in the continuum.
inline FormField smear_atom_density(const SmearSpec& s, const AtomCurrent& A,
                                    const PeriodicGrid& g) {
  validate(s);
  if (A.n != s.n || g.n != s.n)
    throw std::invalid_argument("smear_atom_density: dimension mismatch");
  const double T = s.flow_time;
  const double axis_norm =
      detail::gl8_composite([&](double u) { return bump_profile(-T, T, u); }, -T, T, 256);
  std::vector<std::vector<double>> s_tab;
  for (int i = 0; i < s.n; ++i) s_tab.push_back(detail::flow_coordinate_table(s, i, g));

  FormField out(g, g.n);
  auto& dens = out.comp[0];
  for (const Atom& a : A.atoms) {
    if (!point_in_box(s, a.x.data()))
      throw std::invalid_argument("smear_atom_density: atom outside the box");
    double sy[2];
    for (int i = 0; i < s.n; ++i)
      sy[i] = detail::flow_coordinate_at(s, i, g, s_tab[std::size_t(i)], a.x[i]);
    double x[2];
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      g.coord(p, x);
      double val = a.weight;
      for (int i = 0; i < s.n; ++i) {
        const double sig = sigma_profile(s, i, x[i]);
        if (sig < 1e-250) {
          val = 0.0;
          break;
        }
        const int j = (s.n == 1) ? int(p) : (i == 0 ? int(p / std::size_t(g.N)) : int(p % std::size_t(g.N)));
        const double sx = s_tab[std::size_t(i)][std::size_t(j)];
        const double r = bump_profile(-T, T, sy[i] - sx) / axis_norm;
        if (r == 0.0) {
          val = 0.0;
          break;
        }
        val *= r / sig;
      }
      dens[p] += val;
    }
  }
  return out;
}

// Smear of a current through the dual action.  Form-as-current: with the
// symmetric rule, pairing against S_{-h}(phi) equals pairing the forward
// smear of the representing form against phi, so the result stays a
// form-as-current.  Atom clouds inside the box become their explicit smooth
// density, reported as a top-degree form-as-current whose pairing against a
// test function integrates density times test; clouds entirely outside the
// box are fixed.  Curve currents are handled through the dual pairing only
// (pair them with smear_form_function(spec, phi, /*reverse=*/true)).
inline CurrentRep smear_current(const SmearSpec& s, const CurrentRep& C, const PeriodicGrid& g) {
  validate(s);
  if (std::holds_alternative<FormCurrent>(C)) {
    const FormCurrent& fc = std::get<FormCurrent>(C);
    return FormCurrent{smear_form(s, fc.alpha)};
  }
  if (std::holds_alternative<AtomCurrent>(C)) {
    const AtomCurrent& ac = std::get<AtomCurrent>(C);
    bool any_in = false, any_out = false;
    for (const Atom& a : ac.atoms) (point_in_box(s, a.x.data()) ? any_in : any_out) = true;
    if (!any_in) return C;
    if (any_out)
      throw std::invalid_argument(
          "smear_current: atom cloud straddles the box boundary; split it first");
    FormField dens = smear_atom_density(s, ac, g);
    // Pairing of a form-as-current carries the degree sign; pre-multiply so
    // the smeared atom pairs as the plain density integral.
    dens *= double(form_current_sign(g.n));
    return FormCurrent{dens};
  }
  throw std::invalid_argument("smear_current: curve currents are paired through the dual action");
}

// ---------------------------------------------------------------------------
// Serialization.

inline SmearSpec smear_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("box") || !j.at("box").is_array())
    throw std::invalid_argument("smear spec: expected an object with a box array");
  const auto& box = j.at("box");
  SmearSpec s;
  s.n = static_cast<int>(box.size());
  if (s.n != 1 && s.n != 2) throw std::invalid_argument("smear spec: box must have 1 or 2 axes");
  for (int i = 0; i < s.n; ++i) {
    const auto& iv = box.at(std::size_t(i));
    if (!iv.is_array() || iv.size() != 2)
      throw std::invalid_argument("smear spec: each box axis must be [lo, hi]");
    s.box_lo[std::size_t(i)] = iv.at(0).get<double>();
    s.box_hi[std::size_t(i)] = iv.at(1).get<double>();
  }
  if (j.contains("flow_time")) s.flow_time = j.at("flow_time").get<double>();
  if (j.contains("quad_order")) s.quad_order = j.at("quad_order").get<int>();
  if (j.contains("rk4_steps")) s.rk4_steps = j.at("rk4_steps").get<int>();
  validate(s);
  return s;
}

inline nlohmann::json smear_spec_to_json(const SmearSpec& s) {
  nlohmann::json box = nlohmann::json::array();
  for (int i = 0; i < s.n; ++i)
    box.push_back({s.box_lo[std::size_t(i)], s.box_hi[std::size_t(i)]});
  return nlohmann::json{{"box", box},
                        {"flow_time", s.flow_time},
                        {"quad_order", s.quad_order},
                        {"rk4_steps", s.rk4_steps}};
}

}  // namespace eclab

#pragma once
// Periodic grids and differential-form fields on the flat torus T^n (n = 1, 2).
//
// A PeriodicGrid carries N equispaced samples per axis on [0,1)^n with the
// unit flat metric, so the torus has volume one and the trapezoid rule
// collapses to the plain mean of samples (exact for every resolved Fourier
// mode).  A FormField of degree k stores one real scalar field per
// increasing multi-index; all exterior-calculus sign bookkeeping is
// delegated to multiindex.hpp.
//
// Differentiation is spectral by default (FFT, signed wavenumbers, Nyquist
// row zeroed so odd derivatives of real data stay real).  A centered
// finite-difference fallback is selectable per field for data too rough for
// trigonometric differentiation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eclab/fft.hpp"
#include "eclab/multiindex.hpp"

namespace eclab {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

struct PeriodicGrid {
  int n = 1;  // ambient dimension, 1 or 2
  int N = 8;  // samples per axis, power of two >= 8

  PeriodicGrid() = default;
  PeriodicGrid(int n_, int N_) : n(n_), N(N_) {
    if (n != 1 && n != 2) throw std::invalid_argument("PeriodicGrid: n must be 1 or 2");
    if (!is_power_of_two(N) || N < 8)
      throw std::invalid_argument("PeriodicGrid: N must be a power of two >= 8");
  }

  double spacing() const { return 1.0 / N; }
  std::size_t point_count() const { return (n == 1) ? std::size_t(N) : std::size_t(N) * N; }

  // Row-major flattening, axis 0 slowest.
  std::size_t flatten(int i, int j = 0) const {
    return (n == 1) ? std::size_t(i) : std::size_t(i) * N + j;
  }
  void coord(std::size_t p, double* x) const {
    if (n == 1) {
      x[0] = double(p) / N;
    } else {
      x[0] = double(p / N) / N;
      x[1] = double(p % N) / N;
    }
  }
  bool operator==(const PeriodicGrid& o) const { return n == o.n && N == o.N; }
  bool operator!=(const PeriodicGrid& o) const { return !(*this == o); }
};

enum class DiffMode { spectral, centered };

// A degree-k form given by an arbitrary coefficient function of the point,
// used wherever compositions must be evaluated off-grid without resampling.
// `eval(x, out)` writes binom(n,k) coefficients in lexicographic component
// order.
struct FormFunction {
  int n = 1;
  int degree = 0;
  std::function<void(const double* x, double* out)> eval;
};

struct FormField {
  PeriodicGrid grid;
  int degree = 0;
  DiffMode diff_mode = DiffMode::spectral;
  std::vector<std::vector<double>> comp;  // comp[c][point], lexicographic components

  FormField() = default;
  FormField(const PeriodicGrid& g, int k, DiffMode mode = DiffMode::spectral)
      : grid(g), degree(k), diff_mode(mode) {
    if (k < 0 || k > g.n + 1)
      throw std::invalid_argument("FormField: degree out of range for ambient dimension");
    comp.assign(std::size_t(binomial(g.n, k)), std::vector<double>(g.point_count(), 0.0));
  }

  int component_count() const { return static_cast<int>(comp.size()); }
  std::vector<MultiIndex> indices() const { return increasing_multi_indices(grid.n, degree); }

  double& at(int c, std::size_t p) { return comp[std::size_t(c)][p]; }
  double at(int c, std::size_t p) const { return comp[std::size_t(c)][p]; }

  FormField& operator+=(const FormField& o) {
    require_same_shape(o, "+=");
    for (std::size_t c = 0; c < comp.size(); ++c)
      for (std::size_t p = 0; p < comp[c].size(); ++p) comp[c][p] += o.comp[c][p];
    return *this;
  }
  FormField& operator-=(const FormField& o) {
    require_same_shape(o, "-=");
    for (std::size_t c = 0; c < comp.size(); ++c)
      for (std::size_t p = 0; p < comp[c].size(); ++p) comp[c][p] -= o.comp[c][p];
    return *this;
  }
  FormField& operator*=(double s) {
    for (auto& ch : comp)
      for (double& v : ch) v *= s;
    return *this;
  }

  void require_same_shape(const FormField& o, const char* op) const {
    if (grid != o.grid || degree != o.degree)
      throw std::invalid_argument(std::string("FormField: shape mismatch in ") + op);
  }
};

inline FormField operator+(FormField a, const FormField& b) { return a += b; }
inline FormField operator-(FormField a, const FormField& b) { return a -= b; }
inline FormField operator*(double s, FormField a) { return a *= s; }

// Constant-coefficient ("harmonic" in the flat metric) form field.
inline FormField constant_form(const PeriodicGrid& g, int k, const std::vector<double>& coeffs) {
  FormField f(g, k);
  if (coeffs.size() != f.comp.size())
    throw std::invalid_argument("constant_form: coefficient count mismatch");
  for (std::size_t c = 0; c < f.comp.size(); ++c)
    std::fill(f.comp[c].begin(), f.comp[c].end(), coeffs[c]);
  return f;
}

// Sample an arbitrary coefficient function onto the grid.
inline FormField sample(const PeriodicGrid& g, const FormFunction& fn) {
  if (fn.n != g.n) throw std::invalid_argument("sample: dimension mismatch");
  FormField f(g, fn.degree);
  const int nc = f.component_count();
  std::vector<double> buf(std::size_t(std::max(nc, 1)));
  double x[2];
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    g.coord(p, x);
    fn.eval(x, buf.data());
    for (int c = 0; c < nc; ++c) f.comp[std::size_t(c)][p] = buf[std::size_t(c)];
  }
  return f;
}

// ---------------------------------------------------------------------------
// integrate: total integral of a top-degree field over the unit-volume torus.
// On a periodic equispaced grid the trapezoid rule is the plain mean, and it
// integrates every resolved Fourier mode exactly.
inline double integrate(const FormField& f) {
  if (f.degree != f.grid.n)
    throw std::invalid_argument("integrate: field must have top degree n");
  const auto& d = f.comp[0];
  double acc = 0.0;
  for (double v : d) acc += v;
  return acc / double(d.size());
}

// ---------------------------------------------------------------------------
// wedge: pointwise exterior product with shuffle-sign bookkeeping.
inline FormField wedge(const FormField& a, const FormField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("wedge: grid mismatch");
  const int k = a.degree, l = b.degree;
  FormField out(a.grid, k + l, a.diff_mode);
  if (out.component_count() == 0) return out;  // degree above n: identically zero
  const auto ta = a.indices(), tb = b.indices(), to = out.indices();
  for (std::size_t ca = 0; ca < ta.size(); ++ca)
    for (std::size_t cb = 0; cb < tb.size(); ++cb) {
      const int sign = shuffle_sign(ta[ca], tb[cb]);
      if (sign == 0) continue;
      const int co = index_position(to, merge_indices(ta[ca], tb[cb]));
      const auto& va = a.comp[ca];
      const auto& vb = b.comp[cb];
      auto& vo = out.comp[std::size_t(co)];
      for (std::size_t p = 0; p < vo.size(); ++p) vo[p] += sign * va[p] * vb[p];
    }
  return out;
}

namespace detail {

// Spectral partial derivative along `axis` of one scalar component.
inline std::vector<double> partial_spectral(const PeriodicGrid& g, const std::vector<double>& u,
                                            int axis) {
  const int N = g.N;
  std::vector<cplx> w(u.begin(), u.end());
  Fft::forward(g.n, N, w);
  if (g.n == 1) {
    for (int i = 0; i < N; ++i) {
      const int m = signed_freq(i, N);
      w[std::size_t(i)] *= (m == N / 2) ? cplx(0.0) : cplx(0.0, kTwoPi * m);
    }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const int m = signed_freq(axis == 0 ? i : j, N);
        w[std::size_t(i) * N + j] *= (m == N / 2) ? cplx(0.0) : cplx(0.0, kTwoPi * m);
      }
  }
  Fft::inverse(g.n, N, w);
  std::vector<double> out(u.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = w[p].real();
  return out;
}

// Second-order centered difference along `axis` (periodic wraparound).
inline std::vector<double> partial_centered(const PeriodicGrid& g, const std::vector<double>& u,
                                            int axis) {
  const int N = g.N;
  const double inv2h = 0.5 * N;
  std::vector<double> out(u.size());
  if (g.n == 1) {
    for (int i = 0; i < N; ++i)
      out[std::size_t(i)] = (u[std::size_t((i + 1) % N)] - u[std::size_t((i + N - 1) % N)]) * inv2h;
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        std::size_t up, dn;
        if (axis == 0) {
          up = std::size_t((i + 1) % N) * N + j;
          dn = std::size_t((i + N - 1) % N) * N + j;
        } else {
          up = std::size_t(i) * N + (j + 1) % N;
          dn = std::size_t(i) * N + (j + N - 1) % N;
        }
        out[std::size_t(i) * N + j] = (u[up] - u[dn]) * inv2h;
      }
  }
  return out;
}

inline std::vector<double> partial(const PeriodicGrid& g, const std::vector<double>& u, int axis,
                                   DiffMode mode) {
  return (mode == DiffMode::spectral) ? partial_spectral(g, u, axis) : partial_centered(g, u, axis);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// exterior_derivative:  (d f)_K = sum over components I and axes a not in I of
// sign(a, I) * \partial_a f_I, with dx_a ^ dx_I = sign * dx_K.
inline FormField exterior_derivative(const FormField& f) {
  FormField out(f.grid, f.degree + 1, f.diff_mode);
  if (out.component_count() == 0) return out;  // d of a top-degree form vanishes
  const auto ti = f.indices(), to = out.indices();
  for (std::size_t c = 0; c < ti.size(); ++c) {
    for (int a = 0; a < f.grid.n; ++a) {
      const auto [sign, K] = insert_axis(a, ti[c]);
      if (sign == 0) continue;
      const int co = index_position(to, K);
      const auto da = detail::partial(f.grid, f.comp[c], a, f.diff_mode);
      auto& vo = out.comp[std::size_t(co)];
      for (std::size_t p = 0; p < vo.size(); ++p) vo[p] += sign * da[p];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// comass_norm: max over grid points of the Euclidean norm of the coefficient
// vector (the comass of a form in the flat metric, evaluated on samples).
inline double comass_norm(const FormField& f) {
  if (f.component_count() == 0) return 0.0;
  double best = 0.0;
  for (std::size_t p = 0; p < f.grid.point_count(); ++p) {
    double s = 0.0;
    for (const auto& ch : f.comp) s += ch[p] * ch[p];
    if (s > best) best = s;
  }
  return std::sqrt(best);
}

inline double sup_norm(const FormField& f) {
  double best = 0.0;
  for (const auto& ch : f.comp)
    for (double v : ch) best = std::max(best, std::abs(v));
  return best;
}

// ---------------------------------------------------------------------------
// resample: trigonometric interpolation between power-of-two resolutions.
// Upsampling splits the Nyquist bin symmetrically; downsampling folds
// unresolved modes onto the coarse Nyquist bin (exact for fields band-limited
// to the coarse grid).
namespace detail {

inline std::vector<cplx> resample_line(const std::vector<cplx>& src, int Ns, int Nd) {
  if (Ns == Nd) return src;
  std::vector<cplx> dst(std::size_t(Nd), cplx(0.0));
  // Unnormalized DFT bins scale linearly with the grid size.
  const double scale = double(Nd) / double(Ns);
  const int half = std::min(Ns, Nd) / 2;
  for (int m = -(half - 1); m <= half - 1; ++m)
    dst[std::size_t(freq_bin(m, Nd))] = scale * src[std::size_t(freq_bin(m, Ns))];
  // The finer grid resolves +half and -half separately; the coarser grid has
  // a single shared Nyquist bin.  Split on the way up, fold on the way down.
  if (Ns < Nd) {
    const cplx ny = scale * src[std::size_t(Ns / 2)];
    dst[std::size_t(freq_bin(half, Nd))] = 0.5 * ny;
    dst[std::size_t(freq_bin(-half, Nd))] = 0.5 * ny;
  } else {
    dst[std::size_t(Nd / 2)] =
        scale * (src[std::size_t(freq_bin(half, Ns))] + src[std::size_t(freq_bin(-half, Ns))]);
  }
  return dst;
}

}  // namespace detail

inline FormField resample(const FormField& f, int M) {
  const PeriodicGrid dst(f.grid.n, M);
  FormField out(dst, f.degree, f.diff_mode);
  const int Ns = f.grid.N, Nd = M;
  if (Ns == Nd) {
    out.comp = f.comp;
    return out;
  }
  for (std::size_t c = 0; c < f.comp.size(); ++c) {
    if (f.grid.n == 1) {
      std::vector<cplx> w(f.comp[c].begin(), f.comp[c].end());
      Fft::forward(1, Ns, w);
      auto d = detail::resample_line(w, Ns, Nd);
      Fft::inverse(1, Nd, d);
      for (int i = 0; i < Nd; ++i) out.comp[c][std::size_t(i)] = d[std::size_t(i)].real();
    } else {
      std::vector<cplx> w(f.comp[c].begin(), f.comp[c].end());
      Fft::forward(2, Ns, w);
      // Resample rows then columns in frequency space.
      std::vector<cplx> tmp(std::size_t(Ns) * Nd);
      std::vector<cplx> line(static_cast<std::size_t>(Ns));
      for (int i = 0; i < Ns; ++i) {
        for (int j = 0; j < Ns; ++j) line[std::size_t(j)] = w[std::size_t(i) * Ns + j];
        auto d = detail::resample_line(line, Ns, Nd);
        for (int j = 0; j < Nd; ++j) tmp[std::size_t(i) * Nd + j] = d[std::size_t(j)];
      }
      std::vector<cplx> full(std::size_t(Nd) * Nd);
      for (int j = 0; j < Nd; ++j) {
        for (int i = 0; i < Ns; ++i) line[std::size_t(i)] = tmp[std::size_t(i) * Nd + j];
        auto d = detail::resample_line(line, Ns, Nd);
        for (int i = 0; i < Nd; ++i) full[std::size_t(i) * Nd + j] = d[std::size_t(i)];
      }
      Fft::inverse(2, Nd, full);
      for (std::size_t p = 0; p < out.comp[c].size(); ++p) out.comp[c][p] = full[p].real();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeded band-limited random fields (coefficients uniform in [-1,1] on all
// modes with max |freq| <= cutoff), used for property tests and randomized
// scenario probes.
inline FormField random_band_limited(const PeriodicGrid& g, int degree, int cutoff,
                                     std::uint64_t seed) {
  if (cutoff < 0 || cutoff >= g.N / 2)
    throw std::invalid_argument("random_band_limited: cutoff must fit below Nyquist");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  FormField f(g, degree);
  double x[2];
  struct Mode {
    int m[2];
    double a, b;
  };
  for (auto& ch : f.comp) {
    std::vector<Mode> modes;
    if (g.n == 1) {
      for (int m = 0; m <= cutoff; ++m) modes.push_back({{m, 0}, unif(rng), m ? unif(rng) : 0.0});
    } else {
      for (int m1 = 0; m1 <= cutoff; ++m1)
        for (int m2 = (m1 == 0 ? 0 : -cutoff); m2 <= cutoff; ++m2)
          modes.push_back({{m1, m2}, unif(rng), (m1 || m2) ? unif(rng) : 0.0});
    }
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      g.coord(p, x);
      double v = 0.0;
      for (const auto& mo : modes) {
        const double ph = kTwoPi * (mo.m[0] * x[0] + mo.m[1] * (g.n == 2 ? x[1] : 0.0));
        v += mo.a * std::cos(ph) + mo.b * std::sin(ph);
      }
      ch[p] = v;
    }
  }
  return f;
}

}  // namespace eclab

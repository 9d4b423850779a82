#pragma once
// Sparse spectral views of grid fields.
//
// A SpectralScalar is the trigonometric interpolant of one sampled scalar
// component, stored as a list of (integer frequency, complex amplitude)
// pairs with negligible bins dropped.  It can be evaluated at arbitrary
// points of the torus, which is how compositions with maps are computed
// without grid resampling.  Real input data keeps a Hermitian mode set, so
// evaluation returns the real part.

#include <cmath>
#include <vector>

#include "eclab/fft.hpp"
#include "eclab/grid.hpp"

namespace eclab {

struct SpectralMode {
  int m[2] = {0, 0};
  cplx amp;
};

struct SpectralScalar {
  int n = 1;
  std::vector<SpectralMode> modes;

  double eval(const double* x) const {
    double acc = 0.0;
    for (const auto& mo : modes) {
      const double ph = kTwoPi * (mo.m[0] * x[0] + (n == 2 ? mo.m[1] * x[1] : 0.0));
      acc += mo.amp.real() * std::cos(ph) - mo.amp.imag() * std::sin(ph);
    }
    return acc;
  }
};

// Interpolant of one scalar component; bins below rel_drop * (max bin) are
// discarded so band-limited data yields a short exact mode list.
inline SpectralScalar spectral_scalar(const PeriodicGrid& g, const std::vector<double>& u,
                                      double rel_drop = 1e-14) {
  const int N = g.N;
  std::vector<cplx> w(u.begin(), u.end());
  Fft::forward(g.n, N, w);
  const double inv_count = 1.0 / double(g.point_count());
  double peak = 0.0;
  for (const auto& v : w) peak = std::max(peak, std::abs(v));
  const double cut = peak * rel_drop;
  SpectralScalar s;
  s.n = g.n;
  if (g.n == 1) {
    for (int i = 0; i < N; ++i)
      if (std::abs(w[std::size_t(i)]) > cut)
        s.modes.push_back({{signed_freq(i, N), 0}, w[std::size_t(i)] * inv_count});
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (std::abs(w[std::size_t(i) * N + j]) > cut)
          s.modes.push_back(
              {{signed_freq(i, N), signed_freq(j, N)}, w[std::size_t(i) * N + j] * inv_count});
  }
  return s;
}

struct SpectralForm {
  int n = 1;
  int degree = 0;
  std::vector<SpectralScalar> comps;

  void eval(const double* x, double* out) const {
    for (std::size_t c = 0; c < comps.size(); ++c) out[c] = comps[c].eval(x);
  }

  FormFunction as_function() const {
    FormFunction fn;
    fn.n = n;
    fn.degree = degree;
    fn.eval = [self = *this](const double* x, double* out) { self.eval(x, out); };
    return fn;
  }

  std::size_t mode_count() const {
    std::size_t c = 0;
    for (const auto& s : comps) c += s.modes.size();
    return c;
  }
};

inline SpectralForm spectral_form(const FormField& f, double rel_drop = 1e-14) {
  SpectralForm s;
  s.n = f.grid.n;
  s.degree = f.degree;
  s.comps.reserve(f.comp.size());
  for (const auto& ch : f.comp) s.comps.push_back(spectral_scalar(f.grid, ch, rel_drop));
  return s;
}

}  // namespace eclab

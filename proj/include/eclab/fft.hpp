#pragma once
// Thin deterministic wrapper over FFTW.
//
// Complex-to-complex transforms in 1-D and 2-D (square), unnormalized
// forward / 1/count inverse.  Plans are created with FFTW_ESTIMATE only:
// estimate plans are chosen heuristically, never by timing, so repeated
// runs of the same binary produce bit-identical output.  Plan creation is
// serialized behind a mutex (FFTW planning is not thread safe) and plans
// are cached per (rank, size, direction).

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace eclab {

using cplx = std::complex<double>;

class Fft {
 public:
  // In-place DFT of a length-N line (rank 1) or N x N row-major array (rank 2).
  static void forward(int rank, int N, cplx* data) { execute(rank, N, FFTW_FORWARD, data); }

  static void inverse(int rank, int N, cplx* data) {
    execute(rank, N, FFTW_BACKWARD, data);
    const std::size_t count = (rank == 1) ? std::size_t(N) : std::size_t(N) * N;
    const double scale = 1.0 / double(count);
    for (std::size_t i = 0; i < count; ++i) data[i] *= scale;
  }

  static void forward(int rank, int N, std::vector<cplx>& d) { forward(rank, N, d.data()); }
  static void inverse(int rank, int N, std::vector<cplx>& d) { inverse(rank, N, d.data()); }

 private:
  static void execute(int rank, int N, int sign, cplx* data) {
    if (rank != 1 && rank != 2) throw std::invalid_argument("Fft: rank must be 1 or 2");
    fftw_plan p = plan(rank, N, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
  }

  static fftw_plan plan(int rank, int N, int sign) {
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(rank, N, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    // FFTW_UNALIGNED lets the cached plan run on any caller buffer.
    std::vector<cplx> scratch((rank == 1) ? std::size_t(N) : std::size_t(N) * N);
    auto* raw = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = (rank == 1)
                      ? fftw_plan_dft_1d(N, raw, raw, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                      : fftw_plan_dft_2d(N, N, raw, raw, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("Fft: plan creation failed");
    cache.emplace(key, p);
    return p;
  }
};

// Signed frequency of DFT bin i on an N-point grid, in [-N/2, N/2].
inline int signed_freq(int i, int N) { return (i <= N / 2) ? i : i - N; }

// DFT bin of a signed frequency m with |m| <= N/2.
inline int freq_bin(int m, int N) { return (m >= 0) ? m : m + N; }

}  // namespace eclab

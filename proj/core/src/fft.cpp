#include "cit/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "cit/error.hpp"
#include "cit/fields.hpp"

namespace cit {

TorusGrid::TorusGrid(int points, double dealias) : n(points), dealias_fraction(dealias) {
  if (points < 4 || (points & (points - 1)) != 0)
    throw Error("spectral", "grid size must be a power of two >= 4, got " + std::to_string(points));
  if (!(dealias > 0 && dealias <= 1)) throw Error("spectral", "dealias fraction must lie in (0, 1]");
}

namespace {

// Plans are created once per size with FFTW_ESTIMATE so the algorithm, and
// therefore the rounding, never depends on timing measurements.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~PlanPair() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

std::mutex g_plan_lock;

const PlanPair& plans(int n) {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> guard(g_plan_lock);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  const std::size_t nr = std::size_t(n) * n * n;
  const std::size_t nc = std::size_t(n) * n * (n / 2 + 1);
  double* r = fftw_alloc_real(nr);
  fftw_complex* c = fftw_alloc_complex(nc);
  auto p = std::make_unique<PlanPair>();
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p->fwd = fftw_plan_dft_r2c_3d(n, n, n, r, c, flags);
  p->inv = fftw_plan_dft_c2r_3d(n, n, n, c, r, flags);
  fftw_free(r);
  fftw_free(c);
  if (!p->fwd || !p->inv) throw ResourceError("spectral", "FFTW planning failed for n=" + std::to_string(n));
  return *cache.emplace(n, std::move(p)).first->second;
}

}  // namespace

void fft_forward(int n, const double* in, std::complex<double>* out) {
  const PlanPair& p = plans(n);
  const std::size_t nr = std::size_t(n) * n * n;
  thread_local std::vector<double> scratch;
  scratch.assign(in, in + nr);
  fftw_execute_dft_r2c(p.fwd, scratch.data(), reinterpret_cast<fftw_complex*>(out));
  const double s = 1.0 / static_cast<double>(nr);
  const std::size_t nc = std::size_t(n) * n * (n / 2 + 1);
  for (std::size_t i = 0; i < nc; ++i) out[i] *= s;
}

void fft_inverse(int n, const std::complex<double>* in, double* out) {
  const PlanPair& p = plans(n);
  const std::size_t nc = std::size_t(n) * n * (n / 2 + 1);
  thread_local std::vector<std::complex<double>> scratch;
  scratch.assign(in, in + nc);
  fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

}  // namespace cit

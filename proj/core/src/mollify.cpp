#include "cit/mollify.hpp"

#include <cmath>

#include "cit/error.hpp"
#include "cit/fft.hpp"

namespace cit {
namespace {
double bump(double s) { return s >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - s * s)); }
}  // namespace

SpatialMollifier make_spatial_mollifier(int n, double ell, bool desk_mode) {
  const TorusGrid g(n);
  SpatialMollifier m;
  m.n = n;
  m.requested = ell;
  m.width = ell;
  if (ell < 2 * g.spacing()) {
    if (!desk_mode)
      throw Error("mollify", "spatial scale " + std::to_string(ell) + " is below two grid cells");
    m.width = 2 * g.spacing();
    m.rescaled = true;
  }
  GridScalar k(n);
  double mass = 0;
  std::size_t idx = 0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2, ++idx) {
        const int d[3] = {std::min(i0, n - i0), std::min(i1, n - i1), std::min(i2, n - i2)};
        const double r = g.spacing() * std::sqrt(double(d[0]) * d[0] + double(d[1]) * d[1] + double(d[2]) * d[2]);
        k.v[0][idx] = bump(r / m.width);
        mass += k.v[0][idx];
      }
  for (double& v : k.v[0]) v /= mass;
  std::vector<cplx> hat(g.modes());
  fft_forward(n, k.v[0].data(), hat.data());
  m.multiplier.resize(g.modes());
  const double scale = static_cast<double>(g.points());
  for (std::size_t i = 0; i < hat.size(); ++i) m.multiplier[i] = hat[i].real() * scale;
  m.multiplier[0] = 1.0;
  return m;
}

TemporalMollifier make_temporal_mollifier(double dt, double ell, bool desk_mode) {
  if (!(dt > 0)) throw Error("mollify", "time step must be positive");
  TemporalMollifier m;
  m.dt = dt;
  m.requested = ell;
  m.width = ell;
  if (ell < 2 * dt) {
    if (!desk_mode) throw Error("mollify", "temporal scale " + std::to_string(ell) + " is below two time steps");
    m.width = 2 * dt;
    m.rescaled = true;
  }
  double mass = 0;
  for (int lag = 1;; ++lag) {
    const double s = lag * dt / m.width;
    if (s >= 1.0 - 1e-12) break;
    const double w = bump(2.0 * s - 1.0);
    m.weights.push_back(w);
    mass += w;
  }
  for (double& w : m.weights) w /= mass;
  return m;
}

}  // namespace cit

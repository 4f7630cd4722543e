#pragma once
#include <string>
#include <vector>

#include "cit/fields.hpp"

namespace cit {

/// Radial bump of radius `width` sampled on the grid with torus distance,
/// normalized to unit discrete mass and applied as a Fourier multiplier.
struct SpatialMollifier {
  int n = 0;
  double requested = 0;  ///< scale asked for
  double width = 0;      ///< scale used (>= 2 grid cells)
  bool rescaled = false;
  std::vector<double> multiplier;  ///< one real factor per stored mode

  template <int N>
  SpectralField<N> apply(const SpectralField<N>& u) const {
    SpectralField<N> out = u;
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < out.size(); ++i) out.c[a][i] *= multiplier[i];
    return out;
  }
};

/// Throws unless desk_mode when ell is below two grid cells.
SpatialMollifier make_spatial_mollifier(int n, double ell, bool desk_mode);

/// Causal kernel supported in (0, width): weights[m-1] multiplies the sample
/// m steps in the past, m = 1..reach(). Weights sum to one.
struct TemporalMollifier {
  double dt = 0;
  double requested = 0;
  double width = 0;
  bool rescaled = false;
  std::vector<double> weights;
  int reach() const { return static_cast<int>(weights.size()); }
};

/// Throws unless desk_mode when ell < 2 dt.
TemporalMollifier make_temporal_mollifier(double dt, double ell, bool desk_mode);

/// C^2 quintic smoothstep on [0, 1], clamped outside.
inline double smoothstep5(double s) {
  if (s <= 0) return 0;
  if (s >= 1) return 1;
  return s * s * s * (s * (6 * s - 15) + 10);
}
inline double smoothstep5_slope(double s) {
  if (s <= 0 || s >= 1) return 0;
  return 30 * s * s * (s - 1) * (s - 1);
}
constexpr double kSmoothstepMaxSlope = 15.0 / 8.0;

}  // namespace cit

#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cit/fields.hpp"
#include "cit/mollify.hpp"
#include "cit/params.hpp"
#include "cit/spectral.hpp"

namespace cit {

/// Diagonal covariance in the Fourier / transverse-polarization basis:
/// each real coordinate (Re, Im) of each polarization of mode k is driven by
/// a Brownian motion with variance rate c_k = amplitude (1+|k|^2)^{-s/2}.
struct CovarianceSpec {
  double decay_s = 12.0;
  double sigma_reg = 1.0;
  double mode_cut = 4.0;   ///< largest |k| simulated
  double amplitude = 1.0;  ///< overall factor on c_k (0 switches the noise off)
  bool operator==(const CovarianceSpec&) const = default;
};

double covariance_eigenvalue(const CovarianceSpec& spec, const std::array<int, 3>& k);
/// Drift rate nu |k|^{2 alpha} + 1.
double ou_rate(const std::array<int, 3>& k, double nu, double alpha);
/// Stationary variance of one real coordinate: c_k / (2 rate).
double stationary_variance(const CovarianceSpec& spec, const std::array<int, 3>& k, double nu, double alpha);

struct TraceCheck {
  double partial_sum = 0;  ///< sum over simulated modes of c_k |k|^{3+2 sigma-2 alpha}
  double tail_bound = 0;   ///< integral bound on the remaining modes
  bool finite = false;
};
TraceCheck trace_condition(const CovarianceSpec& spec, double alpha);

struct NoiseMode {
  std::array<int, 3> k{};
  std::array<std::array<double, 3>, 2> pol{};  ///< real orthonormal basis of k-perp
  double c = 0;
  double rate = 0;
};

/// Seed switch used to build paths that agree up to a step and differ after.
struct NoiseStreams {
  std::uint64_t seed = 0;
  int switch_step = std::numeric_limits<int>::max();
  std::uint64_t seed_after = 0;
  std::uint64_t seed_for(int step) const { return step >= switch_step ? seed_after : seed; }
};

/// Sampled stationary OU process on the time grid t_i = t0 + i dt.
struct NoisePath {
  int n = 0;
  double t0 = 0, dt = 0;
  int count = 0;
  NoiseStreams streams;
  CovarianceSpec spec;
  std::vector<NoiseMode> modes;
  /// coords[i][4*m + 2*pol + part]: part 0 real, 1 imaginary.
  std::vector<std::vector<double>> coords;

  double time(int i) const { return t0 + i * dt; }
  /// Spectral field of z(t_i).
  SpectralVectorField field(int i) const;
};

/// Exact OU transition per coordinate, stationary initial law; drift
/// nu|k|^{2 alpha} + 1 (nu = 0 gives the Euler noise).
NoisePath sample_ou_path(const CovarianceSpec& spec, double nu, double alpha, int n, double t0, double t1,
                         double dt, const NoiseStreams& streams);

/// Cutoff chi: 1 up to lo, 0 from hi on, quintic smoothstep in between.
struct CutoffFunction {
  double lo = 0, hi = 0;
  double operator()(double y) const { return 1.0 - smoothstep5((y - lo) / (hi - lo)); }
  double slope(double y) const { return -smoothstep5_slope((y - lo) / (hi - lo)) / (hi - lo); }
  double max_slope() const { return kSmoothstepMaxSlope / (hi - lo); }
};

/// z_q(t) = chi_q(|z~_q(t)|_C0) chi~_q(|z~_q(t)|_C1) z~_q(t), z~_q = P_{<= f(q)} z.
struct TruncatedNoise {
  const NoisePath* path = nullptr;
  int q = 0;
  double f_cut = 0;
  FreqNorm norm = FreqNorm::euclidean;
  CutoffFunction chi, chi_tilde;
  bool slope_relaxed = false;  ///< slope bound 1 not attainable within the thresholds
  std::vector<double> c0, c1;  ///< norms of z~_q per sample
  std::vector<double> factor;  ///< chi * chi~ per sample
  std::vector<double> zq_c0, zq_c1;  ///< norms of z_q per sample

  SpectralVectorField filtered(int i) const;  ///< z~_q(t_i)
  SpectralVectorField field(int i) const;     ///< z_q(t_i)
};

/// Throws when the slope condition fails outside desk mode.
TruncatedNoise truncate_cutoff(const NoisePath& path, const Schedule& schedule, int q,
                               FreqNorm norm = FreqNorm::euclidean);

/// z_l on samples [begin, end): spatial then causal temporal convolution.
struct MollifiedNoise {
  int begin = 0;
  std::vector<SpectralVectorField> samples;
  SpatialMollifier space;
  TemporalMollifier time;
  const SpectralVectorField& at(int i) const { return samples.at(static_cast<std::size_t>(i - begin)); }
};

/// Throws when the kernel reaches before the first sample.
MollifiedNoise mollify_noise(const TruncatedNoise& trunc, const SpatialMollifier& space,
                             const TemporalMollifier& time, int begin, int end);
MollifiedNoise mollify_noise(const TruncatedNoise& trunc, const Schedule& schedule, int q, int begin, int end);

struct MomentEstimate {
  int q = 0;
  double p = 2;
  std::string norm_kind;
  double estimate = 0, ci_lo = 0, ci_hi = 0;
  int n_samples = 0;
};

/// Estimates sup_t E[sup_{s in [t, t+1]} X(s)^p]^{1/p} from values[replica][sample]
/// at the given times, with a percentile bootstrap interval over replicas.
MomentEstimate moment_estimator(const std::vector<std::vector<double>>& values, const std::vector<double>& times,
                                double p, const std::string& norm_kind, int q, int bootstrap = 400,
                                std::uint64_t seed = 2024);

/// Time-Hölder seminorm estimate max over dyadic lags of dist(i, i+L) / (L dt)^gamma.
double time_holder_estimate(int count, double dt, double gamma, const std::function<double(int, int)>& dist);

}  // namespace cit

// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes or fails only because the
// machine cannot hold the requested configuration ("FAIL (resource)").

#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cit/beltrami.hpp"
#include "cit/config.hpp"
#include "cit/convex_integration.hpp"
#include "cit/error.hpp"
#include "cit/noise.hpp"
#include "cit/pipeline.hpp"
#include "cit/spectral.hpp"
#include "cit/transport.hpp"
#include "cit/verify.hpp"

using namespace cit;

namespace {

struct Verdict {
  bool passed = false;
  bool resource_limited = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ------------------------------------------------------------------ shared

constexpr double kDt = 5e-4;
constexpr double kAlpha = 0.25;
constexpr double kAmplitude = 2e-4;  // stays on the cutoff plateau at levels 0 and 1
constexpr int kDeskSamples = 135;

Schedule desk_schedule(double nu) {
  SchemeParams p;
  p.desk_mode = true;
  p.q_max = 1;
  p.nu = nu;
  p.alpha = kAlpha;
  return derive_schedule(p);
}

const BeltramiSystem& desk_system() {
  static const BeltramiSystem sys = build_direction_sets("345a", "345b");
  return sys;
}

/// Noise path and its two truncations; pinned because the truncations point
/// into the path.
struct DeskNoise {
  Schedule schedule;
  NoisePath path;
  TruncatedNoise z0, z1;
  DeskNoise(double nu, int n, int count, std::uint64_t seed) : schedule(desk_schedule(nu)) {
    CovarianceSpec spec;
    spec.amplitude = kAmplitude;
    path = sample_ou_path(spec, nu, kAlpha, n, 0.0, kDt * (count - 1), kDt, NoiseStreams{seed});
    z0 = truncate_cutoff(path, schedule, 0);
    z1 = truncate_cutoff(path, schedule, 1);
  }
  DeskNoise(const DeskNoise&) = delete;
  DeskNoise& operator=(const DeskNoise&) = delete;
};

/// Level-1 bifurcation at nu = 1 shared by criteria 8, 9 and 11.
struct DeskBifurcation {
  std::unique_ptr<DeskNoise> noise;
  IterationState start;
  Bifurcation bif;
  double t_lo = 0.048, t_hi = 0.064;
};

const DeskBifurcation& desk_bifurcation() {
  static const DeskBifurcation run = [] {
    DeskBifurcation r;
    r.noise = std::make_unique<DeskNoise>(1.0, 32, kDeskSamples, 7);
    r.start = init_state(r.noise->z0);
    StepOptions opt;
    opt.nu = 1.0;
    opt.alpha = kAlpha;
    opt.snapshot_sample = r.start.last() - 2;
    r.bif = bifurcate(r.start, r.noise->z1, r.noise->schedule, desk_system(), opt, r.t_lo, r.t_hi);
    return r;
  }();
  return run;
}

Sym3 random_near_identity(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0, 1);
  double v[6];
  for (double& x : v) x = nd(rng);
  Sym3 E = sym_from6(v);
  E /= E.norm();
  return Sym3::Identity() + radius * std::cbrt(ud(rng)) * E;
}

/// Real random field with modes |k|_inf <= band, mean removed.
SpectralVectorField random_band_field(int n, int band, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const TorusGrid grid(n);
  SpectralVectorField u(n);
  for (std::size_t m = 0; m < grid.modes(); ++m) {
    const auto k = grid.mode(m);
    if (std::max({std::abs(k[0]), std::abs(k[1]), k[2]}) > band) continue;
    for (int a = 0; a < 3; ++a) u.c[a][m] = cplx(nd(rng), nd(rng));
  }
  for (int a = 0; a < 3; ++a) u.c[a][0] = 0;
  return to_spectral(to_physical(u));  // projects onto real fields
}

double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// -------------------------------------------------------------- criteria

Verdict geometric_lemma() {
  const BeltramiSystem& sys = desk_system();
  std::mt19937_64 rng(20240601);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sym3 R = random_near_identity(rng, sys.c_star);
    for (int s = 0; s < 2; ++s) {
      const GammaSolution g = gamma_solve(sys, R, s);
      // Reconstruct directly from the pair coefficients and directions.
      Sym3 recon = Sym3::Zero();
      for (int p = 0; p < DirectionSet::kPairs; ++p) {
        const auto z = sys.sets[s].dirs[p].z();
        const Eigen::Vector3d zeta(z[0], z[1], z[2]);
        recon += g.gamma_sq[p] * (Sym3::Identity() - zeta * zeta.transpose());
      }
      worst = std::max(worst, (R - recon).norm());
    }
  }
  return {worst <= 1e-10, false, "max |R - sum Gamma^2 (Id - zeta zeta)|_F = " + fmt(worst) + " (tol 1e-10)"};
}

Verdict beltrami_identities() {
  double worst_mode = 0;
  for (const auto& family : {"345a", "345b", "72425"}) {
    const DirectionSet set = build_direction_set(family, direction_family(family));
    for (int lambda : {25, 50}) {
      for (const auto& d : set.dirs) {
        const PlaneWave w = beltrami_wave(d, lambda);
        const PlaneWave c = curl(w);
        double amp = 0, diff = 0;
        for (int i = 0; i < 3; ++i) {
          amp = std::max(amp, std::abs(w.amp[i]));
          diff = std::max(diff, std::abs(c.amp[i] - double(lambda) * w.amp[i]));
        }
        worst_mode = std::max({worst_mode, diff / (lambda * amp), std::abs(divergence(w)) / (lambda * amp)});
      }
    }
  }

  const int n = 64;
  double worst_euler = 0, worst_mean = 0;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 2; ++s) {
    const DirectionSet& set = desk_system().sets[s];
    for (int lambda : {5, 10}) {
      std::vector<cplx> a(12);
      for (int p = 0; p < 6; ++p) {
        a[p] = cplx(nd(rng), nd(rng));
        a[p + 6] = std::conj(a[p]);
      }
      const SpectralVectorField W = beltrami_flow(set, a, lambda, n);
      const SymTensorField T = sym_outer(W, W);
      const GridVector lhs = to_physical(divergence(T));
      SpectralScalarField half = dot(W, W);
      half *= 0.5;
      const GridVector rhs = to_physical(gradient(half));
      const double scale = std::max(1.0, c0_norm(rhs));
      for (int i = 0; i < 3; ++i) worst_euler = std::max(worst_euler, max_abs_diff(lhs.v[i], rhs.v[i]) / scale);
      for (int c = 0; c < 6; ++c) {
        const int i = kSymPairs[c][0], j = kSymPairs[c][1];
        double expect = 0;
        for (int d = 0; d < 12; ++d) {
          const auto z = set.dirs[d].z();
          expect += 0.5 * std::norm(a[d]) * ((i == j ? 1.0 : 0.0) - z[i] * z[j]);
        }
        worst_mean = std::max(worst_mean, std::abs(T.c[c][0].real() - expect));
      }
    }
  }
  const bool ok = worst_mode <= 1e-12 && worst_euler <= 1e-10 && worst_mean <= 1e-10;
  return {ok, false,
          "per mode " + fmt(worst_mode) + " (tol 1e-12), div(W W) - grad |W|^2/2 " + fmt(worst_euler) +
              " (tol 1e-10), mean " + fmt(worst_mean) + " (tol 1e-10) at 64^3"};
}

Verdict inverse_divergence_check() {
  const int n = 64;
  std::mt19937_64 rng(31337);
  double worst = 0, worst_trace = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const SpectralVectorField u = random_band_field(n, 8, rng);
    const SymTensorField R = inverse_divergence(u);
    const GridVector back = to_physical(divergence(R));
    const GridVector ref = to_physical(u);
    const double scale = c0_norm(ref);
    for (int a = 0; a < 3; ++a) worst = std::max(worst, max_abs_diff(back.v[a], ref.v[a]) / scale);
    worst_trace = std::max(worst_trace, trace_defect(R));
  }
  return {worst <= 1e-10 && worst_trace <= 1e-12, false,
          "relative |div R u - u| = " + fmt(worst) + " (tol 1e-10), trace " + fmt(worst_trace) + " (tol 1e-12)"};
}

Verdict stationary_phase() {
  const int n = 64;
  const TorusGrid grid(n);
  auto field = [&](int lambda) {
    // a(x) e^{i lambda zeta.x} with zeta = (3,4,0)/5, real part in the third component.
    GridVector g(n);
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++idx) {
          const double x0 = grid.node(i0), x1 = grid.node(i1), x2 = grid.node(i2);
          const double amp = 1.0 + 0.3 * std::cos(x0) + 0.2 * std::sin(x2);
          g.v[2][idx] = amp * std::cos(lambda * (3 * x0 + 4 * x1) / 5.0);
        }
    return to_spectral(g);
  };
  std::string detail = "ratios";
  bool ok = true;
  for (int lambda : {5, 10, 15}) {
    const double ratio = c0_norm(inverse_divergence(field(2 * lambda))) / c0_norm(inverse_divergence(field(lambda)));
    ok = ok && ratio >= 0.4 && ratio <= 0.6;
    detail += " " + std::to_string(lambda) + ":" + fmt(ratio);
  }
  return {ok, false, detail + " (band [0.4, 0.6])"};
}

Verdict partition_of_unity() {
  double worst = 0;
  const Schedule schedule = desk_schedule(1.0);
  std::vector<TimePartition> parts{build_time_partition(schedule, 0, 0, kDt), build_time_partition(schedule, 1, 0, kDt),
                                   make_time_partition(0.1, 3, 1e-3, false)};
  for (const auto& part : parts)
    for (int s = 0; s < 10000; ++s) {
      const double t = part.k + (s + 0.5) / 10000.0;
      double sum = 0;
      for (int j : part.active(t)) sum += part.eta(j, t) * part.eta(j, t);
      worst = std::max(worst, std::abs(sum - 1));
    }
  return {worst <= 1e-12, false, "max |sum eta^2 - 1| = " + fmt(worst) + " over 10^4 times (tol 1e-12)"};
}

Verdict amplitude_identity() {
  // Level-0 stress of a 64^3 noise path mollified on a coarse time grid,
  // plus a smooth stress of the size delta_1 carried by a level-1 state.
  const int n = 64;
  const double dt = 5e-3;
  const Schedule schedule = desk_schedule(1.0);
  CovarianceSpec spec;
  spec.amplitude = kAmplitude;
  const NoisePath path = sample_ou_path(spec, 1.0, kAlpha, n, 0.0, 24 * dt, dt, NoiseStreams{5});
  const TruncatedNoise z0 = truncate_cutoff(path, schedule, 0);
  const TemporalMollifier time = make_temporal_mollifier(dt, 4 * dt, true);
  const int last = path.count - 1;
  const IterationState state = init_state(z0, last - time.reach() - 1, last);
  const SpatialMollifier space = make_spatial_mollifier(n, schedule.ell[0], true);
  const MollifiedState moll = mollify_state(state, space, time);

  std::mt19937_64 rng(77);
  SpectralVectorField u = random_band_field(n, 3, rng);
  SymTensorField extra = inverse_divergence(u);
  extra *= schedule.delta[1] / c0_norm(extra);
  SymTensorField R_ell = moll.R[moll.slot(moll.last())] + extra;
  strip_nyquist(R_ell);

  const TimePartition part = build_time_partition(schedule, 0, 0, kDt);
  const double t = part.center(3) + 0.37 * part.m;
  std::vector<WindowFlow> windows;
  for (int j : part.active(t)) windows.push_back({j, part.eta(j, t), nullptr});
  const AmplitudeSet amps = amplitude_fields(R_ell, schedule.ell[0], schedule.delta[1], desk_system(), windows);

  // Pointwise reconstruction from the returned amplitudes.
  const GridTensor R = to_physical(R_ell);
  const double cs = desk_system().c_star;
  double worst = 0, scale = 0;
  for (std::size_t x = 0; x < R.size(); ++x) {
    Sym3 recon = Sym3::Zero();
    for (const auto& w : amps.windows)
      for (int p = 0; p < 6; ++p) {
        const auto z = desk_system().sets[w.set].dirs[p].z();
        const Eigen::Vector3d zeta(z[0], z[1], z[2]);
        const double a = w.a[p].v[0][x];
        recon += a * a * (Sym3::Identity() - zeta * zeta.transpose());
      }
    double r6[6];
    for (int c = 0; c < 6; ++c) r6[c] = R.v[c][x];
    const Sym3 target = amps.rho.v[0][x] / cs * Sym3::Identity() - sym_from6(r6);
    worst = std::max(worst, (recon - target).norm());
    scale = std::max(scale, target.norm());
  }
  return {worst <= 1e-8 && windows.size() == 2, false,
          "max pointwise residual " + fmt(worst) + " (tol 1e-8) against |target| up to " + fmt(scale) + ", " +
              std::to_string(windows.size()) + " active windows at 64^3"};
}

Verdict flow_map_bounds() {
  const int n = 16;
  const double m = 0.05, dt = 0.005;
  const TimePartition part = make_time_partition(m, 0, dt, false);
  auto steady = [&](const SpectralVectorField& base) {
    VelocityPath u;
    u.dt = dt;
    for (int i = 0; i < 60; ++i) u.samples.push_back(base);
    return u;
  };
  SpectralVectorField constant(n);
  constant.c[0][0] = 0.7;
  constant.c[1][0] = -1.3;
  constant.c[2][0] = 0.25;
  GridVector shear_grid(n);
  const TorusGrid grid(n);
  std::size_t idx = 0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2, ++idx) shear_grid.v[1][idx] = std::sin(grid.node(i0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<cplx> coeffs(12);
  for (int p = 0; p < 6; ++p) {
    coeffs[p] = 0.3 * cplx(nd(rng), nd(rng));
    coeffs[p + 6] = std::conj(coeffs[p]);
  }
  const std::vector<SpectralVectorField> fields{constant, to_spectral(shear_grid),
                                                beltrami_flow(desk_system().sets[0], coeffs, 5, n)};

  bool ok = true;
  double worst_margin = -INFINITY;
  for (const auto& base : fields) {
    const VelocityPath u = steady(base);
    double c1 = 0;
    for (const auto& s : u.samples) c1 = std::max(c1, c1_norm(s));
    const double bound = std::expm1(2 * m * c1);
    const int j = 2;
    for (int sample : {14, 20, 28}) {
      if (u.time(sample) <= part.start(j) || u.time(sample) >= part.end(j)) continue;
      const FlowMap f = solve_flow_map(u, part, j, sample);
      double dev = 0;
      for (std::size_t x = 0; x < f.jacobian.size(); ++x) {
        Eigen::Matrix3d D;
        for (int e = 0; e < 9; ++e) D(e / 3, e % 3) = f.jacobian.v[e][x] - (e % 4 == 0 ? 1.0 : 0.0);
        // Operator norm from the eigenvalues of D^T D.
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(D.transpose() * D);
        dev = std::max(dev, std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff())));
      }
      ok = ok && dev <= bound + 1e-4;
      worst_margin = std::max(worst_margin, dev - bound);
    }
  }

  // Constant velocity: exact translation.
  const VelocityPath u = steady(constant);
  const double start = 0.0137;
  const FlowMap f = solve_flow_map(u, start, 15);
  const double tau = u.time(15) - start;
  double exact = 0;
  for (int d = 0; d < 3; ++d)
    for (double v : f.displacement.v[d]) exact = std::max(exact, std::abs(v + constant.c[d][0].real() * tau));
  for (int e = 0; e < 9; ++e)
    for (double v : f.jacobian.v[e]) exact = std::max(exact, std::abs(v - (e % 4 == 0 ? 1.0 : 0.0)));
  return {ok && exact <= 1e-10, false,
          "max (|grad Phi - Id| - bound) = " + fmt(worst_margin) + " (tol 1e-4), constant flow error " + fmt(exact) +
              " (tol 1e-10)"};
}

/// Bytes of one spectral component on an n^3 grid.
double component_bytes(int n) { return double(n) * n * (n / 2 + 1) * sizeof(cplx); }

double available_memory() {
  double bytes = double(sysconf(_SC_PHYS_PAGES)) * double(sysconf(_SC_PAGESIZE));
  std::ifstream cg("/sys/fs/cgroup/memory.max");
  std::string limit;
  if (cg >> limit && limit != "max") bytes = std::min(bytes, std::stod(limit));
  return bytes;
}

Verdict master_consistency_check() {
  const DeskBifurcation& run = desk_bifurcation();
  const ConsistencyReport viscous = master_consistency(run.bif.base.next, 1.0, kAlpha);

  DeskNoise euler_noise(0.0, 32, kDeskSamples, 7);
  const IterationState start = init_state(euler_noise.z0);
  StepOptions opt;
  opt.nu = 0.0;
  opt.alpha = kAlpha;
  StepResult euler = iterate(start, euler_noise.z1, euler_noise.schedule, desk_system(), opt);
  const ConsistencyReport inviscid = master_consistency(euler.next, 0.0, kAlpha);
  const bool gaps_ok = viscous.passed(1e-5) && inviscid.passed(1e-5);
  std::string detail = "max gap nu=1 " + fmt(viscous.max_gap) + ", nu=0 " + fmt(inviscid.max_gap) +
                       " (tol 1e-5) with 345a/345b at lambda " + std::to_string(euler.diag.lambda_used) + " on 32^3";

  // The 25-compatible family needs lambda = 25, resolved from n = 128 on.
  const BeltramiSystem compatible = build_direction_sets("345a", "72425");
  const int n25 = 128;
  const int lambda25 = realized_lambda(compatible, n25, 25);
  // Level-0 state, mollified state and per-sample perturbations, about
  // forty spectral components per time sample.
  const double need = component_bytes(n25) * 40.0 * kDeskSamples;
  const double have = available_memory();
  if (need > have) {
    // Resource-limited only when the attainable part holds.
    return {false, gaps_ok,
            detail + "; 25-compatible run (72425, lambda " + std::to_string(lambda25) + ", " +
                std::to_string(n25) + "^3) needs about " + fmt(need / 1e9) + " GB, " + fmt(have / 1e9) +
                " GB available"};
  }
  DeskNoise noise25(1.0, n25, kDeskSamples, 7);
  const IterationState start25 = init_state(noise25.z0);
  StepOptions opt25;
  opt25.nu = 1.0;
  opt25.alpha = kAlpha;
  opt25.lambda = lambda25;
  const StepResult step25 = iterate(start25, noise25.z1, noise25.schedule, compatible, opt25);
  const ConsistencyReport rep25 = master_consistency(step25.next, 1.0, kAlpha);
  return {gaps_ok && rep25.passed(1e-5), false, detail + "; 25-compatible gap " + fmt(rep25.max_gap)};
}

Verdict oscillation_check() {
  const BeltramiSystem& sys = desk_system();
  const int lambda = realized_lambda(sys, 32);
  const std::vector<WindowFlow> identity{{0, 1.0, nullptr}};
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  double worst_identity = 0;
  for (int trial = 0; trial < 5; ++trial) {
    SymTensorField R(32);
    for (int c = 0; c < 6; ++c) R.c[c][0] = nd(rng);
    R = trace_free(R);
    const AmplitudeSet amps = amplitude_fields(R, 0.03, 1.0, sys, identity);
    const PerturbationParts parts = build_perturbation(amps, identity, sys, lambda);
    worst_identity = std::max(worst_identity, oscillation_cancellation(parts.principal, R, lambda, 0, true).ratio);
  }

  const DeskBifurcation& run = desk_bifurcation();
  const StepResult& step = run.bif.base;
  const int sample = step.snapshot->sample;
  const SymTensorField& R_ell = step.mollified.R[step.mollified.slot(sample)];
  const CancellationReport full = oscillation_cancellation(
      step.principal.at(static_cast<std::size_t>(sample - step.next.first)), R_ell, step.diag.lambda_used, 0, false);
  return {worst_identity <= 1e-8 && full.ratio < 1, false,
          "identity flow " + fmt(worst_identity) + " (tol 1e-8), full flow ratio " + fmt(full.ratio) + " (< 1)"};
}

Verdict noise_oracle() {
  // Stationary variance per coordinate.
  CovarianceSpec spec;
  spec.mode_cut = 2.0;
  const int draws = 10000;
  int outside = 0, tested = 0;
  for (double nu : {1.0, 0.0}) {
    const NoisePath probe = sample_ou_path(spec, nu, kAlpha, 8, 0.0, 0.0, 0.1, NoiseStreams{1});
    const std::vector<std::size_t> picks{0, probe.modes.size() / 2, probe.modes.size() - 1};
    std::vector<double> s2(picks.size() * 2, 0.0);
    for (int d = 0; d < draws; ++d) {
      const NoisePath p = sample_ou_path(spec, nu, kAlpha, 8, 0.0, 0.0, 0.1, NoiseStreams{std::uint64_t(d) + 1000});
      for (std::size_t m = 0; m < picks.size(); ++m)
        for (int lane = 0; lane < 2; ++lane) {
          const double x = p.coords[0][4 * picks[m] + 3 * lane];
          s2[2 * m + lane] += x * x;
        }
    }
    for (std::size_t m = 0; m < picks.size(); ++m) {
      const auto k = probe.modes[picks[m]].k;
      const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
      const double c_k = std::pow(1 + k2, -6.0);
      const double expected = c_k / (2 * (nu * std::pow(k2, kAlpha) + 1));
      for (int lane = 0; lane < 2; ++lane) {
        const double var = s2[2 * m + lane] / draws;  // known zero mean
        ++tested;
        if (std::abs(var - expected) > 3 * expected * std::sqrt(2.0 / draws)) ++outside;
      }
    }
  }

  // Pathwise cutoff bounds.
  const Schedule schedule = desk_schedule(1.0);
  int violations = 0;
  for (double amp : {1e-6, 1e-3, 1e-1, 1.0, 10.0, 1e3}) {
    CovarianceSpec s;
    s.amplitude = amp;
    s.mode_cut = 5.0;
    const NoisePath p = sample_ou_path(s, 1.0, kAlpha, 16, 0.0, 0.1, 0.01, NoiseStreams{11});
    for (int q = 0; q <= 2; ++q) {
      const TruncatedNoise t = truncate_cutoff(p, schedule, q);
      const double third = std::cbrt(schedule.lambda_d(q));
      for (int i = 0; i < p.count; ++i) {
        const SpectralVectorField zq = t.field(i);
        if (c0_norm(zq) > 0.5 * third || c1_norm(zq) > third * third) ++violations;
      }
    }
  }

  // Causality of z_l: a seed switch at sample 150 leaves earlier samples alone.
  CovarianceSpec cs;
  cs.amplitude = kAmplitude;
  const NoisePath a = sample_ou_path(cs, 1.0, kAlpha, 16, 0.0, 199 * kDt, kDt, NoiseStreams{8});
  const NoisePath b = sample_ou_path(cs, 1.0, kAlpha, 16, 0.0, 199 * kDt, kDt, NoiseStreams{8, 150, 4321});
  bool causal = true, responds = false;
  for (int q = 0; q <= 1; ++q) {
    const TruncatedNoise ta = truncate_cutoff(a, schedule, q), tb = truncate_cutoff(b, schedule, q);
    const MollifiedNoise za = mollify_noise(ta, schedule, q, 100, 200), zb = mollify_noise(tb, schedule, q, 100, 200);
    for (int i = 100; i < 150; ++i) causal = causal && za.at(i).c == zb.at(i).c;
    responds = responds || za.at(199).c != zb.at(199).c;
  }
  return {outside == 0 && violations == 0 && causal && responds, false,
          std::to_string(tested - outside) + "/" + std::to_string(tested) +
              " variances within 3 SE over 10^4 replicas, " + std::to_string(violations) +
              " cutoff violations, past of z_l " + (causal ? "unchanged" : "CHANGED") +
              (responds ? "" : ", future unchanged")};
}

Verdict bifurcation_check() {
  const DeskBifurcation& run = desk_bifurcation();
  const IterationState& a = run.bif.base.next;
  const IterationState& b = run.bif.flipped.next;
  const TimePartition part = build_time_partition(run.noise->schedule, 0, 0, kDt);
  const double reach = run.bif.base.mollified.time.reach() * kDt;
  const int j = run.bif.window;
  bool outside_equal = true;
  double inside_gap = 0, first = INFINITY, last = -INFINITY;
  for (int i = a.first; i <= a.last(); ++i) {
    const double t = a.time(i);
    bool equal = true;
    for (int c = 0; c < 3; ++c) equal = equal && a.v_at(i).c[c] == b.v_at(i).c[c];
    for (int c = 0; c < 6; ++c) equal = equal && a.R_at(i).c[c] == b.R_at(i).c[c];
    equal = equal && a.p_at(i).c == b.p_at(i).c;
    if (!equal) {
      first = std::min(first, t);
      last = std::max(last, t);
    }
    if (t < run.t_lo || t > run.t_hi) outside_equal = outside_equal && equal;
    if (part.eta(j, t) > 0) inside_gap = std::max(inside_gap, l2_norm(a.v_at(i) - b.v_at(i)));
  }
  const bool support_ok = first >= run.t_lo - 1e-12 && last <= run.t_hi + reach + 1e-12;
  return {outside_equal && inside_gap > 0 && support_ok, false,
          "window " + std::to_string(j) + ", outside I " + (outside_equal ? "bit-identical" : "DIFFERENT") +
              ", max L2 gap inside " + fmt(inside_gap) + ", difference on [" + fmt(first) + ", " + fmt(last) +
              "] within I + reach [" + fmt(run.t_lo) + ", " + fmt(run.t_hi + reach) + "]"};
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "cit_acceptance_determinism";
  fs::remove_all(root);
  RunConfig c = parse_config(
      "n = 32\ndt = 5e-4\nhorizon = 0.052\nseed = 11\nmode = nse\ndesk_mode = true\nq_max = 1\n"
      "bifurcate = false\n");
  std::vector<std::string> contents[2];
  std::vector<std::string> names;
  for (int run = 0; run < 2; ++run) {
    c.workers = run == 0 ? 1 : 4;
    c.out_dir = root / ("workers" + std::to_string(c.workers));
    run_pipeline(c);
    names.clear();
    for (const auto& e : fs::directory_iterator(c.out_dir))
      if (e.path().extension() == ".csv") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
      std::ifstream in(c.out_dir / name, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      contents[run].push_back(ss.str());
    }
  }
  const bool same = contents[0] == contents[1] && !names.empty();
  return {same, false, std::to_string(names.size()) + " CSV files " + (same ? "byte-identical" : "DIFFER") +
                           " between 1 and 4 workers"};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 when none is set
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Geometric Lemma reconstruction", 1, geometric_lemma},
      {2, "Beltrami identities", 10, beltrami_identities},
      {3, "Inverse divergence", 30, inverse_divergence_check},
      {4, "Stationary-phase decay", 30, stationary_phase},
      {5, "Partition of unity", 0, partition_of_unity},
      {6, "Amplitude identity", 60, amplitude_identity},
      {7, "Flow-map bounds", 0, flow_map_bounds},
      {8, "Master consistency", 1800, master_consistency_check},
      {9, "Oscillation cancellation", 0, oscillation_check},
      {10, "Noise oracle", 0, noise_oracle},
      {11, "Bifurcation", 0, bifurcation_check},
      {12, "Determinism", 0, determinism},
  };
  int hard_failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && seconds > c.time_limit) {
      v.passed = false;
      v.detail += "; runtime over " + fmt(c.time_limit) + " s";
    }
    const char* status = v.passed ? "PASS" : (v.resource_limited ? "FAIL (resource)" : "FAIL");
    if (!v.passed && !v.resource_limited) ++hard_failures;
    std::printf("[%s] %2d %s: %s [%.1f s]\n", status, c.id, c.name, v.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return hard_failures == 0 ? 0 : 1;
}

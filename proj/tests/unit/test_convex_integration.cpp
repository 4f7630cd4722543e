#include <cmath>
#include <memory>
#include <random>

#include "cit/convex_integration.hpp"
#include "cit/error.hpp"
#include "cit/spectral.hpp"
#include "cit/verify.hpp"
#include "doctest.h"
#include "trig_oracle.hpp"

using namespace cit;

namespace {

constexpr double kDt = 5e-4;
constexpr double kAlpha = 0.25;
// Noise scale whose paths stay on the cutoff plateau at levels 0 and 1.
constexpr double kAmplitude = 2e-4;

Schedule desk_schedule(double nu) {
  SchemeParams p;
  p.desk_mode = true;
  p.q_max = 1;
  p.nu = nu;
  return derive_schedule(p);
}

const BeltramiSystem& desk_system() {
  static const BeltramiSystem sys = build_direction_sets("345a", "345b");
  return sys;
}

/// Noise path with its two truncation levels; the truncations point into
/// the path, so the bundle is pinned in place.
struct NoiseLevels {
  Schedule schedule;
  NoisePath path;
  TruncatedNoise z0, z1;

  NoiseLevels(double amplitude, double nu, int count, NoiseStreams streams = {7}, int n = 32)
      : schedule(desk_schedule(nu)) {
    CovarianceSpec spec;
    spec.amplitude = amplitude;
    path = sample_ou_path(spec, nu, kAlpha, n, 0.0, kDt * (count - 1), kDt, streams);
    z0 = truncate_cutoff(path, schedule, 0);
    z1 = truncate_cutoff(path, schedule, 1);
  }
  NoiseLevels(const NoiseLevels&) = delete;
  NoiseLevels& operator=(const NoiseLevels&) = delete;
};

struct Run {
  std::unique_ptr<NoiseLevels> noise;
  IterationState start;
  StepResult step;
};

Run run_level_one(double amplitude, double nu, int count, StepOptions opt = {}, NoiseStreams streams = {7}) {
  Run r;
  r.noise = std::make_unique<NoiseLevels>(amplitude, nu, count, streams);
  r.start = init_state(r.noise->z0);
  opt.nu = nu;
  opt.alpha = kAlpha;
  r.step = iterate(r.start, r.noise->z1, r.noise->schedule, desk_system(), opt);
  return r;
}

/// Generic desk run shared by several cases.
const Run& generic_run() {
  static const Run run = [] {
    StepOptions opt;
    opt.snapshot_sample = 98;
    return run_level_one(kAmplitude, 1.0, 105, opt);
  }();
  return run;
}

GridScalar trig_grid(int n, const oracle::TrigScalar& f) { return oracle::sample(n, f); }

/// c * diag(1, -1, 0) plus a small smooth trace-free perturbation.
SymTensorField smooth_stress(int n, double offset, double wiggle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridTensor g(n);
  for (int c = 0; c < 6; ++c) g.v[c] = trig_grid(n, oracle::random_scalar(rng, 2, 3)).v[0];
  g *= wiggle;
  for (std::size_t x = 0; x < g.size(); ++x) {
    g.v[0][x] += offset;
    g.v[3][x] -= offset;
  }
  SymTensorField t = to_spectral(g);
  strip_nyquist(t);
  return trace_free(t);
}

}  // namespace

TEST_CASE("initial state from the level-0 noise") {
  SUBCASE("zero noise gives the zero state") {
    NoiseLevels noise(0.0, 1.0, 6);
    const IterationState s = init_state(noise.z0);
    CHECK(s.count() == 6);
    for (int i = s.first; i <= s.last(); ++i) {
      CHECK(l2_norm(s.v_at(i)) == 0.0);
      CHECK(l2_norm(s.R_at(i)) == 0.0);
      CHECK(l2_norm(s.p_at(i)) == 0.0);
    }
  }
  SUBCASE("generic noise: trace-free stress and vanishing level-0 residual") {
    NoiseLevels noise(1e-6, 1.0, 8);
    const IterationState s = init_state(noise.z0, 2, 7);
    CHECK(s.first == 2);
    CHECK(s.count() == 6);
    double z_scale = 0;
    for (int i = s.first; i <= s.last(); ++i) {
      CHECK(trace_defect(s.R_at(i)) <= 1e-10);
      z_scale = std::max(z_scale, l2_norm(s.z_at(i)));
    }
    REQUIRE(z_scale > 0);
    for (double nu : {0.0, 1.0}) {
      const ResidualReport r = pde_residual(s, nu, kAlpha);
      CHECK(r.max_l2 <= 1e-12 * z_scale);
    }
  }
  SUBCASE("range errors") {
    NoiseLevels noise(1e-6, 1.0, 4);
    CHECK_THROWS_AS(init_state(noise.z0, 2, 9), Error);
    CHECK_THROWS_AS(init_state(noise.z0, 3, 2), Error);
  }
}

TEST_CASE("mollified state and the first commutator") {
  const int n = 16;
  const SpatialMollifier space = make_spatial_mollifier(n, 0.5, true);
  const TemporalMollifier time = make_temporal_mollifier(kDt, 4 * kDt, true);
  REQUIRE(time.reach() >= 2);

  SUBCASE("constant fields leave no commutator") {
    IterationState s;
    s.n = n;
    s.dt = kDt;
    for (int i = 0; i < 10; ++i) {
      SpectralVectorField v(n), z(n);
      v.c[0][0] = 0.3;
      z.c[1][0] = -0.7;
      s.v.push_back(v);
      s.z.push_back(z);
      s.R.emplace_back(n);
      s.p.emplace_back(n);
    }
    const MollifiedState m = mollify_state(s, space, time);
    CHECK(m.first == time.reach());
    CHECK(m.last() == 9);
    for (int i = m.first; i <= m.last(); ++i) CHECK(c0_norm(m.com1[m.slot(i)]) <= 1e-12);
  }

  SUBCASE("mollified system holds at level 0") {
    CovarianceSpec spec;
    spec.amplitude = 1e-4;
    const Schedule schedule = desk_schedule(1.0);
    const NoisePath path = sample_ou_path(spec, 1.0, kAlpha, n, 0.0, 20 * kDt, kDt, {11});
    TruncatedNoise z0 = truncate_cutoff(path, schedule, 0);
    const IterationState s = init_state(z0);
    const MollifiedState m = mollify_state(s, space, time);
    IterationState sys;
    sys.n = n;
    sys.dt = kDt;
    sys.first = m.first;
    double scale = 0;
    for (int i = m.first; i <= m.last(); ++i) {
      const std::size_t k = m.slot(i);
      CHECK(divergence_defect(m.v[k] + m.z[k]) <= 1e-12);
      CHECK(trace_defect(m.com1[k]) <= 1e-10);
      sys.v.push_back(m.v[k]);
      sys.z.push_back(m.z[k]);
      sys.R.push_back(m.R[k] + m.com1[k]);
      sys.p.push_back(m.p[k]);
      scale = std::max(scale, l2_norm(m.z[k]));
    }
    REQUIRE(scale > 0);
    const ResidualReport r = pde_residual(sys, 1.0, kAlpha);
    CHECK(r.max_l2 <= 1e-6 * scale);
  }

  SUBCASE("history shorter than the kernel") {
    IterationState s;
    s.n = n;
    s.dt = kDt;
    for (int i = 0; i < time.reach(); ++i) {
      s.v.emplace_back(n);
      s.z.emplace_back(n);
      s.R.emplace_back(n);
      s.p.emplace_back(n);
    }
    CHECK_THROWS_AS(mollify_state(s, space, time), Error);
  }
}

TEST_CASE("amplitudes reproduce the stress pointwise") {
  const BeltramiSystem& sys = desk_system();
  const int n = 16;
  const double ell = 0.0359, delta = 4.5;
  const TimePartition part = make_time_partition(0.01, 0, kDt, true);
  const double t = 0.013;
  std::vector<WindowFlow> windows;
  for (int j : part.active(t)) windows.push_back({j, part.eta(j, t), nullptr});
  REQUIRE(windows.size() == 2);

  SUBCASE("zero stress: constant rho and identity coefficients") {
    const AmplitudeSet amps = amplitude_fields(SymTensorField(n), ell, delta, sys, windows);
    const double rho = std::sqrt(ell * ell + delta * delta);
    for (double x : amps.rho.v[0]) CHECK(x == doctest::Approx(rho).epsilon(1e-14));
    const double id[6] = {1, 0, 0, 1, 0, 1};
    for (const auto& w : amps.windows) {
      const auto g2 = gamma_squared(sys.sets[w.set], id);
      const double eta = part.eta(w.window, t);
      for (int p = 0; p < 6; ++p) {
        const double expect = std::sqrt(rho / sys.c_star) * eta * std::sqrt(g2[p]);
        CHECK(w.a[p].v[0][5] == doctest::Approx(expect).epsilon(1e-13));
        CHECK(c0_norm(w.grad_a[p]) <= 1e-12);
      }
    }
    CHECK(amps.identity_residual <= 1e-8);
  }

  SUBCASE("generic stress") {
    for (double scale : {1e-3, 1.0, 50.0}) {
      const SymTensorField R = smooth_stress(n, 0.0, scale, 3);
      const AmplitudeSet amps = amplitude_fields(R, ell, delta, sys, windows);
      CHECK(amps.identity_residual <= 1e-8 * std::max(1.0, c0_norm(R)));
      CHECK(amps.rho_floor_gap >= 0.0);
      CHECK(amps.domain_margin >= 0.0);
      CHECK(amps.windows[0].set != amps.windows[1].set);
    }
  }

  SUBCASE("flipped window changes only the sign") {
    const SymTensorField R = smooth_stress(n, 0.1, 0.05, 4);
    const AmplitudeSet base = amplitude_fields(R, ell, delta, sys, windows);
    const AmplitudeSet flip = amplitude_fields(R, ell, delta, sys, windows, windows[1].window);
    for (int p = 0; p < 6; ++p) {
      CHECK(flip.windows[0].a[p].v[0] == base.windows[0].a[p].v[0]);
      for (std::size_t x = 0; x < flip.windows[1].a[p].size(); x += 97)
        CHECK(flip.windows[1].a[p].v[0][x] == -base.windows[1].a[p].v[0][x]);
    }
    CHECK(flip.identity_residual <= 1e-8);
  }
}

TEST_CASE("perturbation assembly") {
  const BeltramiSystem& sys = desk_system();
  const int n = 32;
  const int lambda = realized_lambda(sys, n);
  REQUIRE(lambda == 5);
  const double ell = 0.0359, delta = 4.5;

  SUBCASE("constant amplitudes and identity flow give a Beltrami field") {
    const std::vector<WindowFlow> windows{{0, 1.0, nullptr}};
    const AmplitudeSet amps = amplitude_fields(SymTensorField(n), ell, delta, sys, windows);
    const PerturbationParts parts = build_perturbation(amps, windows, sys, lambda);
    const double scale = l2_norm(parts.principal);
    REQUIRE(scale > 0);
    CHECK(l2_norm(parts.corrector) <= 1e-12 * scale);
    SpectralVectorField c = curl(parts.principal);
    c *= 1.0 / lambda;
    CHECK(l2_norm(c - parts.principal) <= 1e-12 * scale);
    CHECK(c0_norm(parts.osc_argument) <= 1e-12 * scale * scale);
  }

  SUBCASE("identity flow: corrector is grad a / lambda cross B") {
    const std::vector<WindowFlow> windows{{2, 1.0, nullptr}};
    const SymTensorField R = smooth_stress(n, 0.3, 0.005, 5);
    const AmplitudeSet amps = amplitude_fields(R, ell, delta, sys, windows);
    const PerturbationParts parts = build_perturbation(amps, windows, sys, lambda);
    // pointwise oracle from the amplitude gradients
    GridVector oracle_corr(n);
    const WindowAmplitude& w = amps.windows[0];
    const double h = 2 * M_PI / n;
    for (int p = 0; p < 6; ++p) {
      const PlaneWave wave = beltrami_wave(sys.sets[w.set].dirs[p], lambda);
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2, ++idx) {
            const double ph = h * (wave.k[0] * i0 + wave.k[1] * i1 + wave.k[2] * i2);
            const cplx e(std::cos(ph), std::sin(ph));
            const double g[3] = {w.grad_a[p].v[0][idx], w.grad_a[p].v[1][idx], w.grad_a[p].v[2][idx]};
            const auto& B = wave.amp;
            const cplx cross[3] = {g[1] * B[2] - g[2] * B[1], g[2] * B[0] - g[0] * B[2], g[0] * B[1] - g[1] * B[0]};
            for (int i = 0; i < 3; ++i) oracle_corr.v[i][idx] += 2.0 * (cross[i] * e).real() / lambda;
          }
    }
    SpectralVectorField expect = to_spectral(oracle_corr);
    strip_nyquist(expect);
    const double scale = l2_norm(parts.total);
    CHECK(l2_norm(expect - parts.corrector) <= 1e-8 * scale);
    CHECK(parts.corrector_gap <= 1e-8);
  }

  SUBCASE("transported phases: curl form and direct form agree") {
    // ABC flow: low band, so the transported phases stay resolved
    GridVector abc(n);
    const double h = 2 * M_PI / n;
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++idx) {
          const double x = i0 * h, y = i1 * h, z = i2 * h;
          abc.v[0][idx] = std::sin(z) + std::cos(y);
          abc.v[1][idx] = std::sin(x) + std::cos(z);
          abc.v[2][idx] = std::sin(y) + std::cos(x);
        }
    VelocityPath u;
    u.dt = kDt;
    for (int i = 0; i < 30; ++i) u.samples.push_back(to_spectral(abc));
    const FlowMap flow = solve_flow_map(u, 0.0, 25);
    const std::vector<WindowFlow> windows{{1, 1.0, &flow}};
    const SymTensorField R = smooth_stress(n, 0.2, 0.005, 6);
    const AmplitudeSet amps = amplitude_fields(R, ell, delta, sys, windows);
    const PerturbationParts parts = build_perturbation(amps, windows, sys, lambda);
    const double scale = l2_norm(parts.total);
    CHECK(parts.corrector_gap <= 1e-8);
    CHECK(divergence_defect(parts.total) <= 1e-8);
    for (double m : mean(parts.total)) CHECK(std::abs(m) <= 1e-12 * scale);
  }
}

TEST_CASE("realized Beltrami frequency") {
  const BeltramiSystem& desk = desk_system();
  CHECK(realized_lambda(desk, 32) == 5);
  CHECK(realized_lambda(desk, 64) == 10);
  CHECK(realized_lambda(desk, 32, 5) == 5);
  CHECK_THROWS_AS(realized_lambda(desk, 32, 7), Error);   // not integral
  CHECK_THROWS_AS(realized_lambda(desk, 32, 10), Error);  // unresolved
  CHECK_THROWS_AS(realized_lambda(desk, 16), Error);      // no multiple fits
  const BeltramiSystem wide = build_direction_sets();
  CHECK_THROWS_AS(realized_lambda(wide, 64), Error);
  CHECK(realized_lambda(wide, 160) == 25);
}

TEST_CASE("zero noise: one step adds a pure Beltrami flow") {
  const Run run = run_level_one(0.0, 1.0, 100);
  const StepResult& step = run.step;
  CHECK(step.diag.lambda_used == 5);
  CHECK(step.diag.lambda_substituted);
  for (int i = step.next.first; i <= step.next.last(); ++i) {
    const SpectralVectorField& v = step.next.v_at(i);
    const double scale = l2_norm(v);
    REQUIRE(scale > 0);
    SpectralVectorField c = curl(v);
    c *= 1.0 / step.diag.lambda_used;
    CHECK(l2_norm(c - v) <= 1e-10 * scale);
  }
  for (const auto& sd : step.diag.samples) {
    CHECK(sd.c0[kCom1] == 0.0);
    CHECK(sd.c0[kCom2] == 0.0);
    CHECK(sd.c0[kNash] == 0.0);
    CHECK(sd.corrector_c0 <= 1e-12 * sd.principal_c0);
  }
  CHECK(master_consistency(step.next, 1.0, kAlpha).passed(1e-5));
}

TEST_CASE("one generic step") {
  const Run& run = generic_run();
  const StepResult& step = run.step;
  const IterationState& next = step.next;
  CHECK(next.q == 1);
  CHECK(next.first == step.mollified.first + static_cast<int>(std::ceil(2 * step.diag.m_used / kDt)) + 2);
  CHECK(next.last() == run.start.last() - 1);

  SUBCASE("per-sample identities") {
    for (const auto& sd : step.diag.samples) {
      CHECK(sd.amplitude_residual <= 1e-8);
      CHECK(sd.domain_margin >= 0.0);
      CHECK(sd.omega_divergence <= 1e-8);
      CHECK(sd.omega_mean <= 1e-12);
      CHECK(sd.c0[kLin] > 0.0);
      CHECK(sd.c0[kCom2] > 0.0);
    }
    for (int i = next.first; i <= next.last(); ++i) {
      CHECK(divergence_defect(next.v_at(i)) <= 1e-10);
      CHECK(trace_defect(next.R_at(i)) <= 1e-10);
    }
    CHECK_FALSE(step.diag.deformation_violated);
  }

  SUBCASE("stress breakdown sums to the new stress") {
    REQUIRE(step.snapshot.has_value());
    const StressBreakdown& b = *step.snapshot;
    SymTensorField sum(next.n);
    for (const auto& part : b.parts) {
      if (c0_norm(part) > 0) CHECK(trace_defect(part) <= 1e-10);
      sum += part;
    }
    const SymTensorField& R = next.R_at(b.sample);
    CHECK(l2_norm(sum - R) <= 1e-13 * l2_norm(R));
    SpectralScalarField p = b.p_ell - b.p_osc - b.p_corr - b.p_com2;
    remove_mean(p);
    CHECK(l2_norm(p - next.p_at(b.sample)) <= 1e-13 * l2_norm(p));
  }

  SUBCASE("master consistency with dissipation") {
    const ConsistencyReport rep = master_consistency(next, 1.0, kAlpha);
    CHECK(rep.samples.size() == static_cast<std::size_t>(next.count() - 2));
    CHECK(rep.passed(1e-5));
  }
}

TEST_CASE("Euler step: no linear stress and consistency holds") {
  const Run run = run_level_one(kAmplitude, 0.0, 100);
  for (const auto& sd : run.step.diag.samples) CHECK(sd.c0[kLin] == 0.0);
  CHECK(master_consistency(run.step.next, 0.0, kAlpha).passed(1e-5));
}

TEST_CASE("sign faults break consistency") {
  SUBCASE("plus sign in front of R(z_{q+1} - z_l)") {
    StepOptions opt;
    opt.com2_sign = 1.0;
    const Run run = run_level_one(kAmplitude, 1.0, 100, opt);
    CHECK(master_consistency(run.step.next, 1.0, kAlpha).max_gap > 1e-5);
  }
  SUBCASE("flipped oscillation stress") {
    StepOptions opt;
    opt.osc_sign = -1.0;
    const Run run = run_level_one(kAmplitude, 1.0, 100, opt);
    CHECK(master_consistency(run.step.next, 1.0, kAlpha).max_gap > 1e-5);
  }
}

TEST_CASE("future noise does not reach the past") {
  const Run& base = generic_run();
  const int cut = base.step.next.first + 4;
  NoiseStreams streams{7, cut, 99};
  const Run other = run_level_one(kAmplitude, 1.0, 105, {}, streams);
  const IterationState& a = base.step.next;
  const IterationState& b = other.step.next;
  REQUIRE(a.first == b.first);
  for (int i = a.first; i < cut; ++i) {
    for (int c = 0; c < 3; ++c) CHECK(a.v_at(i).c[c] == b.v_at(i).c[c]);
  }
  CHECK(l2_norm(a.v_at(a.last()) - b.v_at(a.last())) > 0.0);
}

TEST_CASE("bifurcation flips one window") {
  NoiseLevels noise(kAmplitude, 1.0, 135);
  const IterationState start = init_state(noise.z0);
  StepOptions opt;
  opt.nu = 1.0;
  opt.alpha = kAlpha;
  const double t_lo = 0.048, t_hi = 0.064;
  const Bifurcation bif = bifurcate(start, noise.z1, noise.schedule, desk_system(), opt, t_lo, t_hi);
  const TimePartition part = build_time_partition(noise.schedule, 0, 0, kDt);
  CHECK(part.start(bif.window) >= t_lo);
  CHECK(part.end(bif.window) <= t_hi);
  const IterationState& a = bif.base.next;
  const IterationState& b = bif.flipped.next;
  REQUIRE(a.first == b.first);
  REQUIRE(a.count() == b.count());
  int inside = 0;
  for (int i = a.first; i <= a.last(); ++i) {
    const double t = a.time(i);
    const double gap = l2_norm(a.v_at(i) - b.v_at(i));
    if (t < part.start(bif.window) || t > part.end(bif.window)) {
      for (int c = 0; c < 3; ++c) CHECK(a.v_at(i).c[c] == b.v_at(i).c[c]);
    } else if (part.eta(bif.window, t) > 0) {
      CHECK(gap > 0.0);
      ++inside;
    }
  }
  CHECK(inside > 0);
  CHECK(master_consistency(a, 1.0, kAlpha).passed(1e-5));
  CHECK(master_consistency(b, 1.0, kAlpha).passed(1e-5));
  CHECK_THROWS_AS(bifurcate(start, noise.z1, noise.schedule, desk_system(), opt, 0.05, 0.051), Error);
}

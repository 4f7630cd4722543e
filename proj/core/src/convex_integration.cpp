#include "cit/convex_integration.hpp"

#include <algorithm>
#include <cmath>

#include "cit/error.hpp"
#include "cit/parallel.hpp"
#include "cit/spectral.hpp"

namespace cit {

std::size_t IterationState::slot(int i) const {
  if (!contains(i)) throw Error("convex_integration", "sample " + std::to_string(i) + " outside the level range");
  return static_cast<std::size_t>(i - first);
}

std::size_t MollifiedState::slot(int i) const {
  if (i < first || i > last())
    throw Error("convex_integration", "sample " + std::to_string(i) + " outside the mollified range");
  return static_cast<std::size_t>(i - first);
}

IterationState init_state(const TruncatedNoise& z0, int first, int last) {
  const NoisePath& path = *z0.path;
  if (last < 0) last = path.count - 1;
  if (first < 0 || last >= path.count || first > last) throw Error("convex_integration", "invalid sample range");
  IterationState s;
  s.q = z0.q;
  s.n = path.n;
  s.t0 = path.t0;
  s.dt = path.dt;
  s.first = first;
  const auto count = static_cast<std::size_t>(last - first + 1);
  s.v.assign(count, SpectralVectorField(path.n));
  s.R.resize(count);
  s.p.resize(count);
  s.z.resize(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      SpectralVectorField z = z0.field(first + static_cast<int>(k));
      strip_nyquist(z);
      SymTensorField R = trace_free(sym_outer(z, z));
      R -= inverse_divergence(z);
      SpectralScalarField p = dot(z, z);
      p *= -1.0 / 3.0;
      remove_mean(p);
      s.z[k] = std::move(z);
      s.R[k] = std::move(R);
      s.p[k] = std::move(p);
    }
  });
  return s;
}

MollifiedState mollify_state(const IterationState& state, const Schedule& schedule) {
  const bool desk = schedule.params.desk_mode;
  const double ell = schedule.ell.at(state.q);
  return mollify_state(state, make_spatial_mollifier(state.n, ell, desk), make_temporal_mollifier(state.dt, ell, desk));
}

MollifiedState mollify_state(const IterationState& state, const SpatialMollifier& space,
                             const TemporalMollifier& time) {
  const int reach = time.reach();
  if (state.count() <= reach)
    throw ResourceError("convex_integration", "mollifier window exceeds the available history");
  MollifiedState m;
  m.q = state.q;
  m.first = state.first + reach;
  m.space = space;
  m.time = time;
  const int n = state.n;
  const auto count = static_cast<std::size_t>(state.last() - m.first + 1);
  m.v.assign(count, SpectralVectorField(n));
  m.z.assign(count, SpectralVectorField(n));
  m.R.assign(count, SymTensorField(n));
  m.com1.assign(count, SymTensorField(n));  // holds the mollified product until the end
  m.p.assign(count, SpectralScalarField(n));

  // Scatter each source sample once into every output whose kernel sees it.
  for (int s = state.first; s < state.last(); ++s) {
    const SpectralVectorField u = state.v_at(s) + state.z_at(s);
    const SymTensorField product = sym_outer(u, u);
    const int lo = std::max(m.first, s + 1), hi = std::min(m.last(), s + reach);
    if (lo > hi) continue;
    parallel_for(static_cast<std::size_t>(hi - lo + 1), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const int i = lo + static_cast<int>(k);
        const double w = time.weights[static_cast<std::size_t>(i - s - 1)];
        const std::size_t o = m.slot(i);
        m.v[o].axpy(w, state.v_at(s));
        m.z[o].axpy(w, state.z_at(s));
        m.R[o].axpy(w, state.R_at(s));
        m.p[o].axpy(w, state.p_at(s));
        m.com1[o].axpy(w, product);
      }
    });
  }
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t o = b; o < e; ++o) {
      m.v[o] = space.apply(m.v[o]);
      m.z[o] = space.apply(m.z[o]);
      m.R[o] = space.apply(m.R[o]);
      const SymTensorField moll_product = space.apply(m.com1[o]);
      const SpectralScalarField moll_square = trace(moll_product);
      const SpectralVectorField u = m.v[o] + m.z[o];
      const SymTensorField own = sym_outer(u, u);
      m.com1[o] = trace_free(own) - trace_free(moll_product);
      SpectralScalarField p = space.apply(m.p[o]);
      p.axpy(-1.0 / 3.0, trace(own));
      p.axpy(1.0 / 3.0, moll_square);
      remove_mean(p);
      m.p[o] = std::move(p);
    }
  });
  return m;
}

namespace {

GridVector grid_gradient(const GridScalar& f) {
  SpectralScalarField h = to_spectral(f);
  strip_nyquist(h);
  return to_physical(gradient(h));
}

double frobenius_sq6(const double* t) {
  return t[0] * t[0] + t[3] * t[3] + t[5] * t[5] + 2 * (t[1] * t[1] + t[2] * t[2] + t[4] * t[4]);
}

}  // namespace

AmplitudeSet amplitude_fields(const SymTensorField& R_ell, double ell, double delta_next, const BeltramiSystem& sys,
                              const std::vector<WindowFlow>& windows, int flip_window) {
  const int n = R_ell.n;
  const GridTensor R = to_physical(R_ell);
  const double cs = sys.c_star;
  AmplitudeSet out;
  out.n = n;
  out.rho = GridScalar(n);
  for (const auto& w : windows) {
    WindowAmplitude wa;
    wa.window = w.window;
    wa.set = ((w.window % 2) + 2) % 2;
    wa.sign = w.window == flip_window ? -1.0 : 1.0;
    for (auto& a : wa.a) a = GridScalar(n);
    out.windows.push_back(std::move(wa));
  }
  const std::size_t np = R.size();
  double worst_residual = 0, worst_ratio = 0, floor_gap = INFINITY;
  for (std::size_t x = 0; x < np; ++x) {
    double r6[6];
    for (int c = 0; c < 6; ++c) r6[c] = R.v[c][x];
    const double mag = std::sqrt(frobenius_sq6(r6));
    const double rho = std::sqrt(ell * ell + (mag + delta_next) * (mag + delta_next));
    out.rho.v[0][x] = rho;
    floor_gap = std::min(floor_gap, rho - mag - delta_next);
    worst_ratio = std::max(worst_ratio, cs * mag / rho);
    double arg[6];
    for (int c = 0; c < 6; ++c) arg[c] = (sym_diagonal(c) ? 1.0 : 0.0) - cs * r6[c] / rho;
    // 1/2 sum_j sum_zeta a^2 (Id - zeta zeta) accumulated as a symmetric matrix
    double recon[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t w = 0; w < windows.size(); ++w) {
      WindowAmplitude& wa = out.windows[w];
      const DirectionSet& set = sys.sets[wa.set];
      const auto g2 = gamma_squared(set, arg);
      const double scale = std::sqrt(rho / cs) * windows[w].eta;
      for (int p = 0; p < 6; ++p) {
        if (g2[p] < -1e-12) throw Error("convex_integration", "amplitude argument left the Geometric Lemma domain");
        const double a = wa.sign * scale * std::sqrt(std::max(0.0, g2[p]));
        wa.a[p].v[0][x] = a;
        const auto z = set.dirs[p].z();
        for (int c = 0; c < 6; ++c) {
          const int i = kSymPairs[c][0], j = kSymPairs[c][1];
          recon[c] += a * a * ((i == j ? 1.0 : 0.0) - z[i] * z[j]);
        }
      }
    }
    if (!windows.empty()) {
      double diff[6];
      for (int c = 0; c < 6; ++c) diff[c] = recon[c] - ((sym_diagonal(c) ? rho / cs : 0.0) - r6[c]);
      worst_residual = std::max(worst_residual, std::sqrt(frobenius_sq6(diff)));
    }
  }
  out.identity_residual = worst_residual;
  out.domain_margin = cs - worst_ratio;
  out.rho_floor_gap = floor_gap;
  if (out.domain_margin < 0) throw Error("convex_integration", "amplitude argument outside the c_star ball");
  for (auto& wa : out.windows)
    for (int p = 0; p < 6; ++p) wa.grad_a[p] = grid_gradient(wa.a[p]);
  return out;
}

int realized_lambda(const BeltramiSystem& sys, int n, int requested) {
  const int den = sys.common_denominator();
  if (requested == 0) {
    const int lam = (n / 6) / den * den;
    if (lam <= 0)
      throw ResourceError("convex_integration", "unresolved frequency: grid n=" + std::to_string(n) +
                                            " cannot carry a multiple of " + std::to_string(den));
    return lam;
  }
  if (requested < 0 || requested % den != 0)
    throw Error("convex_integration", "Beltrami frequency " + std::to_string(requested) +
                                          " is not a multiple of the direction denominator " + std::to_string(den));
  if (2 * requested > n / 2 - 1)
    throw ResourceError("convex_integration", "unresolved frequency " + std::to_string(requested) + " on grid n=" +
                                          std::to_string(n));
  return requested;
}

PerturbationParts build_perturbation(const AmplitudeSet& amps, const std::vector<WindowFlow>& windows,
                                     const BeltramiSystem& sys, int lambda) {
  const int n = amps.n;
  const TorusGrid g(n);
  const std::size_t np = g.points();
  if (2 * lambda > n / 2 - 1) throw ResourceError("convex_integration", "unresolved frequency on the grid");

  struct DirData {
    std::vector<cplx> phase;            // e^{i lambda zeta . Phi}
    std::array<std::vector<cplx>, 3> c;  // grad a + i a lambda (grad Psi)^T zeta
    std::array<cplx, 3> B{};
    std::array<double, 3> zeta{};
    const GridScalar* a = nullptr;
    const GridVector* grad_a = nullptr;
  };
  std::vector<DirData> dirs;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const WindowAmplitude& wa = amps.windows[w];
    const DirectionSet& set = sys.sets[wa.set];
    const FlowMap* flow = windows[w].flow;
    for (int p = 0; p < 6; ++p) {
      const PlaneWave wave = beltrami_wave(set.dirs[p], lambda);
      DirData d;
      d.B = wave.amp;
      d.zeta = set.dirs[p].z();
      d.a = &wa.a[p];
      d.grad_a = &wa.grad_a[p];
      d.phase.resize(np);
      for (auto& v : d.c) v.resize(np);
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2, ++idx) {
            double ph = (double(wave.k[0]) * i0 + double(wave.k[1]) * i1 + double(wave.k[2]) * i2) * g.spacing();
            double grad_phase[3] = {0, 0, 0};
            if (flow) {
              for (int i = 0; i < 3; ++i) {
                ph += lambda * d.zeta[i] * flow->displacement.v[i][idx];
                for (int j = 0; j < 3; ++j)
                  grad_phase[j] += lambda * d.zeta[i] * (flow->jacobian.v[3 * i + j][idx] - (i == j ? 1.0 : 0.0));
              }
            }
            d.phase[idx] = cplx(std::cos(ph), std::sin(ph));
            const double a = d.a->v[0][idx];
            for (int j = 0; j < 3; ++j) d.c[j][idx] = cplx(d.grad_a->v[j][idx], a * grad_phase[j]);
          }
      dirs.push_back(std::move(d));
    }
  }

  // First pass: omega^(p), the scalar sum A = sum W.grad(a phi), the direct
  // corrector and the excluded zeta' = -zeta contributions.
  GridVector principal(n), direct(n), osc(n);
  GridScalar p_osc(n);
  std::vector<double> A(np, 0.0);
  for (const auto& d : dirs) {
    for (std::size_t x = 0; x < np; ++x) {
      const cplx e = d.phase[x];
      const double a = d.a->v[0][x];
      const cplx cx[3] = {d.c[0][x], d.c[1][x], d.c[2][x]};
      for (int i = 0; i < 3; ++i) principal.v[i][x] += 2.0 * (a * d.B[i] * e).real();
      A[x] += 2.0 * ((d.B[0] * cx[0] + d.B[1] * cx[1] + d.B[2] * cx[2]) * e).real();
      const cplx cross[3] = {cx[1] * d.B[2] - cx[2] * d.B[1], cx[2] * d.B[0] - cx[0] * d.B[2],
                             cx[0] * d.B[1] - cx[1] * d.B[0]};
      for (int i = 0; i < 3; ++i) direct.v[i][x] += 2.0 * (cross[i] * e).real() / lambda;
      // excluded pair: -2 a zeta (zeta . grad a)
      const double zg = d.zeta[0] * d.grad_a->v[0][x] + d.zeta[1] * d.grad_a->v[1][x] + d.zeta[2] * d.grad_a->v[2][x];
      for (int i = 0; i < 3; ++i) osc.v[i][x] += 2.0 * a * d.zeta[i] * zg;
      p_osc.v[0][x] -= a * a;
    }
  }
  // Second pass: sum_d W_d (omega^p . D_d) - (omega^p . W_d) D_d.
  for (std::size_t x = 0; x < np; ++x) {
    for (int i = 0; i < 3; ++i) osc.v[i][x] += principal.v[i][x] * A[x];
    const double rho = amps.rho.v[0][x];
    const double w2 = principal.v[0][x] * principal.v[0][x] + principal.v[1][x] * principal.v[1][x] +
                      principal.v[2][x] * principal.v[2][x];
    p_osc.v[0][x] += rho / sys.c_star + 0.5 * w2;
  }
  for (const auto& d : dirs) {
    for (std::size_t x = 0; x < np; ++x) {
      const cplx e = d.phase[x];
      const double w[3] = {principal.v[0][x], principal.v[1][x], principal.v[2][x]};
      const cplx wc = w[0] * d.c[0][x] + w[1] * d.c[1][x] + w[2] * d.c[2][x];
      const cplx wb = w[0] * d.B[0] + w[1] * d.B[1] + w[2] * d.B[2];
      for (int i = 0; i < 3; ++i) osc.v[i][x] += 2.0 * ((d.B[i] * wc - wb * d.c[i][x]) * e).real();
    }
  }

  PerturbationParts out;
  out.principal = to_spectral(principal);
  strip_nyquist(out.principal);
  out.total = curl(out.principal);
  out.total *= 1.0 / lambda;
  out.corrector = out.total - out.principal;
  out.corrector_direct = to_spectral(direct);
  strip_nyquist(out.corrector_direct);
  out.osc_argument = to_spectral(osc);
  strip_nyquist(out.osc_argument);
  out.p_osc = to_spectral(p_osc);
  strip_nyquist(out.p_osc);
  remove_mean(out.p_osc);
  const double ref = l2_norm(out.total);
  out.corrector_gap = ref > 0 ? l2_norm(out.corrector_direct - out.corrector) / ref : 0.0;
  return out;
}

const std::array<std::string, kStressParts>& stress_part_names() {
  static const std::array<std::string, kStressParts> names{"R_lin", "R_trans", "R_Nash", "R_osc",
                                                           "R_corr", "R_com1", "R_com2"};
  return names;
}

namespace {

double mean_magnitude(const std::array<double, 3>& m) { return std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]); }

/// R applied after projecting out the mean, which is returned in `removed`.
SymTensorField inverse_divergence_centered(SpectralVectorField arg, double& removed) {
  removed = mean_magnitude(remove_mean(arg));
  return inverse_divergence(arg);
}

struct PerSample {
  PerturbationParts parts;
  double amplitude_residual = 0, domain_margin = 0;
  std::vector<int> windows;
};

}  // namespace

int admissible_window(const TimePartition& part, double t_lo, double t_hi, double range_lo, double range_hi) {
  for (int j = part.first; j <= part.last; ++j) {
    if (part.start(j) >= t_lo && part.end(j) <= t_hi && part.start(j) >= range_lo && part.end(j) <= range_hi)
      return j;
  }
  throw Error("convex_integration", "no admissible bifurcation window inside the interval");
}

StepResult iterate_from(const IterationState& state, MollifiedState mollified, FlowCache& flows,
                        const TruncatedNoise& z_next, const Schedule& schedule, const BeltramiSystem& sys,
                        const StepOptions& options) {
  const int q = state.q;
  if (z_next.q != q + 1) throw Error("convex_integration", "noise level does not match q+1");
  const int n = state.n;
  const double dt = state.dt;
  const TimePartition& part = flows.partition();
  const int lambda = realized_lambda(sys, n, options.lambda);
  const int reach = mollified.time.reach();
  const int first_next = state.first + reach + static_cast<int>(std::ceil(2.0 * part.m / dt)) + 2;
  const int last_next = state.last() - 1;
  if (first_next > last_next)
    throw ResourceError("convex_integration", "time range too short for level " + std::to_string(q + 1));
  if (last_next + 1 >= z_next.path->count) throw ResourceError("convex_integration", "noise path too short");

  StepResult res;
  StepDiagnostics& diag = res.diag;
  diag.q = q;
  diag.lambda_used = lambda;
  diag.lambda_schedule = schedule.lambda.at(q + 1);
  diag.lambda_substituted = static_cast<std::uint64_t>(lambda) != diag.lambda_schedule;
  diag.space_rescaled = mollified.space.rescaled;
  diag.time_rescaled = mollified.time.rescaled;
  diag.space_width = mollified.space.width;
  diag.time_width = mollified.time.width;
  diag.m_used = part.m;
  diag.m_requested = part.requested;
  diag.m_rescaled = part.rescaled;
  diag.c_star = sys.c_star;

  const double ell = schedule.ell.at(q);
  const double delta_next = schedule.delta.at(q + 1);

  // Perturbation on [first_next - 1, last_next + 1] for centered time differences.
  const int pf = first_next - 1, pl = last_next + 1;
  std::vector<PerSample> per(static_cast<std::size_t>(pl - pf + 1));
  parallel_for(per.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = pf + static_cast<int>(k);
      const double t = state.time(i);
      std::vector<WindowFlow> wins;
      std::vector<std::shared_ptr<const FlowMap>> keep;
      for (int j : part.active(t)) {
        const double eta = part.eta(j, t);
        if (eta == 0) continue;
        keep.push_back(flows.get(j, i));
        wins.push_back({j, eta, keep.back().get()});
      }
      const AmplitudeSet amps =
          amplitude_fields(mollified.R[mollified.slot(i)], ell, delta_next, sys, wins, options.flip_window);
      PerSample& ps = per[k];
      ps.parts = build_perturbation(amps, wins, sys, lambda);
      ps.parts.corrector_direct = {};
      ps.amplitude_residual = amps.identity_residual;
      ps.domain_margin = amps.domain_margin;
      for (const auto& w : wins) ps.windows.push_back(w.window);
    }
  });
  auto at = [&](int i) -> const PerSample& { return per[static_cast<std::size_t>(i - pf)]; };

  IterationState& next = res.next;
  next.q = q + 1;
  next.n = n;
  next.t0 = state.t0;
  next.dt = dt;
  next.first = first_next;
  const auto count = static_cast<std::size_t>(last_next - first_next + 1);
  next.v.resize(count);
  next.R.resize(count);
  next.p.resize(count);
  next.z.resize(count);
  res.principal.resize(count);
  res.omega.resize(count);
  diag.samples.resize(count);
  std::optional<StressBreakdown> snapshot;

  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = first_next + static_cast<int>(k);
      const PerSample& cur = at(i);
      const PerturbationParts& P = cur.parts;
      const std::size_t mo = mollified.slot(i);
      const SpectralVectorField u_ell = mollified.v[mo] + mollified.z[mo];
      SpectralVectorField z_new = z_next.field(i);
      strip_nyquist(z_new);
      const SpectralVectorField d = z_new - mollified.z[mo];
      SampleDiagnostics& sd = diag.samples[k];
      sd.sample = i;
      sd.windows = cur.windows;
      sd.amplitude_residual = cur.amplitude_residual;
      sd.domain_margin = cur.domain_margin;
      sd.corrector_gap = P.corrector_gap;
      sd.omega_divergence = divergence_defect(P.total);
      sd.omega_mean = mean_magnitude(mean(P.total));
      sd.principal_c0 = c0_norm(P.principal);
      sd.corrector_c0 = c0_norm(P.corrector);

      std::array<SymTensorField, kStressParts> parts;
      // linear
      if (options.nu != 0) {
        SpectralVectorField lin = fractional_laplacian(P.total, options.alpha);
        lin *= options.nu;
        parts[kLin] = inverse_divergence_centered(lin, sd.mean_removed[kLin]);
      } else {
        parts[kLin] = SymTensorField(n);
      }
      // transport of the principal part
      SpectralVectorField dtp = at(i + 1).parts.principal - at(i - 1).parts.principal;
      dtp *= 1.0 / (2.0 * dt);
      parts[kTrans] = inverse_divergence_centered(dtp + advect(u_ell, P.principal), sd.mean_removed[kTrans]);
      // Nash
      parts[kNash] = inverse_divergence_centered(advect(P.total, u_ell), sd.mean_removed[kNash]);
      // oscillation
      parts[kOsc] = inverse_divergence_centered(P.osc_argument, sd.mean_removed[kOsc]);
      if (options.osc_sign != 1.0) parts[kOsc] *= options.osc_sign;
      // corrector
      SpectralVectorField dtc = at(i + 1).parts.corrector - at(i - 1).parts.corrector;
      dtc *= 1.0 / (2.0 * dt);
      parts[kCorr] = inverse_divergence_centered(dtc + advect(u_ell, P.corrector), sd.mean_removed[kCorr]);
      SymTensorField cross = sym_outer(P.principal, P.corrector);
      cross *= 2.0;
      cross += sym_outer(P.corrector, P.corrector);
      parts[kCorr] += trace_free(cross);
      // first commutator
      parts[kCom1] = mollified.com1[mo];
      // second commutator
      SpectralVectorField v_new = mollified.v[mo] + P.total;
      SymTensorField noise_terms = sym_outer(v_new, d);
      noise_terms *= 2.0;
      noise_terms += sym_outer(z_new, z_new);
      noise_terms -= sym_outer(mollified.z[mo], mollified.z[mo]);
      parts[kCom2] = trace_free(noise_terms);
      double d_mean = 0;
      SymTensorField Rd = inverse_divergence_centered(d, d_mean);
      sd.mean_removed[kCom2] = d_mean;
      parts[kCom2].axpy(options.com2_sign, Rd);

      SymTensorField R_new = parts[0];
      for (int c = 1; c < kStressParts; ++c) R_new += parts[c];

      SpectralScalarField p_corr = dot(P.principal, P.corrector);
      p_corr *= 2.0;
      p_corr += dot(P.corrector, P.corrector);
      p_corr *= 1.0 / 3.0;
      SpectralScalarField p_com2 = dot(v_new, d);
      p_com2 *= 2.0;
      p_com2 += dot(z_new, z_new);
      p_com2 -= dot(mollified.z[mo], mollified.z[mo]);
      p_com2 *= 1.0 / 3.0;
      SpectralScalarField p_new = mollified.p[mo] - P.p_osc - p_corr - p_com2;
      remove_mean(p_new);

      for (int c = 0; c < kStressParts; ++c) {
        sd.c0[c] = c0_norm(parts[c]);
        sd.l2[c] = l2_norm(parts[c]);
      }
      if (i == options.snapshot_sample) {
        StressBreakdown sb;
        sb.sample = i;
        sb.parts = parts;
        sb.p_ell = mollified.p[mo];
        sb.p_osc = P.p_osc;
        sb.p_corr = p_corr;
        sb.p_com2 = p_com2;
        snapshot = std::move(sb);
      }
      next.v[k] = std::move(v_new);
      next.R[k] = std::move(R_new);
      next.p[k] = std::move(p_new);
      next.z[k] = std::move(z_new);
      res.principal[k] = P.principal;
      res.omega[k] = P.total;
    }
  });
  res.snapshot = std::move(snapshot);
  res.mollified = std::move(mollified);

  diag.flows_solved = flows.size();
  return res;
}

namespace {

VelocityPath mollified_velocity(const IterationState& state, const MollifiedState& m) {
  VelocityPath u;
  u.t0 = state.t0;
  u.dt = state.dt;
  u.begin = m.first;
  u.samples.reserve(static_cast<std::size_t>(m.count()));
  for (int i = m.first; i <= m.last(); ++i) u.samples.push_back(m.velocity(i));
  return u;
}

void deformation_diagnostics(StepDiagnostics& diag, FlowCache& flows, const VelocityPath& u) {
  for (const auto& f : flows.solved()) {
    const DeformationReport r = deformation_report(*f, u, flows.partition().m);
    diag.max_deformation = std::max(diag.max_deformation, r.sup_deviation);
    diag.deformation_bound = std::max(diag.deformation_bound, r.bound);
    diag.deformation_violated = diag.deformation_violated || r.violated;
  }
}

}  // namespace

StepResult iterate(const IterationState& state, const TruncatedNoise& z_next, const Schedule& schedule,
                   const BeltramiSystem& sys, const StepOptions& options) {
  MollifiedState m = mollify_state(state, schedule);
  const VelocityPath u = mollified_velocity(state, m);
  FlowCache flows(u, build_time_partition(schedule, state.q, 0, state.dt));
  StepResult r = iterate_from(state, std::move(m), flows, z_next, schedule, sys, options);
  deformation_diagnostics(r.diag, flows, u);
  return r;
}

Bifurcation bifurcate(const IterationState& state, const TruncatedNoise& z_next, const Schedule& schedule,
                      const BeltramiSystem& sys, const StepOptions& options, double t_lo, double t_hi) {
  MollifiedState m = mollify_state(state, schedule);
  const VelocityPath u = mollified_velocity(state, m);
  FlowCache flows(u, build_time_partition(schedule, state.q, 0, state.dt));
  const TimePartition& part = flows.partition();
  const int reach = m.time.reach();
  const int first_next = state.first + reach + static_cast<int>(std::ceil(2.0 * part.m / state.dt)) + 2;
  const int last_next = state.last() - 1;
  Bifurcation out;
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  if (t_hi - t_lo < 3 * part.m) throw Error("convex_integration", "bifurcation interval shorter than 3 m_q");
  out.window = admissible_window(part, t_lo, t_hi, state.time(first_next + 1), state.time(last_next - 1));
  StepOptions flip = options;
  flip.flip_window = out.window;
  out.base = iterate_from(state, m, flows, z_next, schedule, sys, options);
  out.flipped = iterate_from(state, std::move(m), flows, z_next, schedule, sys, flip);
  deformation_diagnostics(out.base.diag, flows, u);
  out.flipped.diag.max_deformation = out.base.diag.max_deformation;
  out.flipped.diag.deformation_bound = out.base.diag.deformation_bound;
  out.flipped.diag.deformation_violated = out.base.diag.deformation_violated;
  return out;
}

}  // namespace cit

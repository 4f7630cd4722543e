#include "cit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cit/error.hpp"
#include "cit/parallel.hpp"
#include "cit/rng.hpp"

namespace cit {
namespace {

double norm2(const std::array<int, 3>& k) {
  return double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
}

std::uint32_t encode_mode(const std::array<int, 3>& k) {
  auto enc = [](int v) { return static_cast<std::uint32_t>(v + 512) & 0x3ffu; };
  return (enc(k[0]) << 20) | (enc(k[1]) << 10) | enc(k[2]);
}

bool upper_half(const std::array<int, 3>& k) {
  if (k[2] != 0) return k[2] > 0;
  if (k[1] != 0) return k[1] > 0;
  return k[0] > 0;
}

std::array<std::array<double, 3>, 2> transverse_basis(const std::array<int, 3>& k) {
  const double len = std::sqrt(norm2(k));
  const std::array<double, 3> kh{k[0] / len, k[1] / len, k[2] / len};
  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(k[d]) < std::abs(k[axis])) axis = d;
  std::array<double, 3> e{};
  e[axis] = 1.0;
  std::array<double, 3> e1{kh[1] * e[2] - kh[2] * e[1], kh[2] * e[0] - kh[0] * e[2], kh[0] * e[1] - kh[1] * e[0]};
  const double l1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& x : e1) x /= l1;
  const std::array<double, 3> e2{kh[1] * e1[2] - kh[2] * e1[1], kh[2] * e1[0] - kh[0] * e1[2],
                                 kh[0] * e1[1] - kh[1] * e1[0]};
  return {e1, e2};
}

}  // namespace

double covariance_eigenvalue(const CovarianceSpec& spec, const std::array<int, 3>& k) {
  return spec.amplitude * std::pow(1.0 + norm2(k), -spec.decay_s / 2.0);
}

double ou_rate(const std::array<int, 3>& k, double nu, double alpha) {
  return nu * std::pow(norm2(k), alpha) + 1.0;
}

double stationary_variance(const CovarianceSpec& spec, const std::array<int, 3>& k, double nu, double alpha) {
  return covariance_eigenvalue(spec, k) / (2.0 * ou_rate(k, nu, alpha));
}

TraceCheck trace_condition(const CovarianceSpec& spec, double alpha) {
  TraceCheck out;
  const double expo = 3.0 + 2.0 * spec.sigma_reg - 2.0 * alpha;
  const int cut = static_cast<int>(std::floor(spec.mode_cut));
  for (int a = -cut; a <= cut; ++a)
    for (int b = -cut; b <= cut; ++b)
      for (int c = -cut; c <= cut; ++c) {
        const std::array<int, 3> k{a, b, c};
        const double r2 = norm2(k);
        if (r2 == 0 || r2 > spec.mode_cut * spec.mode_cut) continue;
        out.partial_sum += covariance_eigenvalue(spec, k) * std::pow(r2, expo / 2.0);
      }
  // Lattice points with |k| > K lie in cubes inside |x| > K - sqrt(3)/2.
  out.finite = spec.decay_s > 3.0 + expo;
  if (out.finite) {
    const double start = std::max(1.0, spec.mode_cut - std::sqrt(3.0) / 2.0);
    const double gap = spec.decay_s - 3.0 - expo;
    out.tail_bound = 4.0 * std::numbers::pi * spec.amplitude * std::pow(start, -gap) / gap *
                     std::pow(1.0 + std::sqrt(3.0) / start, spec.decay_s);
  } else {
    out.tail_bound = INFINITY;
  }
  return out;
}

SpectralVectorField NoisePath::field(int i) const {
  if (i < 0 || i >= count) throw Error("noise", "sample index " + std::to_string(i) + " outside the path");
  const TorusGrid g(n);
  SpectralVectorField out(n);
  const auto& x = coords[static_cast<std::size_t>(i)];
  const int h = g.half();
  auto flat = [&](int k0, int k1, int k2) {
    return (std::size_t((k0 + n) % n) * n + std::size_t((k1 + n) % n)) * h + std::size_t(k2);
  };
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& md = modes[m];
    const cplx w0(x[4 * m + 0], x[4 * m + 1]);
    const cplx w1(x[4 * m + 2], x[4 * m + 3]);
    const std::size_t at = flat(md.k[0], md.k[1], md.k[2]);
    for (int a = 0; a < 3; ++a) {
      const cplx val = w0 * md.pol[0][a] + w1 * md.pol[1][a];
      out.c[a][at] = val;
      if (md.k[2] == 0) out.c[a][flat(-md.k[0], -md.k[1], 0)] = std::conj(val);
    }
  }
  return out;
}

NoisePath sample_ou_path(const CovarianceSpec& spec, double nu, double alpha, int n, double t0, double t1, double dt,
                         const NoiseStreams& streams) {
  if (!(dt > 0)) throw Error("noise", "time step must be positive");
  if (t1 < t0) throw Error("noise", "empty time interval");
  const TorusGrid g(n);
  if (spec.mode_cut >= n / 2) throw Error("noise", "mode_cut exceeds the grid (must be below n/2)");
  NoisePath path;
  path.n = n;
  path.t0 = t0;
  path.dt = dt;
  path.count = static_cast<int>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
  path.streams = streams;
  path.spec = spec;

  const int cut = static_cast<int>(std::floor(spec.mode_cut));
  for (int a = -cut; a <= cut; ++a)
    for (int b = -cut; b <= cut; ++b)
      for (int c = 0; c <= cut; ++c) {
        const std::array<int, 3> k{a, b, c};
        const double r2 = norm2(k);
        if (r2 == 0 || r2 > spec.mode_cut * spec.mode_cut || !upper_half(k)) continue;
        NoiseMode md;
        md.k = k;
        md.pol = transverse_basis(k);
        md.c = covariance_eigenvalue(spec, k);
        md.rate = ou_rate(k, nu, alpha);
        path.modes.push_back(md);
      }

  const std::size_t nm = path.modes.size();
  path.coords.assign(static_cast<std::size_t>(path.count), std::vector<double>(4 * nm, 0.0));
  if (spec.amplitude == 0) return path;

  parallel_for(nm, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const auto& md = path.modes[m];
      const double var = md.c / (2.0 * md.rate);
      const double decay = std::exp(-md.rate * dt);
      const double kick = std::sqrt(var * -std::expm1(-2.0 * md.rate * dt));
      const std::uint32_t stream = encode_mode(md.k);
      for (std::uint32_t lane = 0; lane < 4; ++lane) {
        StreamKey key{streams.seed_for(0), stream, lane, 0, 0};
        double x = std::sqrt(var) * normal_draw(key);
        path.coords[0][4 * m + lane] = x;
        for (int s = 1; s < path.count; ++s) {
          key.seed = streams.seed_for(s);
          key.step = static_cast<std::uint32_t>(s);
          x = x * decay + kick * normal_draw(key);
          path.coords[static_cast<std::size_t>(s)][4 * m + lane] = x;
        }
      }
    }
  });
  return path;
}

SpectralVectorField TruncatedNoise::filtered(int i) const { return low_pass(path->field(i), f_cut, norm); }

SpectralVectorField TruncatedNoise::field(int i) const {
  SpectralVectorField z = filtered(i);
  z *= factor.at(static_cast<std::size_t>(i));
  return z;
}

TruncatedNoise truncate_cutoff(const NoisePath& path, const Schedule& schedule, int q, FreqNorm norm) {
  if (q < 0 || q >= schedule.levels()) throw Error("noise", "level " + std::to_string(q) + " outside the schedule");
  TruncatedNoise t;
  t.path = &path;
  t.q = q;
  t.f_cut = static_cast<double>(schedule.f_cut[q]);
  t.norm = norm;
  t.chi = {schedule.cutoff_c0[q].first, schedule.cutoff_c0[q].second};
  t.chi_tilde = {schedule.cutoff_c1[q].first, schedule.cutoff_c1[q].second};
  if (t.chi.max_slope() > 1.0 || t.chi_tilde.max_slope() > 1.0) {
    if (!schedule.params.desk_mode)
      throw Error("noise", "cutoff slope bound unsatisfiable at level q=" + std::to_string(q));
    t.slope_relaxed = true;
  }
  const auto count = static_cast<std::size_t>(path.count);
  t.c0.assign(count, 0);
  t.c1.assign(count, 0);
  t.factor.assign(count, 0);
  t.zq_c0.assign(count, 0);
  t.zq_c1.assign(count, 0);
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SpectralVectorField z = t.filtered(static_cast<int>(i));
      t.c0[i] = c0_norm(z);
      t.c1[i] = c1_norm(z);
      t.factor[i] = t.chi(t.c0[i]) * t.chi_tilde(t.c1[i]);
      t.zq_c0[i] = t.factor[i] * t.c0[i];
      t.zq_c1[i] = t.factor[i] * t.c1[i];
    }
  });
  return t;
}

MollifiedNoise mollify_noise(const TruncatedNoise& trunc, const SpatialMollifier& space, const TemporalMollifier& time,
                             int begin, int end) {
  if (begin - time.reach() < 0)
    throw Error("noise", "mollifier window exceeds the path history at sample " + std::to_string(begin));
  if (end > trunc.path->count || end < begin) throw Error("noise", "sample range outside the path");
  MollifiedNoise out;
  out.begin = begin;
  out.space = space;
  out.time = time;
  const int first = begin - time.reach();
  std::vector<SpectralVectorField> smooth(static_cast<std::size_t>(end - first));
  parallel_for(smooth.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) smooth[i] = space.apply(trunc.field(first + static_cast<int>(i)));
  });
  out.samples.resize(static_cast<std::size_t>(end - begin));
  parallel_for(out.samples.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const int at = begin + static_cast<int>(i);
      SpectralVectorField acc(trunc.path->n);
      for (int m = 1; m <= time.reach(); ++m) acc.axpy(time.weights[m - 1], smooth[static_cast<std::size_t>(at - m - first)]);
      out.samples[i] = std::move(acc);
    }
  });
  return out;
}

MollifiedNoise mollify_noise(const TruncatedNoise& trunc, const Schedule& schedule, int q, int begin, int end) {
  const bool desk = schedule.params.desk_mode;
  return mollify_noise(trunc, make_spatial_mollifier(trunc.path->n, schedule.ell.at(q), desk),
                       make_temporal_mollifier(trunc.path->dt, schedule.ell.at(q), desk), begin, end);
}

MomentEstimate moment_estimator(const std::vector<std::vector<double>>& values, const std::vector<double>& times,
                                double p, const std::string& norm_kind, int q, int bootstrap, std::uint64_t seed) {
  if (values.empty()) throw Error("noise", "empty ensemble");
  if (!(p >= 1)) throw Error("noise", "moment order must be at least 1");
  const std::size_t ns = times.size();
  for (const auto& v : values)
    if (v.size() != ns) throw Error("noise", "replica length does not match the time grid");
  if (ns == 0) throw Error("noise", "empty time grid");

  // Window starts whose unit window fits; the whole range when none does.
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  for (std::size_t s = 0; s < ns; ++s) {
    if (times[s] + 1.0 > times.back() + 1e-9) break;
    std::size_t e = s;
    while (e + 1 < ns && times[e + 1] <= times[s] + 1.0 + 1e-9) ++e;
    windows.emplace_back(s, e);
  }
  if (windows.empty()) windows.emplace_back(0, ns - 1);

  const std::size_t nr = values.size();
  std::vector<std::vector<double>> sup_pow(windows.size(), std::vector<double>(nr));
  for (std::size_t w = 0; w < windows.size(); ++w)
    for (std::size_t r = 0; r < nr; ++r) {
      double s = 0;
      for (std::size_t i = windows[w].first; i <= windows[w].second; ++i) s = std::max(s, std::abs(values[r][i]));
      sup_pow[w][r] = std::pow(s, p);
    }

  auto estimate = [&](const std::vector<std::size_t>& pick) {
    double best = 0;
    for (const auto& row : sup_pow) {
      double acc = 0;
      for (std::size_t r : pick) acc += row[r];
      best = std::max(best, acc / static_cast<double>(pick.size()));
    }
    return std::pow(best, 1.0 / p);
  };

  MomentEstimate out;
  out.q = q;
  out.p = p;
  out.norm_kind = norm_kind;
  out.n_samples = static_cast<int>(nr);
  std::vector<std::size_t> all(nr);
  for (std::size_t r = 0; r < nr; ++r) all[r] = r;
  out.estimate = estimate(all);
  out.ci_lo = out.ci_hi = out.estimate;
  if (nr < 2 || bootstrap < 2) return out;

  std::vector<double> boot(static_cast<std::size_t>(bootstrap));
  std::vector<std::size_t> pick(nr);
  for (int b = 0; b < bootstrap; ++b) {
    for (std::size_t r = 0; r < nr; ++r) {
      const double u = uniform_draw({seed, static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(r), 0, 7});
      pick[r] = std::min(nr - 1, static_cast<std::size_t>(u * static_cast<double>(nr)));
    }
    boot[static_cast<std::size_t>(b)] = estimate(pick);
  }
  std::sort(boot.begin(), boot.end());
  auto quantile = [&](double f) {
    const double pos = f * (boot.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(boot.size() - 1, lo + 1);
    return boot[lo] + (pos - lo) * (boot[hi] - boot[lo]);
  };
  out.ci_lo = std::min(quantile(0.025), out.estimate);
  out.ci_hi = std::max(quantile(0.975), out.estimate);
  return out;
}

double time_holder_estimate(int count, double dt, double gamma, const std::function<double(int, int)>& dist) {
  double best = 0;
  for (int lag = 1; lag < count; lag *= 2)
    for (int i = 0; i + lag < count; ++i) best = std::max(best, dist(i, i + lag) / std::pow(lag * dt, gamma));
  return best;
}

}  // namespace cit

#include "cit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cit/error.hpp"
#include "cit/noise.hpp"
#include "cit/parallel.hpp"
#include "cit/spectral.hpp"

namespace cit {

namespace {

SpectralVectorField time_derivative(const IterationState& s, int i) {
  SpectralVectorField d = s.v_at(i + 1) - s.v_at(i - 1);
  d *= 1.0 / (2.0 * s.dt);
  return d;
}

/// d_t v + nu (-Lap)^alpha v + div(u (x) u) - z, with u = v + z.
SpectralVectorField stress_free_residual(const IterationState& s, int i, double nu, double alpha) {
  const SpectralVectorField& v = s.v_at(i);
  const SpectralVectorField u = v + s.z_at(i);
  SpectralVectorField r = time_derivative(s, i);
  if (nu != 0) r.axpy(nu, fractional_laplacian(v, alpha));
  r += divergence(sym_outer(u, u));
  r -= s.z_at(i);
  return r;
}

SpectralVectorField stress_side(const IterationState& s, int i) {
  return divergence(s.R_at(i)) - gradient(s.p_at(i));
}

void require_interior(const IterationState& s) {
  if (s.count() < 3) throw Error("verify", "residual needs at least 3 time samples");
}

}  // namespace

ResidualReport pde_residual(const IterationState& state, double nu, double alpha, bool keep_fields) {
  require_interior(state);
  ResidualReport rep;
  rep.first = state.first + 1;
  const auto count = static_cast<std::size_t>(state.count() - 2);
  rep.norms.resize(count);
  if (keep_fields) rep.residual.resize(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = rep.first + static_cast<int>(k);
      SpectralVectorField r = stress_free_residual(state, i, nu, alpha) - stress_side(state, i);
      rep.norms[k] = {i, state.time(i), c0_norm(r), l2_norm(r)};
      if (keep_fields) rep.residual[k] = std::move(r);
    }
  });
  for (const auto& n : rep.norms) {
    rep.max_c0 = std::max(rep.max_c0, n.c0);
    rep.max_l2 = std::max(rep.max_l2, n.l2);
  }
  return rep;
}

ConsistencyReport master_consistency(const IterationState& state, double nu, double alpha) {
  require_interior(state);
  ConsistencyReport rep;
  const auto count = static_cast<std::size_t>(state.count() - 2);
  rep.samples.resize(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = state.first + 1 + static_cast<int>(k);
      const SpectralVectorField lhs = stress_free_residual(state, i, nu, alpha);
      const SpectralVectorField rhs = stress_side(state, i);
      ConsistencySample& c = rep.samples[k];
      c.sample = i;
      c.residual = l2_norm(lhs - rhs);
      c.reference = l2_norm(rhs);
      c.gap = c.reference > 0 ? c.residual / c.reference : c.residual;
    }
  });
  for (const auto& c : rep.samples) rep.max_gap = std::max(rep.max_gap, c.gap);
  return rep;
}

// ------------------------------------------------------ inductive quantities

namespace {

struct Overlap {
  int lo, hi;
};

Overlap common_samples(const IterationState& a, const IterationState& b) {
  return {std::max(a.first, b.first), std::min(a.last(), b.last())};
}

double sup_of(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, x);
  return m;
}

std::vector<double> times_of(const LevelSeries& s, int first, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = s.t0 + (first + static_cast<int>(k)) * s.dt;
  return t;
}

}  // namespace

std::vector<LevelSeries> level_series(const std::vector<const IterationState*>& levels) {
  std::vector<LevelSeries> out;
  for (std::size_t level = 0; level < levels.size(); ++level) {
    const IterationState& s = *levels[level];
    LevelSeries ls;
    ls.q = s.q;
    ls.t0 = s.t0;
    ls.dt = s.dt;
    ls.first = s.first;
    const auto count = static_cast<std::size_t>(s.count());
    ls.v_c0.resize(count);
    ls.R_c0.resize(count);
    std::vector<double> c1(count);
    parallel_for(count, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const int i = s.first + static_cast<int>(k);
        ls.v_c0[k] = c0_norm(s.v_at(i));
        ls.R_c0[k] = c0_norm(s.R_at(i));
        double dt_sup = 0;
        if (s.count() >= 3) {
          // C1 in space and time: spatial C1 plus the centered time derivative.
          const int c = std::clamp(i, s.first + 1, s.last() - 1);
          SpectralVectorField d = s.v_at(c + 1) - s.v_at(c - 1);
          d *= 1.0 / (2 * s.dt);
          dt_sup = c0_norm(d);
        }
        c1[k] = c1_norm(s.v_at(i)) + dt_sup;
      }
    });
    ls.v_c1 = sup_of(c1);
    if (level == 0) {
      ls.increment_first = s.first;
      ls.increment_c0 = ls.v_c0;
    } else {
      const IterationState& prev = *levels[level - 1];
      const Overlap o = common_samples(prev, s);
      if (o.lo > o.hi) throw Error("verify", "consecutive levels share no samples");
      ls.increment_first = o.lo;
      ls.increment_c0.resize(static_cast<std::size_t>(o.hi - o.lo + 1));
      parallel_for(ls.increment_c0.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
          const int i = o.lo + static_cast<int>(k);
          ls.increment_c0[k] = c0_norm(s.v_at(i) - prev.v_at(i));
        }
      });
    }
    out.push_back(std::move(ls));
  }
  return out;
}

InductiveReport inductive_quantities(const std::vector<std::vector<LevelSeries>>& series, const Schedule& schedule,
                                     int bootstrap, std::uint64_t seed) {
  InductiveReport rep;
  if (series.empty() || series[0].empty()) return rep;
  const std::size_t depth = series[0].size();
  for (const auto& l : series)
    if (l.size() != depth) throw Error("verify", "replicas carry different numbers of levels");
  const double r = schedule.params.r;

  auto add = [&](int q, const char* name, double value, double bound, double lo, double hi) {
    rep.rows.push_back({q, name, value, bound, bound != 0 ? value / bound : std::numeric_limits<double>::infinity(),
                        lo, hi});
  };
  auto gather = [&](std::size_t level, auto member) {
    std::vector<std::vector<double>> v;
    for (const auto& l : series) {
      const LevelSeries& x = l[level];
      if ((x.*member).size() != (series[0][level].*member).size() || x.first != series[0][level].first)
        throw Error("verify", "replicas disagree on samples");
      v.push_back(x.*member);
    }
    return v;
  };

  for (std::size_t level = 0; level < depth; ++level) {
    const LevelSeries& s = series[0][level];
    const int q = s.q;
    const double lam = schedule.lambda_d(q);
    const double dq = schedule.delta.at(q);
    const double dq1 = schedule.delta.at(q + 1);
    const auto v_c0 = gather(level, &LevelSeries::v_c0);
    const auto R_c0 = gather(level, &LevelSeries::R_c0);
    const auto inc = gather(level, &LevelSeries::increment_c0);
    const auto times = times_of(s, s.first, s.v_c0.size());
    const auto inc_times = times_of(s, s.increment_first, s.increment_c0.size());

    const double v_sup = sup_of(s.v_c0);
    add(q, "v_C0", v_sup, std::cbrt(lam), v_sup, v_sup);
    add(q, "v_C1", s.v_c1, std::pow(lam, 1.4) * std::sqrt(dq), s.v_c1, s.v_c1);
    const MomentEstimate vm = moment_estimator(v_c0, times, 2 * r, "C0", q, bootstrap, seed);
    add(q, "v_moment_2r", vm.estimate, 1 - std::sqrt(dq), vm.ci_lo, vm.ci_hi);
    const double R_sup = sup_of(s.R_c0);
    add(q, "R_C0", R_sup, std::cbrt(lam) * std::cbrt(lam), R_sup, R_sup);
    const MomentEstimate Rm = moment_estimator(R_c0, times, r, "C0", q, bootstrap, seed + 1);
    add(q, "R_moment_r", Rm.estimate, dq1, Rm.ci_lo, Rm.ci_hi);
    const MomentEstimate im = moment_estimator(inc, inc_times, 2 * r, "C0", q, bootstrap, seed + 2);
    add(q, "increment_moment_2r", im.estimate, std::sqrt(dq), im.ci_lo, im.ci_hi);
  }
  return rep;
}

InductiveReport inductive_quantities(const std::vector<std::vector<const IterationState*>>& levels,
                                     const Schedule& schedule, int bootstrap, std::uint64_t seed) {
  std::vector<std::vector<LevelSeries>> series;
  for (const auto& l : levels) series.push_back(level_series(l));
  return inductive_quantities(series, schedule, bootstrap, seed);
}

void InductiveReport::write_csv(std::ostream& os) const {
  os << "q,quantity,value,bound,ratio,ci_lo,ci_hi\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.q << ',' << r.quantity << ',' << r.value << ',' << r.bound << ',' << r.ratio << ',' << r.ci_lo << ','
       << r.ci_hi << '\n';
}

// --------------------------------------------------- oscillation cancellation

CancellationReport oscillation_cancellation(const SpectralVectorField& principal, const SymTensorField& R_ell,
                                            int lambda, int q, bool identity_mode, double tolerance) {
  CancellationReport rep;
  rep.q = q;
  rep.identity_mode = identity_mode;
  rep.cutoff = lambda / 5.0;
  SymTensorField t = trace_free(sym_outer(principal, principal));
  t += R_ell;
  rep.low_pass = c0_norm(low_pass(t, rep.cutoff));
  rep.reference = c0_norm(R_ell);
  if (rep.reference == 0) {
    const double w = c0_norm(principal);
    rep.reference = w * w;
  }
  rep.ratio = rep.reference > 0 ? rep.low_pass / rep.reference : rep.low_pass;
  rep.passed = !identity_mode || rep.ratio <= tolerance;
  return rep;
}

// ------------------------------------------------------ increment convergence

IncrementReport increment_convergence(const std::vector<const IterationState*>& states, double theta) {
  if (states.size() < 2) throw Error("verify", "increment table needs at least two states");
  if (!(theta > 0 && theta < 1)) throw Error("verify", "theta must lie in (0, 1)");
  IncrementReport rep;
  rep.theta = theta;
  HolderOptions ho;
  ho.theta = theta;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const IterationState& a = *states[k];
    const IterationState& b = *states[k + 1];
    const Overlap o = common_samples(a, b);
    if (o.lo > o.hi) throw Error("verify", "consecutive levels share no samples");
    const auto count = static_cast<std::size_t>(o.hi - o.lo + 1);
    std::vector<IncrementRow> per(count);
    parallel_for(count, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        const int i = o.lo + static_cast<int>(j);
        const SpectralVectorField d = b.v_at(i) - a.v_at(i);
        const GridVector g = to_physical(d);
        IncrementRow& r = per[j];
        r.c0 = c0_norm(g);
        r.c1 = c1_norm(d);
        r.holder = std::max(r.c0, holder_seminorm(g, ho));
        const double denom = std::pow(r.c0, 1 - theta) * std::pow(r.c1, theta);
        r.interpolation = denom > 0 ? r.holder / denom : 0.0;
      }
    });
    IncrementRow row;
    row.q = a.q;
    for (const auto& r : per) {
      row.c0 = std::max(row.c0, r.c0);
      row.c1 = std::max(row.c1, r.c1);
      row.holder = std::max(row.holder, r.holder);
      row.interpolation = std::max(row.interpolation, r.interpolation);
    }
    row.interpolation_ok = row.interpolation <= 2.0;
    rep.rows.push_back(row);
  }
  return rep;
}

void IncrementReport::write_csv(std::ostream& os) const {
  os << "q,c0,c1,holder,theta,interpolation,interpolation_ok\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.q << ',' << r.c0 << ',' << r.c1 << ',' << r.holder << ',' << theta << ',' << r.interpolation << ','
       << (r.interpolation_ok ? 1 : 0) << '\n';
}

// ------------------------------------------------------------ ergodic average

const char* observable_name(Observable o) {
  switch (o) {
    case Observable::energy: return "energy";
    case Observable::sup_norm: return "sup_norm";
    case Observable::low_modes: return "low_modes";
  }
  return "unknown";
}

std::vector<double> observable_path(const IterationState& state, Observable o, double mode_radius) {
  std::vector<double> out(static_cast<std::size_t>(state.count()));
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = state.first + static_cast<int>(k);
      const SpectralVectorField u = state.v_at(i) + state.z_at(i);
      switch (o) {
        case Observable::energy: {
          const double l2 = l2_norm(u);
          out[k] = 0.5 * l2 * l2;
          break;
        }
        case Observable::sup_norm: out[k] = c0_norm(u); break;
        case Observable::low_modes: {
          const double l2 = l2_norm(low_pass(u, mode_radius));
          out[k] = 0.5 * l2 * l2;
          break;
        }
      }
    }
  });
  return out;
}

ErgodicReport ergodic_average(const std::vector<double>& values, double dt, const std::vector<double>& horizons,
                              const std::string& observable, int shift) {
  if (dt <= 0) throw Error("verify", "time step must be positive");
  if (shift < 0) throw Error("verify", "shift must be non-negative");
  ErgodicReport rep;
  rep.observable = observable;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (double T : horizons) {
    const int count = static_cast<int>(std::floor(T / dt + 1e-9));
    if (count < 1) throw Error("verify", "horizon shorter than one time step");
    if (static_cast<std::size_t>(count + shift) > values.size())
      throw Error("verify", "horizon " + std::to_string(T) + " exceeds the path");
    ErgodicRow row;
    row.horizon = T;
    row.samples = count;
    double s = 0, ss = 0;
    for (int i = 0; i < count; ++i) {
      s += values[static_cast<std::size_t>(i)];
      ss += values[static_cast<std::size_t>(i + shift)];
    }
    row.average = s / count;
    row.shifted = ss / count;
    row.change = std::isnan(previous) ? 0.0 : std::abs(row.average - previous);
    previous = row.average;
    rep.rows.push_back(row);
  }
  return rep;
}

void ErgodicReport::write_csv(std::ostream& os) const {
  os << "observable,horizon,samples,average,shifted,change\n";
  os.precision(17);
  for (const auto& r : rows)
    os << observable << ',' << r.horizon << ',' << r.samples << ',' << r.average << ',' << r.shifted << ','
       << r.change << '\n';
}

}  // namespace cit

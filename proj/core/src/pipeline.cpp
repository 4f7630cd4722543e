#include "cit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "cit/error.hpp"
#include "cit/field_io.hpp"
#include "cit/parallel.hpp"
#include "cit/spectral.hpp"
#include "cit/verify.hpp"

namespace cit {

Sabotage parse_sabotage(const std::string& name) {
  if (name.empty() || name == "none") return Sabotage::none;
  if (name == "r_osc_sign") return Sabotage::r_osc_sign;
  if (name == "com2_sign") return Sabotage::com2_sign;
  throw ConfigError("unknown sabotage '" + name + "' (none, r_osc_sign, com2_sign)");
}

bool PipelineResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return !c.asserted || c.passed; });
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot write " + path.string());
  out.precision(17);
  return out;
}

void note(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

/// Noise path with its truncations; the truncations point into the path.
struct ReplicaNoise {
  NoisePath path;
  std::vector<TruncatedNoise> levels;
};

std::unique_ptr<ReplicaNoise> sample_noise(const RunConfig& c, const Schedule& schedule, std::uint64_t seed) {
  auto noise = std::make_unique<ReplicaNoise>();
  noise->path = sample_ou_path(c.noise, c.scheme.nu, c.scheme.alpha, c.n, 0.0, c.horizon, c.dt, NoiseStreams{seed});
  for (int q = 0; q <= c.scheme.q_max; ++q) noise->levels.push_back(truncate_cutoff(noise->path, schedule, q));
  return noise;
}

class Recorder {
 public:
  void add(std::string name, int q, bool asserted, bool passed, double value, double tolerance) {
    result.checks.push_back({std::move(name), q, asserted, passed, value, tolerance});
  }
  void bound(const std::string& name, int q, double value, double tolerance) {
    add(name, q, true, value <= tolerance, value, tolerance);
  }
  PipelineResult result;
};

double partition_deviation(const TimePartition& part) {
  double worst = 0;
  const int samples = 10000;
  for (int s = 0; s < samples; ++s) {
    const double t = part.k + (s + 0.5) / samples;
    double sum = 0;
    for (int j : part.active(t)) sum += part.eta(j, t) * part.eta(j, t);
    worst = std::max(worst, std::abs(sum - 1));
  }
  return worst;
}

/// Spatially constant part of a tensor field.
SymTensorField constant_part(const SymTensorField& R) {
  SymTensorField out(R.n);
  for (int c = 0; c < 6; ++c) out.c[c][0] = R.c[c][0];
  return out;
}

struct LevelRecord {
  int q = 0;
  StepDiagnostics diag;
};

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, Sabotage sabotage, std::ostream* log) {
  set_workers(config.workers);
  Schedule schedule;
  try {
    schedule = derive_schedule(config.scheme);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const BeltramiSystem sys = build_direction_sets(config.directions0, config.directions1);
  const int q_max = config.scheme.q_max;
  const double nu = config.scheme.nu, alpha = config.scheme.alpha;

  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream echo(dir / "config.resolved", std::ios::binary);
    if (!echo) throw Error("cli", "cannot write " + (dir / "config.resolved").string());
    echo << echo_config(config);
  }

  Recorder rec;
  auto consistency_csv = open_csv(dir / "consistency.csv");
  consistency_csv << "q,sample,time,gap,residual,reference\n";
  auto parts_csv = open_csv(dir / "stress_parts.csv");
  parts_csv << "q,sample,time,part,c0,l2,mean_removed\n";
  auto samples_csv = open_csv(dir / "samples.csv");
  samples_csv << "q,sample,time,amplitude_residual,domain_margin,corrector_gap,omega_divergence,omega_mean,"
                 "principal_c0,corrector_c0,windows\n";
  auto oscillation_csv = open_csv(dir / "oscillation.csv");
  oscillation_csv << "q,mode,sample,cutoff,low_pass,reference,ratio,passed\n";

  // Partition of unity, independent of the noise.
  if (config.check_enabled("partition")) {
    for (int q = 0; q <= q_max; ++q) {
      const TimePartition part = build_time_partition(schedule, q, 0, config.dt);
      rec.bound("partition of unity", q, partition_deviation(part), 1e-12);
    }
  }

  std::vector<std::vector<LevelSeries>> series;
  std::vector<LevelRecord> levels;
  std::unique_ptr<ReplicaNoise> noise0;
  std::vector<IterationState> states;  // replica 0

  for (int replica = 0; replica < config.ensemble; ++replica) {
    const bool primary = replica == 0;
    note(log, "replica " + std::to_string(replica) + ": sampling noise");
    auto noise = sample_noise(config, schedule, config.seed + static_cast<std::uint64_t>(replica));
    std::vector<IterationState> chain;
    chain.push_back(init_state(noise->levels[0]));

    auto record_consistency = [&](const IterationState& s) {
      if (!config.check_enabled("consistency")) return;
      const ConsistencyReport rep = master_consistency(s, nu, alpha);
      for (const auto& x : rep.samples)
        consistency_csv << s.q << ',' << x.sample << ',' << s.time(x.sample) << ',' << x.gap << ',' << x.residual
                        << ',' << x.reference << '\n';
      rec.bound("master consistency", s.q, rep.max_gap, 1e-5);
    };
    if (primary) record_consistency(chain[0]);

    for (int q = 0; q < q_max; ++q) {
      const IterationState& state = chain.back();
      StepOptions opt;
      opt.nu = nu;
      opt.alpha = alpha;
      opt.lambda = config.lambda;
      if (sabotage == Sabotage::com2_sign) opt.com2_sign = 1.0;
      if (sabotage == Sabotage::r_osc_sign) opt.osc_sign = -1.0;
      opt.snapshot_sample = state.last() - 2;
      note(log, "replica " + std::to_string(replica) + ": iterating q = " + std::to_string(q));

      StepResult step;
      if (primary && q == 0 && config.bifurcate) {
        Bifurcation bif =
            bifurcate(state, noise->levels[1], schedule, sys, opt, config.bifurcation_lo, config.bifurcation_hi);
        const IterationState& a = bif.base.next;
        const IterationState& b = bif.flipped.next;
        const TimePartition part = build_time_partition(schedule, 0, 0, config.dt);
        const double reach = bif.base.mollified.time.reach() * config.dt;
        auto csv = open_csv(dir / "bifurcation.csv");
        csv << "window,sample,time,eta,l2_gap,inside\n";
        bool outside_equal = true;
        bool inside_differs = false;
        for (int i = a.first; i <= a.last(); ++i) {
          const double t = a.time(i);
          const double eta = part.eta(bif.window, t);
          const bool inside = t >= part.start(bif.window) && t <= part.end(bif.window);
          bool equal = true;
          for (int c = 0; c < 3; ++c) equal = equal && a.v_at(i).c[c] == b.v_at(i).c[c];
          const double gap = l2_norm(a.v_at(i) - b.v_at(i));
          if (!equal && (t < bif.t_lo || t > bif.t_hi + reach)) outside_equal = false;
          if (eta > 0 && gap > 0) inside_differs = true;
          csv << bif.window << ',' << i << ',' << t << ',' << eta << ',' << gap << ',' << (inside ? 1 : 0) << '\n';
        }
        if (config.check_enabled("bifurcation")) {
          rec.add("bifurcation agrees outside the interval", 0, true, outside_equal, outside_equal ? 0 : 1, 0);
          rec.add("bifurcation differs inside the window", 0, true, inside_differs, inside_differs ? 1 : 0, 0);
          if (config.check_enabled("consistency")) {
            const ConsistencyReport flipped = master_consistency(b, nu, alpha);
            rec.bound("master consistency (flipped branch)", 1, flipped.max_gap, 1e-5);
          }
        }
        step = std::move(bif.base);
      } else {
        step = iterate(state, noise->levels[static_cast<std::size_t>(q + 1)], schedule, sys, opt);
      }

      if (primary) {
        const StepDiagnostics& d = step.diag;
        double amp = 0, div = 0, mean = 0;
        for (const auto& s : d.samples) {
          const double t = step.next.time(s.sample);
          amp = std::max(amp, s.amplitude_residual);
          div = std::max(div, s.omega_divergence);
          mean = std::max(mean, s.omega_mean);
          samples_csv << q + 1 << ',' << s.sample << ',' << t << ',' << s.amplitude_residual << ',' << s.domain_margin
                      << ',' << s.corrector_gap << ',' << s.omega_divergence << ',' << s.omega_mean << ','
                      << s.principal_c0 << ',' << s.corrector_c0 << ',';
          for (std::size_t w = 0; w < s.windows.size(); ++w) samples_csv << (w ? ";" : "") << s.windows[w];
          samples_csv << '\n';
          for (int p = 0; p < kStressParts; ++p)
            parts_csv << q + 1 << ',' << s.sample << ',' << t << ',' << stress_part_names()[p] << ',' << s.c0[p]
                      << ',' << s.l2[p] << ',' << s.mean_removed[p] << '\n';
        }
        if (config.check_enabled("amplitude_identity")) rec.bound("amplitude identity", q, amp, 1e-8);
        if (config.check_enabled("incompressibility")) {
          rec.bound("perturbation divergence", q, div, 1e-8);
          rec.bound("perturbation mean", q, mean, 1e-12);
        }

        if (config.check_enabled("oscillation") && step.snapshot) {
          const int sample = step.snapshot->sample;
          const int lambda = d.lambda_used;
          const SymTensorField& R_ell = step.mollified.R[step.mollified.slot(sample)];
          // Identity flow on the constant part of R_l: exact cancellation.
          const std::vector<WindowFlow> identity{{0, 1.0, nullptr}};
          const SymTensorField R_const = constant_part(R_ell);
          const AmplitudeSet amps =
              amplitude_fields(R_const, schedule.ell.at(q), schedule.delta.at(q + 1), sys, identity);
          const PerturbationParts parts = build_perturbation(amps, identity, sys, lambda);
          const CancellationReport exact = oscillation_cancellation(parts.principal, R_const, lambda, q, true);
          const auto k = static_cast<std::size_t>(sample - step.next.first);
          const CancellationReport full = oscillation_cancellation(step.principal.at(k), R_ell, lambda, q, false);
          for (const auto* r : {&exact, &full})
            oscillation_csv << q << ',' << (r->identity_mode ? "identity" : "full") << ',' << sample << ','
                            << r->cutoff << ',' << r->low_pass << ',' << r->reference << ',' << r->ratio << ','
                            << (r->passed ? 1 : 0) << '\n';
          rec.bound("oscillation cancellation (identity flow)", q, exact.ratio, 1e-8);
          rec.add("oscillation cancellation (full flow)", q, false, full.ratio < 1, full.ratio, 1);
        }

        if (config.export_fields) {
          const auto fields_dir = dir / "fields";
          export_fields(step.next, opt.snapshot_sample, fields_dir);
          if (step.snapshot) export_fields(*step.snapshot, q + 1, step.next.time(step.snapshot->sample), fields_dir);
        }
        levels.push_back({q, std::move(step.diag)});
      }
      step.mollified = {};
      step.principal.clear();
      step.omega.clear();
      step.snapshot.reset();
      chain.push_back(std::move(step.next));
      if (primary) record_consistency(chain.back());
    }

    std::vector<const IterationState*> ptrs;
    for (const auto& s : chain) ptrs.push_back(&s);
    series.push_back(level_series(ptrs));
    if (primary) {
      states = std::move(chain);
      noise0 = std::move(noise);
    }
  }

  // Pathwise cutoff bounds on every sample.
  {
    auto csv = open_csv(dir / "noise_cutoff.csv");
    csv << "q,sample,time,c0,c1,factor,zq_c0,zq_c1\n";
    for (const auto& z : noise0->levels) {
      const double lam = schedule.lambda_d(z.q);
      double worst = 0;
      for (std::size_t i = 0; i < z.c0.size(); ++i) {
        csv << z.q << ',' << i << ',' << noise0->path.time(static_cast<int>(i)) << ',' << z.c0[i] << ',' << z.c1[i]
            << ',' << z.factor[i] << ',' << z.zq_c0[i] << ',' << z.zq_c1[i] << '\n';
        worst = std::max({worst, z.zq_c0[i] / (0.5 * std::cbrt(lam)), z.zq_c1[i] / std::pow(lam, 2.0 / 3.0)});
      }
      if (config.check_enabled("noise_bounds")) rec.bound("noise cutoff bounds", z.q, worst, 1);
    }
  }

  {
    auto csv = open_csv(dir / "levels.csv");
    csv << "q,lambda_schedule,lambda_used,lambda_substituted,delta_next,ell,m_requested,m_used,m_rescaled,"
           "space_width,time_width,c_star,flows_solved,max_deformation,deformation_bound,deformation_violated\n";
    for (const auto& l : levels) {
      const StepDiagnostics& d = l.diag;
      csv << l.q << ',' << d.lambda_schedule << ',' << d.lambda_used << ',' << (d.lambda_substituted ? 1 : 0) << ','
          << schedule.delta.at(l.q + 1) << ',' << schedule.ell.at(l.q) << ',' << d.m_requested << ',' << d.m_used
          << ',' << (d.m_rescaled ? 1 : 0) << ',' << d.space_width << ',' << d.time_width << ',' << d.c_star << ','
          << d.flows_solved << ',' << d.max_deformation << ',' << d.deformation_bound << ','
          << (d.deformation_violated ? 1 : 0) << '\n';
    }
  }

  {
    auto csv = open_csv(dir / "inductive.csv");
    inductive_quantities(series, schedule).write_csv(csv);
  }
  if (states.size() >= 2) {
    std::vector<const IterationState*> ptrs;
    for (const auto& s : states) ptrs.push_back(&s);
    auto csv = open_csv(dir / "increments.csv");
    increment_convergence(ptrs, config.theta).write_csv(csv);
  }

  {
    const IterationState& last = states.back();
    const double span = last.count() * config.dt;
    std::vector<double> horizons = config.ergodic_horizons;
    int shift = 0;
    if (horizons.empty()) {
      horizons = {span / 4, span / 2, 3 * span / 4};
      shift = last.count() / 4;
    }
    auto csv = open_csv(dir / "ergodic.csv");
    bool header = true;
    for (Observable o : {Observable::energy, Observable::sup_norm, Observable::low_modes}) {
      const ErgodicReport rep = ergodic_average(observable_path(last, o), config.dt, horizons, observable_name(o), shift);
      std::ostringstream text;
      rep.write_csv(text);
      std::string body = text.str();
      if (!header) body = body.substr(body.find('\n') + 1);
      header = false;
      csv << body;
    }
  }

  PipelineResult result = std::move(rec.result);
  {
    auto csv = open_csv(dir / "checks.csv");
    csv << "check,q,asserted,passed,value,tolerance\n";
    for (const auto& c : result.checks)
      csv << c.name << ',' << c.q << ',' << (c.asserted ? 1 : 0) << ',' << (c.passed ? 1 : 0) << ',' << c.value << ','
          << c.tolerance << '\n';
  }
  {
    std::ofstream summary(dir / "summary.txt", std::ios::binary);
    summary.precision(6);
    for (const auto& c : result.checks) {
      summary << (c.asserted ? (c.passed ? "PASS   " : "FAIL   ") : "REPORT ") << c.name;
      if (c.q >= 0) summary << " [q=" << c.q << "]";
      summary << ": " << c.value << " (tolerance " << c.tolerance << ")\n";
    }
    summary << (result.passed() ? "all asserted identities hold\n" : "asserted identity failed\n");
  }
  for (const auto& c : result.checks)
    if (c.asserted && !c.passed) note(log, "FAIL " + c.name + " at q = " + std::to_string(c.q));
  return result;
}

// ------------------------------------------------------------------ export

namespace {

std::string format_time(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

std::string tag(int q, double time) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "q%d_t%.6f", q, time);
  return buf;
}

void append_manifest(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(dir / "manifest.txt", std::ios::binary | std::ios::app);
  if (!out) throw Error("cli", "cannot write " + (dir / "manifest.txt").string());
  for (const auto& e : entries) out << e.file << ' ' << e.role << ' ' << e.q << ' ' << format_time(e.time) << '\n';
}

template <int N>
ManifestEntry dump(const std::filesystem::path& dir, const SpectralField<N>& f, const std::string& role, int q,
                   double time) {
  const std::string file = role + "_" + tag(q, time) + ".cit3";
  save_field(dir / file, f);
  return {file, role, q, time};
}

}  // namespace

std::vector<ManifestEntry> export_fields(const IterationState& state, int sample, const std::filesystem::path& dir) {
  if (!state.contains(sample)) throw Error("cli", "export sample outside the state");
  std::filesystem::create_directories(dir);
  const double t = state.time(sample);
  std::vector<ManifestEntry> entries{dump(dir, state.v_at(sample), "v", state.q, t),
                                     dump(dir, state.R_at(sample), "R", state.q, t),
                                     dump(dir, state.p_at(sample), "p", state.q, t),
                                     dump(dir, state.z_at(sample), "z", state.q, t)};
  append_manifest(dir, entries);
  return entries;
}

std::vector<ManifestEntry> export_fields(const StressBreakdown& breakdown, int q, double time,
                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (int p = 0; p < kStressParts; ++p) entries.push_back(dump(dir, breakdown.parts[p], stress_part_names()[p], q, time));
  append_manifest(dir, entries);
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw Error("cli", "cannot read " + (dir / "manifest.txt").string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.file >> e.role >> e.q >> e.time)) throw Error("cli", "malformed manifest line: " + line);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace cit

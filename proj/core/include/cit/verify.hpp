#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "cit/convex_integration.hpp"
#include "cit/fields.hpp"
#include "cit/params.hpp"

namespace cit {

// ------------------------------------------------------------- PDE residual

struct TimeNorms {
  int sample = 0;
  double time = 0, c0 = 0, l2 = 0;
};

/// Residual d_t v + nu (-Lap)^alpha v + div((v+z)(x)(v+z)) - z + grad p - div R
/// on the interior samples of a state (centered d_t).
struct ResidualReport {
  int first = 0;  ///< sample of residual[0]
  std::vector<SpectralVectorField> residual;  ///< empty unless requested
  std::vector<TimeNorms> norms;
  double max_c0 = 0, max_l2 = 0;
};

/// Throws with fewer than 3 samples.
ResidualReport pde_residual(const IterationState& state, double nu, double alpha, bool keep_fields = false);

struct ConsistencySample {
  int sample = 0;
  double gap = 0;        ///< |residual| / |div R - grad p| in L2
  double residual = 0;   ///< |residual| in L2
  double reference = 0;  ///< |div R - grad p| in L2
};

/// Relative gap between the residual of v without its stress and
/// div R - grad p, sample by sample.
struct ConsistencyReport {
  std::vector<ConsistencySample> samples;
  double max_gap = 0;
  bool passed(double tol = 1e-5) const { return !samples.empty() && max_gap <= tol; }
};

ConsistencyReport master_consistency(const IterationState& state, double nu, double alpha);

// ------------------------------------------------------ inductive quantities

struct InductiveRow {
  int q = 0;
  std::string quantity;
  double value = 0;
  double bound = 0;
  double ratio = 0;  ///< value / bound
  double ci_lo = 0, ci_hi = 0;  ///< bootstrap interval for moment rows, else value
};

struct InductiveReport {
  std::vector<InductiveRow> rows;
  void write_csv(std::ostream& os) const;
};

/// Per-sample norms of one level, enough for the inductive rows without
/// keeping the fields.
struct LevelSeries {
  int q = 0;
  double t0 = 0, dt = 0;
  int first = 0;                ///< sample of v_c0[0] and R_c0[0]
  std::vector<double> v_c0, R_c0;
  int increment_first = 0;      ///< sample of increment_c0[0]
  std::vector<double> increment_c0;  ///< |v_q - v_{q-1}|_C0, v_{-1} = 0
  double v_c1 = 0;              ///< sup of the spatial C1 norm plus |d_t v|_C0
};

/// Series for consecutive levels q = 0, 1, ... of one replica.
std::vector<LevelSeries> level_series(const std::vector<const IterationState*>& levels);

/// series[replica][level]. Moment rows use all replicas; the sup-norm rows
/// use replica 0.
InductiveReport inductive_quantities(const std::vector<std::vector<LevelSeries>>& series, const Schedule& schedule,
                                     int bootstrap = 400, std::uint64_t seed = 2024);
/// levels[replica][q]: the states of every replica.
InductiveReport inductive_quantities(const std::vector<std::vector<const IterationState*>>& levels,
                                     const Schedule& schedule, int bootstrap = 400, std::uint64_t seed = 2024);

// --------------------------------------------------- oscillation cancellation

struct CancellationReport {
  int q = 0;
  double cutoff = 0;      ///< low-pass radius lambda / 5
  double low_pass = 0;    ///< C0 of low_pass(trace_free(w(x)w) + R_l)
  double reference = 0;  ///< C0 of R_l, or |w|_C0^2 when R_l vanishes
  double ratio = 0;
  bool identity_mode = false;
  bool passed = true;  ///< identity mode only: ratio <= tolerance
};

CancellationReport oscillation_cancellation(const SpectralVectorField& principal, const SymTensorField& R_ell,
                                            int lambda, int q, bool identity_mode, double tolerance = 1e-8);

// ------------------------------------------------------ increment convergence

struct IncrementRow {
  int q = 0;  ///< row compares v_{q+1} with v_q
  double c0 = 0, c1 = 0;
  double holder = 0;  ///< max(C0, Hölder seminorm)
  double interpolation = 0;  ///< holder / (c0^{1-theta} c1^theta)
  bool interpolation_ok = true;  ///< interpolation <= 2
};

struct IncrementReport {
  double theta = 0.5;
  std::vector<IncrementRow> rows;
  void write_csv(std::ostream& os) const;
};

/// Sup over the common samples of consecutive states; throws with fewer than
/// two states or theta outside (0, 1).
IncrementReport increment_convergence(const std::vector<const IterationState*>& states, double theta);

// ------------------------------------------------------------ ergodic average

enum class Observable { energy, sup_norm, low_modes };
const char* observable_name(Observable o);

/// psi(u(t_i)) for u = v + z at every sample of a state.
std::vector<double> observable_path(const IterationState& state, Observable o, double mode_radius = 2);

struct ErgodicRow {
  double horizon = 0;
  double average = 0;
  double shifted = 0;  ///< average of the path shifted by `shift` samples
  double change = 0;   ///< |average - average at the previous horizon|
  int samples = 0;
};

struct ErgodicReport {
  std::string observable;
  std::vector<ErgodicRow> rows;
  void write_csv(std::ostream& os) const;
};

/// (1/T) sum_{t_i < T} psi(t_i) dt for each T; throws when a horizon exceeds
/// the path.
ErgodicReport ergodic_average(const std::vector<double>& values, double dt, const std::vector<double>& horizons,
                              const std::string& observable = "psi", int shift = 0);

}  // namespace cit

#pragma once
#include <array>
#include <climits>
#include <optional>
#include <string>
#include <vector>

#include "cit/beltrami.hpp"
#include "cit/fields.hpp"
#include "cit/mollify.hpp"
#include "cit/noise.hpp"
#include "cit/params.hpp"
#include "cit/transport.hpp"

namespace cit {

/// (v_q, R_q, p_q) together with the truncated noise z_q of the same level,
/// sampled at global indices first..last() of the time grid t0 + i dt.
struct IterationState {
  int q = 0;
  int n = 0;
  double t0 = 0, dt = 0;
  int first = 0;
  std::vector<SpectralVectorField> v;
  std::vector<SymTensorField> R;
  std::vector<SpectralScalarField> p;
  std::vector<SpectralVectorField> z;

  int count() const { return static_cast<int>(v.size()); }
  int last() const { return first + count() - 1; }
  bool contains(int i) const { return i >= first && i <= last(); }
  double time(int i) const { return t0 + i * dt; }
  std::size_t slot(int i) const;
  const SpectralVectorField& v_at(int i) const { return v[slot(i)]; }
  const SymTensorField& R_at(int i) const { return R[slot(i)]; }
  const SpectralScalarField& p_at(int i) const { return p[slot(i)]; }
  const SpectralVectorField& z_at(int i) const { return z[slot(i)]; }
};

/// v_0 = 0, R_0 = -R z_0 + z_0 (x)o z_0, p_0 = -|z_0|^2 / 3 on samples
/// [first, last] (all samples by default).
IterationState init_state(const TruncatedNoise& z0, int first = 0, int last = -1);

/// Mollified fields and commutator stress on samples first..last.
struct MollifiedState {
  int q = 0;
  int first = 0;
  SpatialMollifier space;
  TemporalMollifier time;
  std::vector<SpectralVectorField> v, z;
  std::vector<SymTensorField> R, com1;
  std::vector<SpectralScalarField> p;

  int count() const { return static_cast<int>(v.size()); }
  int last() const { return first + count() - 1; }
  std::size_t slot(int i) const;
  SpectralVectorField velocity(int i) const { return v[slot(i)] + z[slot(i)]; }  ///< v_l + z_l
};

/// Causal space-time mollification at scale ell_q; the output starts once the
/// kernel has a full history.
MollifiedState mollify_state(const IterationState& state, const Schedule& schedule);
MollifiedState mollify_state(const IterationState& state, const SpatialMollifier& space,
                             const TemporalMollifier& time);

/// Active window j with its eta_j(t) and flow map (nullptr: identity flow).
struct WindowFlow {
  int window = 0;
  double eta = 0;
  const FlowMap* flow = nullptr;
};

/// Amplitudes a_zeta = c*^{-1/2} rho^{1/2} eta_j Gamma_zeta^{(j mod 2)}(Id - c* R_l / rho)
/// for the six pair representatives of each active window.
struct WindowAmplitude {
  int window = 0;
  int set = 0;
  double sign = 1;  ///< -1 on the bifurcation window
  std::array<GridScalar, 6> a;
  std::array<GridVector, 6> grad_a;
};

struct AmplitudeSet {
  int n = 0;
  GridScalar rho;
  std::vector<WindowAmplitude> windows;
  double identity_residual = 0;  ///< sup |1/2 sum a^2 (Id - zeta zeta) - (rho/c* Id - R_l)|_F
  double domain_margin = 0;      ///< c* - sup |c* R_l / rho|_F (>= 0)
  double rho_floor_gap = 0;      ///< min (rho - |R_l| - delta), >= 0
};

AmplitudeSet amplitude_fields(const SymTensorField& R_ell, double ell, double delta_next, const BeltramiSystem& sys,
                              const std::vector<WindowFlow>& windows, int flip_window = INT_MIN);

/// omega^(p), omega^(c) and the oscillation-stress ingredients at one time.
struct PerturbationParts {
  SpectralVectorField principal;         ///< omega^(p)
  SpectralVectorField corrector;         ///< omega^(c) = omega - omega^(p)
  SpectralVectorField total;             ///< omega = curl(omega^(p)) / lambda
  SpectralVectorField corrector_direct;  ///< sum (grad a / lambda + i a (grad Psi)^T zeta) x B e^{i lambda zeta.Phi}
  SpectralVectorField osc_argument;      ///< sum_{zeta+zeta' != 0} (W (x) W' - W.W'/2 Id) grad(a a' phi phi')
  SpectralScalarField p_osc;             ///< rho / c* + 1/2 sum_{zeta+zeta' != 0} a a' phi phi' W.W'
  double corrector_gap = 0;              ///< |direct - curl form|_L2 / |omega|_L2
};

/// Throws when lambda * zeta is not integral or the waves are not resolved.
PerturbationParts build_perturbation(const AmplitudeSet& amps, const std::vector<WindowFlow>& windows,
                                     const BeltramiSystem& sys, int lambda);

/// Largest multiple of the common denominator not above n/6 (auto), or the
/// requested value after checking integrality and resolution.
int realized_lambda(const BeltramiSystem& sys, int n, int requested = 0);

enum StressPart { kLin = 0, kTrans, kNash, kOsc, kCorr, kCom1, kCom2, kStressParts };
const std::array<std::string, kStressParts>& stress_part_names();

/// Full stress and pressure parts at one sample.
struct StressBreakdown {
  int sample = 0;
  std::array<SymTensorField, kStressParts> parts;
  SpectralScalarField p_ell, p_osc, p_corr, p_com2;
};

struct StepOptions {
  double nu = 0, alpha = 0.25;
  int lambda = 0;            ///< realized Beltrami frequency (0 = auto)
  double com2_sign = -1.0;   ///< sign in front of R(z_{q+1} - z_l)
  double osc_sign = 1.0;     ///< test hook: flips R_osc
  int flip_window = INT_MIN; ///< bifurcation: a -> -a on this window
  int snapshot_sample = INT_MIN;  ///< keep the full breakdown at this sample
};

struct SampleDiagnostics {
  int sample = 0;
  std::array<double, kStressParts> c0{};
  std::array<double, kStressParts> l2{};
  std::array<double, kStressParts> mean_removed{};  ///< |mean| taken out before R
  double amplitude_residual = 0;
  double domain_margin = 0;
  double corrector_gap = 0;
  double omega_divergence = 0;  ///< divergence_defect(omega)
  double omega_mean = 0;
  double principal_c0 = 0, corrector_c0 = 0;
  std::vector<int> windows;
};

struct StepDiagnostics {
  int q = 0;
  int lambda_used = 0;
  std::uint64_t lambda_schedule = 0;
  bool lambda_substituted = false;
  bool space_rescaled = false, time_rescaled = false;
  double space_width = 0, time_width = 0;
  double m_used = 0, m_requested = 0;
  bool m_rescaled = false;
  double c_star = 0;
  std::size_t flows_solved = 0;
  double max_deformation = 0, deformation_bound = 0;
  bool deformation_violated = false;
  std::vector<SampleDiagnostics> samples;
};

struct StepResult {
  IterationState next;
  MollifiedState mollified;
  StepDiagnostics diag;
  std::optional<StressBreakdown> snapshot;
  /// omega^(p) and omega at every sample of next (for reports).
  std::vector<SpectralVectorField> principal, omega;
};

/// One iteration q -> q+1. z_next is the truncated noise of level q+1.
StepResult iterate(const IterationState& state, const TruncatedNoise& z_next, const Schedule& schedule,
                   const BeltramiSystem& sys, const StepOptions& options);

/// Iterates from a precomputed mollification and flow cache (shared by the
/// two bifurcation branches).
StepResult iterate_from(const IterationState& state, MollifiedState mollified, FlowCache& flows,
                        const TruncatedNoise& z_next, const Schedule& schedule, const BeltramiSystem& sys,
                        const StepOptions& options);

/// First window j whose support [start(j), end(j)] lies inside [t_lo, t_hi]
/// and inside the sample range of the next level; throws if none.
int admissible_window(const TimePartition& part, double t_lo, double t_hi, double range_lo, double range_hi);

struct Bifurcation {
  StepResult base, flipped;
  int window = 0;
  double t_lo = 0, t_hi = 0;
};
Bifurcation bifurcate(const IterationState& state, const TruncatedNoise& z_next, const Schedule& schedule,
                      const BeltramiSystem& sys, const StepOptions& options, double t_lo, double t_hi);

}  // namespace cit

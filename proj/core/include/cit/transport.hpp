#pragma once
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "cit/fields.hpp"
#include "cit/params.hpp"

namespace cit {

/// Squared partition of unity on [k, k+1] built from shifted bumps of width
/// m: eta_j = psi_j / sqrt(sum_i psi_i^2), psi_j(t) = psi((t - k - j m) / m).
struct TimePartition {
  int k = 0;
  double m = 0;
  double requested = 0;
  bool rescaled = false;
  int first = 0, last = 0;  ///< window indices j = first..last

  /// 1 on [-1/4, 1/4], 0 outside (-3/4, 3/4), quintic smoothstep between.
  static double bump(double s);
  double center(int j) const { return k + j * m; }
  double start(int j) const { return k + (j - 1) * m; }
  double end(int j) const { return k + (j + 1) * m; }
  double psi(int j, double t) const { return bump((t - center(j)) / m); }
  double eta(int j, double t) const;
  /// Windows with eta_j(t) > 0, ascending.
  std::vector<int> active(double t) const;
};

/// m below 8 dt is an error unless desk_mode, which raises it to 8 dt.
TimePartition make_time_partition(double m, int k, double dt, bool desk_mode);
TimePartition build_time_partition(const Schedule& schedule, int q, int k, double dt);

/// Velocity samples on the global grid t_i = t0 + i dt, i in [begin, end()).
struct VelocityPath {
  double t0 = 0, dt = 0;
  int begin = 0;
  std::vector<SpectralVectorField> samples;

  int end() const { return begin + static_cast<int>(samples.size()); }
  double time(int i) const { return t0 + i * dt; }
  const SpectralVectorField& at(int i) const { return samples.at(static_cast<std::size_t>(i - begin)); }
};

using Point3 = std::array<double, 3>;

/// Follows dX/ds = u(s, X) backward from (from_time, points) to to_time with
/// classical RK4, spectral interpolation in space and linear interpolation in
/// time; returns X(to_time) - X(from_time) per point. Steps align with the
/// sample times and are subdivided so that |u| h stays below a grid cell.
std::vector<Point3> trace_back(const VelocityPath& u, double from_time, double to_time, std::span<const Point3> points,
                               int* steps_taken = nullptr);

/// Phi(t_i, x) = X(window start; t_i, x) on the grid, stored through its
/// periodic part Psi = Phi - x.
struct FlowMap {
  int n = 0;
  int window = 0;
  int sample = 0;
  double start = 0, time = 0;
  int steps = 0;
  GridVector displacement;               ///< Psi on the grid
  SpectralVectorField displacement_hat;  ///< Psi in Fourier space
  GridField<9> jacobian;                 ///< d_j Phi_i at 3 i + j
};

FlowMap solve_flow_map(const VelocityPath& u, double start_time, int sample, int window = 0);
FlowMap solve_flow_map(const VelocityPath& u, const TimePartition& part, int window, int sample);

/// Flows computed on first request and shared afterwards.
class FlowCache {
 public:
  FlowCache(const VelocityPath& u, const TimePartition& part) : u_(&u), part_(part) {}
  std::shared_ptr<const FlowMap> get(int window, int sample);
  const TimePartition& partition() const { return part_; }
  std::size_t size() const;
  /// Solved flows ordered by (window, sample).
  std::vector<std::shared_ptr<const FlowMap>> solved() const;

 private:
  const VelocityPath* u_;
  TimePartition part_;
  mutable std::mutex mutex_;
  std::map<std::pair<int, int>, std::shared_ptr<const FlowMap>> flows_;
};

struct DeformationReport {
  double sup_deviation = 0;  ///< sup |grad Phi - Id| (operator norm)
  double sup_gradient = 0;   ///< sup |grad Phi|
  double bound = 0;          ///< e^{2 m |u|_{C1}} - 1
  double velocity_c1 = 0;
  double sup_dt_flow = 0;      ///< sup |d_t Phi| = sup |u . grad Phi|
  double sup_dt_gradient = 0;  ///< sup |d_t grad Phi|
  double det_defect = 0;       ///< sup |det grad Phi - 1|
  bool violated = false;       ///< sup_deviation > bound + tolerance
};

/// m is the window half-width; u's C1 norm is taken over the samples the
/// characteristics crossed.
DeformationReport deformation_report(const FlowMap& flow, const VelocityPath& u, double m, double tolerance = 1e-4);

/// Sup distance between Phi_j(t_i) computed directly and through the
/// intermediate start of window j+1.
double composition_defect(const VelocityPath& u, const TimePartition& part, int window, int sample);

}  // namespace cit

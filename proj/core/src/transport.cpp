#include "cit/transport.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cit/error.hpp"
#include "cit/mollify.hpp"
#include "cit/parallel.hpp"
#include "cit/spectral.hpp"

namespace cit {

double TimePartition::bump(double s) {
  const double a = std::abs(s);
  return 1.0 - smoothstep5((a - 0.25) / 0.5);
}

double TimePartition::eta(int j, double t) const {
  const double own = psi(j, t);
  if (own == 0) return 0;
  double sum = 0;
  for (int i : active(t)) sum += psi(i, t) * psi(i, t);
  return own / std::sqrt(sum);
}

std::vector<int> TimePartition::active(double t) const {
  std::vector<int> out;
  const int lo = static_cast<int>(std::floor((t - k) / m)) - 1;
  for (int j = std::max(first, lo); j <= std::min(last, lo + 3); ++j)
    if (psi(j, t) > 0) out.push_back(j);
  return out;
}

TimePartition make_time_partition(double m, int k, double dt, bool desk_mode) {
  if (!(m > 0)) throw Error("transport", "window width must be positive");
  TimePartition p;
  p.k = k;
  p.requested = m;
  p.m = m;
  if (m < 8 * dt) {
    if (!desk_mode) throw Error("transport", "window width below eight time steps");
    p.m = 8 * dt;
    p.rescaled = true;
  }
  p.first = 0;
  p.last = static_cast<int>(std::ceil(1.0 / p.m - 1e-12));
  return p;
}

TimePartition build_time_partition(const Schedule& schedule, int q, int k, double dt) {
  return make_time_partition(schedule.m_gap.at(q), k, dt, schedule.params.desk_mode);
}

namespace {

/// Retained modes of two consecutive samples, evaluated as a linear blend.
struct SegmentModes {
  std::vector<std::array<int, 3>> k;
  std::vector<std::array<cplx, 3>> a, b;  ///< already multiplied by the half-spectrum weight
  int kmax = 0;
  double speed = 0;  ///< bound on sup |u| over the segment
};

SegmentModes segment_modes(const SpectralVectorField& ua, const SpectralVectorField& ub) {
  const TorusGrid g(ua.n);
  double peak = 0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < ua.size(); ++i) peak = std::max({peak, std::abs(ua.c[c][i]), std::abs(ub.c[c][i])});
  SegmentModes s;
  if (peak == 0) return s;
  const double keep = 1e-14 * peak;
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < ua.size(); ++i) {
    bool retained = false;
    for (int c = 0; c < 3; ++c) retained |= std::abs(ua.c[c][i]) > keep || std::abs(ub.c[c][i]) > keep;
    if (!retained) continue;
    const auto k = g.mode(i);
    if (g.nyquist(k)) continue;
    const double w = g.weight(i);
    std::array<cplx, 3> ca{}, cb{};
    for (int c = 0; c < 3; ++c) {
      ca[c] = w * ua.c[c][i];
      cb[c] = w * ub.c[c][i];
    }
    sa += std::sqrt(std::norm(ca[0]) + std::norm(ca[1]) + std::norm(ca[2]));
    sb += std::sqrt(std::norm(cb[0]) + std::norm(cb[1]) + std::norm(cb[2]));
    s.k.push_back(k);
    s.a.push_back(ca);
    s.b.push_back(cb);
    s.kmax = std::max({s.kmax, std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
  }
  s.speed = std::max(sa, sb);
  return s;
}

/// Evaluates (1 - theta) u_a(x) + theta u_b(x).
struct Evaluator {
  std::vector<cplx> e0, e1, e2;
  explicit Evaluator(int kmax) : e0(2 * kmax + 1), e1(2 * kmax + 1), e2(2 * kmax + 1) {}

  static void powers(std::vector<cplx>& e, double x, int kmax) {
    const cplx base(std::cos(x), std::sin(x));
    e[kmax] = 1.0;
    for (int j = 1; j <= kmax; ++j) {
      e[kmax + j] = e[kmax + j - 1] * base;
      e[kmax - j] = std::conj(e[kmax + j]);
    }
  }

  Point3 operator()(const SegmentModes& s, double theta, const Point3& x) {
    if (s.k.empty()) return {0, 0, 0};
    const int K = s.kmax;
    powers(e0, x[0], K);
    powers(e1, x[1], K);
    powers(e2, x[2], K);
    cplx acc[3] = {};
    for (std::size_t m = 0; m < s.k.size(); ++m) {
      const auto& k = s.k[m];
      const cplx ph = e0[K + k[0]] * e1[K + k[1]] * e2[K + k[2]];
      for (int c = 0; c < 3; ++c) acc[c] += ph * ((1.0 - theta) * s.a[m][c] + theta * s.b[m][c]);
    }
    return {acc[0].real(), acc[1].real(), acc[2].real()};
  }
};

struct Segment {
  double hi = 0, lo = 0;
  int sample = 0;  ///< lower sample index a; the segment lies in [t_a, t_{a+1}]
};

}  // namespace

std::vector<Point3> trace_back(const VelocityPath& u, double from_time, double to_time, std::span<const Point3> points,
                               int* steps_taken) {
  if (from_time < to_time) throw Error("transport", "characteristics run backward in time only");
  std::vector<Segment> segs;
  const double eps = 1e-12 * std::max(1.0, std::abs(from_time));
  for (double s = from_time; s > to_time + eps;) {
    const int a = static_cast<int>(std::floor((s - u.t0) / u.dt - 1e-9));
    if (a < u.begin || a + 1 >= u.end())
      throw Error("transport", "velocity path does not cover time " + std::to_string(s));
    const double lo = std::max(to_time, u.time(a));
    segs.push_back({s, lo, a});
    s = lo;
  }
  std::vector<Point3> disp(points.size(), Point3{0, 0, 0});
  if (segs.empty()) {
    if (steps_taken) *steps_taken = 0;
    return disp;
  }

  const double cell = 2.0 * std::numbers::pi / u.samples.front().n;
  std::map<int, SegmentModes> modes;
  int kmax = 0;
  std::vector<int> counts;
  int total = 0;
  for (const auto& sg : segs) {
    auto it = modes.find(sg.sample);
    if (it == modes.end()) it = modes.emplace(sg.sample, segment_modes(u.at(sg.sample), u.at(sg.sample + 1))).first;
    kmax = std::max(kmax, it->second.kmax);
    const double span = sg.hi - sg.lo;
    const int sub = std::max(1, static_cast<int>(std::ceil(it->second.speed * span / cell)));
    counts.push_back(sub);
    total += sub;
  }
  if (total > 100000) throw Error("transport", "characteristic integration unresolvable (too many sub-steps)");
  if (steps_taken) *steps_taken = total;

  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    Evaluator eval(kmax);
    for (std::size_t p = begin; p < end; ++p) {
      Point3 x = points[p];
      for (std::size_t g = 0; g < segs.size(); ++g) {
        const Segment& sg = segs[g];
        const SegmentModes& sm = modes.at(sg.sample);
        const double ta = u.time(sg.sample);
        const double h = (sg.hi - sg.lo) / counts[g];
        auto theta = [&](double s) { return (s - ta) / u.dt; };
        for (int st = 0; st < counts[g]; ++st) {
          const double s = sg.hi - st * h;
          const Point3 k1 = eval(sm, theta(s), x);
          Point3 y;
          for (int d = 0; d < 3; ++d) y[d] = x[d] - 0.5 * h * k1[d];
          const Point3 k2 = eval(sm, theta(s - 0.5 * h), y);
          for (int d = 0; d < 3; ++d) y[d] = x[d] - 0.5 * h * k2[d];
          const Point3 k3 = eval(sm, theta(s - 0.5 * h), y);
          for (int d = 0; d < 3; ++d) y[d] = x[d] - h * k3[d];
          const Point3 k4 = eval(sm, theta(s - h), y);
          for (int d = 0; d < 3; ++d) x[d] -= h * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]) / 6.0;
        }
      }
      for (int d = 0; d < 3; ++d) disp[p][d] = x[d] - points[p][d];
    }
  });
  return disp;
}

FlowMap solve_flow_map(const VelocityPath& u, double start_time, int sample, int window) {
  if (u.samples.empty()) throw Error("transport", "empty velocity path");
  const int n = u.samples.front().n;
  const TorusGrid g(n);
  FlowMap f;
  f.n = n;
  f.window = window;
  f.sample = sample;
  f.start = start_time;
  f.time = u.time(sample);
  std::vector<Point3> pts(g.points());
  std::size_t idx = 0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) pts[idx++] = {g.node(i0), g.node(i1), g.node(i2)};
  const auto disp = trace_back(u, f.time, start_time, pts, &f.steps);
  f.displacement = GridVector(n);
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (int d = 0; d < 3; ++d) f.displacement.v[d][p] = disp[p][d];
  f.displacement_hat = to_spectral(f.displacement);
  strip_nyquist(f.displacement_hat);
  const auto grad = gradient_tensor(f.displacement_hat);
  f.jacobian = GridField<9>(n);
  for (int e = 0; e < 9; ++e) {
    f.jacobian.v[e] = to_physical(grad[e]).v[0];
    if (e % 4 == 0)
      for (double& v : f.jacobian.v[e]) v += 1.0;
  }
  return f;
}

FlowMap solve_flow_map(const VelocityPath& u, const TimePartition& part, int window, int sample) {
  return solve_flow_map(u, part.start(window), sample, window);
}

std::shared_ptr<const FlowMap> FlowCache::get(int window, int sample) {
  const auto key = std::make_pair(window, sample);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = flows_.find(key); it != flows_.end()) return it->second;
  }
  auto flow = std::make_shared<const FlowMap>(solve_flow_map(*u_, part_, window, sample));
  std::lock_guard<std::mutex> lock(mutex_);
  return flows_.emplace(key, std::move(flow)).first->second;
}

std::size_t FlowCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return flows_.size();
}

std::vector<std::shared_ptr<const FlowMap>> FlowCache::solved() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::shared_ptr<const FlowMap>> out;
  for (const auto& [key, flow] : flows_) out.push_back(flow);
  return out;
}

DeformationReport deformation_report(const FlowMap& flow, const VelocityPath& u, double m, double tolerance) {
  DeformationReport r;
  const int lo = std::max(u.begin, static_cast<int>(std::floor((flow.start - u.t0) / u.dt - 1e-9)));
  for (int i = lo; i <= flow.sample; ++i) r.velocity_c1 = std::max(r.velocity_c1, c1_norm(u.at(i)));
  r.bound = std::expm1(2.0 * m * r.velocity_c1);

  const SpectralVectorField& vel = u.at(flow.sample);
  const GridVector ug = to_physical(vel);
  // d_t Psi = -u - (u . grad) Psi
  GridVector dpsi(flow.n);
  for (std::size_t p = 0; p < ug.size(); ++p) {
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) J(i, j) = flow.jacobian.v[3 * i + j][p];
    const Eigen::Vector3d uv(ug.v[0][p], ug.v[1][p], ug.v[2][p]);
    const Eigen::Vector3d dphi = -J * uv;
    r.sup_dt_flow = std::max(r.sup_dt_flow, dphi.norm());
    for (int d = 0; d < 3; ++d) dpsi.v[d][p] = dphi[d];
    const Eigen::Matrix3d dev = J - Eigen::Matrix3d::Identity();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd_dev(dev);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(J);
    r.sup_deviation = std::max(r.sup_deviation, svd_dev.singularValues()(0));
    r.sup_gradient = std::max(r.sup_gradient, svd.singularValues()(0));
    r.det_defect = std::max(r.det_defect, std::abs(J.determinant() - 1.0));
  }
  SpectralVectorField dpsi_hat = to_spectral(dpsi);
  strip_nyquist(dpsi_hat);
  const auto g = gradient_tensor(dpsi_hat);
  std::vector<double> frob(ug.size(), 0.0);
  for (int e = 0; e < 9; ++e) {
    const GridScalar c = to_physical(g[e]);
    for (std::size_t p = 0; p < frob.size(); ++p) frob[p] += c.v[0][p] * c.v[0][p];
  }
  for (double f : frob) r.sup_dt_gradient = std::max(r.sup_dt_gradient, std::sqrt(f));
  r.violated = r.sup_deviation > r.bound + tolerance;
  return r;
}

double composition_defect(const VelocityPath& u, const TimePartition& part, int window, int sample) {
  const FlowMap direct = solve_flow_map(u, part, window, sample);
  const FlowMap later = solve_flow_map(u, part, window + 1, sample);
  const TorusGrid g(direct.n);
  std::vector<Point3> mid(g.points());
  std::size_t idx = 0;
  for (int i0 = 0; i0 < g.n; ++i0)
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2, ++idx)
        mid[idx] = {g.node(i0) + later.displacement.v[0][idx], g.node(i1) + later.displacement.v[1][idx],
                    g.node(i2) + later.displacement.v[2][idx]};
  const auto rest = trace_back(u, part.start(window + 1), part.start(window), mid);
  double worst = 0;
  for (std::size_t p = 0; p < mid.size(); ++p) {
    double d2 = 0;
    for (int d = 0; d < 3; ++d) {
      const double composed = later.displacement.v[d][p] + rest[p][d];
      d2 += (composed - direct.displacement.v[d][p]) * (composed - direct.displacement.v[d][p]);
    }
    worst = std::max(worst, std::sqrt(d2));
  }
  return worst;
}

}  // namespace cit

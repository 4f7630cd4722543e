#include "cit/beltrami.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cit/error.hpp"

namespace cit {
namespace {

const std::array<int, 3> kPythagorean[] = {{3, 4, 5}, {7, 24, 25}};

// Six pair representatives per family: two per coordinate plane.
std::vector<RationalDir> plane_pairs(int p, int q, int den) {
  return {{{p, q, 0}, den}, {{p, -q, 0}, den}, {{0, p, q}, den},
          {{0, p, -q}, den}, {{q, 0, p}, den}, {{-q, 0, p}, den}};
}

std::vector<RationalDir> frame_candidates() {
  std::vector<RationalDir> out;
  for (int i = 0; i < 3; ++i) {
    RationalDir e{{0, 0, 0}, 1};
    e.num[i] = 1;
    out.push_back(e);
  }
  for (const auto& t : kPythagorean) {
    const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    const int base[3] = {t[0], t[1], 0};
    for (const auto& pm : perm)
      for (int s0 = -1; s0 <= 1; s0 += 2)
        for (int s1 = -1; s1 <= 1; s1 += 2) {
          RationalDir r{{0, 0, 0}, t[2]};
          r.num[pm[0]] = s0 * base[0];
          r.num[pm[1]] = s1 * base[1];
          r.num[pm[2]] = 0;
          out.push_back(r);
        }
  }
  return out;
}

bool leading_positive(const RationalDir& r) {
  for (int v : r.num)
    if (v != 0) return v > 0;
  return false;
}

// Strict lexicographic order on the rational values.
bool lex_less(const RationalDir& a, const RationalDir& b) {
  for (int i = 0; i < 3; ++i) {
    const long long l = static_cast<long long>(a.num[i]) * b.den;
    const long long r = static_cast<long long>(b.num[i]) * a.den;
    if (l != r) return l < r;
  }
  return false;
}

Eigen::Matrix<double, 6, 1> vec6(const Sym3& m) {
  Eigen::Matrix<double, 6, 1> v;
  for (int c = 0; c < 6; ++c) v[c] = m(kSymPairs[c][0], kSymPairs[c][1]);
  return v;
}

Sym3 id_minus_zz(const std::array<double, 3>& z) {
  Sym3 m = Sym3::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) -= z[i] * z[j];
  return m;
}

}  // namespace

DirectionSet build_direction_set(const std::string& family, const std::vector<RationalDir>& reps) {
  DirectionSet s;
  s.family = family;
  if (reps.size() != 6) throw Error("beltrami", "family " + family + " must have 6 pair representatives");
  for (const auto& r : reps) s.dirs.push_back(frame_vectors(r));
  for (const auto& r : reps) s.dirs.push_back(frame_vectors(-r));
  s.denominator = 1;
  for (const auto& d : s.dirs) s.denominator = std::lcm(s.denominator, d.zeta.den);

  // Tightness checked in integers: sum over 12 vectors of num_i num_j = 4 den^2 delta_ij.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      long long acc = 0;
      for (const auto& d : s.dirs) {
        const long long scale = s.denominator / d.zeta.den;
        acc += scale * d.zeta.num[i] * scale * d.zeta.num[j];
      }
      const long long want = (i == j) ? 4LL * s.denominator * s.denominator : 0LL;
      if (acc != want) throw Error("beltrami", "family " + family + " is not a tight frame");
    }
  for (std::size_t a = 0; a < s.dirs.size(); ++a)
    for (std::size_t b = a + 1; b < s.dirs.size(); ++b)
      if (s.dirs[a].zeta.same_as(s.dirs[b].zeta))
        throw Error("beltrami", "family " + family + " repeats a direction");

  Eigen::Matrix<double, 6, 6> M;
  for (int p = 0; p < 6; ++p) M.col(p) = vec6(id_minus_zz(s.dirs[p].z()));
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(M);
  const auto sv = svd.singularValues();
  if (sv[5] < 1e-12 * sv[0])
    throw Error("beltrami", "family " + family + " does not span the symmetric matrices");
  s.condition_number = sv[0] / sv[5];
  s.gamma_matrix = M.inverse();
  s.c_star = c_star_estimate(s);
  return s;
}

std::vector<std::string> direction_family_names() { return {"345a", "345b", "72425"}; }

std::vector<RationalDir> direction_family(const std::string& name) {
  if (name == "345a") return plane_pairs(3, 4, 5);
  if (name == "345b") return plane_pairs(4, 3, 5);
  if (name == "72425") return plane_pairs(7, 24, 25);
  throw Error("beltrami", "unknown direction family '" + name + "'");
}

Direction frame_vectors(const RationalDir& zeta) {
  const long long nz = static_cast<long long>(zeta.num[0]) * zeta.num[0] +
                       static_cast<long long>(zeta.num[1]) * zeta.num[1] +
                       static_cast<long long>(zeta.num[2]) * zeta.num[2];
  if (zeta.den <= 0 || nz != static_cast<long long>(zeta.den) * zeta.den)
    throw Error("beltrami", "direction is not a rational unit vector");
  bool found = false;
  RationalDir best;
  for (const auto& c : frame_candidates()) {
    if (!leading_positive(c)) continue;
    long long dotp = 0;
    for (int i = 0; i < 3; ++i) dotp += static_cast<long long>(c.num[i]) * zeta.num[i];
    if (dotp != 0) continue;
    if (!found || lex_less(c, best)) {
      best = c;
      found = true;
    }
  }
  if (!found) throw Error("beltrami", "no rational frame vector orthogonal to the direction");
  Direction d;
  d.zeta = zeta;
  d.a_frame = best;
  const auto z = zeta.vec();
  const auto A = best.vec();
  const std::array<double, 3> zxA = {z[1] * A[2] - z[2] * A[1], z[2] * A[0] - z[0] * A[2],
                                     z[0] * A[1] - z[1] * A[0]};
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 3; ++i) d.b_frame[i] = s * cplx(A[i], zxA[i]);
  return d;
}

int BeltramiSystem::common_denominator() const {
  return std::lcm(sets[0].denominator, sets[1].denominator);
}

BeltramiSystem build_direction_sets(const std::string& family0, const std::string& family1) {
  BeltramiSystem sys;
  sys.sets[0] = build_direction_set(family0, direction_family(family0));
  sys.sets[1] = build_direction_set(family1, direction_family(family1));
  for (const auto& a : sys.sets[0].dirs)
    for (const auto& b : sys.sets[1].dirs)
      if (a.zeta.same_as(b.zeta))
        throw Error("beltrami", "direction sets " + family0 + " and " + family1 + " are not disjoint");
  sys.c_star = std::min(sys.sets[0].c_star, sys.sets[1].c_star);
  return sys;
}

PlaneWave beltrami_wave(const Direction& d, int lambda) {
  PlaneWave w;
  for (int i = 0; i < 3; ++i) {
    const long long num = static_cast<long long>(lambda) * d.zeta.num[i];
    if (num % d.zeta.den != 0) throw Error("beltrami", "lambda * zeta is not an integer vector");
    w.k[i] = static_cast<int>(num / d.zeta.den);
  }
  w.amp = d.b_frame;
  return w;
}

PlaneWave curl(const PlaneWave& w) {
  PlaneWave o;
  o.k = w.k;
  const cplx I(0.0, 1.0);
  o.amp[0] = I * (double(w.k[1]) * w.amp[2] - double(w.k[2]) * w.amp[1]);
  o.amp[1] = I * (double(w.k[2]) * w.amp[0] - double(w.k[0]) * w.amp[2]);
  o.amp[2] = I * (double(w.k[0]) * w.amp[1] - double(w.k[1]) * w.amp[0]);
  return o;
}

cplx divergence(const PlaneWave& w) {
  return cplx(0.0, 1.0) * (double(w.k[0]) * w.amp[0] + double(w.k[1]) * w.amp[1] + double(w.k[2]) * w.amp[2]);
}

SpectralVectorField beltrami_flow(const DirectionSet& set, const std::vector<cplx>& coeffs, int lambda, int n) {
  if (coeffs.size() != set.dirs.size()) throw Error("beltrami", "one coefficient per direction expected");
  const TorusGrid g(n);
  SpectralVectorField out(n);
  for (std::size_t d = 0; d < set.dirs.size(); ++d) {
    const PlaneWave w = beltrami_wave(set.dirs[d], lambda);
    if (g.nyquist(w.k) || std::abs(w.k[0]) > n / 2 || std::abs(w.k[1]) > n / 2 || std::abs(w.k[2]) > n / 2)
      throw Error("beltrami", "Beltrami mode not resolved on the grid");
    if (w.k[2] < 0) continue;  // stored through its conjugate partner
    const int i0 = w.k[0] >= 0 ? w.k[0] : w.k[0] + n;
    const int i1 = w.k[1] >= 0 ? w.k[1] : w.k[1] + n;
    const std::size_t idx = (std::size_t(i0) * n + i1) * g.half() + w.k[2];
    for (int a = 0; a < 3; ++a) out.c[a][idx] += coeffs[d] * w.amp[a];
  }
  return out;
}

std::array<std::vector<cplx>, 3> beltrami_flow_values(const DirectionSet& set, const std::vector<cplx>& coeffs,
                                                      int lambda, int n) {
  const TorusGrid g(n);
  std::array<std::vector<cplx>, 3> out;
  for (auto& v : out) v.assign(g.points(), cplx{});
  for (std::size_t d = 0; d < set.dirs.size(); ++d) {
    const PlaneWave w = beltrami_wave(set.dirs[d], lambda);
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++idx) {
          const double ph = (double(w.k[0]) * i0 + double(w.k[1]) * i1 + double(w.k[2]) * i2) * g.spacing();
          const cplx e = coeffs[d] * cplx(std::cos(ph), std::sin(ph));
          for (int a = 0; a < 3; ++a) out[a][idx] += e * w.amp[a];
        }
  }
  return out;
}

std::array<double, 6> sym_to6(const Sym3& R) {
  std::array<double, 6> v{};
  for (int c = 0; c < 6; ++c) v[c] = R(kSymPairs[c][0], kSymPairs[c][1]);
  return v;
}

Sym3 sym_from6(const double* v) {
  Sym3 m;
  for (int c = 0; c < 6; ++c) {
    m(kSymPairs[c][0], kSymPairs[c][1]) = v[c];
    m(kSymPairs[c][1], kSymPairs[c][0]) = v[c];
  }
  return m;
}

std::array<double, 6> gamma_squared(const DirectionSet& set, const double* sym6) {
  std::array<double, 6> g{};
  for (int p = 0; p < 6; ++p) {
    double s = 0;
    for (int c = 0; c < 6; ++c) s += set.gamma_matrix(p, c) * sym6[c];
    g[p] = s;
  }
  return g;
}

GammaSolution gamma_solve(const BeltramiSystem& sys, const Sym3& R, int set_index, bool permissive) {
  if (set_index < 0 || set_index > 1) throw Error("beltrami", "set index must be 0 or 1");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, R.cwiseAbs().maxCoeff()))
    throw Error("beltrami", "gamma_solve needs a symmetric matrix");
  const double dist = (R - Sym3::Identity()).norm();
  if (dist > sys.c_star && !permissive)
    throw Error("beltrami", "matrix outside the Geometric Lemma ball (|R - Id| = " + std::to_string(dist) + ")");
  const DirectionSet& set = sys.sets[set_index];
  const auto v = sym_to6(R);
  GammaSolution sol;
  sol.gamma_sq = gamma_squared(set, v.data());
  Sym3 recon = Sym3::Zero();
  for (int p = 0; p < 6; ++p) {
    if (sol.gamma_sq[p] < 0) {
      if (dist <= sys.c_star)
        throw Error("beltrami", "negative Gamma^2 inside the claimed ball (c_star overestimated)");
      throw Error("beltrami", "negative Gamma^2 outside the ball");
    }
    sol.gamma[p] = std::sqrt(sol.gamma_sq[p]);
    recon += sol.gamma_sq[p] * id_minus_zz(set.dirs[p].z());
  }
  sol.residual = (R - recon).norm();
  return sol;
}

double c_star_estimate(const DirectionSet& set, const CStarOptions& opt) {
  // gamma(Id + r E) is affine in r, so each direction has one crossing.
  auto min_gamma = [&](const Sym3& E, double r) {
    const Sym3 R = Sym3::Identity() + r * E;
    const auto v = sym_to6(R);
    const auto g = gamma_squared(set, v.data());
    return *std::min_element(g.begin(), g.end());
  };
  auto radius = [&](const Sym3& E) {
    if (min_gamma(E, 1.0) >= 0) return 1.0;
    double lo = 0, hi = 1;
    while (hi - lo > opt.tolerance) {
      const double mid = 0.5 * (lo + hi);
      (min_gamma(E, mid) >= 0 ? lo : hi) = mid;
    }
    return lo;
  };
  std::vector<Sym3> scan;
  for (int c = 0; c < 6; ++c) {
    double v[6] = {0, 0, 0, 0, 0, 0};
    v[c] = 1;
    Sym3 E = sym_from6(v);
    scan.push_back(E / E.norm());
    scan.push_back(-E / E.norm());
  }
  // Steepest-descent direction of each pair coefficient in the Frobenius metric.
  for (int p = 0; p < 6; ++p) {
    double v[6];
    for (int c = 0; c < 6; ++c) v[c] = set.gamma_matrix(p, c) * (sym_diagonal(c) ? 1.0 : 0.5);
    Sym3 G = sym_from6(v);
    if (G.norm() > 0) scan.push_back(-G / G.norm());
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  for (int i = 0; i < opt.random_directions; ++i) {
    double v[6];
    for (double& x : v) x = nd(rng);
    Sym3 E = sym_from6(v);
    scan.push_back(E / E.norm());
  }
  double best = 1.0;
  for (const auto& E : scan) best = std::min(best, radius(E));
  if (best <= 0) throw Error("beltrami", "degenerate direction set: positivity radius is zero");
  return best;
}

}  // namespace cit

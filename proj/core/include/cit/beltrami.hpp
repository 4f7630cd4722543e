#pragma once
#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "cit/fields.hpp"

namespace cit {

/// Rational unit vector num / den.
struct RationalDir {
  std::array<int, 3> num{};
  int den = 1;
  std::array<double, 3> vec() const {
    return {double(num[0]) / den, double(num[1]) / den, double(num[2]) / den};
  }
  RationalDir operator-() const { return {{-num[0], -num[1], -num[2]}, den}; }
  bool same_as(const RationalDir& o) const {
    for (int i = 0; i < 3; ++i)
      if (static_cast<long long>(num[i]) * o.den != static_cast<long long>(o.num[i]) * den) return false;
    return true;
  }
};

struct Direction {
  RationalDir zeta;
  RationalDir a_frame;
  std::array<cplx, 3> b_frame{};
  std::array<double, 3> z() const { return zeta.vec(); }
};

/// Twelve directions: six pair representatives followed by their negatives,
/// so dirs[p + 6] == -dirs[p].
struct DirectionSet {
  std::string family;
  std::vector<Direction> dirs;
  Eigen::Matrix<double, 6, 6> gamma_matrix;  ///< symmetric entries -> pair coefficients Gamma^2
  double condition_number = 0;
  double c_star = 0;
  int denominator = 1;
  static constexpr int kPairs = 6;
  static int partner(int idx) { return idx < kPairs ? idx + kPairs : idx - kPairs; }
};

struct BeltramiSystem {
  std::array<DirectionSet, 2> sets;
  double c_star = 0;  ///< minimum over both sets, <= 1
  /// Least common multiple of the denominators: lambda * zeta is integral
  /// exactly when this divides lambda.
  int common_denominator() const;
};

/// Named rational families: "345a", "345b" (denominator 5) and "72425"
/// (denominator 25). Throws on an unknown name.
std::vector<RationalDir> direction_family(const std::string& name);
std::vector<std::string> direction_family_names();

/// One set from six pair representatives; throws naming the failed
/// property (unit length, tightness, repetition, spanning).
DirectionSet build_direction_set(const std::string& label, const std::vector<RationalDir>& reps);

/// Builds the frames, the 6x6 solve data and c_star. Throws naming the
/// failed property when a family is not tight, not disjoint or degenerate.
BeltramiSystem build_direction_sets(const std::string& family0 = "345a",
                                    const std::string& family1 = "72425");

/// A_zeta is the lexicographically smallest candidate orthogonal to zeta
/// among the rational vectors with first nonzero entry positive, taken from
/// the coordinate axes and all permutations of the named families.
Direction frame_vectors(const RationalDir& zeta);

/// Single complex plane wave amp * exp(i k.x).
struct PlaneWave {
  std::array<int, 3> k{};
  std::array<cplx, 3> amp{};
};
/// W = B_zeta exp(i lambda zeta.x); throws when lambda zeta is not integral.
PlaneWave beltrami_wave(const Direction& d, int lambda);
PlaneWave curl(const PlaneWave& w);
cplx divergence(const PlaneWave& w);

/// Real field sum_zeta a_zeta B_zeta exp(i lambda zeta.x) over one set;
/// coeffs[p + 6] must equal conj(coeffs[p]). Throws if a mode is unresolved.
SpectralVectorField beltrami_flow(const DirectionSet& set, const std::vector<cplx>& coeffs, int lambda,
                                  int n);
/// Same sum evaluated pointwise as complex values (imaginary part is roundoff).
std::array<std::vector<cplx>, 3> beltrami_flow_values(const DirectionSet& set,
                                                      const std::vector<cplx>& coeffs, int lambda, int n);

using Sym3 = Eigen::Matrix3d;

struct GammaSolution {
  std::array<double, 6> gamma_sq{};  ///< per pair
  std::array<double, 6> gamma{};
  double residual = 0;  ///< Frobenius norm of R - sum gamma_sq (Id - zeta zeta)
  /// Coefficient of direction index d (0..11).
  double of(int d) const { return gamma[d % 6]; }
};

/// Pair coefficients for R on set `set_index`. Outside the c_star ball this
/// throws unless `permissive`, in which case negative Gamma^2 still throws.
GammaSolution gamma_solve(const BeltramiSystem& sys, const Sym3& R, int set_index, bool permissive = false);
/// Unchecked linear map R -> Gamma^2 (affine in R), used in hot loops.
std::array<double, 6> gamma_squared(const DirectionSet& set, const double* sym6);

struct CStarOptions {
  int random_directions = 4000;
  unsigned seed = 12345;
  double tolerance = 1e-6;
};
/// Largest Frobenius radius around Id on which every Gamma^2 stays >= 0,
/// minimized over a direction scan and refined by bisection; clamped to 1.
double c_star_estimate(const DirectionSet& set, const CStarOptions& opt = {});

std::array<double, 6> sym_to6(const Sym3& R);
Sym3 sym_from6(const double* v);

}  // namespace cit

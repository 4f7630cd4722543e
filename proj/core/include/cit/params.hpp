#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cit {

/// Scalar parameters of the scheme.
struct SchemeParams {
  std::uint64_t a = 8;    ///< base of the frequency tower, a perfect cube
  std::uint32_t b = 2;    ///< exponent base of the tower
  double beta = 0.01;     ///< Hölder budget exponent
  double eps = 0.04;      ///< cutoff exponent
  double alpha = 0.25;    ///< dissipation exponent in [0, 1/2)
  double nu = 1.0;        ///< viscosity, 0 for Euler
  double r = 1.5;         ///< moment order, r > 1
  double L_noise = 1.0;   ///< noise regularity constant, L >= 1
  int q_max = 1;          ///< number of iteration steps
  bool desk_mode = false; ///< asymptotic constraints become warnings
  bool strict_pow2 = false; ///< additionally demand a in 2^{3N}
  bool operator==(const SchemeParams&) const = default;
};

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

/// Always returns a report; never throws.
ValidationReport validate_params(const SchemeParams& p);

/// Derived sequences for levels q = 0..q_max+1 (m_gap for q = 0..q_max).
struct Schedule {
  SchemeParams params;
  std::vector<std::uint64_t> lambda;
  std::vector<std::uint64_t> f_cut;  ///< f(q) = lambda_q^{1/3}, exact
  std::vector<double> delta;         ///< delta_0 is set equal to delta_1
  std::vector<double> ell;
  std::vector<double> m_gap;
  std::vector<std::pair<double, double>> cutoff_c0;  ///< (plateau end, zero from)
  std::vector<std::pair<double, double>> cutoff_c1;

  int levels() const { return static_cast<int>(lambda.size()); }
  double lambda_d(int q) const { return static_cast<double>(lambda.at(q)); }
};

/// Throws cit::Error("params", "schedule overflow at level q") when an
/// integer entry leaves the 64-bit range, and on parameters failing validation.
Schedule derive_schedule(const SchemeParams& p);

/// Exact integer cube root, or 0 when n is not a perfect cube.
std::uint64_t exact_cube_root(std::uint64_t n);

}  // namespace cit

#include "cit/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cit/error.hpp"

namespace cit {

std::uint64_t exact_cube_root(std::uint64_t n) {
  if (n == 0) return 0;
  auto c = static_cast<std::uint64_t>(std::llround(std::cbrt(static_cast<double>(n))));
  for (std::uint64_t cand = (c > 1 ? c - 1 : 1); cand <= c + 1; ++cand) {
    std::uint64_t sq = 0, cube = 0;
    if (__builtin_mul_overflow(cand, cand, &sq) || __builtin_mul_overflow(sq, cand, &cube)) continue;
    if (cube == n) return cand;
  }
  return 0;
}

namespace {

bool checked_pow(std::uint64_t base, std::uint32_t e, std::uint64_t& out) {
  std::uint64_t acc = 1;
  for (std::uint32_t i = 0; i < e; ++i)
    if (__builtin_mul_overflow(acc, base, &acc)) return false;
  out = acc;
  return true;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

ValidationReport validate_params(const SchemeParams& p) {
  ValidationReport rep;
  auto fail = [&](const std::string& s) {
    rep.pass = false;
    rep.failures.push_back(s);
  };
  auto asymptotic = [&](const std::string& s) {
    if (p.desk_mode)
      rep.warnings.push_back(s);
    else
      fail(s);
  };

  if (p.a < 2) fail("a >= 2");
  if (exact_cube_root(p.a) == 0) fail("a^{1/3} in N (a=" + std::to_string(p.a) + " is not a cube)");
  if (p.strict_pow2) {
    bool pow8 = p.a >= 8 && (p.a & (p.a - 1)) == 0 && (__builtin_ctzll(p.a) % 3 == 0);
    if (!pow8) fail("a in 2^{3N} (strict power-of-two flag)");
  }
  if (p.b < 2) fail("b >= 2");
  if (!(p.beta > 0)) fail("beta > 0");
  if (!(p.eps > 0)) fail("eps > 0");
  if (!(p.alpha >= 0 && p.alpha < 0.5)) fail("alpha in [0, 1/2)");
  if (!(p.nu >= 0)) fail("nu >= 0");
  if (!(p.r > 1)) fail("r > 1");
  if (!(p.L_noise >= 1)) fail("L >= 1");
  if (p.q_max < 0) fail("q_max >= 0");

  const double beta_cap = std::min((1.0 - 2.0 * p.alpha) / 3.0, 1.0 / 24.0);
  if (!(p.beta < beta_cap)) asymptotic("beta<min{(1-2alpha)/3,1/24} (beta=" + fmt(p.beta) + ")");
  if (!(p.eps < 1.0 / 24.0 - p.beta)) asymptotic("eps<1/24-beta (eps=" + fmt(p.eps) + ")");
  const double a_eps = std::pow(static_cast<double>(p.a), p.eps);
  if (!(224.0 < a_eps)) asymptotic("224<a^eps (a^eps=" + fmt(a_eps) + ")");

  // Slope conditions on every level the run touches.
  if (p.a >= 2 && p.b >= 2 && p.eps > 0 && p.q_max >= 0) {
    std::uint64_t lam = p.a;
    for (int q = 0; q <= p.q_max + 1; ++q) {
      const double l = static_cast<double>(lam);
      const double w0 = (std::cbrt(l) - std::pow(l, 1.0 / 3.0 - p.eps)) / 112.0;
      const double w1 = std::pow(l, 2.0 / 3.0) - std::pow(l, 2.0 / 3.0 - p.eps);
      if (!(w0 >= 1.0)) asymptotic("slope condition C0 cutoff at q=" + std::to_string(q));
      if (!(w1 >= 1.0)) asymptotic("slope condition C1 cutoff at q=" + std::to_string(q));
      std::uint64_t next = 0;
      if (q < p.q_max + 1 && !checked_pow(lam, p.b, next)) break;
      lam = next;
    }
  }
  return rep;
}

Schedule derive_schedule(const SchemeParams& p) {
  const ValidationReport rep = validate_params(p);
  if (!rep.pass) {
    std::string msg = "invalid parameters:";
    for (const auto& f : rep.failures) msg += " [" + f + "]";
    throw Error("params", msg);
  }
  Schedule s;
  s.params = p;
  const int levels = p.q_max + 2;
  const std::uint64_t c = exact_cube_root(p.a);
  std::uint64_t lam = p.a, f = c;
  for (int q = 0; q < levels; ++q) {
    if (q > 0) {
      std::uint64_t nl = 0, nf = 0;
      if (!checked_pow(lam, p.b, nl) || !checked_pow(f, p.b, nf))
        throw Error("params", "schedule overflow at level q=" + std::to_string(q));
      lam = nl;
      f = nf;
    }
    s.lambda.push_back(lam);
    s.f_cut.push_back(f);
  }

  const double delta1 = 3.0 * p.r * p.L_noise * p.L_noise;
  s.delta.resize(levels);
  for (int q = 0; q < levels; ++q) {
    if (q <= 1) {
      s.delta[q] = delta1;
    } else {
      const double ln2 = std::log(static_cast<double>(s.lambda[2]));
      const double lnq = std::log(static_cast<double>(s.lambda[q]));
      s.delta[q] = 0.5 * std::exp(2.0 * p.beta * (ln2 - lnq));
    }
  }
  for (int q = 0; q < levels; ++q) {
    const double l = static_cast<double>(s.lambda[q]);
    s.ell.push_back(std::pow(l, -8.0 / 5.0));
    s.cutoff_c0.emplace_back(std::pow(l, 1.0 / 3.0 - p.eps) / 112.0, std::cbrt(l) / 112.0);
    s.cutoff_c1.emplace_back(std::pow(l, 2.0 / 3.0 - p.eps), std::pow(l, 2.0 / 3.0));
  }
  for (int q = 0; q + 1 < levels; ++q) {
    const double l0 = static_cast<double>(s.lambda[q]);
    const double l1 = static_cast<double>(s.lambda[q + 1]);
    s.m_gap.push_back(std::pow(l1, -0.75) * std::pow(l0, -0.75) *
                      std::pow(s.delta[q + 1], -0.25) * std::pow(s.delta[q], -0.25));
  }
  return s;
}

}  // namespace cit

#include <cmath>

#include "cit/error.hpp"
#include "cit/params.hpp"
#include "doctest.h"

using namespace cit;

namespace {
SchemeParams desk() {
  SchemeParams p;
  p.a = 8;
  p.b = 2;
  p.beta = 0.01;
  p.eps = 0.04;
  p.desk_mode = true;
  p.q_max = 2;
  return p;
}
bool contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}
}  // namespace

TEST_CASE("tower of frequencies is exact") {
  const Schedule s = derive_schedule(desk());
  REQUIRE(s.lambda.size() >= 3);
  CHECK(s.lambda[0] == 8);
  CHECK(s.lambda[1] == 64);
  CHECK(s.lambda[2] == 4096);
  for (std::size_t q = 0; q < s.lambda.size(); ++q) CHECK(s.f_cut[q] * s.f_cut[q] * s.f_cut[q] == s.lambda[q]);
  for (std::size_t q = 1; q < s.lambda.size(); ++q) CHECK(s.lambda[q] > s.lambda[q - 1]);
}

TEST_CASE("delta sequence") {
  SchemeParams p = desk();
  p.r = 1.5;
  p.L_noise = 1.0;
  const Schedule s = derive_schedule(p);
  CHECK(s.delta[1] == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(s.delta[0] == s.delta[1]);
  for (double beta : {0.001, 0.01, 0.03}) {
    p.beta = beta;
    CHECK(derive_schedule(p).delta[2] == 0.5);
  }
  // smaller beta never shrinks delta_q
  SchemeParams lo = desk(), hi = desk();
  lo.q_max = hi.q_max = 3;
  lo.beta = 0.005;
  hi.beta = 0.02;
  const Schedule sl = derive_schedule(lo), sh = derive_schedule(hi);
  CHECK(sl.delta[2] == sh.delta[2]);
  for (int q = 3; q < sl.levels(); ++q) CHECK(sl.delta[q] > sh.delta[q]);
  for (int q = 3; q < sl.levels(); ++q) CHECK(sl.delta[q] <= sl.delta[q - 1]);
}

TEST_CASE("mollification scale and temporal gap") {
  const Schedule s = derive_schedule(desk());
  CHECK(s.ell[1] == doctest::Approx(std::exp2(-48.0 / 5.0)).epsilon(1e-13));
  CHECK(s.ell[1] == doctest::Approx(1.2642e-3).epsilon(1e-4));
  for (double m : s.m_gap) {
    CHECK(m > 0);
    CHECK(m < 1);
  }
  // m_0 with delta_0 = delta_1 = 4.5
  const double m0 = std::pow(64.0, -0.75) * std::pow(8.0, -0.75) * std::pow(4.5, -0.5);
  CHECK(s.m_gap[0] == doctest::Approx(m0).epsilon(1e-13));
}

TEST_CASE("cutoff thresholds") {
  const Schedule s = derive_schedule(desk());
  CHECK(s.cutoff_c0[0].second == doctest::Approx(2.0 / 112.0).epsilon(1e-14));
  CHECK(s.cutoff_c0[0].first == doctest::Approx(std::pow(8.0, 1.0 / 3.0 - 0.04) / 112.0).epsilon(1e-14));
  CHECK(s.cutoff_c1[1].second == doctest::Approx(16.0).epsilon(1e-14));
  for (int q = 0; q < s.levels(); ++q) {
    CHECK(s.cutoff_c0[q].first < s.cutoff_c0[q].second);
    CHECK(s.cutoff_c1[q].first < s.cutoff_c1[q].second);
  }
}

TEST_CASE("overflow names the level") {
  SchemeParams p = desk();
  p.q_max = 5;  // 8^(2^5) = 2^96
  try {
    derive_schedule(p);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("schedule overflow at level q=5") != std::string::npos);
  }
}

TEST_CASE("validation") {
  SchemeParams p = desk();
  p.desk_mode = false;
  ValidationReport r = validate_params(p);
  CHECK_FALSE(r.pass);
  CHECK(contains(r.failures, "224<a^eps"));
  CHECK(std::pow(8.0, 0.04) == doctest::Approx(1.0868).epsilon(1e-4));

  p.desk_mode = true;
  r = validate_params(p);
  CHECK(r.pass);
  CHECK(contains(r.warnings, "224<a^eps"));
  CHECK(contains(r.warnings, "slope condition"));

  p.a = 9;
  r = validate_params(p);
  CHECK_FALSE(r.pass);
  CHECK(contains(r.failures, "a^{1/3}"));

  p = desk();
  p.b = 1;
  CHECK_FALSE(validate_params(p).pass);
  p = desk();
  p.beta = 0;
  CHECK_FALSE(validate_params(p).pass);

  p = desk();
  p.a = 27;
  CHECK(validate_params(p).pass);
  p.strict_pow2 = true;
  CHECK_FALSE(validate_params(p).pass);
  p.a = 64;
  CHECK(validate_params(p).pass);
  CHECK_THROWS_AS(derive_schedule([] {
                    SchemeParams q;
                    q.a = 9;
                    return q;
                  }()),
                  Error);
}

TEST_CASE("cube root helper") {
  CHECK(exact_cube_root(8) == 2);
  CHECK(exact_cube_root(8000) == 20);
  CHECK(exact_cube_root(9) == 0);
  CHECK(exact_cube_root(1000000000000000000ULL) == 1000000);
}

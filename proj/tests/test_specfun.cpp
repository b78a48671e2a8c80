#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "prefmix/specfun.hpp"

using namespace prefmix::specfun;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using big = boost::multiprecision::cpp_bin_float_50;

constexpr double kEulerGamma = 0.57721566490153286061;

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

// |a-b| ≤ tol·max(1, |b|).
bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("ln_gamma closed forms", "[specfun]") {
  CHECK_THAT(ln_gamma(1.0), WithinAbs(0.0, 1e-14));
  CHECK_THAT(ln_gamma(2.0), WithinAbs(0.0, 1e-14));
  CHECK_THAT(ln_gamma(4.0), WithinAbs(std::log(6.0), 1e-13));
  CHECK_THAT(ln_gamma(0.5), WithinAbs(0.5 * std::log(std::numbers::pi), 1e-13));
}

TEST_CASE("digamma closed forms", "[specfun]") {
  CHECK_THAT(digamma(1.0), WithinAbs(-kEulerGamma, 1e-13));
  CHECK_THAT(digamma(2.0), WithinAbs(1.0 - kEulerGamma, 1e-13));
  CHECK_THAT(digamma(0.5), WithinAbs(-kEulerGamma - 2.0 * std::numbers::ln2, 1e-13));
}

TEST_CASE("trigamma closed forms", "[specfun]") {
  double const z2 = std::numbers::pi * std::numbers::pi / 6.0;
  CHECK_THAT(trigamma(1.0), WithinAbs(z2, 1e-13));
  CHECK_THAT(trigamma(2.0), WithinAbs(z2 - 1.0, 1e-13));
  CHECK_THAT(trigamma(0.5), WithinAbs(3.0 * z2, 1e-13));
}

TEST_CASE("ln_multibeta small cases", "[specfun]") {
  std::vector<double> a{1, 1};
  CHECK_THAT(ln_multibeta(a), WithinAbs(0.0, 1e-14));
  a = {2, 1};
  CHECK_THAT(ln_multibeta(a), WithinAbs(-std::numbers::ln2, 1e-14));
  a = {1, 1, 1};
  CHECK_THAT(ln_multibeta(a), WithinAbs(-std::numbers::ln2, 1e-14));
}

TEST_CASE("ln_multibeta is symmetric", "[specfun][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a{std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng))};
    double const ref = ln_multibeta(a);
    std::shuffle(a.begin(), a.end(), rng);
    CHECK(close(ln_multibeta(a), ref, 1e-13));
  }
}

TEST_CASE("recurrences over [1e-4, 1e4]", "[specfun][property]") {
  for (double x : log_grid(1e-4, 1e4, 400)) {
    INFO("x = " << x);
    CHECK(close(digamma(x + 1.0), digamma(x) + 1.0 / x, 1e-10));
    CHECK(close(trigamma(x), trigamma(x + 1.0) + 1.0 / (x * x), 1e-10));
    CHECK(close(ln_gamma(x + 1.0), ln_gamma(x) + std::log(x), 1e-10));
  }
}

TEST_CASE("derivative chain lnΓ → ψ → ψ'", "[specfun][property]") {
  for (double x : log_grid(0.05, 1e3, 120)) {
    INFO("x = " << x);
    double const h = 1e-5 * x;
    double const d1 = (ln_gamma(x + h) - ln_gamma(x - h)) / (2 * h);
    double const d2 = (digamma(x + h) - digamma(x - h)) / (2 * h);
    CHECK_THAT(d1, WithinRel(digamma(x), 1e-6) || WithinAbs(digamma(x), 1e-6));
    CHECK_THAT(d2, WithinRel(trigamma(x), 1e-6));
  }
}

TEST_CASE("agreement with Boost.Math", "[specfun]") {
  for (double x : log_grid(1e-3, 1e6, 300)) {
    INFO("x = " << x);
    CHECK(close(ln_gamma(x), boost::math::lgamma(x), 1e-14));
    CHECK(close(digamma(x), boost::math::digamma(x), 1e-13));
    CHECK_THAT(trigamma(x), WithinRel(boost::math::trigamma(x), 1e-13));
  }
}

TEST_CASE("shifted differences against 50-digit arithmetic", "[specfun]") {
  std::vector<double> as{1e-8, 1e-3, 0.3, 1.0, 7.5, 42.0, 1e3, 1e6, 1e12, 1e17};
  std::vector<std::int64_t> ks{0, 1, 2, 5, 16, 17, 50, 1000, 100000};
  for (double a : as) {
    for (std::int64_t k : ks) {
      INFO("a = " << a << ", k = " << k);
      big const A(a);
      big const B = A + big(k);
      double const lp = static_cast<double>(boost::multiprecision::lgamma(B) -
                                            boost::multiprecision::lgamma(A));
      double const dd = static_cast<double>(boost::math::digamma(B) - boost::math::digamma(A));
      double const td = static_cast<double>(boost::math::trigamma(B) - boost::math::trigamma(A));
      CHECK(close(ln_pochhammer(a, k), lp, 1e-13));
      CHECK_THAT(digamma_delta(a, k), WithinRel(dd, 1e-12) || WithinAbs(dd, 1e-300));
      CHECK_THAT(trigamma_delta(a, k), WithinRel(td, 1e-12) || WithinAbs(td, 1e-300));
    }
  }
}

TEST_CASE("shifted differences are continuous at the direct-sum cutoff", "[specfun]") {
  for (double a : {0.2, 3.0, 11.0, 1e5}) {
    double const via_17 = ln_pochhammer(a, 17);
    double const via_16 = ln_pochhammer(a, 16) + std::log(a + 16.0);
    CHECK(close(via_17, via_16, 1e-14));
    CHECK_THAT(digamma_delta(a, 17), WithinRel(digamma_delta(a, 16) + 1.0 / (a + 16.0), 1e-14));
  }
}

TEST_CASE("non-positive arguments throw", "[specfun]") {
  CHECK_THROWS_AS(ln_gamma(0.0), prefmix::DomainError);
  CHECK_THROWS_AS(digamma(-1.0), prefmix::DomainError);
  CHECK_THROWS_AS(trigamma(std::nan("")), prefmix::DomainError);
  CHECK_THROWS_AS(ln_pochhammer(0.0, 3), prefmix::DomainError);
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(ln_multibeta(one), prefmix::DomainError);
}

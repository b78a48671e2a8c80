#pragma once

// Log-gamma, digamma and trigamma for strictly positive real arguments,
// plus the shifted differences lnΓ(a+k)-lnΓ(a), ψ(a+k)-ψ(a), ψ'(a+k)-ψ'(a)
// for integer k. The differences are what the likelihood actually needs and
// are evaluated without forming the two large terms separately, so they stay
// accurate for concentrations up to ~1e17.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>

#include "prefmix/error.hpp"

namespace prefmix::specfun {

namespace detail {

// Arguments at or above this value go straight to the asymptotic series.
inline constexpr double kAsymptoticFloor = 10.0;
// Differences with k at or below this are summed term by term.
inline constexpr std::int64_t kDirectSumMax = 16;

inline void check_arg(double x, char const* fn) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
}

// Stirling correction: lnΓ(x) = (x-1/2)ln x - x + ln(2π)/2 + stirling_tail(x).
inline double stirling_tail(double x) {
  double const r = 1.0 / x;
  double const r2 = r * r;
  return r * (1.0 / 12.0 +
              r2 * (-1.0 / 360.0 +
                    r2 * (1.0 / 1260.0 +
                          r2 * (-1.0 / 1680.0 +
                                r2 * (1.0 / 1188.0 +
                                      r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))));
}

// ψ(x) = ln x - 1/(2x) - digamma_tail(x).
inline double digamma_tail(double x) {
  double const r2 = 1.0 / (x * x);
  return r2 * (1.0 / 12.0 +
               r2 * (-1.0 / 120.0 +
                     r2 * (1.0 / 252.0 +
                           r2 * (-1.0 / 240.0 +
                                 r2 * (1.0 / 132.0 +
                                       r2 * (-691.0 / 32760.0 + r2 * (1.0 / 12.0)))))));
}

// ψ'(x) = 1/x + 1/(2x²) + trigamma_tail(x).
inline double trigamma_tail(double x) {
  double const r = 1.0 / x;
  double const r2 = r * r;
  return r * r2 *
         (1.0 / 6.0 +
          r2 * (-1.0 / 30.0 +
                r2 * (1.0 / 42.0 +
                      r2 * (-1.0 / 30.0 +
                            r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0 + r2 * (7.0 / 6.0)))))));
}

}  // namespace detail

/// Natural log of Γ(x) for x > 0.
inline double ln_gamma(double x) {
  detail::check_arg(x, "ln_gamma");
  double shift = 0.0;
  if (x < detail::kAsymptoticFloor) {
    double prod = 1.0;
    while (x < detail::kAsymptoticFloor) {
      prod *= x;
      x += 1.0;
    }
    shift = std::log(prod);
  }
  constexpr double half_ln_2pi = 0.91893853320467274178;
  return (x - 0.5) * std::log(x) - x + half_ln_2pi + detail::stirling_tail(x) - shift;
}

/// ψ(x) = d/dx lnΓ(x), x > 0.
inline double digamma(double x) {
  detail::check_arg(x, "digamma");
  double acc = 0.0;
  while (x < detail::kAsymptoticFloor) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  return acc + std::log(x) - 0.5 / x - detail::digamma_tail(x);
}

/// ψ'(x), x > 0.
inline double trigamma(double x) {
  detail::check_arg(x, "trigamma");
  double acc = 0.0;
  while (x < detail::kAsymptoticFloor) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  return acc + 1.0 / x + 0.5 / (x * x) + detail::trigamma_tail(x);
}

/// lnΓ(a+k) - lnΓ(a), the log of the rising factorial a(a+1)...(a+k-1).
inline double ln_pochhammer(double a, std::int64_t k) {
  detail::check_arg(a, "ln_pochhammer");
  double acc = 0.0;
  if (k <= detail::kDirectSumMax) {
    for (std::int64_t j = 0; j < k; ++j) acc += std::log(a + static_cast<double>(j));
    return acc;
  }
  while (a < detail::kAsymptoticFloor && k > 0) {
    acc += std::log(a);
    a += 1.0;
    --k;
  }
  if (k == 0) return acc;
  double const kd = static_cast<double>(k);
  double const b = a + kd;
  // (b-1/2)ln b - (a-1/2)ln a - k, rearranged so nothing of size a ln a cancels.
  double const head = (a - 0.5) * std::log1p(kd / a) + kd * std::log(b) - kd;
  return acc + head + (detail::stirling_tail(b) - detail::stirling_tail(a));
}

/// ψ(a+k) - ψ(a) = Σ_{j<k} 1/(a+j).
inline double digamma_delta(double a, std::int64_t k) {
  detail::check_arg(a, "digamma_delta");
  double acc = 0.0;
  if (k <= detail::kDirectSumMax) {
    for (std::int64_t j = 0; j < k; ++j) acc += 1.0 / (a + static_cast<double>(j));
    return acc;
  }
  while (a < detail::kAsymptoticFloor && k > 0) {
    acc += 1.0 / a;
    a += 1.0;
    --k;
  }
  if (k == 0) return acc;
  double const kd = static_cast<double>(k);
  double const b = a + kd;
  return acc + std::log1p(kd / a) + 0.5 * kd / (a * b) -
         (detail::digamma_tail(b) - detail::digamma_tail(a));
}

/// ψ'(a+k) - ψ'(a) = -Σ_{j<k} 1/(a+j)²; always ≤ 0.
inline double trigamma_delta(double a, std::int64_t k) {
  detail::check_arg(a, "trigamma_delta");
  double acc = 0.0;
  if (k <= detail::kDirectSumMax) {
    for (std::int64_t j = 0; j < k; ++j) {
      double const t = a + static_cast<double>(j);
      acc -= 1.0 / (t * t);
    }
    return acc;
  }
  while (a < detail::kAsymptoticFloor && k > 0) {
    acc -= 1.0 / (a * a);
    a += 1.0;
    --k;
  }
  if (k == 0) return acc;
  double const kd = static_cast<double>(k);
  double const b = a + kd;
  double const ab = a * b;
  return acc - kd / ab - 0.5 * kd * (a + b) / (ab * ab) +
         (detail::trigamma_tail(b) - detail::trigamma_tail(a));
}

/// ln B(a) = Σ_s lnΓ(a_s) - lnΓ(Σ_s a_s).
inline double ln_multibeta(std::span<double const> a) {
  if (a.size() < 2) throw DomainError("ln_multibeta: need at least two components");
  double sum = 0.0;
  double acc = 0.0;
  for (double v : a) {
    detail::check_arg(v, "ln_multibeta");
    acc += ln_gamma(v);
    sum += v;
  }
  return acc - ln_gamma(sum);
}

}  // namespace prefmix::specfun

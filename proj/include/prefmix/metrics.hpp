#pragma once

// Point-estimate summaries of fitted Dirichlet preference distributions.

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "prefmix/error.hpp"
#include "prefmix/likelihood.hpp"
#include "prefmix/network.hpp"
#include "prefmix/specfun.hpp"

namespace prefmix::metrics {

namespace detail {

inline double checked_sum(Vector const& alpha) {
  if (alpha.size() == 0) throw DomainError("empty Dirichlet parameter vector");
  for (Eigen::Index s = 0; s < alpha.size(); ++s)
    if (!(alpha[s] > 0.0) || !std::isfinite(alpha[s]))
      throw DomainError("Dirichlet parameters must be positive and finite");
  return alpha.sum();
}

inline void check_dims(std::vector<Vector> const& alpha, std::size_t groups) {
  if (alpha.size() != groups) throw DomainError("group count mismatch between α and summary");
  for (auto const& a : alpha)
    if (static_cast<std::size_t>(a.size()) != groups)
      throw DomainError("each α_r must have one entry per group");
}

}  // namespace detail

/// E[x] = α/α₀.
inline Vector dirichlet_mean(Vector const& alpha) { return alpha / detail::checked_sum(alpha); }

/// E‖x - E[x]‖² = (1 - Σ_s (α_s/α₀)²)/(α₀ + 1).
inline double dirichlet_sigma2(Vector const& alpha) {
  double const a0 = detail::checked_sum(alpha);
  return (1.0 - (alpha / a0).squaredNorm()) / (a0 + 1.0);
}

/// V_r = 1/(α₀ + 1), the variance relative to its maximum at this mean.
inline double normalized_variance(Vector const& alpha) {
  return 1.0 / (detail::checked_sum(alpha) + 1.0);
}

/// a = Σ_r p_r α_rr/α_r0.
inline double assortativity_point(std::vector<Vector> const& alpha, GroupSummary const& summary) {
  detail::check_dims(alpha, summary.p.size());
  double a = 0.0;
  for (std::size_t r = 0; r < alpha.size(); ++r)
    a += summary.p[r] * alpha[r][r] / detail::checked_sum(alpha[r]);
  return a;
}

/// a_null = Σ_r p_r K_r/m.
inline double null_assortativity(GroupSummary const& summary) {
  if (summary.m <= 0) throw DomainError("null assortativity needs at least one edge");
  double a = 0.0;
  for (std::size_t r = 0; r < summary.p.size(); ++r)
    a += summary.p[r] * static_cast<double>(summary.K[r]) / static_cast<double>(summary.m);
  return a;
}

/// D = Σ_r p_r (1 - K_r/m), the normalizer of R. Zero for a single group.
inline double assortativity_normalizer(GroupSummary const& summary) {
  if (summary.m <= 0) throw DomainError("normalizer needs at least one edge");
  double d = 0.0;
  for (std::size_t r = 0; r < summary.p.size(); ++r)
    d += summary.p[r] * (1.0 - static_cast<double>(summary.K[r]) / static_cast<double>(summary.m));
  return d;
}

/// R = (a - a_null)/D; nullopt when D vanishes (single-group networks).
inline std::optional<double> R_point(std::vector<Vector> const& alpha,
                                     GroupSummary const& summary) {
  double const d = assortativity_normalizer(summary);
  if (!(d > 0.0)) return std::nullopt;
  return (assortativity_point(alpha, summary) - null_assortativity(summary)) / d;
}

/// V = Σ_r p_r/(α_r0 + 1).
inline double V_point(std::vector<Vector> const& alpha, std::span<double const> p) {
  if (alpha.size() != p.size()) throw DomainError("group count mismatch between α and p");
  double v = 0.0;
  for (std::size_t r = 0; r < alpha.size(); ++r) v += p[r] * normalized_variance(alpha[r]);
  return v;
}

/// Density of coordinate s of Dirichlet(α), which is Beta(α_s, α₀ - α_s).
inline std::vector<std::pair<double, double>> beta_marginal_curve(Vector const& alpha,
                                                                  std::size_t s,
                                                                  std::span<double const> grid) {
  double const a0 = detail::checked_sum(alpha);
  if (s >= static_cast<std::size_t>(alpha.size())) throw DomainError("target group out of range");
  if (alpha.size() < 2) throw DomainError("marginal needs at least two components");
  double const a = alpha[s];
  double const b = a0 - a;
  if (!(b > 0.0)) throw DomainError("degenerate marginal: α₀ - α_s must be positive");
  double const ln_norm = specfun::ln_gamma(a0) - specfun::ln_gamma(a) - specfun::ln_gamma(b);
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double x : grid) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("grid points must lie strictly inside (0, 1)");
    out.emplace_back(x, std::exp(ln_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x)));
  }
  return out;
}

/// `points` midpoints of a uniform partition of (0, 1).
inline std::vector<double> uniform_grid(std::size_t points) {
  if (points < 2) throw DomainError("grid needs at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = (static_cast<double>(i) + 0.5) / points;
  return g;
}

}  // namespace prefmix::metrics

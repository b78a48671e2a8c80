#pragma once

// Regularized integrated log-likelihood of one group's count vectors under a
// Dirichlet(e^y) preference distribution:
//
//   L(y) = Σ_i [ln B(e^y + k_i) - ln B(e^y)] - λ Σ_s y_s²
//
// with its analytic gradient and Hessian in the log-parameters y. Values are
// reported up to the additive normalization constant of the edge model, which
// never depends on y.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prefmix/error.hpp"
#include "prefmix/network.hpp"
#include "prefmix/specfun.hpp"

namespace prefmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default regularization strength: a N(0, 8²) prior on each y_s.
inline constexpr double kDefaultLambda = 1.0 / 128.0;
/// |y_s| above this is rejected; e^40 ≈ 2.4e17.
inline constexpr double kLogParamBound = 40.0;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double const t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// The data one group contributes to the objective. Identical count vectors
/// are merged into a single weighted row and all-zero rows are dropped, since
/// neither changes the objective.
class GroupObjectiveContext {
 public:
  struct Row {
    std::vector<Count> k;
    Count total = 0;
    double weight = 0.0;
  };

  GroupObjectiveContext(std::size_t groups, double lambda) : groups_(groups), lambda_(lambda) {
    if (groups_ == 0) throw DomainError("group count must be positive");
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
      throw DomainError("regularization strength must be positive");
  }

  GroupObjectiveContext(std::size_t groups, double lambda,
                        std::vector<std::vector<Count>> const& counts)
      : GroupObjectiveContext(groups, lambda) {
    for (auto const& k : counts) add(k);
  }

  /// Context for group `r` of a counts table.
  static GroupObjectiveContext from_table(CountsTable const& table, GroupId r, double lambda) {
    GroupObjectiveContext ctx(table.groups, lambda);
    for (NodeId i : table.by_group.at(r)) ctx.add(table.row(i));
    return ctx;
  }

  void add(std::span<Count const> k) {
    if (k.size() != groups_) throw DomainError("count vector length differs from group count");
    ++nodes_;
    Count total = 0;
    for (Count v : k) {
      if (v < 0) throw DomainError("negative count in count vector");
      total += v;
    }
    if (total == 0) return;
    std::vector<Count> key(k.begin(), k.end());
    auto [it, inserted] = index_.try_emplace(std::move(key), rows_.size());
    if (inserted) rows_.push_back(Row{it->first, total, 0.0});
    rows_[it->second].weight += 1.0;
  }
  void add(std::vector<Count> const& k) { add(std::span<Count const>(k)); }

  std::size_t groups() const { return groups_; }
  double lambda() const { return lambda_; }
  /// Nodes added, including zero-degree ones.
  std::size_t node_count() const { return nodes_; }
  std::vector<Row> const& rows() const { return rows_; }

 private:
  std::size_t groups_;
  double lambda_;
  std::size_t nodes_ = 0;
  std::vector<Row> rows_;
  std::map<std::vector<Count>, std::size_t> index_;
};

namespace detail {

inline void check_log_params(Vector const& y, GroupObjectiveContext const& ctx) {
  if (static_cast<std::size_t>(y.size()) != ctx.groups())
    throw DomainError("log-parameter vector has length " + std::to_string(y.size()) +
                      ", expected " + std::to_string(ctx.groups()));
  for (Eigen::Index s = 0; s < y.size(); ++s)
    if (!std::isfinite(y[s]) || std::abs(y[s]) > kLogParamBound)
      throw DomainError("log-parameter y[" + std::to_string(s) + "] = " + std::to_string(y[s]) +
                        " outside [-40, 40]");
}

}  // namespace detail

/// True when every |y_s| ≤ 40 and finite.
inline bool in_domain(Vector const& y) {
  return y.allFinite() && (y.array().abs() <= kLogParamBound).all();
}

inline double log_lik(Vector const& y, GroupObjectiveContext const& ctx) {
  detail::check_log_params(y, ctx);
  std::size_t const c = ctx.groups();
  Vector const a = y.array().exp();
  double const a0 = a.sum();
  CompensatedSum acc;
  for (auto const& row : ctx.rows()) {
    double term = -specfun::ln_pochhammer(a0, row.total);
    for (std::size_t s = 0; s < c; ++s)
      if (row.k[s] > 0) term += specfun::ln_pochhammer(a[s], row.k[s]);
    acc.add(row.weight * term);
  }
  return acc.value() - ctx.lambda() * y.squaredNorm();
}

namespace detail {

// Σ_i [ψ(a_s+k_is) - ψ(a_s) - ψ(a0+k_i) + ψ(a0)] per component.
inline Vector digamma_brackets(Vector const& a, GroupObjectiveContext const& ctx) {
  std::size_t const c = ctx.groups();
  double const a0 = a.sum();
  std::vector<CompensatedSum> acc(c);
  for (auto const& row : ctx.rows()) {
    double const total = specfun::digamma_delta(a0, row.total);
    for (std::size_t s = 0; s < c; ++s) {
      double const own = row.k[s] > 0 ? specfun::digamma_delta(a[s], row.k[s]) : 0.0;
      acc[s].add(row.weight * (own - total));
    }
  }
  Vector g(c);
  for (std::size_t s = 0; s < c; ++s) g[s] = acc[s].value();
  return g;
}

}  // namespace detail

inline Vector grad(Vector const& y, GroupObjectiveContext const& ctx) {
  detail::check_log_params(y, ctx);
  Vector const a = y.array().exp();
  return a.cwiseProduct(detail::digamma_brackets(a, ctx)) - 2.0 * ctx.lambda() * y;
}

inline Matrix hess(Vector const& y, GroupObjectiveContext const& ctx) {
  detail::check_log_params(y, ctx);
  std::size_t const c = ctx.groups();
  Vector const a = y.array().exp();
  double const a0 = a.sum();
  Vector const g = detail::digamma_brackets(a, ctx);

  std::vector<CompensatedSum> diag(c);
  CompensatedSum shared;  // Σ_i [ψ'(a0) - ψ'(a0+k_i)]
  for (auto const& row : ctx.rows()) {
    double const total = specfun::trigamma_delta(a0, row.total);
    shared.add(-row.weight * total);
    for (std::size_t s = 0; s < c; ++s) {
      double const own = row.k[s] > 0 ? specfun::trigamma_delta(a[s], row.k[s]) : 0.0;
      diag[s].add(row.weight * (own - total));
    }
  }

  Matrix h(c, c);
  double const off = shared.value();
  for (std::size_t s = 0; s < c; ++s) {
    for (std::size_t t = 0; t < s; ++t) {
      double const v = a[s] * a[t] * off;
      h(s, t) = v;
      h(t, s) = v;
    }
    h(s, s) = a[s] * g[s] + a[s] * a[s] * diag[s].value() - 2.0 * ctx.lambda();
  }
  return h;
}

}  // namespace prefmix

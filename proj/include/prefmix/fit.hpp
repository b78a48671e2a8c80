#pragma once

// Per-group maximization of the regularized objective by damped Newton ascent.

#include <cmath>
#include <concepts>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "prefmix/error.hpp"
#include "prefmix/likelihood.hpp"
#include "prefmix/network.hpp"

namespace prefmix {

struct FitOptions {
  double lambda = kDefaultLambda;
  double grad_tol = 1e-8;
  int max_iter = 500;
  /// Empty means start at y = 0 (the flat Dirichlet).
  Vector init_y;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
    if (!(grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  }
};

/// A smooth objective to maximize over an open box of log-parameters.
template <class F>
concept SmoothObjective = requires(F const& f, Vector const& y) {
  { f.value(y) } -> std::convertible_to<double>;
  { f.gradient(y) } -> std::convertible_to<Vector>;
  { f.hessian(y) } -> std::convertible_to<Matrix>;
  { f.admissible(y) } -> std::convertible_to<bool>;
};

struct MaximizeResult {
  Vector y;
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline std::string format_vector(Vector const& y) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ')';
  return os.str();
}

// Solves (-H + τI) d = g with the smallest τ in {0, 1e-8, 2e-8, ...} that
// makes the shifted matrix positive definite.
inline Vector damped_newton_direction(Matrix const& h, Vector const& g) {
  Matrix const neg = -h;
  Eigen::LLT<Matrix> llt(neg);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  Matrix const eye = Matrix::Identity(h.rows(), h.cols());
  for (double tau = 1e-8; std::isfinite(tau); tau *= 2.0) {
    llt.compute(neg + tau * eye);
    if (llt.info() == Eigen::Success) return llt.solve(g);
  }
  return g;
}

}  // namespace detail

/// Relative width of the band in which two objective values are treated as
/// equal up to rounding.
inline constexpr double kRoundingBand = 1e-12;

/// Newton ascent with eigenvalue-shift damping and halving backtracking.
/// A step is accepted when it does not decrease the objective, or when it
/// stays within the rounding band and reduces the gradient. After 50 failed
/// halvings of the Newton step a plain gradient step is tried the same way;
/// if that fails too the iteration stops unconverged.
template <SmoothObjective F>
MaximizeResult maximize(F const& f, Vector y, double grad_tol, int max_iter) {
  constexpr int kMaxHalvings = 50;
  auto checked_value = [&](Vector const& at) {
    double const v = f.value(at);
    if (!std::isfinite(v))
      throw NumericalError("objective is not finite at y = " + detail::format_vector(at));
    return v;
  };
  if (!f.admissible(y))
    throw DomainError("starting point outside the supported domain: " + detail::format_vector(y));

  MaximizeResult res;
  double value = checked_value(y);
  Vector g = f.gradient(y);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < grad_tol) {
      res.converged = true;
      break;
    }
    Matrix const h = f.hessian(y);

    // Close to the optimum the gain of a step drops below the rounding error
    // of the objective. Inside this band a step is judged by the gradient.
    double const noise = kRoundingBand * (1.0 + std::abs(value));
    double const g_norm = g.lpNorm<Eigen::Infinity>();
    auto line_search = [&](Vector const& dir) -> bool {
      double step = 1.0;
      for (int k = 0; k <= kMaxHalvings; ++k, step *= 0.5) {
        Vector const trial = y + step * dir;
        if (!f.admissible(trial)) continue;
        double const v = checked_value(trial);
        if (v >= value) {
          y = trial;
          value = v;
          g = f.gradient(y);
          return true;
        }
        if (v >= value - noise) {
          Vector gt = f.gradient(trial);
          if (gt.lpNorm<Eigen::Infinity>() < g_norm) {
            y = trial;
            value = v;
            g = std::move(gt);
            return true;
          }
        }
      }
      return false;
    };

    if (!line_search(detail::damped_newton_direction(h, g)) && !line_search(g)) break;
  }
  if (!res.converged && g.lpNorm<Eigen::Infinity>() < grad_tol) res.converged = true;

  res.y = std::move(y);
  res.value = value;
  res.gradient = std::move(g);
  res.hessian = f.hessian(res.y);
  res.iterations = it;
  return res;
}

/// L_r as a SmoothObjective.
class GroupObjective {
 public:
  explicit GroupObjective(GroupObjectiveContext const& ctx) : ctx_(&ctx) {}
  double value(Vector const& y) const { return log_lik(y, *ctx_); }
  Vector gradient(Vector const& y) const { return grad(y, *ctx_); }
  Matrix hessian(Vector const& y) const { return hess(y, *ctx_); }
  bool admissible(Vector const& y) const { return in_domain(y); }
  GroupObjectiveContext const& context() const { return *ctx_; }

 private:
  GroupObjectiveContext const* ctx_;
};

struct GroupFit {
  Vector y_hat;
  Vector alpha_hat;
  /// -H(ŷ)⁻¹; empty when not converged.
  Matrix sigma;
  /// ln det(-H(ŷ)), used by the Laplace ratio.
  double log_det_neg_hessian = 0.0;
  double log_lik_at_max = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Set for groups with no count rows: the fit is the regularizer's mode.
  bool prior_only = false;
};

namespace detail {

// Returns ln det(-h), or throws when -h is not positive definite.
inline double neg_hessian_log_det(Matrix const& h, Matrix* inverse) {
  Eigen::LLT<Matrix> llt(-h);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Hessian is not negative definite at the optimum (degenerate posterior)");
  Matrix const& l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  if (!std::isfinite(log_det))
    throw NumericalError("Hessian is singular at the optimum (degenerate posterior)");
  if (inverse) *inverse = llt.solve(Matrix::Identity(h.rows(), h.cols()));
  return log_det;
}

}  // namespace detail

inline GroupFit fit_group(GroupObjectiveContext const& ctx, FitOptions const& opts = {}) {
  opts.validate();
  if (ctx.groups() < 1) throw DomainError("fit_group needs at least one group");
  Vector y0 = opts.init_y.size() ? opts.init_y : Vector::Zero(ctx.groups());
  GroupObjective objective(ctx);
  MaximizeResult m = maximize(objective, std::move(y0), opts.grad_tol, opts.max_iter);

  GroupFit fit;
  fit.y_hat = m.y;
  fit.alpha_hat = m.y.array().exp();
  fit.log_lik_at_max = m.value;
  fit.converged = m.converged;
  fit.iterations = m.iterations;
  fit.prior_only = ctx.rows().empty();
  if (fit.converged) fit.log_det_neg_hessian = detail::neg_hessian_log_det(m.hessian, &fit.sigma);
  return fit;
}

struct NetworkFit {
  std::vector<std::string> group_names;
  std::vector<GroupObjectiveContext> contexts;
  std::vector<GroupFit> fits;
  GroupSummary summary;
  double lambda = kDefaultLambda;

  bool all_converged() const {
    for (auto const& f : fits)
      if (!f.converged) return false;
    return true;
  }
  /// α̂ per group, one row per group.
  std::vector<Vector> alpha() const {
    std::vector<Vector> out;
    for (auto const& f : fits) out.push_back(f.alpha_hat);
    return out;
  }
};

/// Fits every group of `net` independently.
inline NetworkFit fit_all(LabeledNetwork const& net, FitOptions const& opts = {},
                          bool exclude_isolated = false) {
  opts.validate();
  NetworkFit out;
  out.group_names = net.group_names();
  out.summary = group_summary(net, exclude_isolated);
  out.lambda = opts.lambda;
  CountsTable const table = group_counts(net);
  for (GroupId r = 0; r < table.groups; ++r) {
    out.contexts.push_back(GroupObjectiveContext::from_table(table, r, opts.lambda));
    try {
      out.fits.push_back(fit_group(out.contexts.back(), opts));
    } catch (Error const& e) {
      throw NumericalError("group '" + out.group_names[r] + "': " + e.what());
    }
  }
  return out;
}

}  // namespace prefmix

#pragma once

// Posterior means and standard deviations of R and V. Each group's posterior
// expectation ⟨F_r⟩ is a ratio of two integrals over y, both evaluated with
// Laplace's method:
//
//   ⟨F_r⟩ ≈ sqrt(det Σ*/det Σ) · exp[L*(ŷ*) - L(ŷ)],   L* = L + ln F_r.
//
// The posterior factorizes over groups, so group-level moments combine with
// zero cross-covariance.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prefmix/error.hpp"
#include "prefmix/fit.hpp"
#include "prefmix/likelihood.hpp"
#include "prefmix/metrics.hpp"

namespace prefmix {

/// Which group-level functional F_r is averaged.
enum class Functional {
  preference,  ///< α_rr/α_r0 = e^{y_r}/Σ_s e^{y_s}
  variance,    ///< V_r = 1/(1 + Σ_s e^{y_s})
  unit,        ///< F ≡ 1; the ratio is exactly one
};

struct LogWeight {
  Functional functional = Functional::unit;
  /// Group index picked out by `preference`.
  std::size_t index = 0;
  /// 1 for the mean, 2 for the second moment.
  int power = 1;

  double value(Vector const& y) const {
    switch (functional) {
      case Functional::preference: {
        double const mx = y.maxCoeff();
        double const lse = mx + std::log((y.array() - mx).exp().sum());
        return power * (y[static_cast<Eigen::Index>(index)] - lse);
      }
      case Functional::variance:
        return -power * std::log1p(y.array().exp().sum());
      case Functional::unit:
        return 0.0;
    }
    return 0.0;
  }

  Vector gradient(Vector const& y) const {
    switch (functional) {
      case Functional::preference: {
        Vector g = -softmax(y);
        g[static_cast<Eigen::Index>(index)] += 1.0;
        return power * g;
      }
      case Functional::variance: {
        Vector const a = y.array().exp();
        return -power * a / (1.0 + a.sum());
      }
      case Functional::unit:
        return Vector::Zero(y.size());
    }
    return Vector::Zero(y.size());
  }

  Matrix hessian(Vector const& y) const {
    switch (functional) {
      case Functional::preference: {
        Vector const pi = softmax(y);
        Matrix h = pi * pi.transpose();
        h.diagonal() -= pi;
        return power * h;
      }
      case Functional::variance: {
        Vector const a = y.array().exp();
        double const d = 1.0 + a.sum();
        Matrix h = (a * a.transpose()) / (d * d);
        h.diagonal() -= a / d;
        return power * h;
      }
      case Functional::unit:
        return Matrix::Zero(y.size(), y.size());
    }
    return Matrix::Zero(y.size(), y.size());
  }

  static Vector softmax(Vector const& y) {
    Vector e = (y.array() - y.maxCoeff()).exp();
    return e / e.sum();
  }
};

/// L*_r(y) = L_r(y) + ln F_r(y).
class TiltedObjective {
 public:
  TiltedObjective(GroupObjectiveContext const& ctx, LogWeight w) : base_(ctx), w_(w) {}
  double value(Vector const& y) const { return base_.value(y) + w_.value(y); }
  Vector gradient(Vector const& y) const { return base_.gradient(y) + w_.gradient(y); }
  Matrix hessian(Vector const& y) const { return base_.hessian(y) + w_.hessian(y); }
  bool admissible(Vector const& y) const { return base_.admissible(y); }

 private:
  GroupObjective base_;
  LogWeight w_;
};

struct LaplaceOptions {
  double grad_tol = 1e-8;
  int max_iter = 500;
};

/// ⟨F_r⟩ under the group posterior by the Laplace ratio.
inline double laplace_mean(LogWeight const& weight, GroupObjectiveContext const& ctx,
                           GroupFit const& base, LaplaceOptions const& opts = {}) {
  if (!base.converged) throw NumericalError("posterior requires a converged fit");
  if (weight.functional == Functional::unit) return 1.0;
  if (weight.functional == Functional::preference && weight.index >= ctx.groups())
    throw DomainError("preference index out of range");
  TiltedObjective tilted(ctx, weight);
  MaximizeResult star = maximize(tilted, base.y_hat, opts.grad_tol, opts.max_iter);
  if (!star.converged)
    throw NumericalError("maximization of the tilted objective did not converge");
  double const log_det_star = detail::neg_hessian_log_det(star.hessian, nullptr);
  double const log_ratio = 0.5 * (base.log_det_neg_hessian - log_det_star) + star.value -
                           base.log_lik_at_max;
  return std::exp(log_ratio);
}

struct Moments {
  double mean = 0.0;
  double second = 0.0;
  double variance() const { return second - mean * mean; }
};

inline Moments laplace_moments(Functional f, std::size_t index, GroupObjectiveContext const& ctx,
                               GroupFit const& base, LaplaceOptions const& opts = {}) {
  return {laplace_mean({f, index, 1}, ctx, base, opts),
          laplace_mean({f, index, 2}, ctx, base, opts)};
}

enum class Method { laplace, quadrature_oracle };

struct PosteriorEstimate {
  double mean = 0.0;
  double std = 0.0;
  Method method = Method::laplace;
};

enum class MetricKind { R, V };

struct GroupPosterior {
  Moments preference;  // of α_rr/α_r0
  Moments variance;    // of V_r
};

struct PosteriorReport {
  /// Empty when R is undefined (single group).
  std::optional<PosteriorEstimate> R;
  PosteriorEstimate V;
  std::vector<GroupPosterior> groups;
  std::vector<std::string> warnings;
};

namespace detail {

// Posterior variances can come out slightly negative from the two Laplace
// approximations; anything below zero is clamped.
inline double clamped_variance(double v, std::string const& what,
                               std::vector<std::string>& warnings) {
  if (v >= 0.0) return v;
  if (v < -1e-9) warnings.push_back(what + ": negative posterior variance " + std::to_string(v) +
                                    " clamped to 0");
  return 0.0;
}

}  // namespace detail

/// Posterior moments for every group of a converged network fit.
inline std::vector<GroupPosterior> group_posteriors(NetworkFit const& nf,
                                                    LaplaceOptions const& opts = {}) {
  if (!nf.all_converged()) throw NumericalError("posterior requires every group fit to converge");
  std::vector<GroupPosterior> out;
  for (std::size_t r = 0; r < nf.fits.size(); ++r) {
    try {
      out.push_back({laplace_moments(Functional::preference, r, nf.contexts[r], nf.fits[r], opts),
                     laplace_moments(Functional::variance, r, nf.contexts[r], nf.fits[r], opts)});
    } catch (Error const& e) {
      throw NumericalError("group '" + nf.group_names[r] + "': " + e.what());
    }
  }
  return out;
}

/// Combines group moments into the network-level estimate of R or V.
inline std::optional<PosteriorEstimate> combine(MetricKind kind,
                                                std::vector<GroupPosterior> const& groups,
                                                GroupSummary const& summary,
                                                std::vector<std::string>* warnings = nullptr) {
  std::vector<std::string> sink;
  auto& warn = warnings ? *warnings : sink;
  if (groups.size() != summary.p.size()) throw DomainError("group count mismatch");
  double mean = 0.0;
  double var = 0.0;
  if (kind == MetricKind::V) {
    for (std::size_t r = 0; r < groups.size(); ++r) {
      double const p = summary.p[r];
      mean += p * groups[r].variance.mean;
      var += p * p * detail::clamped_variance(groups[r].variance.variance(),
                                              "V_r of group " + std::to_string(r), warn);
    }
    return PosteriorEstimate{mean, std::sqrt(var), Method::laplace};
  }
  double const d = metrics::assortativity_normalizer(summary);
  if (!(d > 0.0)) return std::nullopt;
  double const m = static_cast<double>(summary.m);
  for (std::size_t r = 0; r < groups.size(); ++r) {
    double const p = summary.p[r];
    mean += p * (groups[r].preference.mean - static_cast<double>(summary.K[r]) / m);
    var += p * p * detail::clamped_variance(groups[r].preference.variance(),
                                            "a_r of group " + std::to_string(r), warn);
  }
  return PosteriorEstimate{mean / d, std::sqrt(var) / d, Method::laplace};
}

/// Posterior mean and standard deviation of R or V; nullopt for R on a single group.
inline std::optional<PosteriorEstimate> estimate_metric(MetricKind kind, NetworkFit const& nf,
                                                        LaplaceOptions const& opts = {}) {
  return combine(kind, group_posteriors(nf, opts), nf.summary);
}

inline PosteriorReport posterior_report(NetworkFit const& nf, LaplaceOptions const& opts = {}) {
  PosteriorReport rep;
  rep.groups = group_posteriors(nf, opts);
  rep.R = combine(MetricKind::R, rep.groups, nf.summary, &rep.warnings);
  rep.V = *combine(MetricKind::V, rep.groups, nf.summary, &rep.warnings);
  return rep;
}

}  // namespace prefmix

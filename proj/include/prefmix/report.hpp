#pragma once

// File formats: fit and metrics JSON, histogram and curve CSV.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "prefmix/error.hpp"
#include "prefmix/fit.hpp"
#include "prefmix/metrics.hpp"
#include "prefmix/posterior.hpp"

namespace prefmix::report {

using nlohmann::json;

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

inline json vector_json(Vector const& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json matrix_json(Matrix const& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline json fit_json(NetworkFit const& nf) {
  json doc;
  doc["groups"] = nf.group_names;
  doc["p"] = nf.summary.p;
  doc["K"] = nf.summary.K;
  doc["m"] = nf.summary.m;
  doc["lambda"] = nf.lambda;
  json fits = json::array();
  for (std::size_t r = 0; r < nf.fits.size(); ++r) {
    auto const& f = nf.fits[r];
    json g;
    g["group"] = nf.group_names[r];
    g["alpha"] = vector_json(f.alpha_hat);
    g["y"] = vector_json(f.y_hat);
    g["sigma"] = f.converged ? matrix_json(f.sigma) : json(nullptr);
    g["converged"] = f.converged;
    g["log_lik"] = f.log_lik_at_max;
    g["iterations"] = f.iterations;
    g["prior_only"] = f.prior_only;
    fits.push_back(std::move(g));
  }
  doc["fits"] = std::move(fits);
  return doc;
}

/// The parts of a fit document needed downstream of fitting.
struct FitDocument {
  std::vector<std::string> groups;
  std::vector<Vector> alpha;
  GroupSummary summary;
  double lambda = kDefaultLambda;
};

inline FitDocument parse_fit_json(json const& doc) {
  FitDocument out;
  try {
    out.groups = doc.at("groups").get<std::vector<std::string>>();
    out.summary.p = doc.at("p").get<std::vector<double>>();
    out.summary.K = doc.at("K").get<std::vector<Count>>();
    out.summary.m = doc.at("m").get<Count>();
    out.lambda = doc.at("lambda").get<double>();
    for (auto const& f : doc.at("fits")) {
      auto a = f.at("alpha").get<std::vector<double>>();
      out.alpha.push_back(Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size())));
    }
  } catch (json::exception const& e) {
    throw InputError(std::string("invalid fit document: ") + e.what());
  }
  if (out.alpha.size() != out.groups.size())
    throw InputError("fit document: 'fits' and 'groups' differ in length");
  return out;
}

inline json estimate_json(PosteriorEstimate const& e) {
  return json{{"mean", e.mean}, {"std", e.std}};
}

inline json metrics_json(NetworkFit const& nf, PosteriorReport const& rep) {
  auto const alpha = nf.alpha();
  json doc;
  if (rep.R) {
    doc["R"] = estimate_json(*rep.R);
  } else {
    doc["R"] = nullptr;
    doc["R_undefined_reason"] =
        "R is undefined for a single-group network: its normalizer sum_r p_r (1 - K_r/m) is zero";
  }
  doc["V"] = estimate_json(rep.V);
  doc["a"] = metrics::assortativity_point(alpha, nf.summary);
  doc["a_null"] = metrics::null_assortativity(nf.summary);
  if (auto r = metrics::R_point(alpha, nf.summary))
    doc["R_point"] = *r;
  else
    doc["R_point"] = nullptr;
  doc["V_point"] = metrics::V_point(alpha, nf.summary.p);
  json groups = json::array();
  for (std::size_t r = 0; r < nf.fits.size(); ++r) {
    auto const& gp = rep.groups[r];
    groups.push_back({{"group", nf.group_names[r]},
                      {"mean_preference", vector_json(metrics::dirichlet_mean(alpha[r]))},
                      {"V_r",
                       {{"mean", gp.variance.mean},
                        {"std", std::sqrt(std::max(0.0, gp.variance.variance()))}}}});
  }
  doc["per_group"] = std::move(groups);
  if (!rep.warnings.empty()) doc["warnings"] = rep.warnings;
  return doc;
}

struct HistogramRow {
  std::string group;
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
  double frequency = 0.0;
};

struct Histogram {
  std::vector<HistogramRow> rows;
  /// Groups in which every node had zero out-degree.
  std::vector<std::string> empty_groups;
};

/// Per-group histogram of k_is/k_i on `bins` equal bins over [0, 1], skipping
/// nodes with k_i = 0. `target` < 0 selects each node's own group.
inline Histogram naive_histogram(LabeledNetwork const& net, std::size_t bins, long target = -1) {
  if (bins < 2) throw DomainError("need at least two bins");
  if (target >= static_cast<long>(net.group_count())) throw DomainError("target group out of range");
  CountsTable const t = group_counts(net);
  Histogram h;
  for (GroupId r = 0; r < t.groups; ++r) {
    std::vector<std::size_t> counts(bins, 0);
    std::size_t total = 0;
    std::size_t const s = target < 0 ? r : static_cast<std::size_t>(target);
    for (NodeId i : t.by_group[r]) {
      Count const k = t.degree(i);
      if (k == 0) continue;
      double const v = static_cast<double>(t.row(i)[s]) / static_cast<double>(k);
      auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
      ++counts[std::min(b, bins - 1)];
      ++total;
    }
    if (total == 0) h.empty_groups.push_back(net.group_names()[r]);
    for (std::size_t b = 0; b < bins; ++b)
      h.rows.push_back({net.group_names()[r], static_cast<double>(b) / bins,
                        static_cast<double>(b + 1) / bins, counts[b],
                        total ? static_cast<double>(counts[b]) / total : 0.0});
  }
  return h;
}

inline void write_histogram_csv(Histogram const& h, std::ostream& out) {
  out << "group,bin_left,bin_right,count,frequency\n";
  for (auto const& r : h.rows)
    out << r.group << ',' << format_double(r.left) << ',' << format_double(r.right) << ','
        << r.count << ',' << format_double(r.frequency) << '\n';
}

struct CurveRow {
  std::string group;
  std::string target;
  double x = 0.0;
  double density = 0.0;
};

/// Marginal densities for every group and each requested target (all when empty).
inline std::vector<CurveRow> fitted_curves(FitDocument const& fit, std::size_t grid_points,
                                           std::vector<std::size_t> targets = {}) {
  auto const grid = metrics::uniform_grid(grid_points);
  if (targets.empty())
    for (std::size_t s = 0; s < fit.groups.size(); ++s) targets.push_back(s);
  std::vector<CurveRow> rows;
  for (std::size_t r = 0; r < fit.groups.size(); ++r)
    for (std::size_t s : targets)
      for (auto const& [x, d] : metrics::beta_marginal_curve(fit.alpha[r], s, grid))
        rows.push_back({fit.groups[r], fit.groups[s], x, d});
  return rows;
}

inline void write_curves_csv(std::vector<CurveRow> const& rows, std::ostream& out) {
  out << "group,target_group,x,density\n";
  for (auto const& r : rows)
    out << r.group << ',' << r.target << ',' << format_double(r.x) << ','
        << format_double(r.density) << '\n';
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_atomically(std::filesystem::path const& path,
                             std::function<void(std::ostream&)> const& body) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open for writing", tmp.string());
    body(out);
    out.flush();
    if (!out) throw InputError("write failed", tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot rename into place: " + ec.message(), path.string());
  }
}

inline void write_json(std::filesystem::path const& path, json const& doc) {
  write_atomically(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

}  // namespace prefmix::report

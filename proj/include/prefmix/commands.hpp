#pragma once

// Batch commands behind the `prefmix` executable. Each returns the process
// exit code: 0 success, 1 input error, 2 numerical non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefmix/error.hpp"
#include "prefmix/fit.hpp"
#include "prefmix/generator.hpp"
#include "prefmix/network.hpp"
#include "prefmix/posterior.hpp"
#include "prefmix/report.hpp"

namespace prefmix::commands {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

struct RunConfig {
  std::filesystem::path edges;
  std::filesystem::path labels;
  std::filesystem::path input_json;  // combined network document, alternative to edges+labels
  std::filesystem::path fit_json;    // curves: reuse an existing fit
  std::filesystem::path spec;        // generate
  std::filesystem::path out;
  bool directed = false;
  bool keep_self_loops = true;
  bool exclude_isolated = false;
  double lambda = kDefaultLambda;
  std::optional<std::uint64_t> seed;
  std::size_t bins = 20;
  std::size_t grid = 256;
  std::set<std::string> drop;
  std::string target;  // hist/curves: restrict to one target group
  unsigned threads = 1;
};

inline LabeledNetwork load_network(RunConfig const& cfg) {
  ParseOptions opts{cfg.directed, cfg.drop, cfg.keep_self_loops};
  if (!cfg.input_json.empty()) {
    std::ifstream in(cfg.input_json);
    if (!in) throw InputError("cannot open", cfg.input_json.string());
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (nlohmann::json::exception const& e) {
      throw InputError(e.what(), cfg.input_json.string());
    }
    return parse_network_json(doc, opts, cfg.input_json.string());
  }
  if (cfg.edges.empty() || cfg.labels.empty())
    throw InputError("need --edges and --labels, or --input");
  std::ifstream e(cfg.edges), l(cfg.labels);
  if (!e) throw InputError("cannot open", cfg.edges.string());
  if (!l) throw InputError("cannot open", cfg.labels.string());
  return parse_network(e, l, opts, cfg.edges.string(), cfg.labels.string());
}

inline void require_out(RunConfig const& cfg) {
  if (cfg.out.empty()) throw InputError("missing --out");
}

inline void check_lambda(RunConfig const& cfg) {
  if (!(cfg.lambda > 0.0)) throw InputError("--lambda must be positive");
}

inline long resolve_target(std::vector<std::string> const& groups, std::string const& name) {
  if (name.empty()) return -1;
  for (std::size_t s = 0; s < groups.size(); ++s)
    if (groups[s] == name) return static_cast<long>(s);
  throw InputError("unknown target group '" + name + "'");
}

inline int cmd_fit(RunConfig const& cfg, std::ostream& log = std::cerr) {
  require_out(cfg);
  check_lambda(cfg);
  auto const net = load_network(cfg);
  FitOptions opts;
  opts.lambda = cfg.lambda;
  auto const nf = fit_all(net, opts, cfg.exclude_isolated);
  report::write_json(cfg.out, report::fit_json(nf));
  for (std::size_t r = 0; r < nf.fits.size(); ++r) {
    if (nf.fits[r].prior_only)
      log << "warning: group '" << nf.group_names[r] << "' has no edges; α fixed at the prior mode\n";
    if (!nf.fits[r].converged) log << "group '" << nf.group_names[r] << "' did not converge\n";
  }
  return nf.all_converged() ? kOk : kNotConverged;
}

inline int cmd_metrics(RunConfig const& cfg, std::ostream& log = std::cerr) {
  require_out(cfg);
  check_lambda(cfg);
  auto const net = load_network(cfg);
  FitOptions opts;
  opts.lambda = cfg.lambda;
  auto const nf = fit_all(net, opts, cfg.exclude_isolated);
  if (!nf.all_converged()) {
    for (std::size_t r = 0; r < nf.fits.size(); ++r)
      if (!nf.fits[r].converged) log << "group '" << nf.group_names[r] << "' did not converge\n";
    return kNotConverged;
  }
  auto const rep = posterior_report(nf);
  for (auto const& w : rep.warnings) log << "warning: " << w << '\n';
  report::write_json(cfg.out, report::metrics_json(nf, rep));
  return kOk;
}

/// Writes `<out>.edges.tsv` and `<out>.labels.tsv`. The edge list is directed.
inline int cmd_generate(RunConfig const& cfg, std::ostream& = std::cerr) {
  require_out(cfg);
  std::ifstream in(cfg.spec);
  if (!in) throw InputError("cannot open generator spec", cfg.spec.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (nlohmann::json::exception const& e) {
    throw InputError(e.what(), cfg.spec.string());
  }
  auto spec = GeneratorSpec::from_json(doc);
  if (cfg.seed) spec.seed = *cfg.seed;
  SampleOptions sopts;
  sopts.threads = cfg.threads;
  auto const net = sample_network(spec.params(), spec.seed, sopts);
  auto edges_path = cfg.out;
  edges_path += ".edges.tsv";
  auto labels_path = cfg.out;
  labels_path += ".labels.tsv";
  report::write_atomically(edges_path, [&](std::ostream& o) { write_edges(net, o); });
  report::write_atomically(labels_path, [&](std::ostream& o) { write_labels(net, o); });
  return kOk;
}

inline int cmd_hist(RunConfig const& cfg, std::ostream& log = std::cerr) {
  require_out(cfg);
  if (cfg.bins < 2) throw InputError("--bins must be at least 2");
  auto const net = load_network(cfg);
  auto const h =
      report::naive_histogram(net, cfg.bins, resolve_target(net.group_names(), cfg.target));
  for (auto const& g : h.empty_groups)
    log << "warning: every node in group '" << g << "' has zero out-degree; histogram is empty\n";
  report::write_atomically(cfg.out, [&](std::ostream& o) { report::write_histogram_csv(h, o); });
  return kOk;
}

inline int cmd_curves(RunConfig const& cfg, std::ostream& log = std::cerr) {
  require_out(cfg);
  if (cfg.grid < 2) throw InputError("--grid must be at least 2");
  report::FitDocument fit;
  if (!cfg.fit_json.empty()) {
    std::ifstream in(cfg.fit_json);
    if (!in) throw InputError("cannot open", cfg.fit_json.string());
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (nlohmann::json::exception const& e) {
      throw InputError(e.what(), cfg.fit_json.string());
    }
    fit = report::parse_fit_json(doc);
  } else {
    check_lambda(cfg);
    auto const net = load_network(cfg);
    FitOptions opts;
    opts.lambda = cfg.lambda;
    auto const nf = fit_all(net, opts, cfg.exclude_isolated);
    if (!nf.all_converged()) {
      log << "fit did not converge\n";
      return kNotConverged;
    }
    fit = report::parse_fit_json(report::fit_json(nf));
  }
  std::vector<std::size_t> targets;
  if (long t = resolve_target(fit.groups, cfg.target); t >= 0)
    targets.push_back(static_cast<std::size_t>(t));
  auto const rows = report::fitted_curves(fit, cfg.grid, targets);
  report::write_atomically(cfg.out, [&](std::ostream& o) { report::write_curves_csv(rows, o); });
  return kOk;
}

/// Runs `fn`, mapping exceptions onto exit codes.
template <class Fn>
int guarded(Fn&& fn, std::ostream& log = std::cerr) {
  try {
    return fn();
  } catch (InputError const& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (DomainError const& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (NumericalError const& e) {
    log << "error: " << e.what() << '\n';
    return kNotConverged;
  }
}

}  // namespace prefmix::commands

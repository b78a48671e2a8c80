#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "prefmix/commands.hpp"

namespace {

using prefmix::commands::RunConfig;

void network_inputs(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--edges", cfg.edges, "Edge list: one 'source target' pair per line");
  cmd->add_option("--labels", cfg.labels, "Label list: one 'node group' pair per line");
  cmd->add_option("--input", cfg.input_json, "Combined JSON network (instead of edges+labels)");
  cmd->add_flag("--directed", cfg.directed, "Treat edges as directed");
  cmd->add_option("--drop", cfg.drop, "Discard nodes with this label (repeatable)");
  cmd->add_flag("!--no-self-loops", cfg.keep_self_loops, "Ignore self-loops");
  cmd->add_flag("--exclude-isolated", cfg.exclude_isolated,
                "Leave zero-out-degree nodes out of the group fractions");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cmds = prefmix::commands;
  CLI::App app{"Individual mixing preferences in labeled networks"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* fit = app.add_subcommand("fit", "Fit per-group Dirichlet preference distributions");
  network_inputs(fit, cfg);
  fit->add_option("--lambda", cfg.lambda, "Regularization strength")->capture_default_str();

  auto* metrics = app.add_subcommand("metrics", "Posterior estimates of R and V");
  network_inputs(metrics, cfg);
  metrics->add_option("--lambda", cfg.lambda, "Regularization strength")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Sample a network from a generator spec");
  generate->add_option("--spec", cfg.spec, "Generator spec JSON")->required();
  generate->add_option("--seed", cfg.seed, "Override the spec's seed");
  generate->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();

  auto* hist = app.add_subcommand("hist", "Histograms of the naive ratio k_is/k_i per group");
  network_inputs(hist, cfg);
  hist->add_option("--bins", cfg.bins, "Number of bins on [0,1]")->capture_default_str();
  hist->add_option("--target", cfg.target, "Target group (default: each node's own group)");

  auto* curves = app.add_subcommand("curves", "Fitted marginal preference densities");
  network_inputs(curves, cfg);
  curves->add_option("--fit", cfg.fit_json, "Fit JSON from `fit` (skips refitting)");
  curves->add_option("--lambda", cfg.lambda, "Regularization strength")->capture_default_str();
  curves->add_option("--grid", cfg.grid, "Grid points on (0,1)")->capture_default_str();
  curves->add_option("--target", cfg.target, "Target group (default: all)");

  for (auto* sub : {fit, metrics, generate, hist, curves})
    sub->add_option("--out", cfg.out, "Output path (prefix for generate)")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : cmds::kInputError;
  }

  return cmds::guarded([&] {
    if (fit->parsed()) return cmds::cmd_fit(cfg);
    if (metrics->parsed()) return cmds::cmd_metrics(cfg);
    if (generate->parsed()) return cmds::cmd_generate(cfg);
    if (hist->parsed()) return cmds::cmd_hist(cfg);
    return cmds::cmd_curves(cfg);
  });
}

#pragma once

// Sampling from the degree-corrected preference model
//
//   A_ij ~ Poisson(θ_i φ_j x_{i,g_j} / Φ_{g_j}),   x_i ~ Dirichlet(α_{g_i}),
//
// plus the naive-ratio experiment used to show why k_is/k_i is a poor guide
// to the spread of preferences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prefmix/error.hpp"
#include "prefmix/likelihood.hpp"
#include "prefmix/network.hpp"

namespace prefmix {

using Engine = std::mt19937_64;

/// Independent engine for substream `stream` of `seed`.
inline Engine substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

/// Per-group Dirichlet parameters.
struct DirichletParams {
  std::vector<Vector> alpha;

  Vector alpha0() const {
    Vector out(alpha.size());
    for (std::size_t r = 0; r < alpha.size(); ++r) out[r] = alpha[r].sum();
    return out;
  }
};

struct GeneratorParams {
  std::vector<std::string> group_names;
  std::vector<GroupId> group;  // g_i
  std::vector<double> theta;   // expected out-degree
  std::vector<double> phi;     // in-degree propensity
  std::vector<Vector> x;       // preference vector on the simplex

  std::size_t node_count() const { return group.size(); }

  void validate() const {
    std::size_t const n = group.size();
    std::size_t const c = group_names.size();
    if (theta.size() != n || phi.size() != n || x.size() != n)
      throw DomainError("generator arrays differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      if (group[i] >= c) throw DomainError("node group out of range");
      if (!(theta[i] > 0.0) || !(phi[i] > 0.0) || !std::isfinite(theta[i]) ||
          !std::isfinite(phi[i]))
        throw DomainError("θ and φ must be positive and finite");
      if (static_cast<std::size_t>(x[i].size()) != c)
        throw DomainError("preference vector length differs from group count");
      if ((x[i].array() < 0.0).any() || std::abs(x[i].sum() - 1.0) > 1e-12)
        throw DomainError("preference vectors must lie on the simplex");
    }
  }
};

namespace detail {

inline void check_alpha(Vector const& alpha) {
  if (alpha.size() == 0) throw DomainError("empty Dirichlet parameter vector");
  for (Eigen::Index s = 0; s < alpha.size(); ++s)
    if (!(alpha[s] > 0.0) || !std::isfinite(alpha[s]))
      throw DomainError("Dirichlet parameters must be positive and finite");
}

// ln G with G ~ Gamma(shape, 1). Shapes below one use G = G' U^{1/shape},
// G' ~ Gamma(shape + 1), in log space so tiny shapes do not underflow to 0.
inline double log_gamma_variate(double shape, Engine& rng) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  double const g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = 0.0;
  while (u == 0.0) u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return std::log(g) + std::log(u) / shape;
}

inline Vector dirichlet_variate(Vector const& alpha, Engine& rng) {
  Vector lg(alpha.size());
  for (Eigen::Index s = 0; s < alpha.size(); ++s) lg[s] = log_gamma_variate(alpha[s], rng);
  Vector x = (lg.array() - lg.maxCoeff()).exp();
  return x / x.sum();
}

inline std::vector<Count> multinomial_variate(Count trials, Vector const& p, Engine& rng) {
  std::vector<Count> out(p.size(), 0);
  double remaining = 1.0;
  for (Eigen::Index s = 0; s + 1 < p.size() && trials > 0; ++s) {
    double const q = remaining > 0.0 ? std::clamp(p[s] / remaining, 0.0, 1.0) : 0.0;
    Count const k = std::binomial_distribution<Count>(trials, q)(rng);
    out[s] = k;
    trials -= k;
    remaining -= p[s];
  }
  if (p.size() > 0) out[p.size() - 1] += trials;
  return out;
}

inline Count poisson_variate(double mean, Engine& rng) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<Count>(mean)(rng);
}

}  // namespace detail

/// `count` i.i.d. Dirichlet(α) draws.
inline std::vector<Vector> sample_preferences(Vector const& alpha, std::size_t count,
                                              std::uint64_t seed) {
  detail::check_alpha(alpha);
  if (count < 1) throw DomainError("count must be at least 1");
  Engine rng = substream(seed, 0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(detail::dirichlet_variate(alpha, rng));
  return out;
}

struct SampleOptions {
  /// Networks up to this many nodes draw every ordered pair; larger ones draw
  /// k_is ~ Poisson(θ_i x_is) and spread it over group s in proportion to φ_j,
  /// which has the same distribution.
  std::size_t dense_limit = 10000;
  unsigned threads = 1;
};

inline LabeledNetwork sample_network(GeneratorParams const& params, std::uint64_t seed,
                                     SampleOptions const& opts = {}) {
  params.validate();
  std::size_t const n = params.node_count();
  std::size_t const c = params.group_names.size();

  std::vector<double> big_phi(c, 0.0);
  std::vector<std::vector<NodeId>> members(c);
  for (NodeId j = 0; j < n; ++j) {
    big_phi[params.group[j]] += params.phi[j];
    members[params.group[j]].push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < c; ++s)
      if (params.x[i][s] > 0.0 && big_phi[s] == 0.0)
        throw DomainError("group '" + params.group_names[s] +
                          "' has no nodes but receives positive preference");

  bool const dense = n <= opts.dense_limit;
  std::vector<std::discrete_distribution<std::size_t>> pick;
  if (!dense) {
    for (std::size_t s = 0; s < c; ++s) {
      std::vector<double> w;
      for (NodeId j : members[s]) w.push_back(params.phi[j]);
      pick.emplace_back(w.begin(), w.end());
    }
  }

  // Source nodes are split into fixed blocks, each with its own substream, so
  // the output does not depend on the thread count.
  constexpr std::size_t kBlock = 1024;
  std::size_t const blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<Edge>> block_edges(blocks);

  auto run_block = [&](std::size_t b) {
    Engine rng = substream(seed, b + 1);
    auto local_pick = pick;
    auto& out = block_edges[b];
    std::size_t const end = std::min(n, (b + 1) * kBlock);
    for (NodeId i = static_cast<NodeId>(b * kBlock); i < end; ++i) {
      if (dense) {
        for (NodeId j = 0; j < n; ++j) {
          GroupId const s = params.group[j];
          double const rate = params.theta[i] * params.phi[j] * params.x[i][s] / big_phi[s];
          if (Count const a = detail::poisson_variate(rate, rng); a > 0) out.push_back({i, j, a});
        }
      } else {
        for (std::size_t s = 0; s < c; ++s) {
          Count const k = detail::poisson_variate(params.theta[i] * params.x[i][s], rng);
          for (Count e = 0; e < k; ++e) out.push_back({i, members[s][local_pick[s](rng)], 1});
        }
      }
    }
  };

  unsigned const threads = std::max(1u, std::min<unsigned>(opts.threads, blocks));
  if (threads == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run_block(b);
      });
  }

  std::vector<Edge> edges;
  for (auto& be : block_edges) edges.insert(edges.end(), be.begin(), be.end());
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "v" + std::to_string(i);
  return LabeledNetwork(std::move(names), params.group, params.group_names, std::move(edges),
                        true);
}

/// Draws k ~ Poisson(θ) and k_s | k ~ Multinomial(k, x) `count` times and
/// returns k_s/k for the draws with k ≥ 1.
inline std::vector<Vector> naive_ratio_sample(double theta, Vector const& x, std::size_t count,
                                              std::uint64_t seed) {
  if (!(theta > 0.0)) throw DomainError("θ must be positive");
  Engine rng = substream(seed, 0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Count const k = detail::poisson_variate(theta, rng);
    if (k == 0) continue;
    auto const ks = detail::multinomial_variate(k, x, rng);
    Vector r(x.size());
    for (Eigen::Index s = 0; s < x.size(); ++s)
      r[s] = static_cast<double>(ks[s]) / static_cast<double>(k);
    out.push_back(std::move(r));
  }
  return out;
}

/// A generator specification as read from JSON, plus the preferences it implies.
struct GeneratorSpec {
  struct Group {
    std::string name;
    std::size_t size = 0;
    Vector alpha;
    double theta = 1.0;
    double phi = 1.0;
    std::vector<double> thetas;  // optional per-node overrides
    std::vector<double> phis;
  };
  std::vector<Group> groups;
  std::uint64_t seed = 0;
  /// Every node prefers group s in proportion to its in-degree mass Φ_s, which
  /// reproduces the degree-preserving null model; α is then ignored.
  bool null_model = false;

  static GeneratorSpec from_json(nlohmann::json const& doc) {
    GeneratorSpec spec;
    try {
      if (!doc.is_object() || !doc.contains("groups") || !doc.at("groups").is_array() ||
          doc.at("groups").empty())
        throw InputError("generator spec needs a non-empty 'groups' array");
      spec.seed = doc.value("seed", std::uint64_t{0});
      spec.null_model = doc.value("null_model", false);
      for (auto const& g : doc.at("groups")) {
        Group grp;
        grp.name = g.at("name").get<std::string>();
        grp.size = g.at("size").get<std::size_t>();
        grp.theta = g.value("theta", 1.0);
        grp.phi = g.value("phi", 1.0);
        if (g.contains("alpha")) {
          auto a = g.at("alpha").get<std::vector<double>>();
          grp.alpha = Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
        }
        if (g.contains("thetas")) grp.thetas = g.at("thetas").get<std::vector<double>>();
        if (g.contains("phis")) grp.phis = g.at("phis").get<std::vector<double>>();
        if (grp.size == 0) throw InputError("group '" + grp.name + "' has size 0");
        if (!grp.thetas.empty() && grp.thetas.size() != grp.size)
          throw InputError("group '" + grp.name + "': 'thetas' length differs from size");
        if (!grp.phis.empty() && grp.phis.size() != grp.size)
          throw InputError("group '" + grp.name + "': 'phis' length differs from size");
        spec.groups.push_back(std::move(grp));
      }
      if (!spec.null_model)
        for (auto const& g : spec.groups)
          if (static_cast<std::size_t>(g.alpha.size()) != spec.groups.size())
            throw InputError("group '" + g.name + "': 'alpha' needs one entry per group");
    } catch (nlohmann::json::exception const& e) {
      throw InputError(std::string("invalid generator spec: ") + e.what());
    }
    return spec;
  }

  /// Expands to per-node parameters; preferences use a substream of `seed`
  /// disjoint from the edge sampler's.
  GeneratorParams params() const {
    GeneratorParams p;
    std::size_t const c = groups.size();
    for (auto const& g : groups) p.group_names.push_back(g.name);
    for (GroupId r = 0; r < c; ++r) {
      auto const& g = groups[r];
      for (std::size_t i = 0; i < g.size; ++i) {
        p.group.push_back(r);
        p.theta.push_back(g.thetas.empty() ? g.theta : g.thetas[i]);
        p.phi.push_back(g.phis.empty() ? g.phi : g.phis[i]);
      }
    }
    if (null_model) {
      Vector share = Vector::Zero(c);
      for (std::size_t i = 0; i < p.group.size(); ++i) share[p.group[i]] += p.phi[i];
      share /= share.sum();
      p.x.assign(p.group.size(), share);
    } else {
      Engine rng = substream(seed, ~std::uint64_t{0});
      for (GroupId r : p.group) {
        detail::check_alpha(groups[r].alpha);
        p.x.push_back(detail::dirichlet_variate(groups[r].alpha, rng));
      }
    }
    return p;
  }
};

}  // namespace prefmix

#pragma once

// Labeled directed multigraphs: parsing, validation, and the per-node count
// vectors k_i (out-edges of i by target group) that every estimator consumes.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prefmix/error.hpp"

namespace prefmix {

using NodeId = std::uint32_t;
using GroupId = std::uint32_t;
using Count = std::int64_t;

struct Edge {
  NodeId source;
  NodeId target;
  Count multiplicity;

  friend bool operator==(Edge const&, Edge const&) = default;
};

namespace detail {

// Stable counting sort on `key`, which maps an edge to [0, n).
template <class Key>
std::vector<Edge> counting_sort(std::vector<Edge> const& in, std::size_t n, Key key) {
  std::vector<std::size_t> start(n + 1, 0);
  for (Edge const& e : in) ++start[key(e) + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<Edge> out(in.size());
  for (Edge const& e : in) out[start[key(e)]++] = e;
  return out;
}

// Orders edges by (source, target) in linear time: by target, then stably by source.
inline std::vector<Edge> sorted_by_endpoints(std::vector<Edge> edges, std::size_t n) {
  edges = counting_sort(edges, n, [](Edge const& e) { return static_cast<std::size_t>(e.target); });
  return counting_sort(edges, n, [](Edge const& e) { return static_cast<std::size_t>(e.source); });
}

}  // namespace detail

/// Directed multigraph with one categorical label per node. Edges are kept
/// sorted by (source, target) with strictly positive multiplicities.
class LabeledNetwork {
 public:
  LabeledNetwork() = default;

  /// Validates and canonicalizes: merges repeated pairs, drops zero multiplicities.
  LabeledNetwork(std::vector<std::string> node_names, std::vector<GroupId> labels,
                 std::vector<std::string> group_names, std::vector<Edge> edges, bool directed)
      : node_names_(std::move(node_names)),
        labels_(std::move(labels)),
        group_names_(std::move(group_names)),
        directed_(directed) {
    if (node_names_.size() != labels_.size())
      throw InputError("node name and label arrays differ in length");
    for (GroupId g : labels_)
      if (g >= group_names_.size()) throw InputError("label index out of range");
    for (Edge const& e : edges) {
      if (e.source >= node_names_.size() || e.target >= node_names_.size())
        throw InputError("edge endpoint out of range");
      if (e.multiplicity < 0) throw InputError("negative edge multiplicity");
    }
    edges = detail::sorted_by_endpoints(std::move(edges), node_names_.size());
    for (Edge const& e : edges) {
      if (e.multiplicity == 0) continue;
      if (!edges_.empty() && edges_.back().source == e.source && edges_.back().target == e.target)
        edges_.back().multiplicity += e.multiplicity;
      else
        edges_.push_back(e);
    }
  }

  std::size_t node_count() const { return node_names_.size(); }
  std::size_t group_count() const { return group_names_.size(); }
  std::vector<Edge> const& edges() const { return edges_; }
  std::vector<GroupId> const& labels() const { return labels_; }
  std::vector<std::string> const& node_names() const { return node_names_; }
  std::vector<std::string> const& group_names() const { return group_names_; }
  GroupId label(NodeId i) const { return labels_[i]; }
  bool directed() const { return directed_; }

  /// Total directed edge count, with multiplicity.
  Count edge_count() const {
    Count m = 0;
    for (Edge const& e : edges_) m += e.multiplicity;
    return m;
  }

  /// A_ij; zero for absent pairs.
  Count multiplicity(NodeId i, NodeId j) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(i, j),
                               [](Edge const& e, std::pair<NodeId, NodeId> const& key) {
                                 return std::pair(e.source, e.target) < key;
                               });
    return (it != edges_.end() && it->source == i && it->target == j) ? it->multiplicity : 0;
  }

 private:
  std::vector<std::string> node_names_;
  std::vector<GroupId> labels_;
  std::vector<std::string> group_names_;
  std::vector<Edge> edges_;
  bool directed_ = true;
};

struct ParseOptions {
  bool directed = false;
  std::set<std::string> drop_labels;
  bool keep_self_loops = true;
};

namespace detail {

// Splits a line into whitespace-separated fields after stripping a `#` comment.
inline std::vector<std::string_view> fields(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Shared by the text and JSON front ends once raw (name, group) and
// (source, target) pairs have been read. Names are interned on arrival so
// edges are stored as id pairs.
class NetworkBuilder {
 public:
  explicit NetworkBuilder(ParseOptions opts) : opts_(std::move(opts)) {}

  void add_label(std::string const& node, std::string const& group, std::string const& source,
                 std::size_t line) {
    std::uint32_t const id = intern(node);
    auto [git, fresh] = group_ids_.try_emplace(group, static_cast<std::int32_t>(groups_.size()));
    if (fresh) groups_.push_back(group);
    std::int32_t& slot = label_of_[id];
    if (slot != kNoLabel) {
      if (slot != git->second)
        throw InputError("node '" + node + "' assigned to both '" + groups_[slot] + "' and '" +
                             group + "'",
                         source, line);
      return;
    }
    slot = git->second;
    label_order_.push_back(id);
  }

  void add_edge(std::string const& s, std::string const& t, std::string const& source,
                std::size_t line) {
    if (sources_.empty() || sources_.back() != source) sources_.push_back(source);
    raw_edges_.push_back({intern(s), intern(t), static_cast<std::uint32_t>(sources_.size() - 1), line});
  }

  LabeledNetwork build() {
    std::vector<std::int32_t> group_remap(groups_.size(), -1);
    std::vector<std::string> group_names;
    std::vector<std::string> node_names;
    std::vector<GroupId> labels;
    // Per name id: node id, or dropped by the label filter, or never labeled.
    constexpr std::int64_t kDropped = -1, kUnlabeled = -2;
    std::vector<std::int64_t> resolved(names_.size(), kUnlabeled);

    for (std::uint32_t id : label_order_) {
      std::int32_t const g = label_of_[id];
      if (opts_.drop_labels.contains(groups_[g])) {
        resolved[id] = kDropped;
        continue;
      }
      if (group_remap[g] < 0) {
        group_remap[g] = static_cast<std::int32_t>(group_names.size());
        group_names.push_back(groups_[g]);
      }
      resolved[id] = static_cast<std::int64_t>(node_names.size());
      node_names.push_back(names_[id]);
      labels.push_back(static_cast<GroupId>(group_remap[g]));
    }

    std::vector<Edge> edges;
    edges.reserve(opts_.directed ? raw_edges_.size() : 2 * raw_edges_.size());
    for (RawEdge const& e : raw_edges_) {
      for (std::uint32_t id : {e.s, e.t})
        if (resolved[id] == kUnlabeled)
          throw InputError("edge endpoint '" + names_[id] + "' has no label", sources_[e.source],
                           e.line);
      if (resolved[e.s] < 0 || resolved[e.t] < 0) continue;
      auto const s = static_cast<NodeId>(resolved[e.s]);
      auto const t = static_cast<NodeId>(resolved[e.t]);
      if (s == t) {
        if (opts_.keep_self_loops) edges.push_back({s, s, 1});
        continue;
      }
      edges.push_back({s, t, 1});
      if (!opts_.directed) edges.push_back({t, s, 1});
    }

    if (node_names.empty()) throw InputError("network is empty after label filtering");
    return LabeledNetwork(std::move(node_names), std::move(labels), std::move(group_names),
                          std::move(edges), opts_.directed);
  }

 private:
  static constexpr std::int32_t kNoLabel = -1;

  struct RawEdge {
    std::uint32_t s, t;
    std::uint32_t source;
    std::size_t line;
  };

  std::uint32_t intern(std::string const& name) {
    if (2 * (names_.size() + 1) > slots_.size()) grow();
    std::uint64_t const h = std::hash<std::string>{}(name) & 0xffffffffu;
    std::size_t const mask = slots_.size() - 1;
    for (std::size_t i = h & mask;; i = (i + 1) & mask) {
      std::uint64_t const slot = slots_[i];
      if (slot == 0) {
        names_.push_back(name);
        label_of_.push_back(kNoLabel);
        auto const id = static_cast<std::uint32_t>(names_.size() - 1);
        slots_[i] = (h << 32) | (std::uint64_t{id} + 1);
        return id;
      }
      if ((slot >> 32) == h) {
        auto const id = static_cast<std::uint32_t>((slot & 0xffffffffu) - 1);
        if (names_[id] == name) return id;
      }
    }
  }

  // Open addressing over (32-bit hash, id + 1) pairs; 0 marks an empty slot.
  void grow() {
    std::vector<std::uint64_t> old(std::max<std::size_t>(64, 2 * slots_.size()), 0);
    old.swap(slots_);
    std::size_t const mask = slots_.size() - 1;
    for (std::uint64_t slot : old) {
      if (slot == 0) continue;
      std::size_t i = (slot >> 32) & mask;
      while (slots_[i] != 0) i = (i + 1) & mask;
      slots_[i] = slot;
    }
  }

  ParseOptions opts_;
  std::vector<std::uint64_t> slots_;
  std::vector<std::string> names_;
  std::vector<std::int32_t> label_of_;
  std::unordered_map<std::string, std::int32_t> group_ids_;
  std::vector<std::string> groups_;
  std::vector<std::uint32_t> label_order_;
  std::vector<std::string> sources_;
  std::vector<RawEdge> raw_edges_;
};

}  // namespace detail

/// Reads an edge list and a label list. `edges_name` and `labels_name` only
/// label error messages.
inline LabeledNetwork parse_network(std::istream& edges, std::istream& labels,
                                    ParseOptions const& opts = {},
                                    std::string const& edges_name = "edges",
                                    std::string const& labels_name = "labels") {
  detail::NetworkBuilder builder(opts);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(labels, line)) {
    ++lineno;
    auto f = detail::fields(line);
    if (f.empty()) continue;
    if (f.size() != 2)
      throw InputError("expected 'node group', got " + std::to_string(f.size()) + " fields",
                       labels_name, lineno);
    builder.add_label(std::string(f[0]), std::string(f[1]), labels_name, lineno);
  }
  lineno = 0;
  while (std::getline(edges, line)) {
    ++lineno;
    auto f = detail::fields(line);
    if (f.empty()) continue;
    if (f.size() != 2)
      throw InputError("expected 'source target', got " + std::to_string(f.size()) + " fields",
                       edges_name, lineno);
    builder.add_edge(std::string(f[0]), std::string(f[1]), edges_name, lineno);
  }
  return builder.build();
}

inline LabeledNetwork parse_network(std::string const& edges, std::string const& labels,
                                    ParseOptions const& opts = {}) {
  std::istringstream e(edges), l(labels);
  return parse_network(e, l, opts);
}

/// Combined JSON form: {"directed": bool, "edges": [[s,t],...], "labels": {node: group}}.
/// The document's "directed" field overrides `opts.directed` when present.
inline LabeledNetwork parse_network_json(nlohmann::json const& doc, ParseOptions opts = {},
                                         std::string const& name = "json") {
  auto as_name = [&](nlohmann::json const& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw InputError("node identifiers must be strings or integers", name);
  };
  if (!doc.is_object()) throw InputError("top level must be an object", name);
  if (doc.contains("directed")) opts.directed = doc.at("directed").get<bool>();
  if (!doc.contains("labels") || !doc.at("labels").is_object())
    throw InputError("missing 'labels' object", name);
  detail::NetworkBuilder builder(opts);
  for (auto const& [node, group] : doc.at("labels").items())
    builder.add_label(node, as_name(group), name, 0);
  if (doc.contains("edges")) {
    std::size_t idx = 0;
    for (auto const& e : doc.at("edges")) {
      ++idx;
      if (!e.is_array() || e.size() != 2)
        throw InputError("edge " + std::to_string(idx) + " is not a [source, target] pair", name);
      builder.add_edge(as_name(e[0]), as_name(e[1]), name, 0);
    }
  }
  return builder.build();
}

/// Writes one line per directed edge unit (multiplicity expands to repeated lines).
inline void write_edges(LabeledNetwork const& net, std::ostream& out) {
  auto const& names = net.node_names();
  for (Edge const& e : net.edges())
    for (Count r = 0; r < e.multiplicity; ++r)
      out << names[e.source] << '\t' << names[e.target] << '\n';
}

inline void write_labels(LabeledNetwork const& net, std::ostream& out) {
  for (NodeId i = 0; i < net.node_count(); ++i)
    out << net.node_names()[i] << '\t' << net.group_names()[net.label(i)] << '\n';
}

/// Row i holds k_i = (k_i1 ... k_ic), the out-edge multiplicity of i into each group.
struct CountsTable {
  std::size_t groups = 0;
  std::vector<Count> data;  // node-major, node_count × groups
  std::vector<GroupId> group_of;
  std::vector<std::vector<NodeId>> by_group;

  std::size_t node_count() const { return group_of.size(); }
  std::span<Count const> row(NodeId i) const { return {data.data() + i * groups, groups}; }
  Count degree(NodeId i) const {
    auto r = row(i);
    return std::accumulate(r.begin(), r.end(), Count{0});
  }
  /// Edge counts between groups: mixing[r][s] = Σ_{i∈r} k_is.
  std::vector<std::vector<Count>> mixing() const {
    std::vector<std::vector<Count>> e(groups, std::vector<Count>(groups, 0));
    for (NodeId i = 0; i < node_count(); ++i) {
      auto r = row(i);
      for (std::size_t s = 0; s < groups; ++s) e[group_of[i]][s] += r[s];
    }
    return e;
  }
};

inline CountsTable group_counts(LabeledNetwork const& net) {
  CountsTable t;
  t.groups = net.group_count();
  t.data.assign(net.node_count() * t.groups, 0);
  t.group_of = net.labels();
  t.by_group.resize(t.groups);
  for (NodeId i = 0; i < net.node_count(); ++i) t.by_group[net.label(i)].push_back(i);
  for (Edge const& e : net.edges()) t.data[e.source * t.groups + net.label(e.target)] += e.multiplicity;
  return t;
}

/// Null-model ingredients: node fractions p_r, in-degree mass K_r, edge total m.
struct GroupSummary {
  std::vector<double> p;
  std::vector<Count> K;
  Count m = 0;
};

/// With `exclude_isolated`, p_r counts only nodes with non-zero out-degree.
inline GroupSummary group_summary(LabeledNetwork const& net, bool exclude_isolated = false) {
  GroupSummary s;
  std::size_t const c = net.group_count();
  s.K.assign(c, 0);
  std::vector<Count> out_degree(net.node_count(), 0);
  for (Edge const& e : net.edges()) {
    s.K[net.label(e.target)] += e.multiplicity;
    out_degree[e.source] += e.multiplicity;
    s.m += e.multiplicity;
  }
  if (s.m == 0) throw InputError("network has no edges");
  std::vector<double> nodes(c, 0.0);
  double total = 0.0;
  for (NodeId i = 0; i < net.node_count(); ++i) {
    if (exclude_isolated && out_degree[i] == 0) continue;
    nodes[net.label(i)] += 1.0;
    total += 1.0;
  }
  s.p.resize(c);
  for (std::size_t r = 0; r < c; ++r) s.p[r] = nodes[r] / total;
  return s;
}

}  // namespace prefmix

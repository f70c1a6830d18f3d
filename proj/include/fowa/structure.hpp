#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fowa/algebra.hpp"
#include "fowa/error.hpp"

namespace fowa {

using ElementId = int;
using Tuple = std::vector<ElementId>;

struct RelationDecl {
  std::string name;
  int arity = 0;
};

struct WeightDecl {
  std::string name;
  int arity = 1;
  Carrier carrier = Carrier::integers();
  // Implicit constant-1 weight (e.g. `one`); no table entries are stored.
  bool all_ones = false;
};

class Signature {
public:
  void add_relation(const std::string& name, int arity) {
    require(arity >= 0, errc::arity_error, "relation arity must be >= 0");
    require(!has_name(name), errc::signature_mismatch, "duplicate symbol " + name);
    rel_index_[name] = static_cast<int>(relations_.size());
    relations_.push_back({name, arity});
  }

  void add_weight(const std::string& name, int arity, const Carrier& c, bool all_ones = false) {
    require(arity >= 1, errc::arity_error, "weight arity must be >= 1");
    require(!has_name(name), errc::signature_mismatch, "duplicate symbol " + name);
    if (all_ones)
      require(arity == 1 && Value::literal_one(c).has_value(), errc::type_error,
              "all-ones weight must be unary over Z, Q or Z/m");
    wgt_index_[name] = static_cast<int>(weights_.size());
    weights_.push_back({name, arity, c, all_ones});
  }

  bool has_name(const std::string& name) const {
    return rel_index_.count(name) || wgt_index_.count(name);
  }

  const std::vector<RelationDecl>& relations() const { return relations_; }
  const std::vector<WeightDecl>& weights() const { return weights_; }

  std::optional<int> relation_index(const std::string& name) const {
    auto it = rel_index_.find(name);
    if (it == rel_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> weight_index(const std::string& name) const {
    auto it = wgt_index_.find(name);
    if (it == wgt_index_.end()) return std::nullopt;
    return it->second;
  }

  const RelationDecl& relation(int idx) const { return relations_[idx]; }
  const WeightDecl& weight(int idx) const { return weights_[idx]; }

  // The unary all-ones weight of type Z, when declared (several results
  // require it to express counting).
  std::optional<int> one_weight() const {
    for (size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i].all_ones && weights_[i].carrier == Carrier::integers())
        return static_cast<int>(i);
    return std::nullopt;
  }

  friend bool operator==(const Signature& a, const Signature& b) {
    if (a.relations_.size() != b.relations_.size() || a.weights_.size() != b.weights_.size())
      return false;
    for (size_t i = 0; i < a.relations_.size(); ++i)
      if (a.relations_[i].name != b.relations_[i].name ||
          a.relations_[i].arity != b.relations_[i].arity)
        return false;
    for (size_t i = 0; i < a.weights_.size(); ++i) {
      const auto &x = a.weights_[i], &y = b.weights_[i];
      if (x.name != y.name || x.arity != y.arity || !(x.carrier == y.carrier) ||
          x.all_ones != y.all_ones)
        return false;
    }
    return true;
  }
  friend bool operator!=(const Signature& a, const Signature& b) { return !(a == b); }

private:
  std::vector<RelationDecl> relations_;
  std::vector<WeightDecl> weights_;
  std::map<std::string, int> rel_index_, wgt_index_;
};

// ---------------------------------------------------------------------------
// Weighted structures. Immutable after construction. Weight tables are
// sparse: an absent tuple means 0_S, which the locality condition makes the
// common case. The Gaifman adjacency is precomputed from the relation
// tables (one clique per tuple).
// ---------------------------------------------------------------------------

class WeightedStructure {
public:
  WeightedStructure() = default;

  static WeightedStructure build(Signature sig, int n,
                                 std::vector<std::set<Tuple>> relation_tables,
                                 std::vector<std::map<Tuple, Value>> weight_tables) {
    WeightedStructure s;
    require(n >= 1, errc::out_of_range, "universe must be non-empty");
    s.sig_ = std::move(sig);
    s.n_ = n;
    relation_tables.resize(s.sig_.relations().size());
    weight_tables.resize(s.sig_.weights().size());
    s.rel_ = std::move(relation_tables);
    s.wgt_ = std::move(weight_tables);
    s.validate_and_index();
    return s;
  }

  const Signature& signature() const { return sig_; }
  int size() const { return n_; }

  bool valid_element(ElementId a) const { return a >= 0 && a < n_; }

  void check_element(ElementId a) const {
    require(valid_element(a), errc::unknown_element, "element " + std::to_string(a));
  }

  bool has_tuple(int rel_idx, const Tuple& t) const {
    require(static_cast<int>(t.size()) == sig_.relation(rel_idx).arity, errc::arity_error,
            "probe arity for " + sig_.relation(rel_idx).name);
    return rel_[rel_idx].count(t) > 0;
  }

  Value weight(int wgt_idx, const Tuple& t) const {
    const WeightDecl& d = sig_.weight(wgt_idx);
    require(static_cast<int>(t.size()) == d.arity, errc::arity_error,
            "weight arity for " + d.name);
    for (ElementId a : t) check_element(a);
    if (d.all_ones) return *Value::literal_one(d.carrier);
    auto it = wgt_[wgt_idx].find(t);
    return it == wgt_[wgt_idx].end() ? Value::zero(d.carrier) : it->second;
  }

  const std::set<Tuple>& relation_table(int rel_idx) const { return rel_[rel_idx]; }
  const std::map<Tuple, Value>& weight_table(int wgt_idx) const { return wgt_[wgt_idx]; }

  const std::vector<ElementId>& neighbors(ElementId a) const {
    check_element(a);
    return adj_[a];
  }

  int degree() const { return degree_; }

  // { b : dist(anchors, b) <= r }, sorted; the distance of a tuple to an
  // element is the minimum over the tuple's components.
  std::vector<ElementId> ball(const Tuple& anchors, int r) const {
    require(!anchors.empty(), errc::out_of_range, "ball needs at least one anchor");
    for (ElementId a : anchors) check_element(a);
    std::map<ElementId, int> dist;
    std::vector<ElementId> frontier;
    for (ElementId a : anchors)
      if (!dist.count(a)) {
        dist[a] = 0;
        frontier.push_back(a);
      }
    for (int step = 1; step <= r && !frontier.empty(); ++step) {
      std::vector<ElementId> next;
      for (ElementId u : frontier)
        for (ElementId v : adj_[u])
          if (!dist.count(v)) {
            dist[v] = step;
            next.push_back(v);
          }
      frontier = std::move(next);
    }
    std::vector<ElementId> out;
    out.reserve(dist.size());
    for (auto& [k, _] : dist) out.push_back(k);
    return out;
  }

  friend bool operator==(const WeightedStructure& a, const WeightedStructure& b) {
    return a.sig_ == b.sig_ && a.n_ == b.n_ && a.rel_ == b.rel_ && a.wgt_ == b.wgt_;
  }

private:
  void validate_and_index() {
    // Relation tuples: arity and element range.
    for (size_t ri = 0; ri < rel_.size(); ++ri) {
      int arity = sig_.relation(static_cast<int>(ri)).arity;
      for (const Tuple& t : rel_[ri]) {
        require(static_cast<int>(t.size()) == arity, errc::arity_error,
                "tuple arity in " + sig_.relation(static_cast<int>(ri)).name);
        for (ElementId a : t) check_element(a);
      }
    }
    // Gaifman graph; also remember, per element, which relation tuples touch
    // it (used by the locality check below).
    std::vector<std::set<ElementId>> adj(n_);
    std::vector<std::vector<const Tuple*>> touching(n_);
    for (const auto& table : rel_)
      for (const Tuple& t : table) {
        for (ElementId a : t) touching[a].push_back(&t);
        for (size_t i = 0; i < t.size(); ++i)
          for (size_t j = i + 1; j < t.size(); ++j)
            if (t[i] != t[j]) {
              adj[t[i]].insert(t[j]);
              adj[t[j]].insert(t[i]);
            }
      }
    adj_.assign(n_, {});
    degree_ = 0;
    for (int a = 0; a < n_; ++a) {
      adj_[a].assign(adj[a].begin(), adj[a].end());
      degree_ = std::max(degree_, static_cast<int>(adj_[a].size()));
    }
    // Weight tables: arity, carrier, canonical sparsity, locality condition.
    for (size_t wi = 0; wi < wgt_.size(); ++wi) {
      const WeightDecl& d = sig_.weight(static_cast<int>(wi));
      require(!d.all_ones || wgt_[wi].empty(), errc::parse_error,
              "all-ones weight " + d.name + " cannot carry explicit entries");
      // Drop explicit zeros so serialization is canonical.
      for (auto it = wgt_[wi].begin(); it != wgt_[wi].end();) {
        if (it->second.is_zero())
          it = wgt_[wi].erase(it);
        else
          ++it;
      }
      for (const auto& [t, v] : wgt_[wi]) {
        require(static_cast<int>(t.size()) == d.arity, errc::arity_error,
                "weight tuple arity in " + d.name);
        for (ElementId a : t) check_element(a);
        require(v.carrier() == d.carrier, errc::carrier_mismatch,
                "weight value carrier in " + d.name);
        if (t.size() >= 2) {
          bool all_equal = std::all_of(t.begin(), t.end(), [&](ElementId a) { return a == t[0]; });
          if (!all_equal) require(covered(t, touching), errc::locality_violation,
                                  "nonzero weight " + d.name + " on uncovered tuple");
        }
      }
    }
  }

  bool covered(const Tuple& t, const std::vector<std::vector<const Tuple*>>& touching) const {
    std::set<ElementId> need(t.begin(), t.end());
    for (const Tuple* cand : touching[t[0]]) {
      std::set<ElementId> have(cand->begin(), cand->end());
      if (std::includes(have.begin(), have.end(), need.begin(), need.end())) return true;
    }
    return false;
  }

  Signature sig_;
  int n_ = 0;
  std::vector<std::set<Tuple>> rel_;
  std::vector<std::map<Tuple, Value>> wgt_;
  std::vector<std::vector<ElementId>> adj_;
  int degree_ = 0;
};

// Induced substructure on a ball, with the id remap in both directions
// (the substructure's universe is re-densified to 0..m-1).
struct Neighborhood {
  WeightedStructure structure;
  std::vector<ElementId> to_parent;      // local id -> parent id
  std::map<ElementId, ElementId> to_local;  // parent id -> local id

  ElementId local(ElementId parent) const {
    auto it = to_local.find(parent);
    require(it != to_local.end(), errc::unknown_element,
            "element " + std::to_string(parent) + " outside the neighbourhood");
    return it->second;
  }
};

inline Neighborhood induced_substructure(const WeightedStructure& s,
                                         const std::vector<ElementId>& members) {
  Neighborhood nb;
  nb.to_parent = members;
  for (size_t i = 0; i < members.size(); ++i)
    nb.to_local[members[i]] = static_cast<ElementId>(i);
  auto inside = [&](const Tuple& t) {
    return std::all_of(t.begin(), t.end(), [&](ElementId a) { return nb.to_local.count(a); });
  };
  auto remap = [&](const Tuple& t) {
    Tuple r(t.size());
    for (size_t i = 0; i < t.size(); ++i) r[i] = nb.to_local.at(t[i]);
    return r;
  };
  const Signature& sig = s.signature();
  std::vector<std::set<Tuple>> rels(sig.relations().size());
  for (size_t ri = 0; ri < rels.size(); ++ri)
    for (const Tuple& t : s.relation_table(static_cast<int>(ri)))
      if (inside(t)) rels[ri].insert(remap(t));
  std::vector<std::map<Tuple, Value>> wgts(sig.weights().size());
  for (size_t wi = 0; wi < wgts.size(); ++wi)
    for (const auto& [t, v] : s.weight_table(static_cast<int>(wi)))
      if (inside(t)) wgts[wi].emplace(remap(t), v);
  nb.structure = WeightedStructure::build(sig, static_cast<int>(members.size()),
                                          std::move(rels), std::move(wgts));
  return nb;
}

inline Neighborhood induced_neighborhood(const WeightedStructure& s, const Tuple& anchors,
                                         int r) {
  return induced_substructure(s, s.ball(anchors, r));
}

// ---------------------------------------------------------------------------
// Disjoint sum (fresh unary part markers X, Y) and disjoint union (without
// them). The right part is relabelled by offsetting ids by |A|; cross-part
// weights are 0_S by sparsity.
// ---------------------------------------------------------------------------

inline WeightedStructure disjoint_combine(const WeightedStructure& a, const WeightedStructure& b,
                                          bool with_markers, const std::string& xname = "X",
                                          const std::string& yname = "Y") {
  require(a.signature() == b.signature(), errc::signature_mismatch,
          "disjoint sum needs equal signatures");
  Signature sig = a.signature();
  int xidx = -1, yidx = -1;
  if (with_markers) {
    require(!sig.has_name(xname) && !sig.has_name(yname), errc::signature_mismatch,
            "part marker name already used");
    xidx = static_cast<int>(sig.relations().size());
    sig.add_relation(xname, 1);
    yidx = static_cast<int>(sig.relations().size());
    sig.add_relation(yname, 1);
  }
  int na = a.size();
  std::vector<std::set<Tuple>> rels(sig.relations().size());
  std::vector<std::map<Tuple, Value>> wgts(sig.weights().size());
  size_t shared_rels = a.signature().relations().size();
  for (size_t ri = 0; ri < shared_rels; ++ri) {
    for (const Tuple& t : a.relation_table(static_cast<int>(ri))) rels[ri].insert(t);
    for (Tuple t : b.relation_table(static_cast<int>(ri))) {
      for (ElementId& e : t) e += na;
      rels[ri].insert(std::move(t));
    }
  }
  for (size_t wi = 0; wi < wgts.size(); ++wi) {
    for (const auto& [t, v] : a.weight_table(static_cast<int>(wi))) wgts[wi].emplace(t, v);
    for (const auto& [t0, v] : b.weight_table(static_cast<int>(wi))) {
      Tuple t = t0;
      for (ElementId& e : t) e += na;
      wgts[wi].emplace(std::move(t), v);
    }
  }
  if (with_markers) {
    for (ElementId e = 0; e < na; ++e) rels[xidx].insert(Tuple{e});
    for (ElementId e = 0; e < b.size(); ++e) rels[yidx].insert(Tuple{e + na});
  }
  return WeightedStructure::build(std::move(sig), na + b.size(), std::move(rels),
                                  std::move(wgts));
}

inline WeightedStructure disjoint_sum(const WeightedStructure& a, const WeightedStructure& b,
                                      const std::string& xname = "X",
                                      const std::string& yname = "Y") {
  return disjoint_combine(a, b, true, xname, yname);
}

inline WeightedStructure disjoint_union(const WeightedStructure& a,
                                        const WeightedStructure& b) {
  return disjoint_combine(a, b, false);
}

// ---------------------------------------------------------------------------
// Local access. Learners and the cl-term precomputation may read the
// structure only through this interface; every call bumps exactly one
// counter. One oracle per worker, counters merged by addition.
// ---------------------------------------------------------------------------

struct QueryCounts {
  std::uint64_t relation_probes = 0;
  std::uint64_t weight_lookups = 0;
  std::uint64_t neighbor_queries = 0;

  std::uint64_t total() const { return relation_probes + weight_lookups + neighbor_queries; }
  QueryCounts& operator+=(const QueryCounts& o) {
    relation_probes += o.relation_probes;
    weight_lookups += o.weight_lookups;
    neighbor_queries += o.neighbor_queries;
    return *this;
  }
  friend bool operator==(const QueryCounts& a, const QueryCounts& b) {
    return a.relation_probes == b.relation_probes && a.weight_lookups == b.weight_lookups &&
           a.neighbor_queries == b.neighbor_queries;
  }
};

class LocalAccessOracle {
public:
  explicit LocalAccessOracle(const WeightedStructure& s) : s_(&s) {}

  const Signature& signature() const { return s_->signature(); }
  int size() const { return s_->size(); }  // |A| is public; not a locality query
  int degree_bound() const { return s_->degree(); }

  bool probe(int rel_idx, const Tuple& t) const {
    ++counts_.relation_probes;
    return s_->has_tuple(rel_idx, t);
  }
  Value weight(int wgt_idx, const Tuple& t) const {
    ++counts_.weight_lookups;
    return s_->weight(wgt_idx, t);
  }
  std::vector<ElementId> neighbors(ElementId a) const {
    ++counts_.neighbor_queries;
    return s_->neighbors(a);
  }

  const QueryCounts& counts() const { return counts_; }
  void reset_counts() { counts_ = {}; }

private:
  const WeightedStructure* s_;
  mutable QueryCounts counts_;
};

inline std::vector<ElementId> ball_via_oracle(const LocalAccessOracle& o, const Tuple& anchors,
                                              int r) {
  require(!anchors.empty(), errc::out_of_range, "ball needs at least one anchor");
  std::map<ElementId, int> dist;
  std::vector<ElementId> frontier;
  for (ElementId a : anchors)
    if (!dist.count(a)) {
      dist[a] = 0;
      frontier.push_back(a);
    }
  for (int step = 1; step <= r && !frontier.empty(); ++step) {
    std::vector<ElementId> next;
    for (ElementId u : frontier)
      for (ElementId v : o.neighbors(u))
        if (!dist.count(v)) {
          dist[v] = step;
          next.push_back(v);
        }
    frontier = std::move(next);
  }
  std::vector<ElementId> out;
  out.reserve(dist.size());
  for (auto& [k, _] : dist) out.push_back(k);
  return out;
}

// Reconstructs the induced substructure on the r-ball of the anchors using
// local access only: relation membership and weights are probed for every
// candidate tuple over the ball.
inline Neighborhood neighborhood_via_oracle(const LocalAccessOracle& o, const Tuple& anchors,
                                            int r) {
  std::vector<ElementId> members = ball_via_oracle(o, anchors, r);
  const Signature& sig = o.signature();
  Neighborhood nb;
  nb.to_parent = members;
  for (size_t i = 0; i < members.size(); ++i)
    nb.to_local[members[i]] = static_cast<ElementId>(i);

  int m = static_cast<int>(members.size());
  auto each_tuple = [&](int arity, auto&& fn) {
    Tuple local(arity), parent(arity);
    auto rec = [&](auto&& self, int pos) -> void {
      if (pos == arity) {
        fn(local, parent);
        return;
      }
      for (int i = 0; i < m; ++i) {
        local[pos] = i;
        parent[pos] = members[i];
        self(self, pos + 1);
      }
    };
    rec(rec, 0);
  };

  std::vector<std::set<Tuple>> rels(sig.relations().size());
  for (size_t ri = 0; ri < rels.size(); ++ri)
    each_tuple(sig.relation(static_cast<int>(ri)).arity, [&](const Tuple& loc, const Tuple& par) {
      if (o.probe(static_cast<int>(ri), par)) rels[ri].insert(loc);
    });
  std::vector<std::map<Tuple, Value>> wgts(sig.weights().size());
  for (size_t wi = 0; wi < wgts.size(); ++wi) {
    if (sig.weight(static_cast<int>(wi)).all_ones) continue;
    each_tuple(sig.weight(static_cast<int>(wi)).arity, [&](const Tuple& loc, const Tuple& par) {
      Value v = o.weight(static_cast<int>(wi), par);
      if (!v.is_zero()) wgts[wi].emplace(loc, v);
    });
  }
  nb.structure = WeightedStructure::build(sig, m, std::move(rels), std::move(wgts));
  return nb;
}

}  // namespace fowa

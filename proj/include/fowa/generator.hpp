#pragma once

#include <string>
#include <vector>

#include "fowa/rng.hpp"
#include "fowa/structure.hpp"

namespace fowa {

// Deterministic bounded-degree structure generator. Binary relations get
// symmetric edge pairs sampled under the degree cap; unary relations are
// percentage-inclusions; non-ones weights draw values from their pool and
// land only on relation tuples (binary) or elements (unary), so the
// locality condition holds by construction.
struct GenSpec {
  int n = 8;
  int degree_bound = 3;
  int edge_attempts_per_vertex = 2;  // sampling attempts per vertex per binary relation
  int unary_percent = 40;
  int weight_percent = 60;           // chance a candidate tuple gets a weight entry
  std::vector<Value> weight_pool;    // empty: weights stay zero
  std::uint64_t seed = 1;
};

inline WeightedStructure generate_structure(const Signature& sig, const GenSpec& spec) {
  require(spec.n >= 1, errc::out_of_range, "universe size");
  Rng rng = Rng(spec.seed).fork("structure");
  std::vector<std::set<Tuple>> rels(sig.relations().size());
  std::vector<int> degree(spec.n, 0);

  auto gaifman_ok = [&](ElementId a, ElementId b) {
    return degree[a] < spec.degree_bound && degree[b] < spec.degree_bound;
  };

  for (size_t ri = 0; ri < sig.relations().size(); ++ri) {
    const RelationDecl& r = sig.relations()[ri];
    if (r.arity == 1) {
      for (ElementId a = 0; a < spec.n; ++a)
        if (rng.chance(static_cast<std::uint64_t>(spec.unary_percent), 100))
          rels[ri].insert(Tuple{a});
    } else if (r.arity == 2) {
      int attempts = spec.n * spec.edge_attempts_per_vertex;
      for (int i = 0; i < attempts; ++i) {
        ElementId a = rng.below_int(spec.n);
        ElementId b = rng.below_int(spec.n);
        if (a == b || !gaifman_ok(a, b)) continue;
        if (rels[ri].count({a, b})) continue;
        rels[ri].insert({a, b});
        rels[ri].insert({b, a});
        ++degree[a];
        ++degree[b];
      }
    } else if (r.arity == 0) {
      if (rng.chance(50, 100)) rels[ri].insert(Tuple{});
    }
  }

  std::vector<std::map<Tuple, Value>> wgts(sig.weights().size());
  for (size_t wi = 0; wi < sig.weights().size(); ++wi) {
    const WeightDecl& w = sig.weights()[wi];
    if (w.all_ones || spec.weight_pool.empty()) continue;
    std::vector<Value> pool;
    for (const Value& v : spec.weight_pool)
      if (v.carrier() == w.carrier) pool.push_back(v);
    if (pool.empty()) continue;
    if (w.arity == 1) {
      for (ElementId a = 0; a < spec.n; ++a)
        if (rng.chance(static_cast<std::uint64_t>(spec.weight_percent), 100))
          wgts[wi].emplace(Tuple{a}, pool[rng.below(pool.size())]);
    } else if (w.arity == 2) {
      // symmetric values on the tuples of the first binary relation
      for (size_t ri = 0; ri < sig.relations().size(); ++ri) {
        if (sig.relations()[ri].arity != 2) continue;
        for (const Tuple& t : rels[ri]) {
          if (t[0] > t[1]) continue;
          if (!rng.chance(static_cast<std::uint64_t>(spec.weight_percent), 100)) continue;
          Value v = pool[rng.below(pool.size())];
          wgts[wi].emplace(t, v);
          wgts[wi].emplace(Tuple{t[1], t[0]}, v);
        }
        break;
      }
    }
  }
  return WeightedStructure::build(sig, spec.n, std::move(rels), std::move(wgts));
}

// n disjoint copies of a gadget, ids blocked per copy; degree and local
// views are independent of the copy count.
inline WeightedStructure replicate_gadget(const WeightedStructure& gadget, int copies) {
  require(copies >= 1, errc::out_of_range, "need at least one copy");
  int g = gadget.size();
  const Signature& sig = gadget.signature();
  std::vector<std::set<Tuple>> rels(sig.relations().size());
  std::vector<std::map<Tuple, Value>> wgts(sig.weights().size());
  for (int c = 0; c < copies; ++c) {
    int off = c * g;
    for (size_t ri = 0; ri < rels.size(); ++ri)
      for (Tuple t : gadget.relation_table(static_cast<int>(ri))) {
        for (ElementId& e : t) e += off;
        rels[ri].insert(std::move(t));
      }
    for (size_t wi = 0; wi < wgts.size(); ++wi)
      for (const auto& [t0, v] : gadget.weight_table(static_cast<int>(wi))) {
        Tuple t = t0;
        for (ElementId& e : t) e += off;
        wgts[wi].emplace(std::move(t), v);
      }
  }
  return WeightedStructure::build(sig, g * copies, std::move(rels), std::move(wgts));
}

// Path 0-1-...-(n-1) over relation `rel`, both directions.
inline WeightedStructure path_structure(const Signature& sig, const std::string& rel, int n) {
  auto ri = sig.relation_index(rel);
  require(ri.has_value(), errc::signature_mismatch, "unknown relation " + rel);
  std::vector<std::set<Tuple>> rels(sig.relations().size());
  for (int i = 0; i + 1 < n; ++i) {
    rels[*ri].insert({i, i + 1});
    rels[*ri].insert({i + 1, i});
  }
  return WeightedStructure::build(sig, n, std::move(rels), {});
}

}  // namespace fowa

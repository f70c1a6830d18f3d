#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fowa/clterm.hpp"
#include "fowa/rng.hpp"

namespace fowa {

// ---------------------------------------------------------------------------
// Precomputed evaluation of cl-terms over a local-access oracle. For each
// basic term of width k and radius r, every element's R-ball with
// R = r + (k-1)(2r+1) is explored once; satisfying tuples are grouped by
// their free prefix and the group totals stored. Lookups are then table
// probes plus O(1) arithmetic.
// ---------------------------------------------------------------------------

class ClEvaluator {
public:
  ClEvaluator(ClTermPtr term, const LocalAccessOracle& oracle)
      : term_(std::move(term)), oracle_(&oracle) {
    precompute(term_);
  }

  const ClTermPtr& term() const { return term_; }

  // Arguments follow term()->free_vars() order.
  Value eval(const std::vector<ElementId>& args) const {
    std::vector<std::string> order = term_->free_vars();
    require(args.size() == order.size(), errc::arity_mismatch, "cl-term argument count");
    std::map<std::string, ElementId> env;
    for (size_t i = 0; i < order.size(); ++i) env.emplace(order[i], args[i]);
    return eval_node(term_, env);
  }

private:
  struct BasicTable {
    std::map<Tuple, Value> groups;  // keyed by the free prefix (parent ids)
    Value ground_total;             // used when there is no free prefix

    BasicTable() : ground_total(Value::integer(0)) {}
  };

  void precompute(const ClTermPtr& t) {
    switch (t->kind) {
      case ClTerm::Arith:
      case ClTerm::Scale:
        precompute(t->lhs);
        precompute(t->rhs);
        return;
      case ClTerm::Const:
      case ClTerm::WeightApp:
        return;
      case ClTerm::Basic:
        break;
    }
    const BasicAgg& b = *t->basic;
    int k = b.pattern.k;
    int r = b.radius;
    int explore = r + (k - 1) * (2 * r + 1);
    int threshold = 2 * r + 1;
    BasicTable table;
    table.ground_total = Value::zero(t->type);

    for (ElementId c1 = 0; c1 < oracle_->size(); ++c1) {
      Neighborhood nb = neighborhood_via_oracle(*oracle_, {c1}, explore);
      int m = static_cast<int>(nb.to_parent.size());
      // Pairwise distances inside the explored ball, exact up to the pattern
      // threshold for every tuple that can satisfy a connected pattern.
      std::vector<std::vector<int>> dist(m);
      for (int v = 0; v < m; ++v) dist[v] = bfs_limited(nb.structure, v, threshold + 1);

      Env env;
      for (const std::string& y : b.ybar) env.push(y, 0);
      Tuple local(k);
      enumerate_tuples(m, k, local, 0, c1, nb, [&](const Tuple& tup) {
        for (int i = 0; i < k; ++i)
          for (int j = i + 1; j < k; ++j) {
            int d = dist[tup[i]][tup[j]];
            bool close = d >= 0 && d <= threshold;
            if (close != b.pattern.has_edge(i, j)) return;
          }
        Env body_env;
        for (int i = 0; i < k; ++i) body_env.push(b.ybar[i], tup[i]);
        if (!eval_formula(nb.structure, body_env, b.body)) return;
        detail::Evaluator pe(nb.structure);
        Value v = pe.product_value(b.product, body_env);
        if (b.free_count == 0) {
          table.ground_total = combine(table.ground_total, v, ArithOp::Add);
        } else {
          Tuple key(b.free_count);
          for (int i = 0; i < b.free_count; ++i) key[i] = nb.to_parent[tup[i]];
          auto it = table.groups.find(key);
          if (it == table.groups.end())
            table.groups.emplace(std::move(key), v);
          else
            it->second = combine(it->second, v, ArithOp::Add);
        }
      });
    }
    tables_.emplace(t.get(), std::move(table));
  }

  template <typename Fn>
  void enumerate_tuples(int m, int k, Tuple& local, int pos, ElementId c1,
                        const Neighborhood& nb, Fn&& fn) {
    if (pos == 0) {
      // position 0 is pinned to the anchor
      auto it = nb.to_local.find(c1);
      if (it == nb.to_local.end()) return;
      local[0] = it->second;
      if (k == 1) {
        fn(local);
        return;
      }
      enumerate_tuples(m, k, local, 1, c1, nb, fn);
      return;
    }
    for (int v = 0; v < m; ++v) {
      local[pos] = v;
      if (pos + 1 == k)
        fn(local);
      else
        enumerate_tuples(m, k, local, pos + 1, c1, nb, fn);
    }
  }

  static std::vector<int> bfs_limited(const WeightedStructure& s, int from, int limit) {
    std::vector<int> dist(s.size(), -1);
    dist[from] = 0;
    std::vector<int> frontier{from};
    for (int step = 1; step <= limit && !frontier.empty(); ++step) {
      std::vector<int> next;
      for (int u : frontier)
        for (int v : s.neighbors(u))
          if (dist[v] == -1) {
            dist[v] = step;
            next.push_back(v);
          }
      frontier = std::move(next);
    }
    return dist;
  }

  Value eval_node(const ClTermPtr& t, const std::map<std::string, ElementId>& env) const {
    switch (t->kind) {
      case ClTerm::Const:
        return *t->constant;
      case ClTerm::WeightApp: {
        auto wi = oracle_->signature().weight_index(t->weight);
        require(wi.has_value(), errc::signature_mismatch, "unknown weight " + t->weight);
        Tuple args(t->vars.size());
        for (size_t i = 0; i < t->vars.size(); ++i) args[i] = env.at(t->vars[i]);
        return oracle_->weight(*wi, args);
      }
      case ClTerm::Arith: {
        Value a = eval_node(t->lhs, env);
        Value b = eval_node(t->rhs, env);
        ArithOp op = t->op == '+' ? ArithOp::Add : t->op == '-' ? ArithOp::Sub : ArithOp::Mul;
        return combine(a, b, op);
      }
      case ClTerm::Scale: {
        Value n = eval_node(t->lhs, env);
        return zscale(n.as_int(), eval_node(t->rhs, env));
      }
      case ClTerm::Basic: {
        const BasicTable& table = tables_.at(t.get());
        const BasicAgg& b = *t->basic;
        if (b.free_count == 0) return table.ground_total;
        Tuple key(b.free_count);
        for (int i = 0; i < b.free_count; ++i) key[i] = env.at(b.ybar[i]);
        auto it = table.groups.find(key);
        return it == table.groups.end() ? Value::zero(t->type) : it->second;
      }
    }
    fail(errc::type_error, "bad cl-term");
  }

  ClTermPtr term_;
  const LocalAccessOracle* oracle_;
  std::map<const ClTerm*, BasicTable> tables_;
};

// ---------------------------------------------------------------------------
// cl-normalform: Gaifman normal form with each basic-local sentence replaced
// by a ">= 1" statement over a ground cl-term counting its scattered
// witnesses. Needs the all-ones weight `one` of type Z.
// ---------------------------------------------------------------------------

struct ClnfLeaf {
  enum Kind { Local, AggSentence, GroundGeq1 } kind = Local;
  int radius = 0;
  ExprPtr formula;   // Local: the formula; AggSentence: the sentence
  ClTermPtr ground;  // GroundGeq1: ground cl-term of type Z

  std::string text() const {
    if (kind == GroundGeq1) return "(geq1 " + clterm_text(ground) + ")";
    return to_text(formula);
  }
};

struct ClNormalForm {
  GnfNode root;
  std::vector<ClnfLeaf> leaves;

  int max_local_radius() const {
    int r = 0;
    for (const ClnfLeaf& l : leaves)
      if (l.kind == ClnfLeaf::Local) r = std::max(r, l.radius);
    return r;
  }
};

inline ClNormalForm cl_normalform(const ExprPtr& phi, RewriteContext& ctx) {
  require(ctx.signature().one_weight().has_value(), errc::missing_one_weight,
          "cl-normalform needs the all-ones weight `one` of type Z");
  GaifmanNF g = gaifman_nf(phi, ctx);
  const std::string one_name =
      ctx.signature().weight(*ctx.signature().one_weight()).name;
  ClNormalForm out;
  out.root = g.root;
  for (const GnfLeaf& l : g.leaves) {
    switch (l.kind) {
      case GnfLeafKind::Local:
        out.leaves.push_back({ClnfLeaf::Local, l.radius, l.formula, nullptr});
        break;
      case GnfLeafKind::LocalAgg:
        out.leaves.push_back({ClnfLeaf::AggSentence, l.radius, l.formula, nullptr});
        break;
      case GnfLeafKind::BasicLocal: {
        // count the scattered witness tuples: ones-product over the witness
        // variables, body = scatter guards + one lambda per witness
        std::vector<ExprPtr> parts;
        for (size_t i = 0; i < l.scatter_vars.size(); ++i)
          for (size_t j = i + 1; j < l.scatter_vars.size(); ++j)
            parts.push_back(mk::dist_gt(l.scatter_vars[i], l.scatter_vars[j], 2 * l.radius));
        FreshVars tmp;
        for (const std::string& sv : l.scatter_vars)
          parts.push_back(sv == l.scatter_vars[0]
                              ? l.lambda
                              : substitute_var(l.lambda, l.scatter_vars[0], sv, tmp));
        ExprPtr theta = mk::and_all(parts);
        std::vector<WFactor> fs;
        for (const std::string& sv : l.scatter_vars)
          fs.push_back(WFactor{std::nullopt, one_name, {sv}});
        ClTermPtr ghat = aggregation_to_clterm(make_wproduct(Carrier::integers(), fs), theta,
                                               l.scatter_vars, l.radius, ctx);
        out.leaves.push_back({ClnfLeaf::GroundGeq1, ghat->radius(), nullptr, ghat});
        break;
      }
    }
  }
  return out;
}

// The cl-normalform as a plain formula; ">= 1" statements are realized via
// the built-in unary predicate geq1 (only possible for scale-free terms,
// which the ones-product construction guarantees).
inline ExprPtr clnf_to_expr(const ClNormalForm& c) {
  auto leaf_expr = [&](int idx) -> ExprPtr {
    const ClnfLeaf& l = c.leaves[idx];
    if (l.kind == ClnfLeaf::GroundGeq1) {
      auto def = resolve_predicate("geq1", {Carrier::integers()});
      return mk::pred(std::make_shared<const PredicateDef>(*def), {clterm_to_expr(l.ground)});
    }
    return l.formula;
  };
  auto rec = [&](auto&& self, const GnfNode& n) -> ExprPtr {
    switch (n.kind) {
      case GnfNode::Leaf: return leaf_expr(n.leaf);
      case GnfNode::Not: return mk::not_(self(self, n.kids[0]));
      case GnfNode::Or: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
        return mk::or_all(ks);
      }
      case GnfNode::And: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
        return mk::and_all(ks);
      }
      case GnfNode::Top: return mk::top();
      case GnfNode::Bot: return mk::bot();
    }
    return mk::bot();
  };
  return rec(rec, c.root);
}

// ---------------------------------------------------------------------------
// cl-decomposition: iterated elimination of depth-1 predicate applications
// into fresh marker relations of arity <= 1, followed by a final
// cl-normalform pass whose sentences become 0-ary markers. The fixed
// definition variable of unary markers is `_z`.
// ---------------------------------------------------------------------------

struct IotaDef {
  enum Kind { PredAtom, GroundGeq1, AggSentence } kind = GroundGeq1;
  PredicatePtr pred;
  std::vector<ClTermPtr> terms;  // PredAtom arguments, free vars within {_z}
  ClTermPtr ground;              // GroundGeq1 / AggSentence total
  std::optional<Value> agg_value;  // AggSentence: required total
  ExprPtr display;               // AggSentence: the original sentence

  std::string text() const {
    switch (kind) {
      case PredAtom: {
        std::string s = "(pred " + pred->name;
        for (const ClTermPtr& t : terms) s += " " + clterm_text(t);
        return s + ")";
      }
      case GroundGeq1:
        return "(geq1 " + clterm_text(ground) + ")";
      case AggSentence:
        return to_text(display);
    }
    return "?";
  }
};

struct LayerSymbol {
  std::string name;
  int arity = 0;
  IotaDef iota;
};

struct Layer {
  std::vector<LayerSymbol> symbols;
};

struct ClDecomposition {
  std::vector<Layer> layers;  // agg_depth(phi) + 1 entries
  ExprPtr phi_prime;          // Boolean combination of local formulas and 0-ary atoms
  Signature sigma_final;
  int local_radius = 0;
};

namespace detail {

inline ClTermPtr clterm_rename_free(const ClTermPtr& t, const std::string& from,
                                    const std::string& to, FreshVars& fresh) {
  switch (t->kind) {
    case ClTerm::Const:
      return t;
    case ClTerm::WeightApp: {
      std::vector<std::string> vs = t->vars;
      bool hit = false;
      for (std::string& v : vs)
        if (v == from) {
          v = to;
          hit = true;
        }
      return hit ? clt::weight_app(t->weight, vs, t->type) : t;
    }
    case ClTerm::Arith:
      return clt::arith(t->op, clterm_rename_free(t->lhs, from, to, fresh),
                        clterm_rename_free(t->rhs, from, to, fresh));
    case ClTerm::Scale:
      return clt::scale(clterm_rename_free(t->lhs, from, to, fresh),
                        clterm_rename_free(t->rhs, from, to, fresh));
    case ClTerm::Basic: {
      const BasicAgg& b = *t->basic;
      bool is_free = false;
      for (int i = 0; i < b.free_count; ++i)
        if (b.ybar[i] == from) is_free = true;
      if (!is_free) return t;
      BasicAgg nb = b;
      for (int i = 0; i < nb.free_count; ++i)
        if (nb.ybar[i] == from) nb.ybar[i] = to;
      nb.body = substitute_var(b.body, from, to, fresh);
      ClTerm out;
      out.kind = ClTerm::Basic;
      out.type = t->type;
      out.basic = std::move(nb);
      return std::make_shared<const ClTerm>(std::move(out));
    }
  }
  return t;
}

// Collects distinct subformulas of the given kind (by canonical text, in
// first-visit order).
inline void collect_depth1_atoms(const ExprPtr& e, std::vector<ExprPtr>& out,
                                 std::set<std::string>& seen) {
  if (e->kind == NodeKind::PredApp && agg_depth(e) == 1) {
    if (seen.insert(to_text(e)).second) out.push_back(e);
    return;  // nested depth-0 atoms are handled by the final pass
  }
  for (const ExprPtr& k : e->kids) collect_depth1_atoms(k, out, seen);
}

inline ExprPtr replace_subformula(const ExprPtr& e, const std::string& key,
                                  const ExprPtr& with) {
  if (e->is_formula() && to_text(e) == key) return with;
  if (e->kids.empty()) return e;
  Expr copy = *e;
  bool changed = false;
  for (ExprPtr& k : copy.kids) {
    ExprPtr nk = replace_subformula(k, key, with);
    changed |= nk != k;
    k = nk;
  }
  return changed ? std::make_shared<const Expr>(std::move(copy)) : e;
}

inline void collect_agg_terms(const ExprPtr& term, std::vector<ExprPtr>& out,
                              std::set<std::string>& seen) {
  if (term->kind == NodeKind::Agg) {
    if (seen.insert(to_text(term)).second) out.push_back(term);
    return;
  }
  for (const ExprPtr& k : term->kids) collect_agg_terms(k, out, seen);
}

struct DecompositionBuilder {
  RewriteContext& ctx;
  Signature working;
  std::map<std::string, std::string> symbol_by_iota;  // iota text -> symbol name
  int radius_seen = 0;

  std::string intern_symbol(int layer_number, const IotaDef& iota, int arity, Layer& layer) {
    std::string key = std::to_string(arity) + "\x1f" + iota.text();
    auto it = symbol_by_iota.find(key);
    if (it != symbol_by_iota.end()) return it->second;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%08llx",
                  static_cast<unsigned long long>(fnv1a(key) & 0xffffffffULL));
    std::string name = "__R" + std::to_string(layer_number) + "_" + buf;
    while (working.has_name(name)) name += "x";  // deterministic collision bump
    working.add_relation(name, arity);
    layer.symbols.push_back({name, arity, iota});
    symbol_by_iota.emplace(std::move(key), name);
    return layer.symbols.back().name;
  }

  // Sentence leaf of a cl-normalform as an iota definition.
  IotaDef sentence_iota(const ClnfLeaf& leaf) {
    if (leaf.kind == ClnfLeaf::GroundGeq1) {
      IotaDef d;
      d.kind = IotaDef::GroundGeq1;
      d.ground = leaf.ground;
      return d;
    }
    // Aggregation sentence (s = sum w(ybar). lambda): convert the total to a
    // ground cl-term for evaluation.
    const ExprPtr& f = leaf.formula;
    IotaDef d;
    d.kind = IotaDef::AggSentence;
    d.display = f;
    d.agg_value = *f->value;
    auto wi = working.weight_index(f->symbol);
    require(wi.has_value(), errc::signature_mismatch, "unknown weight " + f->symbol);
    WProduct p = make_wproduct(working.weight(*wi).carrier,
                               {WFactor{std::nullopt, f->symbol, f->vars}});
    d.ground = aggregation_to_clterm(p, f->kids[0], f->vars, leaf.radius, ctx);
    return d;
  }

  // Rewrites one depth-1 predicate atom into marker atoms over fresh
  // symbols, recording their definitions in `layer`.
  ExprPtr rewrite_atom(const ExprPtr& atom, int layer_number, Layer& layer) {
    // The fragment admits at most one free variable.
    std::string freevar = atom->free.empty() ? std::string() : atom->free[0];

    // Maximal aggregation subterms and the cl-normalforms of their bodies.
    std::vector<ExprPtr> aggs;
    std::set<std::string> seen;
    for (const ExprPtr& t : atom->kids) collect_agg_terms(t, aggs, seen);

    struct AggInfo {
      ExprPtr agg;
      ClNormalForm cnf;
    };
    std::vector<AggInfo> infos;
    std::vector<ClnfLeaf> sentences;  // global list, deduped by text
    std::map<std::string, size_t> sentence_index;
    int r = 0;
    for (const ExprPtr& a : aggs) {
      ClNormalForm cnf = cl_normalform(a->kids[0], ctx);
      r = std::max(r, cnf.max_local_radius());
      for (const ClnfLeaf& l : cnf.leaves) {
        if (l.kind == ClnfLeaf::Local) continue;
        std::string key = l.text();
        if (!sentence_index.count(key)) {
          sentence_index.emplace(key, sentences.size());
          sentences.push_back(l);
        }
      }
      infos.push_back({a, std::move(cnf)});
    }
    radius_seen = std::max(radius_seen, r);
    size_t s = sentences.size();
    require(s <= 16 && (1ull << s) <= ctx.limits.max_pairs, errc::blowup_exceeded,
            "sentence split over " + std::to_string(s) + " sentences");

    // Marker atoms for the designated sentences.
    std::vector<ExprPtr> sentence_atoms;
    for (const ClnfLeaf& l : sentences) {
      IotaDef d = sentence_iota(l);
      std::string name = intern_symbol(layer_number, d, 0, layer);
      sentence_atoms.push_back(mk::rel(name, {}));
    }

    std::vector<ExprPtr> options;
    for (std::uint64_t mask = 0; mask < (1ull << s); ++mask) {
      // The body of each aggregation, with sentences resolved per the mask.
      std::map<std::string, ClTermPtr> replacement;  // agg text -> cl-term
      for (const AggInfo& info : infos) {
        ExprPtr body = resolve_leaves(info.cnf, mask, sentence_index);
        std::vector<std::string> ybar = info.agg->product->vars();
        for (const std::string& v : info.agg->kids[0]->free)
          if (std::find(ybar.begin(), ybar.end(), v) == ybar.end()) ybar.push_back(v);
        for (const std::string& v : body->free)
          if (std::find(ybar.begin(), ybar.end(), v) == ybar.end()) ybar.push_back(v);
        replacement.emplace(to_text(info.agg),
                            aggregation_to_clterm(*info.agg->product, body, ybar, r, ctx));
      }
      // The atom's terms as cl-terms under this mask.
      std::vector<ClTermPtr> cl_args;
      for (const ExprPtr& t : atom->kids) cl_args.push_back(term_to_clterm(t, replacement));

      IotaDef d;
      d.kind = IotaDef::PredAtom;
      d.pred = atom->pred;
      int arity = freevar.empty() ? 0 : 1;
      if (arity == 1) {
        FreshVars tmp;
        for (ClTermPtr& t : cl_args) t = clterm_rename_free(t, freevar, "_z", tmp);
      }
      d.terms = std::move(cl_args);
      std::string name = intern_symbol(layer_number, d, arity, layer);
      ExprPtr marker = arity == 1 ? mk::rel(name, {freevar}) : mk::rel(name, {});

      // chi_mask & marker
      std::vector<ExprPtr> conj;
      for (size_t j = 0; j < s; ++j)
        conj.push_back((mask & (1ull << j)) ? sentence_atoms[j]
                                            : mk::not_(sentence_atoms[j]));
      conj.push_back(marker);
      options.push_back(mk::and_all(conj));
    }
    return mk::or_all(options);
  }

  // cl-normalform tree -> formula with sentence leaves resolved to top/bot.
  ExprPtr resolve_leaves(const ClNormalForm& cnf, std::uint64_t mask,
                         const std::map<std::string, size_t>& sentence_index) {
    auto rec = [&](auto&& self, const GnfNode& n) -> ExprPtr {
      switch (n.kind) {
        case GnfNode::Leaf: {
          const ClnfLeaf& l = cnf.leaves[n.leaf];
          if (l.kind == ClnfLeaf::Local) return l.formula;
          size_t idx = sentence_index.at(l.text());
          return (mask & (1ull << idx)) ? mk::top() : mk::bot();
        }
        case GnfNode::Not: return mk::not_(self(self, n.kids[0]));
        case GnfNode::Or: {
          std::vector<ExprPtr> ks;
          for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
          return mk::or_all(ks);
        }
        case GnfNode::And: {
          std::vector<ExprPtr> ks;
          for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
          return mk::and_all(ks);
        }
        case GnfNode::Top: return mk::top();
        case GnfNode::Bot: return mk::bot();
      }
      return mk::bot();
    };
    return simplify(rec(rec, cnf.root));
  }

  ClTermPtr term_to_clterm(const ExprPtr& t, const std::map<std::string, ClTermPtr>& repl) {
    auto it = repl.find(to_text(t));
    if (t->kind == NodeKind::Agg) {
      require(it != repl.end(), errc::type_error, "unexpected aggregation term");
      return it->second;
    }
    switch (t->kind) {
      case NodeKind::ConstTerm:
        return clt::constant(*t->value);
      case NodeKind::WeightTerm:
        return clt::weight_app(t->symbol, t->vars, *t->type);
      case NodeKind::Arith:
        return clt::arith(t->op, term_to_clterm(t->kids[0], repl),
                          term_to_clterm(t->kids[1], repl));
      default:
        fail(errc::type_error, "formula in term position");
    }
  }
};

}  // namespace detail

inline ClDecomposition cl_decompose(const ExprPtr& phi, RewriteContext& ctx) {
  require(phi->is_formula(), errc::type_error, "cl_decompose needs a formula");
  require(in_fragment(phi, Fragment::WA1), errc::not_in_fragment,
          "cl-decomposition covers the one-variable aggregation fragment");
  require(ctx.signature().one_weight().has_value(), errc::missing_one_weight,
          "cl-decomposition needs the all-ones weight `one` of type Z");

  detail::DecompositionBuilder b{ctx, ctx.signature(), {}, 0};
  struct SigGuard {
    RewriteContext& ctx;
    const Signature* saved;
    ~SigGuard() { ctx.sig = saved; }
  } guard{ctx, ctx.sig};
  ctx.sig = &b.working;

  ClDecomposition out;
  ExprPtr cur = phi;
  int d = agg_depth(phi);
  for (int i = 1; i <= d; ++i) {
    Layer layer;
    std::vector<ExprPtr> atoms;
    std::set<std::string> seen;
    detail::collect_depth1_atoms(cur, atoms, seen);
    for (const ExprPtr& atom : atoms) {
      ExprPtr replacement = b.rewrite_atom(atom, i, layer);
      cur = detail::replace_subformula(cur, to_text(atom), replacement);
    }
    out.layers.push_back(std::move(layer));
  }

  // Final pass: the remaining aggregation-free formula in cl-normalform;
  // its sentences become 0-ary markers.
  ClNormalForm cnf = cl_normalform(cur, ctx);
  Layer final_layer;
  std::map<std::string, size_t> sentence_index;
  std::vector<ExprPtr> sentence_atoms;
  std::vector<const ClnfLeaf*> sentence_leaves;
  for (const ClnfLeaf& l : cnf.leaves) {
    if (l.kind == ClnfLeaf::Local) continue;
    std::string key = l.text();
    if (!sentence_index.count(key)) {
      sentence_index.emplace(key, sentence_leaves.size());
      sentence_leaves.push_back(&l);
      IotaDef dio = b.sentence_iota(l);
      std::string name = b.intern_symbol(d + 1, dio, 0, final_layer);
      sentence_atoms.push_back(mk::rel(name, {}));
    }
  }
  auto rec = [&](auto&& self, const GnfNode& n) -> ExprPtr {
    switch (n.kind) {
      case GnfNode::Leaf: {
        const ClnfLeaf& l = cnf.leaves[n.leaf];
        if (l.kind == ClnfLeaf::Local) return l.formula;
        return sentence_atoms[sentence_index.at(l.text())];
      }
      case GnfNode::Not: return mk::not_(self(self, n.kids[0]));
      case GnfNode::Or: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
        return mk::or_all(ks);
      }
      case GnfNode::And: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(self(self, k));
        return mk::and_all(ks);
      }
      case GnfNode::Top: return mk::top();
      case GnfNode::Bot: return mk::bot();
    }
    return mk::bot();
  };
  out.layers.push_back(std::move(final_layer));
  out.phi_prime = rec(rec, cnf.root);
  out.local_radius = std::max(b.radius_seen, cnf.max_local_radius());
  out.sigma_final = b.working;
  return out;
}

// ---------------------------------------------------------------------------
// Structure expansion: materialize the marker relations layer by layer; each
// definition is evaluated for every element via the precomputed cl-term
// tables, with all structure reads flowing through a counted oracle.
// ---------------------------------------------------------------------------

struct ExpansionResult {
  WeightedStructure expanded;
  ExprPtr phi_prime;
  ClDecomposition decomposition;
  QueryCounts queries;
};

inline ExpansionResult expand_structure(const WeightedStructure& s, const ExprPtr& phi,
                                        RewriteContext& ctx) {
  ClDecomposition d = cl_decompose(phi, ctx);
  WeightedStructure cur = s;
  QueryCounts totals;

  for (const Layer& layer : d.layers) {
    if (layer.symbols.empty()) continue;
    LocalAccessOracle oracle(cur);
    Signature sig = cur.signature();
    std::vector<std::set<Tuple>> new_tables;
    for (const LayerSymbol& sym : layer.symbols) {
      sig.add_relation(sym.name, sym.arity);
      std::set<Tuple> table;
      const IotaDef& iota = sym.iota;
      if (iota.kind == IotaDef::GroundGeq1 || iota.kind == IotaDef::AggSentence) {
        ClEvaluator ev(iota.ground, oracle);
        Value total = ev.eval({});
        bool holds = iota.kind == IotaDef::GroundGeq1 ? total.as_int() >= 1
                                                      : total == *iota.agg_value;
        if (holds) table.insert(Tuple{});
      } else {
        std::vector<ClEvaluator> evs;
        evs.reserve(iota.terms.size());
        for (const ClTermPtr& t : iota.terms) evs.emplace_back(t, oracle);
        if (sym.arity == 0) {
          std::vector<Value> args;
          for (const ClEvaluator& ev : evs) args.push_back(ev.eval({}));
          if (iota.pred->test(args)) table.insert(Tuple{});
        } else {
          for (ElementId a = 0; a < cur.size(); ++a) {
            std::vector<Value> args;
            for (const ClEvaluator& ev : evs)
              args.push_back(ev.term()->free_vars().empty() ? ev.eval({}) : ev.eval({a}));
            if (iota.pred->test(args)) table.insert(Tuple{a});
          }
        }
      }
      new_tables.push_back(std::move(table));
    }
    totals += oracle.counts();

    // Rebuild with the extended signature; unary and 0-ary markers leave the
    // Gaifman graph untouched.
    std::vector<std::set<Tuple>> rels;
    for (size_t ri = 0; ri < cur.signature().relations().size(); ++ri)
      rels.push_back(cur.relation_table(static_cast<int>(ri)));
    for (auto& t : new_tables) rels.push_back(std::move(t));
    std::vector<std::map<Tuple, Value>> wgts;
    for (size_t wi = 0; wi < cur.signature().weights().size(); ++wi)
      wgts.push_back(cur.weight_table(static_cast<int>(wi)));
    cur = WeightedStructure::build(std::move(sig), cur.size(), std::move(rels),
                                   std::move(wgts));
  }
  return ExpansionResult{std::move(cur), d.phi_prime, std::move(d), totals};
}

}  // namespace fowa

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fowa/gaifman.hpp"
#include "fowa/locality.hpp"

namespace fowa {

// ---------------------------------------------------------------------------
// Connectivity patterns over tuple positions [k], encoded as a bitmask over
// the pairs i<j. delta_formula(G, t, ybar) asserts dist <= t along edges and
// dist > t across non-edges; with t = 2r+1 it pins down the component
// structure of the r-neighbourhood of the tuple.
// ---------------------------------------------------------------------------

struct ComponentGraph {
  int k = 1;
  std::uint32_t edges = 0;

  static int pair_index(int i, int j, int k) {
    if (i > j) std::swap(i, j);
    // index of {i,j} in the lexicographic pair order
    return i * (2 * k - i - 1) / 2 + (j - i - 1);
  }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    return edges & (1u << pair_index(i, j, k));
  }

  static int pair_count(int k) { return k * (k - 1) / 2; }

  static std::vector<ComponentGraph> all(int k) {
    std::vector<ComponentGraph> out;
    int pc = pair_count(k);
    for (std::uint32_t mask = 0; mask < (1u << pc); ++mask) out.push_back({k, mask});
    return out;
  }

  std::vector<int> components() const {
    std::vector<int> comp(k, -1);
    int next = 0;
    for (int s = 0; s < k; ++s) {
      if (comp[s] != -1) continue;
      comp[s] = next;
      std::vector<int> stack{s};
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < k; ++v)
          if (comp[v] == -1 && has_edge(u, v)) {
            comp[v] = next;
            stack.push_back(v);
          }
      }
      ++next;
    }
    return comp;
  }

  int component_count() const {
    std::vector<int> c = components();
    int m = 0;
    for (int x : c) m = std::max(m, x);
    return m + 1;
  }

  bool connected() const { return component_count() == 1; }

  // Induced pattern on a subset of positions (relabelled in order).
  ComponentGraph induced(const std::vector<int>& verts) const {
    ComponentGraph g;
    g.k = static_cast<int>(verts.size());
    for (size_t a = 0; a < verts.size(); ++a)
      for (size_t b = a + 1; b < verts.size(); ++b)
        if (has_edge(verts[a], verts[b]))
          g.edges |= 1u << pair_index(static_cast<int>(a), static_cast<int>(b), g.k);
    return g;
  }

  ComponentGraph permuted(const std::vector<int>& perm) const {
    // perm[new_position] = old_position
    return induced(perm);
  }

  friend bool operator==(const ComponentGraph& a, const ComponentGraph& b) {
    return a.k == b.k && a.edges == b.edges;
  }
};

inline ExprPtr delta_formula(const ComponentGraph& g, int threshold,
                             const std::vector<std::string>& ybar) {
  require(static_cast<int>(ybar.size()) == g.k, errc::arity_mismatch,
          "pattern arity vs variable tuple");
  std::vector<ExprPtr> parts;
  for (int i = 0; i < g.k; ++i)
    for (int j = i + 1; j < g.k; ++j)
      parts.push_back(g.has_edge(i, j) ? mk::dist_leq(ybar[i], ybar[j], threshold)
                                       : mk::dist_gt(ybar[i], ybar[j], threshold));
  return mk::and_all(parts);
}

// ---------------------------------------------------------------------------
// cl-terms: sums of W-products over an r-local body conjoined with a
// connected pattern, closed under constants, weight applications and
// arithmetic. `Scale` (a Z-typed count acting on an S-typed term) covers the
// splits where one side of a disconnected pattern carries no product factor;
// for S = Z plain multiplication is emitted instead.
// ---------------------------------------------------------------------------

struct ClTerm;
using ClTermPtr = std::shared_ptr<const ClTerm>;

struct BasicAgg {
  WProduct product;
  ExprPtr body;                    // r-local around ybar (pattern guard excluded)
  ComponentGraph pattern;          // connected
  int radius = 0;
  std::vector<std::string> ybar;   // free positions first, then summed
  int free_count = 0;              // number of leading free positions
};

struct ClTerm {
  enum Kind { Basic, Const, WeightApp, Arith, Scale };
  Kind kind = Const;
  Carrier type = Carrier::integers();
  std::optional<BasicAgg> basic;
  std::optional<Value> constant;
  std::string weight;
  std::vector<std::string> vars;  // WeightApp arguments
  char op = 0;                    // Arith
  ClTermPtr lhs, rhs;             // Arith both sides; Scale: lhs is the Z count

  std::vector<std::string> free_vars() const {
    std::vector<std::string> out;
    switch (kind) {
      case Basic:
        out.assign(basic->ybar.begin(), basic->ybar.begin() + basic->free_count);
        break;
      case Const:
        break;
      case WeightApp:
        out = vars;
        break;
      case Arith:
      case Scale: {
        out = lhs->free_vars();
        detail::merge_vars(out, rhs->free_vars());
        break;
      }
    }
    return out;
  }

  int radius() const {
    switch (kind) {
      case Basic: return basic->radius;
      case Arith:
      case Scale: return std::max(lhs->radius(), rhs->radius());
      default: return 0;
    }
  }

  int width() const {
    switch (kind) {
      case Basic: return basic->pattern.k;
      case Arith:
      case Scale: return std::max(lhs->width(), rhs->width());
      default: return 0;
    }
  }
};

namespace clt {

inline ClTermPtr constant(Value v) {
  ClTerm t;
  t.kind = ClTerm::Const;
  t.type = v.carrier();
  t.constant = std::move(v);
  return std::make_shared<const ClTerm>(std::move(t));
}

inline ClTermPtr weight_app(const std::string& w, std::vector<std::string> vars,
                            const Carrier& c) {
  detail::check_pairwise_distinct(vars, "weight application");
  ClTerm t;
  t.kind = ClTerm::WeightApp;
  t.type = c;
  t.weight = w;
  t.vars = std::move(vars);
  return std::make_shared<const ClTerm>(std::move(t));
}

inline ClTermPtr arith(char op, ClTermPtr a, ClTermPtr b) {
  require(a->type == b->type, errc::carrier_mismatch, "cl-term arithmetic over mixed carriers");
  if (op == '*')
    require(a->type.is_ring(), errc::mul_on_group, "cl-term multiplication on " + a->type.name());
  ClTerm t;
  t.kind = ClTerm::Arith;
  t.type = a->type;
  t.op = op;
  t.lhs = std::move(a);
  t.rhs = std::move(b);
  return std::make_shared<const ClTerm>(std::move(t));
}

inline ClTermPtr scale(ClTermPtr count, ClTermPtr body) {
  require(count->type == Carrier::integers(), errc::type_error, "scale count must be of type Z");
  if (body->type == Carrier::integers()) return arith('*', std::move(count), std::move(body));
  ClTerm t;
  t.kind = ClTerm::Scale;
  t.type = body->type;
  t.lhs = std::move(count);
  t.rhs = std::move(body);
  return std::make_shared<const ClTerm>(std::move(t));
}

// A basic cl-term; positions are normalized so the free variables (those not
// bound by the product) come first.
inline ClTermPtr basic(WProduct product, ExprPtr body, ComponentGraph pattern, int radius,
                       std::vector<std::string> ybar) {
  require(pattern.connected(), errc::type_error, "basic cl-term pattern must be connected");
  require(static_cast<int>(ybar.size()) == pattern.k, errc::arity_mismatch,
          "pattern arity vs tuple");
  detail::check_pairwise_distinct(ybar, "cl-term tuple");
  std::vector<std::string> pv = product.vars();
  for (const std::string& v : pv)
    require(std::find(ybar.begin(), ybar.end(), v) != ybar.end(), errc::type_error,
            "product variable " + v + " outside the tuple");
  for (const std::string& v : body->free)
    require(std::find(ybar.begin(), ybar.end(), v) != ybar.end(), errc::unbound_variable,
            "body variable " + v + " outside the tuple");
  // Reorder: frees (tuple minus product vars) first, preserving order.
  std::vector<int> perm;
  for (int i = 0; i < pattern.k; ++i)
    if (std::find(pv.begin(), pv.end(), ybar[i]) == pv.end()) perm.push_back(i);
  int free_count = static_cast<int>(perm.size());
  for (int i = 0; i < pattern.k; ++i)
    if (std::find(pv.begin(), pv.end(), ybar[i]) != pv.end()) perm.push_back(i);
  std::vector<std::string> reordered;
  for (int p : perm) reordered.push_back(ybar[p]);
  ComponentGraph gperm = pattern.permuted(perm);

  ClTerm t;
  t.kind = ClTerm::Basic;
  t.type = product.type;
  t.basic = BasicAgg{std::move(product), std::move(body), gperm, radius, std::move(reordered),
                     free_count};
  return std::make_shared<const ClTerm>(std::move(t));
}

inline ClTermPtr sum_all(const std::vector<ClTermPtr>& ts, const Carrier& c) {
  if (ts.empty()) return constant(Value::zero(c));
  ClTermPtr acc = ts[0];
  for (size_t i = 1; i < ts.size(); ++i) acc = arith('+', acc, ts[i]);
  return acc;
}

}  // namespace clt

// Canonical text for cl-terms ("(scale z t)" is the one extension over the
// expression syntax).
inline std::string clterm_text(const ClTermPtr& t) {
  switch (t->kind) {
    case ClTerm::Const:
      return t->constant->annotated();
    case ClTerm::WeightApp: {
      std::string s = "(" + t->weight;
      for (const std::string& v : t->vars) s += " " + v;
      return s + ")";
    }
    case ClTerm::Arith:
      return std::string("(") + t->op + " " + clterm_text(t->lhs) + " " + clterm_text(t->rhs) +
             ")";
    case ClTerm::Scale:
      return "(scale " + clterm_text(t->lhs) + " " + clterm_text(t->rhs) + ")";
    case ClTerm::Basic: {
      const BasicAgg& b = *t->basic;
      ExprPtr guard = delta_formula(b.pattern, 2 * b.radius + 1, b.ybar);
      ExprPtr agg = mk::agg(b.product, mk::and_(b.body, guard));
      return to_text(agg);
    }
  }
  return "?";
}

// The equivalent plain expression; only defined for scale-free terms.
inline ExprPtr clterm_to_expr(const ClTermPtr& t) {
  switch (t->kind) {
    case ClTerm::Const:
      return mk::cst(*t->constant);
    case ClTerm::WeightApp:
      return mk::weight_term(t->weight, t->vars, t->type);
    case ClTerm::Arith:
      return mk::arith(t->op, clterm_to_expr(t->lhs), clterm_to_expr(t->rhs));
    case ClTerm::Scale:
      fail(errc::type_error, "scale nodes have no plain-term equivalent");
    case ClTerm::Basic: {
      const BasicAgg& b = *t->basic;
      ExprPtr guard = delta_formula(b.pattern, 2 * b.radius + 1, b.ybar);
      return mk::agg(b.product, mk::and_(b.body, guard));
    }
  }
  fail(errc::type_error, "bad cl-term");
}

// Reference evaluation by exhaustive enumeration (ground truth in tests).
inline Value eval_clterm_naive(const WeightedStructure& s, Env env, const ClTermPtr& t) {
  switch (t->kind) {
    case ClTerm::Const:
      return *t->constant;
    case ClTerm::WeightApp:
    case ClTerm::Arith:
    case ClTerm::Basic:
      return eval_term(s, std::move(env), clterm_to_expr(t));
    case ClTerm::Scale: {
      Value count = eval_clterm_naive(s, env, t->lhs);
      Value body = eval_clterm_naive(s, env, t->rhs);
      return zscale(count.as_int(), body);
    }
  }
  fail(errc::type_error, "bad cl-term");
}

// ---------------------------------------------------------------------------
// Turning one aggregation term  sum p . psi(ybar)  with an r-local body into
// a cl-term: split by the connectivity pattern of the tuple; connected
// patterns are basic cl-terms; a disconnected pattern splits at the
// component of position 0 into a product (or scaled count) of side totals
// minus the patterns that merge components.
// ---------------------------------------------------------------------------

namespace detail {

struct ClBuilder {
  RewriteContext& ctx;

  ClTermPtr term_for(const ComponentGraph& g, const WProduct& p, const ExprPtr& body,
                     const std::vector<std::string>& ybar, int r) {
    if (g.connected()) return clt::basic(p, body, g, r, ybar);

    // Components of position 0 vs the rest.
    std::vector<int> comp = g.components();
    std::vector<int> vprime, vrest;
    for (int i = 0; i < g.k; ++i)
      (comp[i] == comp[0] ? vprime : vrest).push_back(i);
    std::vector<std::string> yprime, yrest;
    for (int i : vprime) yprime.push_back(ybar[i]);
    for (int i : vrest) yrest.push_back(ybar[i]);
    ComponentGraph gprime = g.induced(vprime);
    ComponentGraph grest = g.induced(vrest);

    // Case 1: a weight factor spans both sides; its arguments cannot form a
    // clique under the pattern guard, so every summand is 0_S.
    auto side_of = [&](const std::vector<std::string>& vars) {
      bool l = false, rr = false;
      for (const std::string& v : vars) {
        if (std::find(yprime.begin(), yprime.end(), v) != yprime.end()) l = true;
        if (std::find(yrest.begin(), yrest.end(), v) != yrest.end()) rr = true;
      }
      return l && rr;
    };
    for (const WFactor& f : p.factors)
      if (!f.is_constant() && side_of(f.vars)) return clt::constant(Value::zero(p.type));

    // Guarded split of the body across the two sides, left sides exclusive.
    FvDecomposition delta = fv_decompose_local(body, r, yprime, yrest, ctx);
    FvPairs excl = fv_exclusify(delta.pairs, true, ctx.limits, nullptr);

    std::vector<ClTermPtr> summands;
    for (const FvPair& row : excl) {
      ExprPtr theta_l = mk::and_(row.alpha, delta_formula(gprime, 2 * r + 1, yprime));
      ExprPtr theta_r = mk::and_(row.beta, delta_formula(grest, 2 * r + 1, yrest));

      ClTermPtr base = split_product(p, theta_l, theta_r, yprime, yrest, gprime, grest, r);

      // Correction: patterns H that agree with g on both sides but add cross
      // edges; each merges components, so the recursion shrinks.
      ExprPtr both = mk::and_(row.alpha, row.beta);
      ClTermPtr acc = base;
      for (const ComponentGraph& h : ComponentGraph::all(g.k)) {
        if (h == g) continue;
        if (!(h.induced(vprime) == gprime) || !(h.induced(vrest) == grest)) continue;
        ClTermPtr th = term_for(h, p, both, ybar, r);
        acc = clt::arith('-', acc, th);
      }
      summands.push_back(acc);
    }
    return clt::sum_all(summands, p.type);
  }

  // sum over the product set S'_{theta_l} x S''_{theta_r} of the product
  // value: factor-bearing sides contribute their own totals, factor-free
  // sides contribute counts.
  ClTermPtr split_product(const WProduct& p, const ExprPtr& theta_l, const ExprPtr& theta_r,
                          const std::vector<std::string>& yprime,
                          const std::vector<std::string>& yrest, const ComponentGraph& gprime,
                          const ComponentGraph& grest, int r) {
    auto on = [](const std::vector<std::string>& vars, const std::vector<std::string>& side) {
      for (const std::string& v : vars)
        if (std::find(side.begin(), side.end(), v) == side.end()) return false;
      return !vars.empty();
    };
    std::vector<WFactor> fl, fr, consts;
    for (const WFactor& f : p.factors) {
      if (f.is_constant())
        consts.push_back(f);
      else if (on(f.vars, yprime))
        fl.push_back(f);
      else
        fr.push_back(f);
    }

    if (p.type.is_ring() && !fl.empty() && !fr.empty()) {
      // Pure product of side totals; constants fold into the left side.
      std::vector<WFactor> left = fl;
      left.insert(left.end(), consts.begin(), consts.end());
      ClTermPtr tl = side_term(make_wproduct(p.type, left), theta_l, yprime, gprime, r);
      ClTermPtr tr = side_term(make_wproduct(p.type, fr), theta_r, yrest, grest, r);
      return clt::arith('*', tl, tr);
    }
    if (!fl.empty()) {
      std::vector<WFactor> left = fl;
      if (p.type.is_ring()) left.insert(left.end(), consts.begin(), consts.end());
      ClTermPtr tl = side_term(make_wproduct(p.type, left), theta_l, yprime, gprime, r);
      ClTermPtr cnt = count_term(theta_r, yrest, grest, r);
      return clt::scale(cnt, tl);
    }
    if (!fr.empty()) {
      std::vector<WFactor> right = fr;
      if (p.type.is_ring()) right.insert(right.end(), consts.begin(), consts.end());
      ClTermPtr tr = side_term(make_wproduct(p.type, right), theta_r, yrest, grest, r);
      ClTermPtr cnt = count_term(theta_l, yprime, gprime, r);
      return clt::scale(cnt, tr);
    }
    // Constants only: |S'| * |S''| copies of the constant product.
    Value c = *consts[0].constant;
    for (size_t i = 1; i < consts.size(); ++i) c = combine(c, *consts[i].constant, ArithOp::Mul);
    ClTermPtr cl = count_term(theta_l, yprime, gprime, r);
    ClTermPtr cr = count_term(theta_r, yrest, grest, r);
    return clt::scale(clt::arith('*', cl, cr), clt::constant(std::move(c)));
  }

  // sum p_side . theta_side  along the side pattern (recursing on the
  // component count).
  ClTermPtr side_term(const WProduct& p, const ExprPtr& theta,
                      const std::vector<std::string>& yside, const ComponentGraph& gside,
                      int r) {
    return term_for_with_guarded_body(gside, p, theta, yside, r);
  }

  // Count of tuples satisfying the side body: a pendant-witness indicator
  // (all side variables are free here, since the side carries no product
  // factor and every summed variable occurs in some factor).
  ClTermPtr count_term(const ExprPtr& theta, const std::vector<std::string>& yside,
                       const ComponentGraph& gside, int r) {
    auto one = ctx.signature().one_weight();
    require(one.has_value(), errc::missing_one_weight,
            "splitting this aggregation needs the all-ones weight `one` of type Z");
    const std::string& one_name = ctx.signature().weight(*one).name;
    std::string h = ctx.fresh.next("h");
    std::vector<std::string> extended = yside;
    extended.push_back(h);
    int j0 = 0;  // wire the witness like the first side position
    ComponentGraph ext;
    ext.k = gside.k + 1;
    for (int i = 0; i < gside.k; ++i)
      for (int j = i + 1; j < gside.k; ++j)
        if (gside.has_edge(i, j)) ext.edges |= 1u << ComponentGraph::pair_index(i, j, ext.k);
    int hpos = gside.k;
    ext.edges |= 1u << ComponentGraph::pair_index(j0, hpos, ext.k);
    for (int j = 0; j < gside.k; ++j)
      if (gside.has_edge(j0, j)) ext.edges |= 1u << ComponentGraph::pair_index(hpos, j, ext.k);

    ExprPtr body = mk::and_(theta, mk::var_eq(h, yside[static_cast<size_t>(j0)]));
    WProduct p = make_wproduct(Carrier::integers(), {WFactor{std::nullopt, one_name, {h}}});
    return term_for_with_guarded_body(ext, p, body, extended, r);
  }

  // As term_for, but the body already contains this pattern's guard (the
  // recursion then treats it as a plain r-local body; adding the guard twice
  // would be harmless but bloats formulas).
  ClTermPtr term_for_with_guarded_body(const ComponentGraph& g, const WProduct& p,
                                       const ExprPtr& body,
                                       const std::vector<std::string>& ybar, int r) {
    if (g.connected()) return clt::basic(p, body, g, r, ybar);
    return term_for(g, p, body, ybar, r);
  }
};

}  // namespace detail

// The cl-term equivalent to  sum p . psi(ybar)  for an r-local body
// (all free variables of psi must lie in ybar; the result's free variables
// are ybar minus the product variables).
inline ClTermPtr aggregation_to_clterm(const WProduct& p, const ExprPtr& psi,
                                       const std::vector<std::string>& ybar, int r,
                                       RewriteContext& ctx) {
  require(!ybar.empty(), errc::arity_mismatch, "aggregation tuple must be nonempty");
  require(static_cast<int>(ybar.size()) <= ctx.limits.max_width, errc::blowup_exceeded,
          "aggregation width " + std::to_string(ybar.size()) + " exceeds the cap");
  require(in_fragment(psi, Fragment::FOW1), errc::not_in_fragment,
          "aggregation body must be aggregation-free");
  for (const std::string& v : psi->free)
    require(std::find(ybar.begin(), ybar.end(), v) != ybar.end(), errc::unbound_variable,
            "body variable " + v + " outside the aggregation tuple");
  for (const std::string& v : p.vars())
    require(std::find(ybar.begin(), ybar.end(), v) != ybar.end(), errc::unbound_variable,
            "product variable " + v + " outside the aggregation tuple");
  for (const WeightedStructure* s : ctx.spot_check_pool)
    require(is_r_local_on(psi, r, *s), errc::not_local,
            "aggregation body failed the r-locality spot check");
  detail::ClBuilder b{ctx};
  std::vector<ClTermPtr> summands;
  for (const ComponentGraph& g : ComponentGraph::all(static_cast<int>(ybar.size())))
    summands.push_back(b.term_for(g, p, psi, ybar, r));
  return clt::sum_all(summands, p.type);
}

// Conditioned variant: the body is a Boolean combination of designated
// sentences and r-local formulas. For each truth pattern J over the
// sentences there is one cl-term that agrees with the aggregation on every
// structure realizing J.
inline std::map<std::uint64_t, ClTermPtr> conditioned_clterms(
    const WProduct& p, const ExprPtr& body, const std::vector<ExprPtr>& sentences,
    const std::vector<std::string>& ybar, int r, RewriteContext& ctx) {
  require(sentences.size() <= 16, errc::blowup_exceeded, "too many designated sentences");
  std::vector<std::string> keys;
  for (const ExprPtr& s : sentences) keys.push_back(to_text(s));

  // Replaces each designated sentence occurrence by top/bot per the mask.
  auto resolve = [&](const ExprPtr& e, std::uint64_t mask) {
    auto rec = [&](auto&& self, const ExprPtr& n) -> ExprPtr {
      std::string t = to_text(n);
      for (size_t i = 0; i < keys.size(); ++i)
        if (t == keys[i]) return (mask & (1ull << i)) ? mk::top() : mk::bot();
      if (n->kids.empty()) return n;
      Expr copy = *n;
      bool changed = false;
      for (ExprPtr& k : copy.kids) {
        ExprPtr nk = self(self, k);
        changed |= nk != k;
        k = nk;
      }
      return changed ? std::make_shared<const Expr>(std::move(copy)) : n;
    };
    return rec(rec, e);
  };

  std::map<std::uint64_t, ClTermPtr> out;
  for (std::uint64_t mask = 0; mask < (1ull << sentences.size()); ++mask) {
    ExprPtr resolved = simplify(resolve(body, mask));
    out.emplace(mask, aggregation_to_clterm(p, resolved, ybar, r, ctx));
  }
  return out;
}

}  // namespace fowa

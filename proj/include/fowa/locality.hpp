#pragma once

#include <map>
#include <string>
#include <vector>

#include "fowa/analyze.hpp"
#include "fowa/eval.hpp"
#include "fowa/expr.hpp"
#include "fowa/parser.hpp"
#include "fowa/structure.hpp"

namespace fowa {

struct TransformLimits {
  std::size_t max_pairs = 4096;  // decomposition rows / DNF conjuncts
  int max_width = 4;             // aggregation tuple width for cl-terms
};

// Shared state threaded through all formula transformations: the signature,
// blow-up limits, the fresh-variable counter (one per top-level call keeps
// outputs deterministic) and an optional pool of structures on which
// locality preconditions are spot-checked (debug profile).
struct RewriteContext {
  const Signature* sig = nullptr;
  TransformLimits limits;
  FreshVars fresh;
  std::string part_a = "X", part_b = "Y";
  std::vector<const WeightedStructure*> spot_check_pool;

  const Signature& signature() const {
    require(sig != nullptr, errc::type_error, "rewrite context without signature");
    return *sig;
  }
};

// ---------------------------------------------------------------------------
// Distance formulas. DistLeq(x,y,r) is the primitive the transformations
// emit; expand_dist_to_fo produces the plain first-order unfolding
//   dist(x,y) <= 0  :=  x=y
//   dist(x,y) <= r  :=  x=y  |  exists z (adj(x,z) & dist(z,y) <= r-1)
// with adj the Gaifman-edge formula derived from the signature.
// ---------------------------------------------------------------------------

inline ExprPtr adjacency_formula(const std::string& x, const std::string& y,
                                 const Signature& sig, FreshVars& fresh) {
  std::vector<ExprPtr> cases;
  for (const RelationDecl& r : sig.relations()) {
    if (r.arity < 2) continue;
    for (int i = 0; i < r.arity; ++i)
      for (int j = 0; j < r.arity; ++j) {
        if (i == j) continue;
        std::vector<std::string> args(r.arity);
        std::vector<std::string> quantified;
        for (int p = 0; p < r.arity; ++p) {
          if (p == i)
            args[p] = x;
          else if (p == j)
            args[p] = y;
          else {
            args[p] = fresh.next("a");
            quantified.push_back(args[p]);
          }
        }
        ExprPtr atom = mk::rel(r.name, args);
        for (auto it = quantified.rbegin(); it != quantified.rend(); ++it)
          atom = mk::exists(*it, atom);
        cases.push_back(atom);
      }
  }
  return mk::or_all(cases);
}

inline ExprPtr expand_dist_to_fo(const std::string& x, const std::string& y, int r,
                                 const Signature& sig, FreshVars& fresh) {
  if (r <= 0) return mk::var_eq(x, y);
  std::string z = fresh.next("d");
  ExprPtr step = mk::and_(adjacency_formula(x, z, sig, fresh),
                          expand_dist_to_fo(z, y, r - 1, sig, fresh));
  return mk::or_(mk::var_eq(x, y), mk::exists(z, step));
}

inline ExprPtr expand_dist_atoms(const ExprPtr& e, const Signature& sig, FreshVars& fresh) {
  if (e->kind == NodeKind::DistLeq)
    return expand_dist_to_fo(e->vars[0], e->vars[1], e->radius, sig, fresh);
  if (e->kids.empty()) return e;
  Expr copy = *e;
  bool changed = false;
  for (ExprPtr& k : copy.kids) {
    ExprPtr nk = expand_dist_atoms(k, sig, fresh);
    changed |= nk != k;
    k = nk;
  }
  if (!changed) return e;
  return std::make_shared<const Expr>(std::move(copy));
}

// dist(xbar, y) <= r  is the disjunction over components, > r the conjunction.
inline ExprPtr dist_tuple_leq(const std::vector<std::string>& xs, const std::string& y, int r) {
  std::vector<ExprPtr> parts;
  for (const std::string& x : xs) parts.push_back(mk::dist_leq(x, y, r));
  return mk::or_all(parts);
}

inline ExprPtr dist_tuple_gt(const std::vector<std::string>& xs, const std::string& y, int r) {
  std::vector<ExprPtr> parts;
  for (const std::string& x : xs) parts.push_back(mk::dist_gt(x, y, r));
  return mk::and_all(parts);
}

// dist(xbar; ybar) > r: every pair far apart.
inline ExprPtr dist_tuples_gt(const std::vector<std::string>& xs,
                              const std::vector<std::string>& ys, int r) {
  std::vector<ExprPtr> parts;
  for (const std::string& y : ys) parts.push_back(dist_tuple_gt(xs, y, r));
  return mk::and_all(parts);
}

// ---------------------------------------------------------------------------
// r-localisation: relativize every quantifier and aggregation to the r-ball
// of the anchor tuple.
// ---------------------------------------------------------------------------

namespace detail {

// Alpha-renames binders that collide with the given names.
inline ExprPtr rename_bound_conflicts(const ExprPtr& e, const std::vector<std::string>& avoid,
                                      FreshVars& fresh) {
  auto in_avoid = [&](const std::string& v) {
    return std::find(avoid.begin(), avoid.end(), v) != avoid.end();
  };
  switch (e->kind) {
    case NodeKind::Exists: {
      ExprPtr body = rename_bound_conflicts(e->kids[0], avoid, fresh);
      std::string y = e->vars[0];
      if (in_avoid(y)) {
        std::string ny = fresh.next(y);
        body = substitute_var(body, y, ny, fresh);
        y = ny;
      }
      return body == e->kids[0] && y == e->vars[0] ? e : mk::exists(y, body);
    }
    case NodeKind::SumEq: {
      ExprPtr body = rename_bound_conflicts(e->kids[0], avoid, fresh);
      std::vector<std::string> ybar = e->vars;
      for (std::string& y : ybar)
        if (in_avoid(y)) {
          std::string ny = fresh.next(y);
          body = substitute_var(body, y, ny, fresh);
          y = ny;
        }
      if (body == e->kids[0] && ybar == e->vars) return e;
      return mk::sum_eq(*e->value, e->symbol, ybar, e->value->carrier(), body);
    }
    case NodeKind::Agg: {
      ExprPtr body = rename_bound_conflicts(e->kids[0], avoid, fresh);
      WProduct p = *e->product;
      bool changed = body != e->kids[0];
      for (const std::string& v : p.vars())
        if (in_avoid(v)) {
          std::string nv = fresh.next(v);
          body = substitute_var(body, v, nv, fresh);
          for (WFactor& f : p.factors)
            for (std::string& u : f.vars)
              if (u == v) u = nv;
          changed = true;
        }
      return changed ? mk::agg(std::move(p), body) : e;
    }
    default: {
      if (e->kids.empty()) return e;
      Expr copy = *e;
      bool changed = false;
      for (ExprPtr& k : copy.kids) {
        ExprPtr nk = rename_bound_conflicts(k, avoid, fresh);
        changed |= nk != k;
        k = nk;
      }
      return changed ? std::make_shared<const Expr>(std::move(copy)) : e;
    }
  }
}

inline ExprPtr localize_rec(const ExprPtr& e, int r, const std::vector<std::string>& anchors) {
  switch (e->kind) {
    case NodeKind::Exists: {
      ExprPtr body = localize_rec(e->kids[0], r, anchors);
      return mk::exists(e->vars[0], mk::and_(body, dist_tuple_leq(anchors, e->vars[0], r)));
    }
    case NodeKind::SumEq: {
      ExprPtr body = localize_rec(e->kids[0], r, anchors);
      std::vector<ExprPtr> guards;
      for (const std::string& y : e->vars) guards.push_back(dist_tuple_leq(anchors, y, r));
      return mk::sum_eq(*e->value, e->symbol, e->vars, e->value->carrier(),
                        mk::and_(body, mk::and_all(guards)));
    }
    case NodeKind::Agg: {
      ExprPtr body = localize_rec(e->kids[0], r, anchors);
      std::vector<ExprPtr> guards;
      for (const std::string& y : e->kids[0]->free)
        guards.push_back(dist_tuple_leq(anchors, y, r));
      return mk::agg(*e->product, mk::and_(body, mk::and_all(guards)));
    }
    default: {
      if (e->kids.empty()) return e;
      Expr copy = *e;
      bool changed = false;
      for (ExprPtr& k : copy.kids) {
        ExprPtr nk = localize_rec(k, r, anchors);
        changed |= nk != k;
        k = nk;
      }
      return changed ? std::make_shared<const Expr>(std::move(copy)) : e;
    }
  }
}

}  // namespace detail

// The r-localisation of `e` around `anchors` (defaults to free(e)).
inline ExprPtr localize(const ExprPtr& e, int r, std::vector<std::string> anchors,
                        FreshVars& fresh) {
  require(!anchors.empty(), errc::no_anchors, "localisation needs at least one anchor variable");
  ExprPtr clean = detail::rename_bound_conflicts(e, anchors, fresh);
  return detail::localize_rec(clean, r, anchors);
}

inline ExprPtr localize(const ExprPtr& e, int r, FreshVars& fresh) {
  return localize(e, r, e->free, fresh);
}

// Semantic r-locality: evaluation at abar agrees with evaluation in the
// induced r-neighbourhood, for all tuples of the given structure.
inline bool is_r_local_on(const ExprPtr& e, int r, const WeightedStructure& s) {
  size_t k = e->free.size();
  if (k == 0) return true;
  Tuple t(k, 0);
  while (true) {
    bool global = eval_formula(s, make_env(e->free, t), e);
    Neighborhood nb = induced_neighborhood(s, t, r);
    Tuple local(k);
    for (size_t i = 0; i < k; ++i) local[i] = nb.local(t[i]);
    bool in_ball = eval_formula(nb.structure, make_env(e->free, local), e);
    if (global != in_ball) return false;
    size_t pos = k;
    while (pos > 0) {
      if (++t[pos - 1] < s.size()) break;
      t[pos - 1] = 0;
      --pos;
    }
    if (pos == 0) return true;
  }
}

// ---------------------------------------------------------------------------
// Feferman-Vaught decompositions. fv_decompose implements the constructive
// induction for the one-free-variable-per-predicate fragment with finite-
// carrier aggregation equalities; it consumes formulas over the signature
// extended with the part markers X, Y and emits marker-free pairs.
// ---------------------------------------------------------------------------

struct FvPair {
  ExprPtr alpha, beta;
};

struct FvDecomposition {
  std::vector<FvPair> pairs;
  std::vector<std::string> left_vars, right_vars;
  bool mutually_exclusive = false;
};

namespace detail {

using FvPairs = std::vector<FvPair>;

inline FvPairs fv_prune(FvPairs pairs, const TransformLimits& limits) {
  FvPairs out;
  std::set<std::string> seen;
  for (FvPair& p : pairs) {
    if (is_bot(p.alpha) || is_bot(p.beta)) continue;
    std::string key = to_text(p.alpha) + "\x1f" + to_text(p.beta);
    if (seen.insert(std::move(key)).second) out.push_back(std::move(p));
  }
  require(out.size() <= limits.max_pairs, errc::blowup_exceeded,
          "decomposition exceeded " + std::to_string(limits.max_pairs) + " pairs");
  return out;
}

// Groups pairs by one side's text, OR-ing the other side. Keeps the family
// small before the exponential steps.
inline FvPairs fv_group(const FvPairs& pairs, bool by_left) {
  std::vector<std::string> order;
  std::map<std::string, FvPair> grouped;
  for (const FvPair& p : pairs) {
    std::string key = to_text(by_left ? p.alpha : p.beta);
    auto it = grouped.find(key);
    if (it == grouped.end()) {
      order.push_back(key);
      grouped.emplace(std::move(key), p);
    } else if (by_left) {
      it->second.beta = mk::or_(it->second.beta, p.beta);
    } else {
      it->second.alpha = mk::or_(it->second.alpha, p.alpha);
    }
  }
  FvPairs out;
  for (const std::string& k : order) out.push_back(grouped.at(k));
  return out;
}

// Exclusivity refinement on one side: for each set J of input rows, the
// refined row asserts exactly the J-rows on that side and the disjunction of
// the other side over J. Returns the nonempty-J rows; `none` receives the
// "no row fires" condition on the refined side.
inline FvPairs fv_exclusify(const FvPairs& input, bool left, const TransformLimits& limits,
                            ExprPtr* none) {
  FvPairs pairs = fv_group(input, left);
  size_t s = pairs.size();
  require(s <= 20 && (1u << s) <= limits.max_pairs, errc::blowup_exceeded,
          "exclusivity refinement over " + std::to_string(s) + " rows");
  FvPairs out;
  for (std::uint64_t mask = 1; mask < (1ull << s); ++mask) {
    std::vector<ExprPtr> cond;
    std::vector<ExprPtr> rest;
    for (size_t i = 0; i < s; ++i) {
      const ExprPtr& own = left ? pairs[i].alpha : pairs[i].beta;
      const ExprPtr& other = left ? pairs[i].beta : pairs[i].alpha;
      if (mask & (1ull << i)) {
        cond.push_back(own);
        rest.push_back(other);
      } else {
        cond.push_back(mk::not_(own));
      }
    }
    ExprPtr chi = mk::and_all(cond);
    ExprPtr disj = mk::or_all(rest);
    out.push_back(left ? FvPair{chi, disj} : FvPair{disj, chi});
  }
  if (none) {
    std::vector<ExprPtr> nones;
    for (const FvPair& p : pairs) nones.push_back(mk::not_(left ? p.alpha : p.beta));
    *none = mk::and_all(nones);
  }
  return out;
}

// Negation: A(+)B |= ~phi  iff  for every row, the left or the right side
// fails; split by the set of rows whose left side fails.
inline FvPairs fv_negate(const FvPairs& input, const TransformLimits& limits) {
  FvPairs pairs = fv_group(input, true);
  size_t s = pairs.size();
  require(s <= 20 && (1u << s) <= limits.max_pairs, errc::blowup_exceeded,
          "negation over " + std::to_string(s) + " rows");
  FvPairs out;
  for (std::uint64_t mask = 0; mask < (1ull << s); ++mask) {
    std::vector<ExprPtr> ls, rs;
    for (size_t i = 0; i < s; ++i) {
      if (mask & (1ull << i))
        ls.push_back(mk::not_(pairs[i].alpha));
      else
        rs.push_back(mk::not_(pairs[i].beta));
    }
    out.push_back({mk::and_all(ls), mk::and_all(rs)});
  }
  return fv_prune(std::move(out), limits);
}

inline FvPairs fv_cross(const FvPairs& a, const FvPairs& b, const TransformLimits& limits) {
  FvPairs out;
  for (const FvPair& p : a)
    for (const FvPair& q : b)
      out.push_back({mk::and_(p.alpha, q.alpha), mk::and_(p.beta, q.beta)});
  return fv_prune(std::move(out), limits);
}

struct FvBuilder {
  RewriteContext& ctx;
  std::vector<std::string> xs, ys;

  bool on_left(const std::string& v) const {
    return std::find(xs.begin(), xs.end(), v) != xs.end();
  }
  bool on_right(const std::string& v) const {
    return std::find(ys.begin(), ys.end(), v) != ys.end();
  }

  FvPairs left_only(const ExprPtr& e) const { return {{e, mk::top()}}; }
  FvPairs right_only(const ExprPtr& e) const { return {{mk::top(), e}}; }
  FvPairs never() const { return {{mk::bot(), mk::bot()}}; }
  FvPairs always() const { return {{mk::top(), mk::top()}}; }

  // side of a variable list: 0 all-left, 1 all-right, 2 mixed
  int side_of(const std::vector<std::string>& vars) const {
    bool l = false, r = false;
    for (const std::string& v : vars) {
      if (on_left(v))
        l = true;
      else if (on_right(v))
        r = true;
      else
        fail(errc::unbound_variable, "variable " + v + " outside both parts");
    }
    if (l && r) return 2;
    return r ? 1 : 0;
  }

  FvPairs run(const ExprPtr& e) {
    switch (e->kind) {
      case NodeKind::VarEq: {
        if (e->vars[0] == e->vars[1]) return always();
        switch (side_of(e->vars)) {
          case 0: return left_only(e);
          case 1: return right_only(e);
          default: return never();  // parts are disjoint
        }
      }
      case NodeKind::DistLeq: {
        if (e->vars[0] == e->vars[1]) return always();  // dist 0
        switch (side_of(e->vars)) {
          case 0: return left_only(e);
          case 1: return right_only(e);
          default: return never();  // no cross-part paths
        }
      }
      case NodeKind::RelAtom: {
        if (e->symbol == ctx.part_a) {
          // X(z): true exactly when z lies in the left part.
          return on_left(e->vars[0]) ? always() : never();
        }
        if (e->symbol == ctx.part_b) return on_right(e->vars[0]) ? always() : never();
        if (e->vars.empty()) {
          // 0-ary: holds in the sum iff it holds in either part.
          return fv_prune({{e, mk::top()}, {mk::top(), e}}, ctx.limits);
        }
        switch (side_of(e->vars)) {
          case 0: return left_only(e);
          case 1: return right_only(e);
          default: return never();  // relation tables are part-local
        }
      }
      case NodeKind::WeightEq: {
        switch (side_of(e->vars)) {
          case 0: return left_only(e);
          case 1: return right_only(e);
          default:
            // Cross-part tuples weigh 0_S.
            return e->value->is_zero() ? always() : never();
        }
      }
      case NodeKind::PredApp: {
        std::vector<std::string> frees;
        for (const ExprPtr& t : e->kids) merge_vars(frees, t->free);
        require(frees.size() <= 1, errc::not_in_fragment,
                "predicate application with more than one free variable");
        if (frees.empty()) return left_only(e);  // structure-independent
        return on_left(frees[0]) ? left_only(e) : right_only(e);
      }
      case NodeKind::Not:
        return fv_negate(run(e->kids[0]), ctx.limits);
      case NodeKind::Or: {
        FvPairs a = run(e->kids[0]);
        FvPairs b = run(e->kids[1]);
        a.insert(a.end(), b.begin(), b.end());
        return fv_prune(std::move(a), ctx.limits);
      }
      case NodeKind::Exists: {
        std::string z = ctx.fresh.next("q");
        ExprPtr body = substitute_var(e->kids[0], e->vars[0], z, ctx.fresh);
        FvPairs out;
        {
          FvBuilder right{ctx, xs, ys};
          right.ys.push_back(z);
          for (FvPair& p : right.run(body))
            out.push_back({p.alpha, mk::exists(z, p.beta)});
        }
        {
          FvBuilder left{ctx, xs, ys};
          left.xs.push_back(z);
          for (FvPair& p : left.run(body))
            out.push_back({mk::exists(z, p.alpha), p.beta});
        }
        return fv_prune(std::move(out), ctx.limits);
      }
      case NodeKind::SumEq:
        return sum_case(e);
      case NodeKind::Agg:
        fail(errc::not_in_fragment, "aggregation terms have no Feferman-Vaught decomposition");
      default:
        fail(errc::type_error, "term in formula position");
    }
  }

  // (s = sum w(zbar). psi) over a finite carrier: the total splits into the
  // left-part total i1 and the right-part total i2 with i1 + i2 = s; each
  // side's conditional sum is rebuilt over the exclusivity refinement of the
  // decomposition of psi with zbar assigned to that side.
  FvPairs sum_case(const ExprPtr& e) {
    const Carrier& carrier = e->value->carrier();
    require(carrier.is_finite(), errc::not_in_fragment,
            "aggregation equality over infinite carrier " + carrier.name());
    // Fresh names for the bound tuple.
    std::vector<std::string> zbar;
    ExprPtr body = e->kids[0];
    for (const std::string& z : e->vars) {
      std::string nz = ctx.fresh.next("z");
      body = substitute_var(body, z, nz, ctx.fresh);
      zbar.push_back(nz);
    }

    // Right rows: totals accumulated in the B part.
    FvBuilder right{ctx, xs, ys};
    for (const std::string& z : zbar) right.ys.push_back(z);
    ExprPtr none_right;
    FvPairs excl_right = fv_exclusify(right.run(body), true, ctx.limits, &none_right);

    // Left rows: totals accumulated in the A part.
    FvBuilder left{ctx, xs, ys};
    for (const std::string& z : zbar) left.xs.push_back(z);
    ExprPtr none_left;
    FvPairs excl_left = fv_exclusify(left.run(body), false, ctx.limits, &none_left);

    unsigned m = carrier.modulus();
    FvPairs out;
    for (unsigned i1 = 0; i1 < m; ++i1) {
      Value v1 = Value::residue(BigInt(i1), m);
      Value v2 = combine(*e->value, v1, ArithOp::Sub);  // i2 := s - i1
      FvPairs chi, theta;
      for (const FvPair& p : excl_left)
        chi.push_back({mk::sum_eq(v1, e->symbol, zbar, carrier, p.alpha), p.beta});
      if (v1.is_zero()) chi.push_back({mk::top(), none_left});
      for (const FvPair& p : excl_right)
        theta.push_back({p.alpha, mk::sum_eq(v2, e->symbol, zbar, carrier, p.beta)});
      if (v2.is_zero()) theta.push_back({none_right, mk::top()});
      FvPairs crossed = fv_cross(chi, theta, ctx.limits);
      out.insert(out.end(), crossed.begin(), crossed.end());
    }
    return fv_prune(std::move(out), ctx.limits);
  }
};

}  // namespace detail

inline FvDecomposition fv_decompose(const ExprPtr& phi, std::vector<std::string> xs,
                                    std::vector<std::string> ys, RewriteContext& ctx) {
  require(phi->is_formula(), errc::type_error, "fv_decompose needs a formula");
  for (const std::string& x : xs)
    require(std::find(ys.begin(), ys.end(), x) == ys.end(), errc::type_error,
            "left and right variables must be disjoint");
  for (const std::string& v : phi->free)
    require(std::find(xs.begin(), xs.end(), v) != xs.end() ||
                std::find(ys.begin(), ys.end(), v) != ys.end(),
            errc::unbound_variable, "free variable " + v + " not assigned to a part");
  detail::FvBuilder b{ctx, xs, ys};
  FvDecomposition out;
  out.pairs = detail::fv_prune(b.run(phi), ctx.limits);
  if (out.pairs.empty()) out.pairs.push_back({mk::bot(), mk::bot()});  // nonempty by definition
  out.left_vars = std::move(xs);
  out.right_vars = std::move(ys);
  return out;
}

// Makes the alpha components pairwise unsatisfiable-in-conjunction (the
// powerset refinement); needed by the aggregation constructions and by the
// learning proofs.
inline FvDecomposition fv_make_exclusive(const FvDecomposition& d, RewriteContext& ctx) {
  FvDecomposition out = d;
  out.pairs = detail::fv_prune(detail::fv_exclusify(d.pairs, true, ctx.limits, nullptr),
                               ctx.limits);
  if (out.pairs.empty()) out.pairs.push_back({mk::bot(), mk::bot()});
  out.mutually_exclusive = true;
  return out;
}

// Single-structure variant: under the guard dist(xbar; ybar) > 2r+1, an
// r-local formula decomposes into r-localised pairs.
inline FvDecomposition fv_decompose_local(const ExprPtr& phi, int r,
                                          std::vector<std::string> xs,
                                          std::vector<std::string> ys, RewriteContext& ctx) {
  require(!xs.empty() && !ys.empty(), errc::no_anchors,
          "guarded decomposition needs anchors on both sides");
  for (const WeightedStructure* s : ctx.spot_check_pool)
    require(is_r_local_on(phi, r, *s), errc::not_local,
            "formula failed the r-locality spot check");
  FvDecomposition d = fv_decompose(phi, xs, ys, ctx);
  for (FvPair& p : d.pairs) {
    if (!is_top(p.alpha) && !is_bot(p.alpha)) p.alpha = localize(p.alpha, r, xs, ctx.fresh);
    if (!is_top(p.beta) && !is_bot(p.beta)) p.beta = localize(p.beta, r, ys, ctx.fresh);
  }
  d.pairs = detail::fv_prune(std::move(d.pairs), ctx.limits);
  if (d.pairs.empty()) d.pairs.push_back({mk::bot(), mk::bot()});
  return d;
}

}  // namespace fowa

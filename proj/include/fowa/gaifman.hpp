#pragma once

#include <map>
#include <string>
#include <vector>

#include "fowa/locality.hpp"

namespace fowa {

// Gaifman normal form: a Boolean combination of (i) local formulas around
// the free variables, (ii) basic-local sentences announcing scattered local
// witnesses, and (iii) local aggregation sentences. The construction follows
// the classical quantifier-elimination-into-locality scheme, with the
// guarded decomposition (fv_decompose_local) standing in for the plain FO
// composition lemma, and a split of aggregation equalities into a near part
// (a local formula) and a far part that decomposes.

enum class GnfLeafKind { Local, BasicLocal, LocalAgg };

struct GnfLeaf {
  GnfLeafKind kind = GnfLeafKind::Local;
  int radius = 0;
  ExprPtr formula;                        // the leaf as a formula
  ExprPtr lambda;                         // BasicLocal / LocalAgg: local core
  int ell = 0;                            // BasicLocal: scattered witnesses
  std::vector<std::string> scatter_vars;  // BasicLocal: witness variables
};

struct GnfNode {
  enum Kind { Leaf, Not, Or, And, Top, Bot } kind = Top;
  int leaf = -1;
  std::vector<GnfNode> kids;

  static GnfNode make_leaf(int idx) {
    GnfNode n;
    n.kind = Leaf;
    n.leaf = idx;
    return n;
  }
  static GnfNode make(Kind k, std::vector<GnfNode> kids) {
    GnfNode n;
    n.kind = k;
    n.kids = std::move(kids);
    return n;
  }
  static GnfNode top() { return GnfNode{}; }
  static GnfNode bot() {
    GnfNode n;
    n.kind = Bot;
    return n;
  }
};

struct GaifmanNF {
  GnfNode root;
  std::vector<GnfLeaf> leaves;

  ExprPtr to_expr() const { return node_expr(root); }

  ExprPtr node_expr(const GnfNode& n) const {
    switch (n.kind) {
      case GnfNode::Leaf: return leaves[n.leaf].formula;
      case GnfNode::Not: return mk::not_(node_expr(n.kids[0]));
      case GnfNode::Or: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(node_expr(k));
        return mk::or_all(ks);
      }
      case GnfNode::And: {
        std::vector<ExprPtr> ks;
        for (const GnfNode& k : n.kids) ks.push_back(node_expr(k));
        return mk::and_all(ks);
      }
      case GnfNode::Top: return mk::top();
      case GnfNode::Bot: return mk::bot();
    }
    return mk::bot();
  }

  int max_radius() const {
    int r = 0;
    for (const GnfLeaf& l : leaves) r = std::max(r, l.radius);
    return r;
  }
};

namespace detail {

// The canonical basic-local-sentence shape for a local core lambda(y):
// exists s1..sl ( AND_{i<j} dist(si,sj) > 2r  &  AND_i lambda(si) ).
inline ExprPtr build_basic_local_sentence(const ExprPtr& lambda, const std::string& hole,
                                          const std::vector<std::string>& scatter, int radius,
                                          FreshVars& fresh) {
  std::vector<ExprPtr> parts;
  for (size_t i = 0; i < scatter.size(); ++i)
    for (size_t j = i + 1; j < scatter.size(); ++j)
      parts.push_back(mk::dist_gt(scatter[i], scatter[j], 2 * radius));
  for (const std::string& s : scatter) {
    ExprPtr inst = lambda;
    if (hole != s) inst = substitute_var(lambda, hole, s, fresh);
    parts.push_back(inst);
  }
  ExprPtr body = mk::and_all(parts);
  for (auto it = scatter.rbegin(); it != scatter.rend(); ++it) body = mk::exists(*it, body);
  return body;
}

class GnfBuilder {
public:
  GnfBuilder(RewriteContext& ctx, GaifmanNF& out) : ctx_(ctx), out_(out) {}

  int add_local(const ExprPtr& formula, int radius) {
    return intern(GnfLeaf{GnfLeafKind::Local, radius, formula, nullptr, 0, {}});
  }

  int add_basic_local(const ExprPtr& lambda, const std::string& hole, int ell, int radius) {
    std::vector<std::string> scatter;
    for (int i = 0; i < ell; ++i) scatter.push_back(ctx_.fresh.next("s"));
    ExprPtr formula = build_basic_local_sentence(lambda, hole, scatter, radius, ctx_.fresh);
    ExprPtr core = scatter.empty() || hole == scatter[0]
                       ? lambda
                       : substitute_var(lambda, hole, scatter[0], ctx_.fresh);
    return intern(GnfLeaf{GnfLeafKind::BasicLocal, radius, formula, core, ell, scatter});
  }

  int add_local_agg(const Value& s, const std::string& w,
                    const std::vector<std::string>& ybar, const ExprPtr& lambda, int radius) {
    ExprPtr formula = mk::sum_eq(s, w, ybar, s.carrier(), lambda);
    return intern(GnfLeaf{GnfLeafKind::LocalAgg, radius, formula, lambda, 0, {}});
  }

  GnfNode build(const ExprPtr& e) {
    std::string key = to_text(e);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    GnfNode n = build_uncached(e);
    memo_.emplace(std::move(key), n);
    return n;
  }

private:
  GnfNode build_uncached(const ExprPtr& e) {
    if (is_top(e)) return GnfNode::top();
    if (is_bot(e)) return GnfNode::bot();
    switch (e->kind) {
      case NodeKind::VarEq:
      case NodeKind::RelAtom:
      case NodeKind::WeightEq:
        return GnfNode::make_leaf(add_local(e, 0));
      case NodeKind::PredApp: {
        std::vector<std::string> frees;
        for (const ExprPtr& t : e->kids) merge_vars(frees, t->free);
        require(frees.size() <= 1, errc::not_in_fragment,
                "predicate application with more than one free variable");
        return GnfNode::make_leaf(add_local(e, 0));
      }
      case NodeKind::DistLeq:
        return GnfNode::make_leaf(add_local(e, e->radius));
      case NodeKind::Not:
        return GnfNode::make(GnfNode::Not, {build(e->kids[0])});
      case NodeKind::Or:
        return GnfNode::make(GnfNode::Or, {build(e->kids[0]), build(e->kids[1])});
      case NodeKind::Exists:
        return exists_case(e);
      case NodeKind::SumEq:
        return sum_case(e);
      default:
        fail(errc::type_error, "term in formula position");
    }
  }

  // --- DNF over leaves -----------------------------------------------------

  struct Lit {
    int leaf;
    bool positive;
    friend bool operator<(const Lit& a, const Lit& b) {
      return a.leaf != b.leaf ? a.leaf < b.leaf : a.positive < b.positive;
    }
    friend bool operator==(const Lit& a, const Lit& b) {
      return a.leaf == b.leaf && a.positive == b.positive;
    }
  };
  using Conjunct = std::vector<Lit>;  // sorted, deduped

  std::vector<Conjunct> dnf(const GnfNode& n, bool positive) {
    switch (n.kind) {
      case GnfNode::Leaf:
        return {{Lit{n.leaf, positive}}};
      case GnfNode::Top:
        return positive ? std::vector<Conjunct>{{}} : std::vector<Conjunct>{};
      case GnfNode::Bot:
        return positive ? std::vector<Conjunct>{} : std::vector<Conjunct>{{}};
      case GnfNode::Not:
        return dnf(n.kids[0], !positive);
      case GnfNode::Or:
      case GnfNode::And: {
        bool unionish = (n.kind == GnfNode::Or) == positive;
        std::vector<std::vector<Conjunct>> parts;
        for (const GnfNode& k : n.kids) parts.push_back(dnf(k, positive));
        if (unionish) {
          std::vector<Conjunct> out;
          for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
          return dedup(std::move(out));
        }
        std::vector<Conjunct> out{{}};
        for (auto& p : parts) {
          std::vector<Conjunct> next;
          for (const Conjunct& a : out)
            for (const Conjunct& b : p) {
              Conjunct c = a;
              c.insert(c.end(), b.begin(), b.end());
              std::sort(c.begin(), c.end());
              c.erase(std::unique(c.begin(), c.end()), c.end());
              bool contradictory = false;
              for (size_t i = 0; i + 1 < c.size(); ++i)
                if (c[i].leaf == c[i + 1].leaf && c[i].positive != c[i + 1].positive)
                  contradictory = true;
              if (!contradictory) next.push_back(std::move(c));
            }
          require(next.size() <= ctx_.limits.max_pairs, errc::blowup_exceeded,
                  "disjunctive normal form exceeded the pair cap");
          out = std::move(next);
        }
        return dedup(std::move(out));
      }
    }
    return {};
  }

  std::vector<Conjunct> dedup(std::vector<Conjunct> cs) {
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    require(cs.size() <= ctx_.limits.max_pairs, errc::blowup_exceeded,
            "disjunctive normal form exceeded the pair cap");
    return cs;
  }

  bool is_sentence_leaf(int idx) const {
    return out_.leaves[idx].kind != GnfLeafKind::Local;
  }

  struct SplitConjunct {
    GnfNode sentence_part;  // conjunction of +-sentence leaves
    ExprPtr local_formula;  // conjunction of +-local leaves (top if none)
    int radius = 0;
  };

  SplitConjunct split(const Conjunct& c) {
    SplitConjunct out;
    std::vector<GnfNode> sents;
    std::vector<ExprPtr> locals;
    for (const Lit& l : c) {
      if (is_sentence_leaf(l.leaf)) {
        GnfNode leaf = GnfNode::make_leaf(l.leaf);
        sents.push_back(l.positive ? leaf : GnfNode::make(GnfNode::Not, {leaf}));
      } else {
        const GnfLeaf& lf = out_.leaves[l.leaf];
        locals.push_back(l.positive ? lf.formula : mk::not_(lf.formula));
        out.radius = std::max(out.radius, lf.radius);
      }
    }
    out.sentence_part =
        sents.empty() ? GnfNode::top() : GnfNode::make(GnfNode::And, std::move(sents));
    out.local_formula = mk::and_all(locals);
    return out;
  }

  // --- exists --------------------------------------------------------------

  GnfNode exists_case(const ExprPtr& e) {
    const std::string& y = e->vars[0];
    GnfNode inner = build(e->kids[0]);
    std::vector<Conjunct> conjs = dnf(inner, true);
    std::vector<GnfNode> pieces;
    for (const Conjunct& c : conjs) {
      SplitConjunct sc = split(c);
      GnfNode local = exists_local(y, sc.local_formula, sc.radius);
      pieces.push_back(GnfNode::make(GnfNode::And, {sc.sentence_part, local}));
    }
    if (pieces.empty()) return GnfNode::bot();
    return GnfNode::make(GnfNode::Or, std::move(pieces));
  }

  // exists y lambda(xs, y) with lambda r-local around its free variables.
  GnfNode exists_local(const std::string& y, const ExprPtr& lambda, int r) {
    std::vector<std::string> frees = lambda->free;
    if (std::find(frees.begin(), frees.end(), y) == frees.end()) {
      // y does not occur: the quantifier is vacuous (universes are nonempty).
      if (is_top(lambda)) return GnfNode::top();
      return GnfNode::make_leaf(add_local(lambda, r));
    }
    std::vector<std::string> xs;
    for (const std::string& v : frees)
      if (v != y) xs.push_back(v);
    if (xs.empty()) return GnfNode::make_leaf(add_basic_local(lambda, y, 1, r));

    int g = 2 * r + 1;
    ExprPtr near = mk::exists(y, mk::and_(lambda, dist_tuple_leq(xs, y, g)));
    GnfNode near_node = GnfNode::make_leaf(add_local(near, 3 * r + 1));

    FvDecomposition delta = fv_decompose_local(lambda, r, xs, {y}, ctx_);
    std::vector<GnfNode> pieces{near_node};
    for (const FvPair& p : delta.pairs) {
      GnfNode alpha = GnfNode::make_leaf(add_local(p.alpha, r));
      GnfNode far = scattered_witness(p.beta, y, r, g, static_cast<int>(xs.size()), xs);
      pieces.push_back(GnfNode::make(GnfNode::And, {alpha, far}));
    }
    return GnfNode::make(GnfNode::Or, std::move(pieces));
  }

  // exists y (beta(y) & dist(xs,y) > g), beta r-local around y. Equivalent to
  //   E_{k+1}  \/  MID  \/  \/_{j=0..k} (A_j & ~A_{j+1} & E_{j+1})
  // where E_m announces m beta-points pairwise > 2g apart, MID a beta-point
  // in the annulus g < d <= 3g around xs, and A_j a j-point scattered set
  // inside the g-ball of xs. (Pigeonhole both ways; see the A_j soundness
  // argument: j+1 scattered points cannot all sit inside N_g(xs) when the
  // local maximum is j, so one lies beyond g.)
  GnfNode scattered_witness(const ExprPtr& beta, const std::string& y, int r, int g, int k,
                            const std::vector<std::string>& xs) {
    std::vector<int> e_leaf(k + 2, -1);
    for (int m = 1; m <= k + 1; ++m) e_leaf[m] = add_basic_local(beta, y, m, g);

    ExprPtr mid = mk::exists(
        y, mk::and_(beta, mk::and_(dist_tuple_leq(xs, y, 3 * g), dist_tuple_gt(xs, y, g))));
    GnfNode mid_node = GnfNode::make_leaf(add_local(mid, 4 * g));

    // A_j: j witnesses inside N_g(xs), pairwise > 2g apart, all satisfying beta.
    auto local_scatter = [&](int j) -> GnfNode {
      std::vector<std::string> ws;
      for (int i = 0; i < j; ++i) ws.push_back(ctx_.fresh.next("w"));
      std::vector<ExprPtr> parts;
      for (int i = 0; i < j; ++i) parts.push_back(dist_tuple_leq(xs, ws[i], g));
      for (int i = 0; i < j; ++i)
        for (int i2 = i + 1; i2 < j; ++i2) parts.push_back(mk::dist_gt(ws[i], ws[i2], 2 * g));
      for (int i = 0; i < j; ++i) parts.push_back(substitute_var(beta, y, ws[i], ctx_.fresh));
      ExprPtr body = mk::and_all(parts);
      for (auto it = ws.rbegin(); it != ws.rend(); ++it) body = mk::exists(*it, body);
      return GnfNode::make_leaf(add_local(body, 3 * g));
    };
    std::vector<GnfNode> a_leaf(k + 2, GnfNode::top());
    for (int j = 1; j <= k + 1; ++j) a_leaf[j] = local_scatter(j);

    std::vector<GnfNode> pieces;
    pieces.push_back(GnfNode::make_leaf(e_leaf[k + 1]));
    pieces.push_back(mid_node);
    for (int j = 0; j <= k; ++j) {
      std::vector<GnfNode> conj;
      if (j >= 1) conj.push_back(a_leaf[j]);
      conj.push_back(GnfNode::make(GnfNode::Not, {a_leaf[j + 1]}));
      conj.push_back(GnfNode::make_leaf(e_leaf[j + 1]));
      pieces.push_back(GnfNode::make(GnfNode::And, std::move(conj)));
    }
    return GnfNode::make(GnfNode::Or, std::move(pieces));
  }

  // --- aggregation equalities ------------------------------------------------

  GnfNode sum_case(const ExprPtr& e) {
    const Carrier& carrier = e->value->carrier();
    require(carrier.is_finite(), errc::not_in_fragment,
            "aggregation equality over infinite carrier " + carrier.name());
    // Fresh bound tuple.
    std::vector<std::string> ybar;
    ExprPtr body = e->kids[0];
    for (const std::string& z : e->vars) {
      std::string nz = ctx_.fresh.next("y");
      body = substitute_var(body, z, nz, ctx_.fresh);
      ybar.push_back(nz);
    }
    std::vector<std::string> xs = e->free;

    GnfNode inner = build(body);
    std::vector<Conjunct> conjs = dnf(inner, true);
    size_t n = conjs.size();
    require(n <= 16 && (1u << n) <= ctx_.limits.max_pairs, errc::blowup_exceeded,
            "aggregation case split over " + std::to_string(n) + " conjuncts");
    std::vector<SplitConjunct> splits;
    splits.reserve(n);
    int r = 0;
    for (const Conjunct& c : conjs) {
      splits.push_back(split(c));
      r = std::max(r, splits.back().radius);
    }

    std::vector<GnfNode> pieces;
    // chi_J & (s = sum w(ybar). \/_{j in J} lambda_j), over nonempty J.
    for (std::uint64_t mask = 1; mask < (1ull << n); ++mask) {
      std::vector<GnfNode> chi;
      std::vector<ExprPtr> lambdas;
      for (size_t j = 0; j < n; ++j) {
        if (mask & (1ull << j)) {
          chi.push_back(splits[j].sentence_part);
          lambdas.push_back(splits[j].local_formula);
        } else {
          chi.push_back(GnfNode::make(GnfNode::Not, {splits[j].sentence_part}));
        }
      }
      GnfNode chi_node = GnfNode::make(GnfNode::And, std::move(chi));
      GnfNode sum_node = sum_local(*e->value, e->symbol, ybar, mk::or_all(lambdas), r, xs);
      pieces.push_back(GnfNode::make(GnfNode::And, {chi_node, sum_node}));
    }
    if (e->value->is_zero()) {
      // No conjunct fires anywhere: the total is empty, hence 0_S.
      std::vector<GnfNode> none;
      for (size_t j = 0; j < n; ++j)
        none.push_back(GnfNode::make(GnfNode::Not, {splits[j].sentence_part}));
      pieces.push_back(none.empty() ? GnfNode::top()
                                    : GnfNode::make(GnfNode::And, std::move(none)));
    }
    if (pieces.empty()) return GnfNode::bot();
    return GnfNode::make(GnfNode::Or, std::move(pieces));
  }

  // psi(xs) = (s = sum w(ybar). lambda(xs,ybar)), lambda r-local.
  GnfNode sum_local(const Value& s, const std::string& w, const std::vector<std::string>& ybar,
                    const ExprPtr& lambda, int r, const std::vector<std::string>& xs) {
    if (xs.empty()) return GnfNode::make_leaf(add_local_agg(s, w, ybar, lambda, r));
    const Carrier& carrier = s.carrier();
    int rp = 2 * r + 1;
    ExprPtr far_guard = dist_tuples_gt(xs, ybar, rp);
    ExprPtr near_guard = mk::not_(far_guard);

    // Guarded decomposition of lambda across (xs; ybar), alphas exclusive.
    FvDecomposition delta = fv_decompose_local(lambda, r, xs, ybar, ctx_);
    ExprPtr none_alpha;
    detail::FvPairs excl =
        detail::fv_exclusify(delta.pairs, true, ctx_.limits, &none_alpha);

    unsigned m = carrier.modulus();
    std::vector<GnfNode> pieces;
    for (unsigned i1 = 0; i1 < m; ++i1) {
      Value v1 = Value::residue(BigInt(i1), m);
      Value v2 = combine(s, v1, ArithOp::Sub);
      // Near part: contributions with some y within r' of xs; nonzero-weight
      // tuples近 the anchors stay inside the (r'+1+r)-ball.
      ExprPtr near_sum = mk::sum_eq(v1, w, ybar, carrier, mk::and_(lambda, near_guard));
      GnfNode near_node = GnfNode::make_leaf(add_local(near_sum, rp + 1 + r));
      // Far part: under the guard, lambda splits into alpha(xs) & beta(ybar).
      std::vector<GnfNode> far_options;
      for (const FvPair& p : excl) {
        GnfNode alpha_node = GnfNode::make_leaf(add_local(p.alpha, r));
        far_options.push_back(
            GnfNode::make(GnfNode::And, {alpha_node, far_total(v2, w, ybar, p.beta, r, rp, xs)}));
      }
      if (v2.is_zero())
        far_options.push_back(GnfNode::make_leaf(add_local(none_alpha, r)));
      GnfNode far_node = far_options.empty() ? GnfNode::bot()
                                             : GnfNode::make(GnfNode::Or, std::move(far_options));
      pieces.push_back(GnfNode::make(GnfNode::And, {near_node, far_node}));
    }
    return GnfNode::make(GnfNode::Or, std::move(pieces));
  }

  // (i2 = sum w(ybar). (beta(ybar) & dist(xs;ybar) > r')): split off the
  // unguarded total (a local aggregation sentence) minus the near remainder
  // (a local formula): j1 - j2 = i2.
  GnfNode far_total(const Value& i2, const std::string& w, const std::vector<std::string>& ybar,
                    const ExprPtr& beta, int r, int rp, const std::vector<std::string>& xs) {
    const Carrier& carrier = i2.carrier();
    unsigned m = carrier.modulus();
    std::vector<GnfNode> options;
    for (unsigned j1 = 0; j1 < m; ++j1) {
      Value vj1 = Value::residue(BigInt(j1), m);
      Value vj2 = combine(vj1, i2, ArithOp::Sub);  // j2 := j1 - i2
      GnfNode total = GnfNode::make_leaf(add_local_agg(vj1, w, ybar, beta, r));
      ExprPtr near_rem = mk::sum_eq(vj2, w, ybar, carrier,
                                    mk::and_(beta, mk::not_(dist_tuples_gt(xs, ybar, rp))));
      GnfNode rem = GnfNode::make_leaf(add_local(near_rem, rp + 1 + r));
      options.push_back(GnfNode::make(GnfNode::And, {total, rem}));
    }
    return GnfNode::make(GnfNode::Or, std::move(options));
  }

  int intern(GnfLeaf leaf) {
    std::string key = std::to_string(static_cast<int>(leaf.kind)) + "\x1f" +
                      std::to_string(leaf.radius) + "\x1f" + to_text(leaf.formula);
    auto it = leaf_index_.find(key);
    if (it != leaf_index_.end()) return it->second;
    int idx = static_cast<int>(out_.leaves.size());
    out_.leaves.push_back(std::move(leaf));
    leaf_index_.emplace(std::move(key), idx);
    return idx;
  }

  RewriteContext& ctx_;
  GaifmanNF& out_;
  std::map<std::string, GnfNode> memo_;
  std::map<std::string, int> leaf_index_;
};

}  // namespace detail

namespace detail {
inline void collect_used_leaves(const GnfNode& n, std::vector<bool>& used) {
  if (n.kind == GnfNode::Leaf) used[n.leaf] = true;
  for (const GnfNode& k : n.kids) collect_used_leaves(k, used);
}

inline void remap_leaves(GnfNode& n, const std::vector<int>& remap) {
  if (n.kind == GnfNode::Leaf) n.leaf = remap[n.leaf];
  for (GnfNode& k : n.kids) remap_leaves(k, remap);
}
}  // namespace detail

inline GaifmanNF gaifman_nf(const ExprPtr& phi, RewriteContext& ctx) {
  require(phi->is_formula(), errc::type_error, "gaifman_nf needs a formula");
  require(in_fragment(phi, Fragment::FOW1), errc::not_in_fragment,
          "gaifman normal form requires the aggregation-free one-variable fragment");
  GaifmanNF out;
  detail::GnfBuilder b(ctx, out);
  out.root = b.build(phi);
  // Drop leaves that only served intermediate steps.
  std::vector<bool> used(out.leaves.size(), false);
  detail::collect_used_leaves(out.root, used);
  std::vector<int> remap(out.leaves.size(), -1);
  std::vector<GnfLeaf> kept;
  for (size_t i = 0; i < out.leaves.size(); ++i)
    if (used[i]) {
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(std::move(out.leaves[i]));
    }
  out.leaves = std::move(kept);
  detail::remap_leaves(out.root, remap);
  return out;
}

// Syntactic leaf-shape validation: every leaf must carry exactly the shape
// its tag promises, with free variables confined appropriately.
inline void validate_gnf(const GaifmanNF& g, const std::vector<std::string>& allowed_free) {
  FreshVars dummy;
  for (const GnfLeaf& l : g.leaves) {
    require(l.formula != nullptr && l.formula->is_formula(), errc::type_error,
            "leaf must be a formula");
    switch (l.kind) {
      case GnfLeafKind::Local:
        for (const std::string& v : l.formula->free)
          require(std::find(allowed_free.begin(), allowed_free.end(), v) != allowed_free.end(),
                  errc::type_error, "local leaf with stray free variable " + v);
        break;
      case GnfLeafKind::BasicLocal: {
        require(l.formula->free.empty(), errc::type_error, "basic-local leaf must be a sentence");
        require(l.ell >= 1 && static_cast<int>(l.scatter_vars.size()) == l.ell, errc::type_error,
                "basic-local leaf witness count");
        ExprPtr expected = detail::build_basic_local_sentence(
            l.lambda, l.scatter_vars[0], l.scatter_vars, l.radius, dummy);
        require(same_expr(expected, l.formula), errc::type_error,
                "basic-local leaf shape mismatch");
        break;
      }
      case GnfLeafKind::LocalAgg: {
        require(l.formula->free.empty(), errc::type_error,
                "local aggregation leaf must be a sentence");
        require(l.formula->kind == NodeKind::SumEq, errc::type_error,
                "local aggregation leaf must be an aggregation equality");
        require(same_expr(l.formula->kids[0], l.lambda), errc::type_error,
                "local aggregation leaf body mismatch");
        break;
      }
    }
  }
}

}  // namespace fowa

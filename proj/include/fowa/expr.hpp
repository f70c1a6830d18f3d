#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fowa/algebra.hpp"
#include "fowa/error.hpp"

namespace fowa {

// AST for formulas and terms. Ten construction rules plus a primitive
// distance atom DistLeq(x,y,r) ("dist(x,y) <= r"); the primitive keeps
// transformed formulas evaluable at desk scale, and expand_dist_to_fo (see
// locality.hpp) provides the plain-FO unfolding it abbreviates.
enum class NodeKind {
  VarEq,      // x1 = x2
  RelAtom,    // R(x...)
  WeightEq,   // s = w(x...)
  Not,        // ~phi
  Or,         // phi | psi
  Exists,     // exists y phi
  SumEq,      // s = sum w(ybar): phi
  PredApp,    // P(t1..tm)
  DistLeq,    // dist(x,y) <= r
  ConstTerm,  // s
  WeightTerm, // w(x...)
  Arith,      // t1 op t2
  Agg         // sum p : phi
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One factor of a W-product: either a constant of the product's carrier or
// a weight application over pairwise distinct variables.
struct WFactor {
  std::optional<Value> constant;
  std::string weight;
  std::vector<std::string> vars;

  bool is_constant() const { return constant.has_value(); }
};

struct WProduct {
  Carrier type = Carrier::integers();
  std::vector<WFactor> factors;

  // All variables occurring in the product, in first-occurrence order.
  std::vector<std::string> vars() const {
    std::vector<std::string> out;
    for (const WFactor& f : factors)
      for (const std::string& v : f.vars)
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return out;
  }
};

namespace detail {
inline void check_pairwise_distinct(const std::vector<std::string>& vars, const char* what) {
  for (size_t i = 0; i < vars.size(); ++i)
    for (size_t j = i + 1; j < vars.size(); ++j)
      require(vars[i] != vars[j], errc::distinctness_error,
              std::string(what) + ": repeated variable " + vars[i]);
}
}  // namespace detail

inline WProduct make_wproduct(const Carrier& type, std::vector<WFactor> factors) {
  require(!factors.empty(), errc::type_error, "W-product needs at least one factor");
  if (!type.is_ring())
    require(factors.size() == 1, errc::type_error,
            "group-typed W-products have exactly one factor");
  for (const WFactor& f : factors) {
    if (f.is_constant()) {
      require(f.constant->carrier() == type, errc::carrier_mismatch,
              "W-product constant of wrong carrier");
      require(f.vars.empty() && f.weight.empty(), errc::type_error, "malformed factor");
    } else {
      require(!f.weight.empty(), errc::type_error, "malformed factor");
      detail::check_pairwise_distinct(f.vars, "W-product factor");
    }
  }
  return WProduct{type, std::move(factors)};
}

struct Expr {
  NodeKind kind;
  std::vector<std::string> vars;   // VarEq/DistLeq: 2; RelAtom/WeightEq/WeightTerm: args;
                                   // Exists: bound var; SumEq: bound tuple
  std::string symbol;              // relation / weight name
  std::optional<Value> value;      // WeightEq/SumEq/ConstTerm: s
  std::vector<ExprPtr> kids;
  std::optional<WProduct> product; // Agg
  char op = 0;                     // Arith: '+','-','*'
  int radius = 0;                  // DistLeq
  std::optional<Carrier> type;     // terms only
  PredicatePtr pred;               // PredApp

  std::vector<std::string> free;   // cached, first-occurrence order

  bool is_formula() const {
    switch (kind) {
      case NodeKind::ConstTerm:
      case NodeKind::WeightTerm:
      case NodeKind::Arith:
      case NodeKind::Agg:
        return false;
      default:
        return true;
    }
  }
  bool is_term() const { return !is_formula(); }
};

namespace detail {

inline void merge_vars(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const std::string& v : from)
    if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
}

inline void remove_vars(std::vector<std::string>& from, const std::vector<std::string>& bound) {
  from.erase(std::remove_if(from.begin(), from.end(),
                            [&](const std::string& v) {
                              return std::find(bound.begin(), bound.end(), v) != bound.end();
                            }),
             from.end());
}

inline ExprPtr finish(Expr e) {
  switch (e.kind) {
    case NodeKind::VarEq:
    case NodeKind::RelAtom:
    case NodeKind::WeightTerm:
    case NodeKind::WeightEq:
    case NodeKind::DistLeq:
      // Relation atoms may repeat a variable; weight applications cannot.
      merge_vars(e.free, e.vars);
      break;
    case NodeKind::Not:
      e.free = e.kids[0]->free;
      break;
    case NodeKind::Or:
    case NodeKind::Arith:
      e.free = e.kids[0]->free;
      merge_vars(e.free, e.kids[1]->free);
      break;
    case NodeKind::Exists:
      e.free = e.kids[0]->free;
      remove_vars(e.free, e.vars);
      break;
    case NodeKind::SumEq:
      e.free = e.kids[0]->free;
      remove_vars(e.free, e.vars);
      break;
    case NodeKind::PredApp:
      for (const ExprPtr& t : e.kids) merge_vars(e.free, t->free);
      break;
    case NodeKind::ConstTerm:
      break;
    case NodeKind::Agg:
      e.free = e.kids[0]->free;
      remove_vars(e.free, e.product->vars());
      break;
  }
  return std::make_shared<const Expr>(std::move(e));
}

}  // namespace detail

// --- smart constructors ----------------------------------------------------

namespace mk {

inline ExprPtr var_eq(const std::string& x, const std::string& y) {
  Expr e;
  e.kind = NodeKind::VarEq;
  e.vars = {x, y};
  return detail::finish(std::move(e));
}

inline ExprPtr rel(const std::string& name, std::vector<std::string> vars) {
  Expr e;
  e.kind = NodeKind::RelAtom;
  e.symbol = name;
  e.vars = std::move(vars);
  return detail::finish(std::move(e));
}

inline ExprPtr weight_eq(Value s, const std::string& w, std::vector<std::string> vars,
                         const Carrier& wtype) {
  require(s.carrier() == wtype, errc::carrier_mismatch, "constant vs weight type in weq");
  detail::check_pairwise_distinct(vars, "weight application");
  Expr e;
  e.kind = NodeKind::WeightEq;
  e.symbol = w;
  e.value = std::move(s);
  e.vars = std::move(vars);
  return detail::finish(std::move(e));
}

inline ExprPtr not_(ExprPtr a) {
  require(a->is_formula(), errc::type_error, "not applies to formulas");
  Expr e;
  e.kind = NodeKind::Not;
  e.kids = {std::move(a)};
  return detail::finish(std::move(e));
}

inline ExprPtr or_(ExprPtr a, ExprPtr b) {
  require(a->is_formula() && b->is_formula(), errc::type_error, "or applies to formulas");
  Expr e;
  e.kind = NodeKind::Or;
  e.kids = {std::move(a), std::move(b)};
  return detail::finish(std::move(e));
}

inline ExprPtr exists(const std::string& y, ExprPtr body) {
  require(body->is_formula(), errc::type_error, "exists applies to formulas");
  Expr e;
  e.kind = NodeKind::Exists;
  e.vars = {y};
  e.kids = {std::move(body)};
  return detail::finish(std::move(e));
}

inline ExprPtr sum_eq(Value s, const std::string& w, std::vector<std::string> ybar,
                      const Carrier& wtype, ExprPtr body) {
  require(s.carrier() == wtype, errc::carrier_mismatch, "constant vs weight type in sumEq");
  require(body->is_formula(), errc::type_error, "sumEq body must be a formula");
  detail::check_pairwise_distinct(ybar, "sumEq weight application");
  Expr e;
  e.kind = NodeKind::SumEq;
  e.symbol = w;
  e.value = std::move(s);
  e.vars = std::move(ybar);
  e.kids = {std::move(body)};
  return detail::finish(std::move(e));
}

inline ExprPtr pred(PredicatePtr p, std::vector<ExprPtr> terms) {
  require(p != nullptr, errc::type_error, "null predicate");
  require(terms.size() == p->arg_types.size(), errc::arity_mismatch,
          "predicate " + p->name + " arity");
  for (size_t i = 0; i < terms.size(); ++i) {
    require(terms[i]->is_term(), errc::type_error, "predicate argument must be a term");
    require(*terms[i]->type == p->arg_types[i], errc::type_error,
            "predicate " + p->name + " argument " + std::to_string(i + 1) + " carrier");
  }
  Expr e;
  e.kind = NodeKind::PredApp;
  e.pred = std::move(p);
  e.kids = std::move(terms);
  return detail::finish(std::move(e));
}

inline ExprPtr dist_leq(const std::string& x, const std::string& y, int r) {
  require(r >= 0, errc::out_of_range, "distance radius must be >= 0");
  Expr e;
  e.kind = NodeKind::DistLeq;
  e.vars = {x, y};
  e.radius = r;
  return detail::finish(std::move(e));
}

inline ExprPtr cst(Value v) {
  Expr e;
  e.kind = NodeKind::ConstTerm;
  e.type = v.carrier();
  e.value = std::move(v);
  return detail::finish(std::move(e));
}

inline ExprPtr weight_term(const std::string& w, std::vector<std::string> vars,
                           const Carrier& wtype) {
  detail::check_pairwise_distinct(vars, "weight application");
  Expr e;
  e.kind = NodeKind::WeightTerm;
  e.symbol = w;
  e.vars = std::move(vars);
  e.type = wtype;
  return detail::finish(std::move(e));
}

inline ExprPtr arith(char op, ExprPtr a, ExprPtr b) {
  require(op == '+' || op == '-' || op == '*', errc::type_error, "bad arithmetic operator");
  require(a->is_term() && b->is_term(), errc::type_error, "arithmetic needs terms");
  require(*a->type == *b->type, errc::carrier_mismatch, "arithmetic over mixed carriers");
  if (op == '*')
    require(a->type->is_ring(), errc::mul_on_group, "term multiplication on " + a->type->name());
  Expr e;
  e.kind = NodeKind::Arith;
  e.op = op;
  e.type = *a->type;
  e.kids = {std::move(a), std::move(b)};
  return detail::finish(std::move(e));
}

inline ExprPtr agg(WProduct p, ExprPtr body) {
  require(body->is_formula(), errc::type_error, "aggregation body must be a formula");
  Expr e;
  e.kind = NodeKind::Agg;
  e.type = p.type;
  e.product = std::move(p);
  e.kids = {std::move(body)};
  return detail::finish(std::move(e));
}

// Truth constants, realized as |= / =| of "exists z. ~z=z".
inline ExprPtr bot() { return exists("_z", not_(var_eq("_z", "_z"))); }
inline ExprPtr top() { return not_(bot()); }

inline ExprPtr and_(ExprPtr a, ExprPtr b) { return not_(or_(not_(std::move(a)), not_(std::move(b)))); }
inline ExprPtr forall(const std::string& y, ExprPtr body) {
  return not_(exists(y, not_(std::move(body))));
}

inline ExprPtr or_all(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return bot();
  ExprPtr acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = or_(acc, xs[i]);
  return acc;
}

inline ExprPtr and_all(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return top();
  ExprPtr acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = and_(acc, xs[i]);
  return acc;
}

inline ExprPtr dist_gt(const std::string& x, const std::string& y, int r) {
  return not_(dist_leq(x, y, r));
}

}  // namespace mk

// --- canonical printing ----------------------------------------------------

namespace detail {
inline void print_expr(std::ostream& out, const Expr& e) {
  auto print_vars = [&](size_t from = 0) {
    for (size_t i = from; i < e.vars.size(); ++i) out << ' ' << e.vars[i];
  };
  switch (e.kind) {
    case NodeKind::VarEq:
      out << "(eq " << e.vars[0] << ' ' << e.vars[1] << ')';
      break;
    case NodeKind::RelAtom:
      out << "(rel " << e.symbol;
      print_vars();
      out << ')';
      break;
    case NodeKind::WeightEq:
      out << "(weq " << e.value->annotated() << ' ' << e.symbol;
      print_vars();
      out << ')';
      break;
    case NodeKind::Not:
      out << "(not ";
      print_expr(out, *e.kids[0]);
      out << ')';
      break;
    case NodeKind::Or:
      out << "(or ";
      print_expr(out, *e.kids[0]);
      out << ' ';
      print_expr(out, *e.kids[1]);
      out << ')';
      break;
    case NodeKind::Exists:
      out << "(exists " << e.vars[0] << ' ';
      print_expr(out, *e.kids[0]);
      out << ')';
      break;
    case NodeKind::SumEq: {
      out << "(sumEq " << e.value->annotated() << ' ' << e.symbol << " (";
      for (size_t i = 0; i < e.vars.size(); ++i) {
        if (i) out << ' ';
        out << e.vars[i];
      }
      out << ") ";
      print_expr(out, *e.kids[0]);
      out << ')';
      break;
    }
    case NodeKind::PredApp:
      out << "(pred " << e.pred->name;
      for (const ExprPtr& t : e.kids) {
        out << ' ';
        print_expr(out, *t);
      }
      out << ')';
      break;
    case NodeKind::DistLeq:
      out << "(distle " << e.radius << ' ' << e.vars[0] << ' ' << e.vars[1] << ')';
      break;
    case NodeKind::ConstTerm:
      out << e.value->annotated();
      break;
    case NodeKind::WeightTerm:
      out << '(' << e.symbol;
      print_vars();
      out << ')';
      break;
    case NodeKind::Arith:
      out << '(' << e.op << ' ';
      print_expr(out, *e.kids[0]);
      out << ' ';
      print_expr(out, *e.kids[1]);
      out << ')';
      break;
    case NodeKind::Agg: {
      out << "(agg (*";
      for (const WFactor& f : e.product->factors) {
        out << ' ';
        if (f.is_constant()) {
          out << f.constant->annotated();
        } else {
          out << '(' << f.weight;
          for (const std::string& v : f.vars) out << ' ' << v;
          out << ')';
        }
      }
      out << ") ";
      print_expr(out, *e.kids[0]);
      out << ')';
      break;
    }
  }
}
}  // namespace detail

inline std::string to_text(const ExprPtr& e) {
  std::ostringstream out;
  detail::print_expr(out, *e);
  return out.str();
}

// Structural identity via the canonical printing.
inline bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  return a == b || to_text(a) == to_text(b);
}

// --- truth-constant recognition and conservative simplification -------------

inline bool is_bot(const ExprPtr& e) {
  return e->kind == NodeKind::Exists && e->kids[0]->kind == NodeKind::Not &&
         e->kids[0]->kids[0]->kind == NodeKind::VarEq &&
         e->kids[0]->kids[0]->vars[0] == e->kids[0]->kids[0]->vars[1] &&
         e->kids[0]->kids[0]->vars[0] == e->vars[0];
}

inline bool is_top(const ExprPtr& e) { return e->kind == NodeKind::Not && is_bot(e->kids[0]); }

// Unit laws and double negation only; everything else is left alone so the
// shapes the transformation theorems promise stay recognizable.
inline ExprPtr simplify(const ExprPtr& e) {
  if (e->is_term()) {
    if (e->kind == NodeKind::Agg) {
      ExprPtr body = simplify(e->kids[0]);
      if (body == e->kids[0]) return e;
      return mk::agg(*e->product, body);
    }
    if (e->kind == NodeKind::Arith) {
      ExprPtr a = simplify(e->kids[0]), b = simplify(e->kids[1]);
      if (a == e->kids[0] && b == e->kids[1]) return e;
      return mk::arith(e->op, a, b);
    }
    return e;
  }
  switch (e->kind) {
    case NodeKind::Not: {
      ExprPtr a = simplify(e->kids[0]);
      if (a->kind == NodeKind::Not) return a->kids[0];
      if (is_bot(a)) return mk::top();
      return a == e->kids[0] ? e : mk::not_(a);
    }
    case NodeKind::Or: {
      ExprPtr a = simplify(e->kids[0]), b = simplify(e->kids[1]);
      if (is_top(a) || is_top(b)) return mk::top();
      if (is_bot(a)) return b;
      if (is_bot(b)) return a;
      return (a == e->kids[0] && b == e->kids[1]) ? e : mk::or_(a, b);
    }
    case NodeKind::Exists: {
      ExprPtr body = simplify(e->kids[0]);
      if (is_bot(body)) return mk::bot();
      return body == e->kids[0] ? e : mk::exists(e->vars[0], body);
    }
    case NodeKind::SumEq: {
      ExprPtr body = simplify(e->kids[0]);
      return body == e->kids[0] ? e
                                : mk::sum_eq(*e->value, e->symbol, e->vars,
                                             e->value->carrier(), body);
    }
    case NodeKind::PredApp: {
      std::vector<ExprPtr> ts;
      bool changed = false;
      for (const ExprPtr& t : e->kids) {
        ts.push_back(simplify(t));
        changed |= ts.back() != t;
      }
      return changed ? mk::pred(e->pred, std::move(ts)) : e;
    }
    default:
      return e;
  }
}

// --- substitution ------------------------------------------------------------

// Fresh-variable source for the reserved "_" namespace (user variables may
// not start with an underscore; the parser enforces that).
class FreshVars {
public:
  std::string next(const std::string& hint = "v") {
    return "_" + hint + std::to_string(counter_++);
  }

private:
  int counter_ = 0;
};

// Renames free occurrences of `from` to `to`, alpha-renaming binders that
// would capture `to`.
inline ExprPtr substitute_var(const ExprPtr& e, const std::string& from, const std::string& to,
                              FreshVars& fresh) {
  if (std::find(e->free.begin(), e->free.end(), from) == e->free.end()) return e;
  auto subst_names = [&](const std::vector<std::string>& vs) {
    std::vector<std::string> out = vs;
    for (std::string& v : out)
      if (v == from) v = to;
    return out;
  };
  switch (e->kind) {
    case NodeKind::VarEq:
      return mk::var_eq(e->vars[0] == from ? to : e->vars[0],
                        e->vars[1] == from ? to : e->vars[1]);
    case NodeKind::DistLeq:
      return mk::dist_leq(e->vars[0] == from ? to : e->vars[0],
                          e->vars[1] == from ? to : e->vars[1], e->radius);
    case NodeKind::RelAtom:
      return mk::rel(e->symbol, subst_names(e->vars));
    case NodeKind::WeightEq:
      return mk::weight_eq(*e->value, e->symbol, subst_names(e->vars), e->value->carrier());
    case NodeKind::WeightTerm:
      return mk::weight_term(e->symbol, subst_names(e->vars), *e->type);
    case NodeKind::Not:
      return mk::not_(substitute_var(e->kids[0], from, to, fresh));
    case NodeKind::Or:
      return mk::or_(substitute_var(e->kids[0], from, to, fresh),
                     substitute_var(e->kids[1], from, to, fresh));
    case NodeKind::Arith:
      return mk::arith(e->op, substitute_var(e->kids[0], from, to, fresh),
                       substitute_var(e->kids[1], from, to, fresh));
    case NodeKind::PredApp: {
      std::vector<ExprPtr> ts;
      for (const ExprPtr& t : e->kids) ts.push_back(substitute_var(t, from, to, fresh));
      return mk::pred(e->pred, std::move(ts));
    }
    case NodeKind::Exists: {
      std::string bound = e->vars[0];
      ExprPtr body = e->kids[0];
      if (bound == to) {  // would capture; rename the binder first
        std::string nb = fresh.next(bound);
        body = substitute_var(body, bound, nb, fresh);
        bound = nb;
      }
      return mk::exists(bound, substitute_var(body, from, to, fresh));
    }
    case NodeKind::SumEq: {
      std::vector<std::string> bound = e->vars;
      ExprPtr body = e->kids[0];
      for (std::string& b : bound)
        if (b == to) {
          std::string nb = fresh.next(b);
          body = substitute_var(body, b, nb, fresh);
          b = nb;
        }
      return mk::sum_eq(*e->value, e->symbol, bound, e->value->carrier(),
                        substitute_var(body, from, to, fresh));
    }
    case NodeKind::Agg: {
      WProduct p = *e->product;
      ExprPtr body = e->kids[0];
      std::vector<std::string> pv = p.vars();
      if (std::find(pv.begin(), pv.end(), to) != pv.end()) {
        // A bound product variable equals `to`: rename it everywhere first.
        std::string nb = fresh.next(to);
        body = substitute_var(body, to, nb, fresh);
        for (WFactor& g : p.factors)
          for (std::string& u : g.vars)
            if (u == to) u = nb;
      }
      return mk::agg(std::move(p), substitute_var(body, from, to, fresh));
    }
    case NodeKind::ConstTerm:
      return e;
  }
  return e;
}

}  // namespace fowa

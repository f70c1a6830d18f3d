#pragma once

#include <string>
#include <variant>
#include <vector>

#include "fowa/expr.hpp"
#include "fowa/structure.hpp"

namespace fowa {

// Variable assignment used during evaluation. A small stack with linear
// lookup; expressions at desk scale bind a handful of variables.
class Env {
public:
  Env() = default;
  explicit Env(const std::vector<std::pair<std::string, ElementId>>& init) : slots_(init) {}

  void push(const std::string& var, ElementId v) { slots_.emplace_back(var, v); }
  void pop() { slots_.pop_back(); }
  void set_top(ElementId v) { slots_.back().second = v; }

  ElementId lookup(const std::string& var) const {
    for (auto it = slots_.rbegin(); it != slots_.rend(); ++it)
      if (it->first == var) return it->second;
    fail(errc::unbound_variable, var);
  }

  bool covers(const std::vector<std::string>& vars) const {
    for (const std::string& v : vars) {
      bool found = false;
      for (const auto& [name, _] : slots_)
        if (name == v) {
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  }

private:
  std::vector<std::pair<std::string, ElementId>> slots_;
};

using EvalResult = std::variant<bool, Value>;

namespace detail {

class Evaluator {
public:
  explicit Evaluator(const WeightedStructure& s) : s_(s) {}

  bool formula(const ExprPtr& e, Env& env) {
    switch (e->kind) {
      case NodeKind::VarEq:
        return env.lookup(e->vars[0]) == env.lookup(e->vars[1]);
      case NodeKind::RelAtom: {
        auto ri = s_.signature().relation_index(e->symbol);
        require(ri.has_value(), errc::signature_mismatch, "unknown relation " + e->symbol);
        Tuple t(e->vars.size());
        for (size_t i = 0; i < e->vars.size(); ++i) t[i] = env.lookup(e->vars[i]);
        return s_.has_tuple(*ri, t);
      }
      case NodeKind::WeightEq: {
        Value w = weight_value(e->symbol, e->vars, env);
        return w == *e->value;
      }
      case NodeKind::Not:
        return !formula(e->kids[0], env);
      case NodeKind::Or:
        // max of the two truth values, with the usual short-circuit
        return formula(e->kids[0], env) || formula(e->kids[1], env);
      case NodeKind::Exists: {
        env.push(e->vars[0], 0);
        bool found = false;
        for (ElementId a = 0; a < s_.size() && !found; ++a) {
          env.set_top(a);
          found = formula(e->kids[0], env);
        }
        env.pop();
        return found;
      }
      case NodeKind::SumEq: {
        // s = (+)-sum of w(abar) over ALL tuples satisfying the body.
        const Carrier& c = e->value->carrier();
        Value acc = Value::zero(c);
        enumerate(e->vars, env, [&](Env& env2) {
          if (formula(e->kids[0], env2))
            acc = combine(acc, weight_value(e->symbol, e->vars, env2), ArithOp::Add);
        });
        return acc == *e->value;
      }
      case NodeKind::PredApp: {
        std::vector<Value> args;
        args.reserve(e->kids.size());
        for (const ExprPtr& t : e->kids) args.push_back(term(t, env));
        return e->pred->test(args);
      }
      case NodeKind::DistLeq:
        return within_distance(env.lookup(e->vars[0]), env.lookup(e->vars[1]), e->radius);
      default:
        fail(errc::type_error, "term in formula position");
    }
  }

  Value term(const ExprPtr& e, Env& env) {
    switch (e->kind) {
      case NodeKind::ConstTerm:
        return *e->value;
      case NodeKind::WeightTerm:
        return weight_value(e->symbol, e->vars, env);
      case NodeKind::Arith: {
        Value a = term(e->kids[0], env);
        Value b = term(e->kids[1], env);
        ArithOp op = e->op == '+' ? ArithOp::Add : e->op == '-' ? ArithOp::Sub : ArithOp::Mul;
        return combine(a, b, op);
      }
      case NodeKind::Agg: {
        const WProduct& p = *e->product;
        std::vector<std::string> pv = p.vars();
        Value acc = Value::zero(p.type);
        enumerate(pv, env, [&](Env& env2) {
          if (formula(e->kids[0], env2)) acc = combine(acc, product_value(p, env2), ArithOp::Add);
        });
        return acc;
      }
      default:
        fail(errc::type_error, "formula in term position");
    }
  }

  Value product_value(const WProduct& p, Env& env) {
    if (!p.type.is_ring()) {
      const WFactor& f = p.factors[0];
      return f.is_constant() ? *f.constant : weight_value(f.weight, f.vars, env);
    }
    Value acc = Value::one(p.type);
    for (const WFactor& f : p.factors) {
      Value v = f.is_constant() ? *f.constant : weight_value(f.weight, f.vars, env);
      acc = combine(acc, v, ArithOp::Mul);
    }
    return acc;
  }

private:
  Value weight_value(const std::string& w, const std::vector<std::string>& vars, Env& env) {
    auto wi = s_.signature().weight_index(w);
    require(wi.has_value(), errc::signature_mismatch, "unknown weight " + w);
    Tuple t(vars.size());
    for (size_t i = 0; i < vars.size(); ++i) t[i] = env.lookup(vars[i]);
    return s_.weight(*wi, t);
  }

  template <typename Fn>
  void enumerate(const std::vector<std::string>& vars, Env& env, Fn&& fn) {
    if (vars.empty()) {
      fn(env);
      return;
    }
    enumerate_from(vars, 0, env, fn);
  }

  template <typename Fn>
  void enumerate_from(const std::vector<std::string>& vars, size_t pos, Env& env, Fn&& fn) {
    if (pos == vars.size()) {
      fn(env);
      return;
    }
    env.push(vars[pos], 0);
    for (ElementId a = 0; a < s_.size(); ++a) {
      env.set_top(a);
      enumerate_from(vars, pos + 1, env, fn);
    }
    env.pop();
  }

  bool within_distance(ElementId from, ElementId to, int r) {
    if (from == to) return true;
    std::vector<ElementId> frontier{from};
    std::set<ElementId> seen{from};
    for (int step = 1; step <= r; ++step) {
      std::vector<ElementId> next;
      for (ElementId u : frontier)
        for (ElementId v : s_.neighbors(u)) {
          if (v == to) return true;
          if (seen.insert(v).second) next.push_back(v);
        }
      if (next.empty()) return false;
      frontier = std::move(next);
    }
    return false;
  }

  const WeightedStructure& s_;
};

}  // namespace detail

inline EvalResult evaluate(const WeightedStructure& s, Env env, const ExprPtr& e) {
  require(env.covers(e->free), errc::unbound_variable, "assignment must cover free variables");
  detail::Evaluator ev(s);
  if (e->is_formula()) return ev.formula(e, env);
  return ev.term(e, env);
}

inline Env make_env(const std::vector<std::string>& vars, const Tuple& values) {
  require(vars.size() == values.size(), errc::arity_mismatch, "assignment arity");
  Env env;
  for (size_t i = 0; i < vars.size(); ++i) env.push(vars[i], values[i]);
  return env;
}

inline bool eval_formula(const WeightedStructure& s, Env env, const ExprPtr& e) {
  require(e->is_formula(), errc::type_error, "expected a formula");
  return std::get<bool>(evaluate(s, std::move(env), e));
}

inline Value eval_term(const WeightedStructure& s, Env env, const ExprPtr& e) {
  require(e->is_term(), errc::type_error, "expected a term");
  return std::get<Value>(evaluate(s, std::move(env), e));
}

// Brute-force sweep over all assignments of the free variables (fixed
// first-occurrence order); the ground-truth oracle for desk-scale tests.
struct EvalAllResult {
  std::vector<std::string> order;
  std::vector<std::pair<Tuple, EvalResult>> rows;  // lexicographic tuples
};

inline EvalAllResult evaluate_all(const WeightedStructure& s, const ExprPtr& e) {
  EvalAllResult out;
  out.order = e->free;
  size_t k = out.order.size();
  Tuple t(k, 0);
  while (true) {
    out.rows.emplace_back(t, evaluate(s, make_env(out.order, t), e));
    size_t pos = k;
    while (pos > 0) {
      if (++t[pos - 1] < s.size()) break;
      t[pos - 1] = 0;
      --pos;
    }
    if (pos == 0) break;
  }
  return out;
}

}  // namespace fowa

#pragma once

// Shared fixtures and seeded generators for the test suites.

#include <string>
#include <vector>

#include "fowa/fowa.hpp"

namespace fixtures {

using namespace fowa;

// sigma = {E/2, R/1, B/1}, weights: w/2:Q, price/1:Q, cnt/2:Z/2,
// one/1:Z (ones), one2/1:Z/2 (ones).
inline Signature test_signature() {
  Signature sig;
  sig.add_relation("E", 2);
  sig.add_relation("R", 1);
  sig.add_relation("B", 1);
  sig.add_weight("w", 2, Carrier::rationals());
  sig.add_weight("price", 1, Carrier::rationals());
  sig.add_weight("cnt", 2, Carrier::residues(2));
  sig.add_weight("one", 1, Carrier::integers(), true);
  sig.add_weight("one2", 1, Carrier::residues(2), true);
  return sig;
}

// The same signature extended with the disjoint-sum part markers.
inline Signature test_signature_xy() {
  Signature sig = test_signature();
  sig.add_relation("X", 1);
  sig.add_relation("Y", 1);
  return sig;
}

// Path 0-1-2 with R={0}, B={2}, w(0,1)=2, w(1,2)=1/2 (both directions).
inline WeightedStructure g1() {
  Signature sig = test_signature();
  std::set<Tuple> E{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  std::map<Tuple, Value> w{{{0, 1}, Value::rational(BigRat(2))},
                           {{1, 0}, Value::rational(BigRat(2))},
                           {{1, 2}, Value::rational(BigRat(1, 2))},
                           {{2, 1}, Value::rational(BigRat(1, 2))}};
  return WeightedStructure::build(sig, 3, {E, {{0}}, {{2}}}, {w, {}, {}});
}

inline std::vector<Value> default_weight_pool() {
  return {Value::rational(BigRat(1, 2)), Value::rational(BigRat(2)),
          Value::rational(BigRat(-1)), Value::rational(BigRat(1)), Value::residue(1, 2)};
}

inline GenSpec default_spec(int n, std::uint64_t seed, int degree = 3) {
  GenSpec spec;
  spec.n = n;
  spec.degree_bound = degree;
  spec.seed = seed;
  spec.weight_pool = default_weight_pool();
  return spec;
}

inline std::vector<WeightedStructure> structure_pool(const Signature& sig, int count, int n_max,
                                                     std::uint64_t seed) {
  std::vector<WeightedStructure> out;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_max - 1)));
    out.push_back(generate_structure(sig, default_spec(n, rng.next())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeded random formulas: well-typed, fragment- and rank-bounded. The
// generator tracks the variables in scope; aggregation atoms respect the
// one-free-variable restriction of the fragment.
// ---------------------------------------------------------------------------

struct GenOptions {
  int max_qr = 2;
  int max_agg_depth = 0;          // 0: aggregation-free
  bool use_part_markers = false;  // X/Y atoms over the extended signature
  int max_atoms = 6;
};

class FormulaGen {
public:
  FormulaGen(GenOptions opt, std::uint64_t seed) : opt_(opt), rng_(seed) {}

  ExprPtr formula(const std::vector<std::string>& frees) {
    budget_ = opt_.max_atoms;
    counter_ = 0;
    return gen(frees, opt_.max_qr, opt_.max_agg_depth);
  }

private:
  ExprPtr gen(std::vector<std::string> scope, int qr, int depth) {
    --budget_;
    std::uint64_t roll = rng_.below(10);
    if (scope.empty() && qr == 0) return atom(scope, depth);
    if (scope.empty() && roll < 4) roll = 6 + rng_.below(4);  // force a binder
    if (qr == 0 && roll >= 6) roll = rng_.below(6);
    if (budget_ <= 0 && roll >= 3 && roll <= 5) roll = rng_.below(3);

    switch (roll) {
      case 0:
      case 1:
      case 2:
        return atom(scope, depth);
      case 3:
        return mk::not_(gen(scope, qr, depth));
      case 4:
        return mk::or_(gen(scope, qr, depth), gen(scope, qr, depth));
      case 5:
        return mk::and_(gen(scope, qr, depth), gen(scope, qr, depth));
      case 6:
      case 7: {
        std::string y = fresh();
        std::vector<std::string> inner = scope;
        inner.push_back(y);
        return mk::exists(y, gen(inner, qr - 1, depth));
      }
      default: {
        // aggregation equality over the finite carrier Z/2
        bool pair = rng_.chance(1, 3);
        std::vector<std::string> zbar{fresh()};
        if (pair) zbar.push_back(fresh());
        std::vector<std::string> inner = scope;
        for (const std::string& z : zbar) inner.push_back(z);
        Value v = Value::residue(BigInt(rng_.below(2)), 2);
        ExprPtr body = gen(inner, qr - 1, depth);
        if (pair) return mk::sum_eq(v, "cnt", zbar, Carrier::residues(2), body);
        return mk::sum_eq(v, "one2", zbar, Carrier::residues(2), body);
      }
    }
  }

  ExprPtr atom(const std::vector<std::string>& scope, int depth) {
    if (scope.empty()) {
      if (depth > 0 && rng_.chance(1, 2)) return agg_atom(std::nullopt, depth);
      return rng_.chance(1, 2) ? mk::top() : ground_pred();
    }
    std::uint64_t roll = rng_.below(12);
    auto pick = [&]() { return scope[rng_.below(scope.size())]; };
    auto pick_distinct = [&]() -> std::optional<std::pair<std::string, std::string>> {
      for (int tries = 0; tries < 4; ++tries) {
        std::string a = pick(), b = pick();
        if (a != b) return std::make_pair(a, b);
      }
      return std::nullopt;
    };
    if (depth > 0 && roll >= 10) return agg_atom(pick(), depth);
    switch (roll % 10) {
      case 0:
        return mk::var_eq(pick(), pick());
      case 1:
      case 2:
        return mk::rel("E", {pick(), pick()});
      case 3:
        return mk::rel("R", {pick()});
      case 4:
        return mk::rel(opt_.use_part_markers && rng_.chance(1, 2) ? "X" : "B", {pick()});
      case 5:
        if (opt_.use_part_markers) return mk::rel("Y", {pick()});
        return mk::rel("B", {pick()});
      case 6: {
        auto ab = pick_distinct();
        if (!ab) return mk::rel("R", {pick()});
        return mk::weight_eq(q_const(), "w", {ab->first, ab->second}, Carrier::rationals());
      }
      case 7:
        return mk::weight_eq(q_const(), "price", {pick()}, Carrier::rationals());
      case 8: {
        auto ab = pick_distinct();
        if (!ab) return mk::weight_eq(q_const(), "price", {pick()}, Carrier::rationals());
        return mk::weight_eq(Value::residue(BigInt(rng_.below(2)), 2), "cnt",
                             {ab->first, ab->second}, Carrier::residues(2));
      }
      default:
        return pred_atom(pick());
    }
  }

  // Comparison over terms in one variable (rules 7-9 only).
  ExprPtr pred_atom(const std::string& v) {
    ExprPtr t1 = small_term(v);
    ExprPtr t2 = rng_.chance(1, 2) ? mk::cst(q_const()) : small_term(v);
    auto def = resolve_predicate(rng_.chance(1, 2) ? "geq" : "gt",
                                 {Carrier::rationals(), Carrier::rationals()});
    return mk::pred(std::make_shared<const PredicateDef>(*def), {t1, t2});
  }

  ExprPtr ground_pred() {
    auto def = resolve_predicate("geq", {Carrier::rationals(), Carrier::rationals()});
    return mk::pred(std::make_shared<const PredicateDef>(*def),
                    {mk::cst(q_const()), mk::cst(q_const())});
  }

  ExprPtr small_term(const std::string& v) {
    ExprPtr base = mk::weight_term("price", {v}, Carrier::rationals());
    if (rng_.chance(1, 3))
      base = mk::arith(rng_.chance(1, 2) ? '+' : '*', base, mk::cst(q_const()));
    return base;
  }

  // Aggregation-term comparison with at most one free variable.
  ExprPtr agg_atom(std::optional<std::string> outer, int depth) {
    bool pair = rng_.chance(1, 3);
    std::vector<std::string> ys{fresh()};
    if (pair) ys.push_back(fresh());
    std::vector<std::string> inner = ys;
    if (outer) inner.push_back(*outer);
    ExprPtr body = gen(inner, std::min(opt_.max_qr, 1), depth - 1);

    bool rational = !pair && rng_.chance(1, 2);
    WProduct p = rational
                     ? make_wproduct(Carrier::rationals(),
                                     {WFactor{std::nullopt, "price", {ys[0]}}})
                     : [&] {
                         std::vector<WFactor> fs;
                         for (const std::string& y : ys)
                           fs.push_back(WFactor{std::nullopt, "one", {y}});
                         return make_wproduct(Carrier::integers(), fs);
                       }();
    ExprPtr agg = mk::agg(p, body);
    Carrier c = rational ? Carrier::rationals() : Carrier::integers();
    ExprPtr bound = mk::cst(rational ? q_const() : Value::integer(BigInt(rng_.below(3))));
    auto def = resolve_predicate(rng_.chance(1, 2) ? "geq" : "gt", {c, c});
    return rng_.chance(1, 2)
               ? mk::pred(std::make_shared<const PredicateDef>(*def), {agg, bound})
               : mk::pred(std::make_shared<const PredicateDef>(*def), {bound, agg});
  }

  Value q_const() {
    switch (rng_.below(4)) {
      case 0: return Value::rational(BigRat(1, 2));
      case 1: return Value::rational(BigRat(2));
      case 2: return Value::rational(BigRat(0));
      default: return Value::rational(BigRat(-1));
    }
  }

  std::string fresh() { return "u" + std::to_string(counter_++); }

  GenOptions opt_;
  Rng rng_;
  int counter_ = 0;
  int budget_ = 0;
};

}  // namespace fixtures

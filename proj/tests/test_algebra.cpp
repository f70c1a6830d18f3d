#include <catch2/catch_amalgamated.hpp>

#include "fowa/algebra.hpp"
#include "fowa/rng.hpp"

using namespace fowa;

namespace {

Value sample_value(Rng& rng, const Carrier& c) {
  switch (c.kind()) {
    case CarrierKind::IntegerRing:
      return Value::integer(BigInt(static_cast<long long>(rng.below(21)) - 10));
    case CarrierKind::RationalField:
      return Value::rational(
          BigRat(static_cast<long long>(rng.below(21)) - 10, 1 + rng.below(6)));
    case CarrierKind::ResidueGroup:
      return Value::residue(BigInt(rng.below(c.modulus())), c.modulus());
    case CarrierKind::RationalVectorGroup: {
      std::vector<BigRat> comps;
      for (unsigned i = 0; i < c.dimension(); ++i)
        comps.emplace_back(static_cast<long long>(rng.below(9)) - 4, 1 + rng.below(3));
      return Value::vector(std::move(comps));
    }
  }
  return Value::integer(0);
}

const std::vector<Carrier> kCarriers{Carrier::integers(), Carrier::rationals(),
                                     Carrier::residues(5), Carrier::vectors(2)};

}  // namespace

TEST_CASE("exact combine on every carrier", "[algebra]") {
  CHECK(combine(Value::rational(BigRat(2, 3)), Value::rational(BigRat(1, 6)), ArithOp::Add) ==
        Value::rational(BigRat(5, 6)));
  CHECK(combine(Value::residue(3, 5), Value::residue(4, 5), ArithOp::Add) ==
        Value::residue(2, 5));
  CHECK(combine(Value::integer(7), Value::integer(-9), ArithOp::Mul) == Value::integer(-63));
  Value v = combine(Value::vector({BigRat(1), BigRat(2)}), Value::vector({BigRat(3), BigRat(4)}),
                    ArithOp::Add);
  CHECK(v == Value::vector({BigRat(4), BigRat(6)}));
}

TEST_CASE("combine rejects mixed carriers and group multiplication", "[algebra]") {
  CHECK_THROWS_WITH(combine(Value::integer(1), Value::rational(BigRat(1)), ArithOp::Add),
                    Catch::Matchers::StartsWith("CarrierMismatch"));
  CHECK_THROWS_WITH(combine(Value::residue(1, 5), Value::residue(2, 5), ArithOp::Mul),
                    Catch::Matchers::StartsWith("MulOnGroup"));
}

TEST_CASE("group and ring laws on sampled triples", "[algebra]") {
  Rng rng(42);
  for (const Carrier& c : kCarriers) {
    for (int i = 0; i < 50; ++i) {
      Value a = sample_value(rng, c), b = sample_value(rng, c), d = sample_value(rng, c);
      CHECK(combine(combine(a, b, ArithOp::Add), d, ArithOp::Add) ==
            combine(a, combine(b, d, ArithOp::Add), ArithOp::Add));
      CHECK(combine(a, Value::zero(c), ArithOp::Add) == a);
      CHECK(combine(a, neg(a), ArithOp::Add) == Value::zero(c));
      CHECK(combine(a, b, ArithOp::Add) == combine(b, a, ArithOp::Add));
      if (c.is_ring()) {
        CHECK(combine(a, combine(b, d, ArithOp::Add), ArithOp::Mul) ==
              combine(combine(a, b, ArithOp::Mul), combine(a, d, ArithOp::Mul), ArithOp::Add));
        CHECK(combine(a, Value::one(c), ArithOp::Mul) == a);
        CHECK(combine(a, Value::zero(c), ArithOp::Mul) == Value::zero(c));
      }
    }
  }
}

TEST_CASE("aggregate folds and the empty multiset is zero", "[algebra]") {
  CHECK(aggregate({}, Carrier::integers()) == Value::integer(0));
  CHECK(aggregate({Value::vector({BigRat(1), BigRat(2)}), Value::vector({BigRat(3), BigRat(4)})},
                  Carrier::vectors(2)) == Value::vector({BigRat(4), BigRat(6)}));
  std::vector<Value> ones(5, Value::residue(1, 2));
  CHECK(aggregate(ones, Carrier::residues(2)) == Value::residue(1, 2));
}

TEST_CASE("aggregate is order-independent", "[algebra]") {
  Rng rng(7);
  for (const Carrier& c : kCarriers) {
    std::vector<Value> vs;
    for (int i = 0; i < 8; ++i) vs.push_back(sample_value(rng, c));
    Value expected = aggregate(vs, c);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      for (size_t i = vs.size(); i > 1; --i) std::swap(vs[i - 1], vs[rng.below(i)]);
      CHECK(aggregate(vs, c) == expected);
    }
  }
}

TEST_CASE("canonical forms are stable and parse round-trips", "[algebra]") {
  Rng rng(11);
  for (const Carrier& c : kCarriers) {
    for (int i = 0; i < 30; ++i) {
      Value a = sample_value(rng, c), b = sample_value(rng, c);
      Value sum = combine(a, b, ArithOp::Add);
      auto reparsed = Value::parse(sum.text(), c);
      REQUIRE(reparsed.has_value());
      CHECK(*reparsed == sum);
    }
  }
  // residues reduced, rationals in lowest terms
  CHECK(Value::residue(-3, 5) == Value::residue(2, 5));
  CHECK(Value::rational(BigRat(2, 4)).text() == "1/2");
}

TEST_CASE("carrier literals parse", "[algebra]") {
  CHECK(*Carrier::parse("Z") == Carrier::integers());
  CHECK(*Carrier::parse("Q") == Carrier::rationals());
  CHECK(*Carrier::parse("Z/5") == Carrier::residues(5));
  CHECK(*Carrier::parse("Q^3") == Carrier::vectors(3));
  CHECK_FALSE(Carrier::parse("Z/1").has_value());
  CHECK_FALSE(Carrier::parse("R").has_value());
}

TEST_CASE("built-in predicates", "[algebra]") {
  auto geq = resolve_predicate("geq", {Carrier::rationals(), Carrier::rationals()});
  REQUIRE(geq.has_value());
  CHECK(eval_predicate(*geq, {Value::rational(BigRat(3, 2)), Value::rational(BigRat(1))}));
  CHECK_FALSE(eval_predicate(*geq, {Value::rational(BigRat(1, 2)), Value::rational(BigRat(1))}));

  auto geq1 = resolve_predicate("geq1", {Carrier::integers()});
  REQUIRE(geq1.has_value());
  CHECK_FALSE(eval_predicate(*geq1, {Value::integer(0)}));
  CHECK(eval_predicate(*geq1, {Value::integer(1)}));

  auto ped = resolve_predicate(
      "ped", {Carrier::vectors(2), Carrier::vectors(2), Carrier::rationals()});
  REQUIRE(ped.has_value());
  Value u = Value::vector({BigRat(1), BigRat(1)});
  CHECK(eval_predicate(*ped, {u, u, Value::rational(BigRat(1))}));   // d(u,u)=0 <= 1
  CHECK_FALSE(eval_predicate(*ped, {u, u, Value::rational(BigRat(-1))}));
  Value v = Value::vector({BigRat(4), BigRat(5)});
  CHECK(eval_predicate(*ped, {u, v, Value::rational(BigRat(5))}));   // distance 5
  CHECK_FALSE(eval_predicate(*ped, {u, v, Value::rational(BigRat(49, 10))}));

  auto pd = resolve_predicate("pdistlt", {Carrier::vectors(2), Carrier::integers(),
                                          Carrier::vectors(2), Carrier::rationals()});
  REQUIRE(pd.has_value());
  // d((1,1), (2,2)/2) = 0 < 1/4, but l must be positive
  Value w = Value::vector({BigRat(2), BigRat(2)});
  CHECK(eval_predicate(*pd, {u, Value::integer(2), w, Value::rational(BigRat(1, 4))}));
  CHECK_FALSE(eval_predicate(*pd, {u, Value::integer(0), w, Value::rational(BigRat(1, 4))}));

  CHECK_FALSE(resolve_predicate("geq", {Carrier::residues(2), Carrier::residues(2)}).has_value());
}

TEST_CASE("integer scaling acts as iterated addition", "[algebra]") {
  Rng rng(5);
  for (const Carrier& c : kCarriers) {
    for (int i = 0; i < 20; ++i) {
      Value a = sample_value(rng, c);
      int n = static_cast<int>(rng.below(7));
      Value expect = Value::zero(c);
      for (int j = 0; j < n; ++j) expect = combine(expect, a, ArithOp::Add);
      CHECK(zscale(BigInt(n), a) == expect);
      CHECK(zscale(BigInt(-n), a) == neg(expect));
    }
  }
}

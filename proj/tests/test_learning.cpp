#include <catch2/catch_amalgamated.hpp>

#include "fowa/fowa.hpp"
#include "support/fixtures.hpp"
#include "support/naive_eval.hpp"

using namespace fowa;

namespace {

const Signature& sig() {
  static Signature s = fixtures::test_signature();
  return s;
}

// All Boolean combinations of a small basis of r-local formulas, built as
// truth-table disjunctive normal forms. Closed under negation/disjunction
// and under the guarded composition the consistency transfer needs.
HypothesisClass boolean_closure_class(const std::vector<ExprPtr>& basis,
                                      std::vector<std::string> xs,
                                      std::vector<std::string> ys, int radius) {
  HypothesisClass out;
  out.xs = std::move(xs);
  out.ys = std::move(ys);
  out.radius = radius;
  size_t b = basis.size();
  for (std::uint64_t table = 0; table < (1ull << (1ull << b)); ++table) {
    std::vector<ExprPtr> rows;
    for (std::uint64_t row = 0; row < (1ull << b); ++row) {
      if (!(table & (1ull << row))) continue;
      std::vector<ExprPtr> lits;
      for (size_t i = 0; i < b; ++i)
        lits.push_back((row & (1ull << i)) ? basis[i] : mk::not_(basis[i]));
      rows.push_back(mk::and_all(lits));
    }
    out.formulas.push_back(mk::or_all(rows));
  }
  return out;
}

HypothesisClass edge_class() {
  ExprPtr e = mk::rel("E", {"x", "y"});
  HypothesisClass out;
  out.xs = {"x"};
  out.ys = {"y"};
  out.radius = 0;
  out.formulas = {e, mk::not_(e), mk::top(), mk::bot()};
  return out;
}

// Brute-force consistency over the full parameter space A^l.
bool full_space_consistent(const WeightedStructure& s, const HypothesisClass& h,
                           const TrainingSequence& train) {
  int n = s.size();
  std::vector<Tuple> params;
  Tuple t(static_cast<size_t>(h.l()), 0);
  while (true) {
    params.push_back(t);
    size_t pos = t.size();
    while (pos > 0) {
      if (++t[pos - 1] < n) break;
      t[pos - 1] = 0;
      --pos;
    }
    if (pos == 0 || t.empty()) break;
  }
  for (const ExprPtr& f : h.formulas)
    for (const Tuple& v : params) {
      bool ok = true;
      for (const Example& ex : train) {
        naive::Assignment asg;
        for (size_t i = 0; i < h.xs.size(); ++i) asg[h.xs[i]] = ex.point[i];
        for (size_t i = 0; i < h.ys.size(); ++i) asg[h.ys[i]] = v[i];
        if (naive::holds(s, asg, f) != ex.label) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
  return false;
}

}  // namespace

TEST_CASE("sample size bound", "[learning]") {
  CHECK(sample_size(0.5, 0.5, 1) == 12);  // ceil(2 ln 4 / 0.25)
  CHECK_THROWS_WITH(sample_size(1.0, 0.5, 1), Catch::Matchers::StartsWith("OutOfRange"));
  CHECK_THROWS_WITH(sample_size(0.5, 0.0, 1), Catch::Matchers::StartsWith("OutOfRange"));
  CHECK_THROWS_WITH(sample_size(0.5, 0.5, 0), Catch::Matchers::StartsWith("OutOfRange"));
  // monotone: shrinking eps or delta never shrinks the bound
  std::uint64_t base = sample_size(0.3, 0.2, 64);
  CHECK(sample_size(0.2, 0.2, 64) >= base);
  CHECK(sample_size(0.3, 0.1, 64) >= base);
  CHECK(sample_size(0.3, 0.2, 128) >= base);
}

TEST_CASE("training error is an exact rational", "[learning]") {
  Signature s_ = sig();
  WeightedStructure s = path_structure(s_, "E", 6);
  LocalAccessOracle oracle(s);
  HypothesisClass cls = edge_class();
  TrainingSequence train;
  for (int i = 0; i < 12; ++i) train.push_back({{i % 6}, i % 4 == 0});
  Hypothesis h{3, cls.formulas[3], {0}};  // constant-false
  // labels: i=0,4,8 positive -> 3 errors out of 12
  CHECK(training_error(oracle, cls, h, train) == BigRat(1, 4));
  Hypothesis top_h{2, cls.formulas[2], {0}};
  TrainingSequence all_pos;
  for (int i = 0; i < 5; ++i) all_pos.push_back({{i}, true});
  CHECK(training_error(oracle, cls, top_h, all_pos) == BigRat(0));
  Hypothesis bot_h{3, cls.formulas[3], {0}};
  CHECK(training_error(oracle, cls, bot_h, all_pos) == BigRat(1));
  CHECK_THROWS_WITH(training_error(oracle, cls, h, {}),
                    Catch::Matchers::StartsWith("EmptyTraining"));
}

TEST_CASE("adjacency labels are learned on the path", "[learning]") {
  WeightedStructure s = path_structure(sig(), "E", 6);
  LocalAccessOracle oracle(s);
  HypothesisClass cls = edge_class();
  // labels: adjacency to vertex 3
  TrainingSequence train;
  for (int i = 0; i < 6; ++i) train.push_back({{i}, i == 2 || i == 4});
  LearnResult res = exact_learn(oracle, cls, train);
  REQUIRE_FALSE(res.rejected);
  CHECK(res.training_error == BigRat(0));
  CHECK(training_error(oracle, cls, res.hypothesis, train) == BigRat(0));
}

TEST_CASE("contradictory labels reject", "[learning]") {
  WeightedStructure s = path_structure(sig(), "E", 4);
  LocalAccessOracle oracle(s);
  HypothesisClass cls = edge_class();
  TrainingSequence train{{{1}, true}, {{1}, false}};
  LearnResult res = exact_learn(oracle, cls, train);
  CHECK(res.rejected);
}

TEST_CASE("the empty sequence is vacuously consistent", "[learning]") {
  WeightedStructure s = path_structure(sig(), "E", 4);
  LocalAccessOracle oracle(s);
  HypothesisClass cls = edge_class();
  LearnResult res = exact_learn(oracle, cls, {});
  REQUIRE_FALSE(res.rejected);
  CHECK(res.hypothesis.formula_index == 0);
}

TEST_CASE("rejection coincides with full-space infeasibility", "[learning]") {
  std::vector<ExprPtr> basis{mk::rel("R", {"x"}), mk::rel("E", {"x", "y"})};
  HypothesisClass cls = boolean_closure_class(basis, {"x"}, {"y"}, 0);
  Rng rng(606);
  int rejects = 0;
  for (int inst = 0; inst < 40; ++inst) {
    WeightedStructure s =
        generate_structure(sig(), fixtures::default_spec(4 + rng.below_int(9), rng.next()));
    TrainingSequence train;
    int t = 2 + rng.below_int(5);
    for (int i = 0; i < t; ++i)
      train.push_back({{rng.below_int(s.size())}, rng.chance(1, 2)});
    LocalAccessOracle oracle(s);
    LearnResult res = exact_learn(oracle, cls, train);
    bool feasible = full_space_consistent(s, cls, train);
    CHECK(res.rejected == !feasible);
    if (res.rejected) ++rejects;
    if (!res.rejected)
      CHECK(training_error(oracle, cls, res.hypothesis, train) == BigRat(0));
  }
  CHECK(rejects > 0);  // the battery must exercise both outcomes
}

TEST_CASE("minimization matches the exhaustive grid minimum", "[learning]") {
  HypothesisClass cls = edge_class();
  Rng rng(707);
  for (int inst = 0; inst < 25; ++inst) {
    WeightedStructure s =
        generate_structure(sig(), fixtures::default_spec(5 + rng.below_int(4), rng.next()));
    TrainingSequence train;
    int t = 3 + rng.below_int(6);
    for (int i = 0; i < t; ++i)
      train.push_back({{rng.below_int(s.size())}, rng.chance(1, 2)});
    LocalAccessOracle oracle(s);
    LearnResult res = pac_learn(oracle, cls, train);
    REQUIRE_FALSE(res.rejected);
    // exhaustive recomputation over the same grid, evaluating globally
    std::vector<ElementId> space = parameter_space(oracle, cls, train);
    std::uint64_t best = train.size() + 1;
    for (ElementId v : space)
      for (const ExprPtr& f : cls.formulas) {
        std::uint64_t err = 0;
        for (const Example& ex : train) {
          naive::Assignment asg{{"x", ex.point[0]}, {"y", v}};
          if (naive::holds(s, asg, f) != ex.label) ++err;
        }
        best = std::min(best, err);
      }
    CHECK(res.training_error == BigRat(BigInt(best), BigInt(train.size())));
  }
}

TEST_CASE("hypothesis evaluation is confined to the neighbourhood", "[learning]") {
  // local evaluation equals global evaluation for r-local hypotheses
  HypothesisClass cls = edge_class();
  Rng rng(808);
  for (int inst = 0; inst < 10; ++inst) {
    WeightedStructure s = generate_structure(sig(), fixtures::default_spec(8, rng.next()));
    LocalAccessOracle oracle(s);
    for (const ExprPtr& f : cls.formulas)
      for (ElementId a = 0; a < s.size(); ++a)
        for (ElementId v = 0; v < s.size(); ++v) {
          naive::Assignment asg{{"x", a}, {"y", v}};
          CHECK(eval_hypothesis(oracle, cls, f, {a}, {v}) == naive::holds(s, asg, f));
        }
  }
}

TEST_CASE("query counts are independent of the structure size", "[learning]") {
  WeightedStructure gadget = fixtures::g1();
  WeightedStructure small = replicate_gadget(gadget, 20);
  WeightedStructure large = replicate_gadget(gadget, 400);
  HypothesisClass cls = edge_class();
  TrainingSequence train{{{0}, false}, {{1}, true}, {{2}, false}};
  LocalAccessOracle so(small), lo(large);
  LearnResult rs = exact_learn(so, cls, train);
  LearnResult rl = exact_learn(lo, cls, train);
  REQUIRE_FALSE(rs.rejected);
  CHECK(rs.hypothesis.formula_index == rl.hypothesis.formula_index);
  CHECK(rs.hypothesis.params == rl.hypothesis.params);
  CHECK(rs.queries == rl.queries);
}

TEST_CASE("guarded composition of local types", "[learning]") {
  // Equal one-sided types compose to equal pair types when each pair keeps
  // its halves far apart (the transfer behind the reduced parameter space).
  std::vector<ExprPtr> basis{mk::rel("R", {"x"}), mk::rel("E", {"x", "y"})};
  HypothesisClass cls = boolean_closure_class(basis, {"x"}, {"y"}, 0);
  int r = cls.radius;
  Rng rng(909);
  auto one_sided = [&](const std::string& var) {
    std::vector<ExprPtr> out;
    for (const ExprPtr& f : cls.formulas) {
      bool ok = true;
      for (const std::string& v : f->free)
        if (v != var) ok = false;
      if (ok) out.push_back(f);
    }
    return out;
  };
  std::vector<ExprPtr> x_formulas = one_sided("x"), y_formulas = one_sided("y");
  for (int inst = 0; inst < 4; ++inst) {
    WeightedStructure s = generate_structure(sig(), fixtures::default_spec(9, rng.next(), 2));
    auto pair_type = [&](ElementId a, ElementId b) {
      std::vector<bool> t;
      for (const ExprPtr& f : cls.formulas)
        t.push_back(naive::holds(s, {{"x", a}, {"y", b}}, f));
      return t;
    };
    auto side_type = [&](const std::vector<ExprPtr>& fs, const std::string& var, ElementId v) {
      std::vector<bool> t;
      for (const ExprPtr& f : fs) t.push_back(naive::holds(s, {{var, v}}, f));
      return t;
    };
    auto far = [&](ElementId u, ElementId v) {
      int d = naive::distance(s, u, v);
      return !(d >= 0 && d <= 2 * r + 1);
    };
    for (ElementId a = 0; a < s.size(); ++a)
      for (ElementId a2 = 0; a2 < s.size(); ++a2)
        for (ElementId b = 0; b < s.size(); ++b)
          for (ElementId b2 = 0; b2 < s.size(); ++b2) {
            if (!far(a, b) || !far(a2, b2)) continue;
            if (side_type(x_formulas, "x", a) != side_type(x_formulas, "x", a2)) continue;
            if (side_type(y_formulas, "y", b) != side_type(y_formulas, "y", b2)) continue;
            CHECK(pair_type(a, b) == pair_type(a2, b2));
          }
  }
}

TEST_CASE("experiments: realizable targets succeed, coin labels sit at one half",
          "[learning]") {
  WeightedStructure s = generate_structure(sig(), fixtures::default_spec(12, 4242, 2));
  HypothesisClass cls = edge_class();
  LabelDistribution dist;
  dist.target = cls.formulas[0];
  dist.target_params = {3};
  ExperimentReport rep = run_generalization_experiment(s, cls, dist, 0.2, 0.2, 20, 99);
  CHECK(rep.best_dist_error == BigRat(0));
  CHECK(rep.success_frequency >= BigRat(4, 5));
  // 50% label noise makes every hypothesis err exactly 1/2
  LabelDistribution coin = dist;
  coin.noise_num = 50;
  coin.noise_den = 100;
  ExperimentReport flat = run_generalization_experiment(s, cls, coin, 0.2, 0.2, 5, 77);
  CHECK(flat.mean_dist_error == BigRat(1, 2));
  CHECK(flat.best_dist_error == BigRat(1, 2));
}

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fowa/eval.hpp"
#include "fowa/expr.hpp"
#include "fowa/locality.hpp"
#include "fowa/rng.hpp"
#include "fowa/structure.hpp"

namespace fowa {

// ---------------------------------------------------------------------------
// Hypotheses are pairs (formula, parameter tuple) from a finite class of
// r-local formulas over the (expanded) background structure; learners see
// the structure only through a LocalAccessOracle, and every hypothesis
// evaluation is confined to the r-neighbourhood of the example joined with
// the parameters.
// ---------------------------------------------------------------------------

struct HypothesisClass {
  std::vector<ExprPtr> formulas;     // free variables within xs + ys
  int radius = 0;                    // common locality radius
  std::vector<std::string> xs, ys;   // |xs| = k (example arity), |ys| = l

  int k() const { return static_cast<int>(xs.size()); }
  int l() const { return static_cast<int>(ys.size()); }

  void validate() const {
    require(!formulas.empty(), errc::out_of_range, "hypothesis class must be nonempty");
    for (const ExprPtr& f : formulas) {
      require(f->is_formula(), errc::type_error, "hypothesis must be a formula");
      for (const std::string& v : f->free) {
        bool ok = std::find(xs.begin(), xs.end(), v) != xs.end() ||
                  std::find(ys.begin(), ys.end(), v) != ys.end();
        require(ok, errc::unbound_variable, "hypothesis variable " + v + " undeclared");
      }
    }
  }
};

struct Example {
  Tuple point;
  bool label = false;
};

using TrainingSequence = std::vector<Example>;

struct Hypothesis {
  int formula_index = 0;
  ExprPtr formula;
  Tuple params;
};

struct LearnResult {
  bool rejected = false;
  Hypothesis hypothesis;
  BigRat training_error = 0;
  QueryCounts queries;
};

// ceil(2 ln(2 |H| / delta) / eps^2), the uniform-convergence sample bound
// for a finite class (natural logarithm).
inline std::uint64_t sample_size(double eps, double delta, std::uint64_t class_size) {
  require(eps > 0.0 && eps < 1.0, errc::out_of_range, "eps must lie in (0,1)");
  require(delta > 0.0 && delta < 1.0, errc::out_of_range, "delta must lie in (0,1)");
  require(class_size >= 1, errc::out_of_range, "class size must be >= 1");
  long double t = 2.0L * std::log(2.0L * static_cast<long double>(class_size) /
                                  static_cast<long double>(delta)) /
                  (static_cast<long double>(eps) * static_cast<long double>(eps));
  return static_cast<std::uint64_t>(std::ceil(t));
}

// Evaluates the hypothesis at an example, reading only the r-neighbourhood
// of example+parameters through the oracle.
inline bool eval_hypothesis(const LocalAccessOracle& oracle, const HypothesisClass& h,
                            const ExprPtr& formula, const Tuple& example,
                            const Tuple& params) {
  Tuple anchors = example;
  anchors.insert(anchors.end(), params.begin(), params.end());
  Neighborhood nb = neighborhood_via_oracle(oracle, anchors, h.radius);
  Env env;
  for (size_t i = 0; i < h.xs.size(); ++i) env.push(h.xs[i], nb.local(example[i]));
  for (size_t i = 0; i < h.ys.size(); ++i) env.push(h.ys[i], nb.local(params[i]));
  return eval_formula(nb.structure, env, formula);
}

inline BigRat training_error(const LocalAccessOracle& oracle, const HypothesisClass& h,
                             const Hypothesis& hyp, const TrainingSequence& train) {
  require(!train.empty(), errc::empty_training, "training sequence is empty");
  std::uint64_t wrong = 0;
  for (const Example& ex : train)
    if (eval_hypothesis(oracle, h, hyp.formula, ex.point, hyp.params) != ex.label) ++wrong;
  return BigRat(BigInt(wrong), BigInt(train.size()));
}

// The reduced parameter space N_{(2r+1)l}(T): union of balls around every
// element occurring in the training sequence, ascending ids.
inline std::vector<ElementId> parameter_space(const LocalAccessOracle& oracle,
                                              const HypothesisClass& h,
                                              const TrainingSequence& train) {
  std::set<ElementId> elems;
  for (const Example& ex : train)
    for (ElementId a : ex.point) elems.insert(a);
  if (elems.empty()) return {};
  Tuple anchors(elems.begin(), elems.end());
  return ball_via_oracle(oracle, anchors, (2 * h.radius + 1) * h.l());
}

namespace detail {

template <typename Fn>
void each_param_tuple(const std::vector<ElementId>& space, int l, Tuple& current, size_t pos,
                      Fn&& fn, bool& stop) {
  if (static_cast<int>(pos) == l) {
    fn(current);
    return;
  }
  for (ElementId v : space) {
    current[pos] = v;
    each_param_tuple(space, l, current, pos + 1, fn, stop);
    if (stop) return;
  }
}

}  // namespace detail

// Consistent-hypothesis search over the reduced grid; rejects when no
// hypothesis in the searched space fits the training sequence exactly.
inline LearnResult exact_learn(const LocalAccessOracle& oracle, const HypothesisClass& h,
                               const TrainingSequence& train) {
  h.validate();
  LearnResult out;
  if (train.empty()) {
    // Vacuously consistent; the parameter ball of an empty sequence is empty,
    // so fall back to the first formula at the all-zero tuple.
    out.hypothesis = {0, h.formulas[0], Tuple(static_cast<size_t>(h.l()), 0)};
    out.queries = oracle.counts();
    return out;
  }
  std::vector<ElementId> space = parameter_space(oracle, h, train);
  Tuple params(static_cast<size_t>(h.l()), 0);
  bool stop = false;
  std::optional<Hypothesis> found;
  detail::each_param_tuple(
      space, h.l(), params, 0,
      [&](const Tuple& v) {
        for (size_t fi = 0; fi < h.formulas.size() && !stop; ++fi) {
          bool consistent = true;
          for (const Example& ex : train) {
            if (eval_hypothesis(oracle, h, h.formulas[fi], ex.point, v) != ex.label) {
              consistent = false;
              break;
            }
          }
          if (consistent) {
            found = Hypothesis{static_cast<int>(fi), h.formulas[fi], v};
            stop = true;
          }
        }
      },
      stop);
  out.queries = oracle.counts();
  if (!found) {
    out.rejected = true;
    return out;
  }
  out.hypothesis = *found;
  out.training_error = 0;
  return out;
}

// Empirical risk minimization over the same grid; strict improvement only,
// so ties resolve to the first hypothesis in iteration order.
inline LearnResult pac_learn(const LocalAccessOracle& oracle, const HypothesisClass& h,
                             const TrainingSequence& train) {
  h.validate();
  require(!train.empty(), errc::empty_training, "training sequence is empty");
  std::vector<ElementId> space = parameter_space(oracle, h, train);
  std::uint64_t err_min = train.size() + 1;
  std::optional<Hypothesis> best;
  Tuple params(static_cast<size_t>(h.l()), 0);
  bool stop = false;

  auto consider = [&](const Tuple& v) {
    for (size_t fi = 0; fi < h.formulas.size(); ++fi) {
      std::uint64_t err = 0;
      for (const Example& ex : train)
        if (eval_hypothesis(oracle, h, h.formulas[fi], ex.point, v) != ex.label) ++err;
      if (err < err_min) {
        err_min = err;
        best = Hypothesis{static_cast<int>(fi), h.formulas[fi], v};
      }
    }
  };
  detail::each_param_tuple(space, h.l(), params, 0, consider, stop);

  LearnResult out;
  out.queries = oracle.counts();
  if (!best) {
    out.rejected = true;  // empty parameter space with l >= 1
    return out;
  }
  out.hypothesis = *best;
  out.training_error = BigRat(BigInt(err_min), BigInt(train.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Generalization experiments: draw i.i.d. samples from a seeded label
// distribution over A^k x {0,1}, learn, and compare the distribution error
// of the result against the best hypothesis in the class (computed
// exactly; all our distributions have finite support).
// ---------------------------------------------------------------------------

struct LabelDistribution {
  // Examples are uniform over A^k; labels come from a target hypothesis,
  // flipped with probability noise_num/noise_den.
  ExprPtr target;              // free variables = class xs (+ ys bound via params)
  Tuple target_params;
  std::uint64_t noise_num = 0;
  std::uint64_t noise_den = 1;
};

struct TrialRow {
  std::uint64_t trial = 0;
  std::uint64_t samples = 0;
  BigRat train_error = 0;
  BigRat dist_error = 0;
  BigRat best_dist_error = 0;
  bool success = false;
  QueryCounts queries;
};

struct ExperimentReport {
  std::vector<TrialRow> rows;
  BigRat success_frequency = 0;
  BigRat mean_dist_error = 0;
  BigRat best_dist_error = 0;
  std::uint64_t samples_per_trial = 0;
};

namespace detail {

// Exact distribution error of a 0/1 classifier table against the label model.
inline BigRat exact_dist_error(const std::vector<bool>& hyp_table,
                               const std::vector<bool>& target_table, const BigRat& noise) {
  BigRat total = 0;
  for (size_t i = 0; i < hyp_table.size(); ++i) {
    // P(label != h) = noise if h == target else 1 - noise.
    total += hyp_table[i] == target_table[i] ? noise : BigRat(1) - noise;
  }
  return total / BigRat(static_cast<unsigned>(hyp_table.size()));
}

template <typename Fn>
void each_tuple(int n, int k, Tuple& t, size_t pos, Fn&& fn) {
  if (static_cast<int>(pos) == k) {
    fn(t);
    return;
  }
  for (ElementId a = 0; a < n; ++a) {
    t[pos] = a;
    each_tuple(n, k, t, pos + 1, fn);
  }
}

}  // namespace detail

inline ExperimentReport run_generalization_experiment(const WeightedStructure& s,
                                                      const HypothesisClass& h,
                                                      const LabelDistribution& dist,
                                                      double eps, double delta,
                                                      std::uint64_t trials,
                                                      std::uint64_t seed) {
  h.validate();
  require(trials >= 1, errc::out_of_range, "need at least one trial");
  int n = s.size();
  int k = h.k(), l = h.l();
  BigRat noise(BigInt(dist.noise_num), BigInt(dist.noise_den));

  // Truth table of the target over A^k.
  LocalAccessOracle target_oracle(s);
  std::vector<bool> target_table;
  {
    Tuple t(static_cast<size_t>(k), 0);
    detail::each_tuple(n, k, t, 0, [&](const Tuple& point) {
      target_table.push_back(
          eval_hypothesis(target_oracle, h, dist.target, point, dist.target_params));
    });
  }

  // Size of the full hypothesis class |Phi*| * n^l bounds |Phi*| * |N|^l.
  std::uint64_t class_size = h.formulas.size();
  for (int i = 0; i < l; ++i) class_size *= static_cast<std::uint64_t>(n);
  std::uint64_t t_samples = sample_size(eps, delta, class_size);

  // Exact truth tables of every hypothesis in the class, and the best
  // achievable distribution error.
  std::vector<std::vector<bool>> tables;  // one per (formula, param tuple)
  BigRat best_err(1);
  {
    LocalAccessOracle oracle(s);
    Tuple params(static_cast<size_t>(l), 0);
    std::vector<ElementId> full(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) full[static_cast<size_t>(i)] = i;
    bool stop = false;
    auto handle = [&](const Tuple& v) {
      for (const ExprPtr& f : h.formulas) {
        std::vector<bool> table;
        Tuple t(static_cast<size_t>(k), 0);
        detail::each_tuple(n, k, t, 0, [&](const Tuple& point) {
          table.push_back(eval_hypothesis(oracle, h, f, point, v));
        });
        BigRat err = detail::exact_dist_error(table, target_table, noise);
        if (err < best_err) best_err = err;
        tables.push_back(std::move(table));
      }
    };
    if (l == 0)
      handle(Tuple{});
    else
      detail::each_tuple(n, l, params, 0, [&](const Tuple& v) { handle(v); });
    (void)stop;
  }

  ExperimentReport report;
  report.samples_per_trial = t_samples;
  report.best_dist_error = best_err;
  Rng rng(seed);
  BigRat eps_rat;
  {
    // eps arrives as a double from the CLI; represent it exactly over 1e9.
    std::uint64_t num = static_cast<std::uint64_t>(eps * 1e9 + 0.5);
    eps_rat = BigRat(BigInt(num), BigInt(1000000000));
  }

  std::uint64_t successes = 0;
  BigRat err_sum = 0;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    Rng trial_rng = rng.fork(trial);
    TrainingSequence train;
    train.reserve(t_samples);
    for (std::uint64_t i = 0; i < t_samples; ++i) {
      Tuple point(static_cast<size_t>(k));
      std::uint64_t flat = 0;
      for (int j = 0; j < k; ++j) {
        point[static_cast<size_t>(j)] = trial_rng.below_int(n);
        flat = flat * static_cast<std::uint64_t>(n) +
               static_cast<std::uint64_t>(point[static_cast<size_t>(j)]);
      }
      bool label = target_table[flat];
      if (dist.noise_num > 0 && trial_rng.chance(dist.noise_num, dist.noise_den))
        label = !label;
      train.push_back({std::move(point), label});
    }
    LocalAccessOracle oracle(s);
    LearnResult res = pac_learn(oracle, h, train);
    require(!res.rejected, errc::out_of_range, "learner rejected inside an experiment");

    // Exact distribution error of the returned hypothesis.
    std::vector<bool> table;
    Tuple t(static_cast<size_t>(k), 0);
    LocalAccessOracle eval_oracle(s);
    detail::each_tuple(n, k, t, 0, [&](const Tuple& point) {
      table.push_back(
          eval_hypothesis(eval_oracle, h, res.hypothesis.formula, point, res.hypothesis.params));
    });
    BigRat err = detail::exact_dist_error(table, target_table, noise);
    bool success = err <= best_err + eps_rat;
    if (success) ++successes;
    err_sum += err;
    report.rows.push_back(
        {trial, t_samples, res.training_error, err, best_err, success, res.queries});
  }
  report.success_frequency = BigRat(BigInt(successes), BigInt(trials));
  report.mean_dist_error = err_sum / BigRat(static_cast<unsigned>(trials));
  return report;
}

}  // namespace fowa

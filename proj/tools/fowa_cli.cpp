// Command-line front end: evaluation, analysis, the locality
// transformations, structure expansion, the local-access learners and the
// generalization-experiment harness. All commands are deterministic under a
// fixed seed; error codes are printed verbatim on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "fowa/fowa.hpp"

using nlohmann::json;
using namespace fowa;

namespace {

struct CommonOpts {
  std::size_t cap_pairs = 4096;
  int cap_width = 4;
  std::string profile = "release";
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--caps.pairs", c.cap_pairs, "decomposition size cap");
  cmd->add_option("--caps.width", c.cap_width, "aggregation width cap");
  cmd->add_option("--profile", c.profile, "debug (spot-check validation on) or release")
      ->check(CLI::IsMember({"debug", "release"}));
  cmd->add_option("--seed", c.seed, "seed for every pseudo-random choice");
}

// Debug-profile contexts carry a pool of tiny seeded structures on which
// locality preconditions are spot-checked.
struct ContextHolder {
  std::vector<WeightedStructure> pool;
  RewriteContext ctx;

  ContextHolder(const Signature& sig, const CommonOpts& c) {
    ctx.sig = &sig;
    ctx.limits.max_pairs = c.cap_pairs;
    ctx.limits.max_width = c.cap_width;
    if (c.profile == "debug") {
      for (std::uint64_t i = 0; i < 2; ++i) {
        GenSpec spec;
        spec.n = 4;
        spec.degree_bound = 2;
        spec.seed = c.seed + i;
        pool.push_back(generate_structure(sig, spec));
      }
      for (const WeightedStructure& s : pool) ctx.spot_check_pool.push_back(&s);
    }
  }
};

Tuple parse_tuple(const std::string& text, int n) {
  Tuple out;
  if (text.empty()) return out;
  std::istringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    int a = std::stoi(piece);
    require(a >= 0 && a < n, errc::unknown_element, "tuple element " + piece);
    out.push_back(a);
  }
  return out;
}

std::string counts_json(const QueryCounts& q) {
  json j{{"relation_probes", q.relation_probes},
         {"weight_lookups", q.weight_lookups},
         {"neighbor_queries", q.neighbor_queries},
         {"total", q.total()}};
  return j.dump();
}

json hypothesis_json(const LearnResult& res, const HypothesisClass& cls) {
  json j;
  j["formula"] = to_text(res.hypothesis.formula);
  j["formula_index"] = res.hypothesis.formula_index;
  j["params"] = res.hypothesis.params;
  std::ostringstream err;
  err << res.training_error;
  j["training_error"] = err.str();
  j["query_counts"] = json::parse(counts_json(res.queries));
  j["radius"] = cls.radius;
  return j;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"first-order logic with weight aggregation over weighted structures"};
  app.require_subcommand(1);

  // eval ---------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a formula or term on a structure");
  std::string eval_structure, eval_formula, eval_tuple;
  eval_cmd->add_option("--structure", eval_structure)->required();
  eval_cmd->add_option("--formula", eval_formula)->required();
  eval_cmd->add_option("--tuple", eval_tuple, "comma-separated element ids");
  eval_cmd->callback([&] {
    WeightedStructure s = load_structure(eval_structure);
    FormulaFile f = load_formula(eval_formula, &s.signature());
    if (eval_cmd->count("--tuple") || f.expr->free.empty()) {
      Tuple t = parse_tuple(eval_tuple, s.size());
      EvalResult r = evaluate(s, make_env(f.expr->free, t), f.expr);
      if (std::holds_alternative<bool>(r))
        std::cout << (std::get<bool>(r) ? "true" : "false") << "\n";
      else
        std::cout << std::get<Value>(r).text() << "\n";
    } else {
      EvalAllResult all = evaluate_all(s, f.expr);
      for (const auto& [t, r] : all.rows) {
        for (size_t i = 0; i < t.size(); ++i) std::cout << (i ? "," : "") << t[i];
        std::cout << " -> ";
        if (std::holds_alternative<bool>(r))
          std::cout << (std::get<bool>(r) ? "true" : "false");
        else
          std::cout << std::get<Value>(r).text();
        std::cout << "\n";
      }
    }
  });

  // analyze ------------------------------------------------------------------
  auto* analyze_cmd = app.add_subcommand("analyze", "free variables, ranks and fragment");
  std::string analyze_formula;
  analyze_cmd->add_option("--formula", analyze_formula)->required();
  analyze_cmd->callback([&] {
    FormulaFile f = load_formula(analyze_formula);
    ExprInfo info = analyze(f.expr);
    json j;
    j["free_vars"] = info.free_vars;
    j["quantifier_rank"] = info.quantifier_rank;
    j["agg_depth"] = info.agg_depth;
    j["fragment"] = fragment_name(info.fragment);
    j["kind"] = f.expr->is_formula() ? "formula" : "term";
    std::cout << j.dump(2) << "\n";
  });

  // localize -----------------------------------------------------------------
  auto* localize_cmd = app.add_subcommand("localize", "relativize to the r-ball of the frees");
  std::string localize_formula, localize_out;
  int localize_radius = 0;
  CommonOpts localize_opts;
  localize_cmd->add_option("--formula", localize_formula)->required();
  localize_cmd->add_option("--radius", localize_radius)->required();
  localize_cmd->add_option("--out", localize_out);
  add_common(localize_cmd, localize_opts);
  localize_cmd->callback([&] {
    FormulaFile f = load_formula(localize_formula);
    FreshVars fresh;
    ExprPtr local = localize(f.expr, localize_radius, fresh);
    std::string text = save_formula_text(f.sig, local);
    if (localize_out.empty())
      std::cout << to_text(local) << "\n";
    else
      write_file(localize_out, text);
  });

  // fv -----------------------------------------------------------------------
  auto* fv_cmd = app.add_subcommand("fv", "Feferman-Vaught decomposition across a disjoint sum");
  std::string fv_formula, fv_left, fv_right, fv_out;
  bool fv_exclusive = false;
  CommonOpts fv_opts;
  fv_cmd->add_option("--formula", fv_formula)->required();
  fv_cmd->add_option("--left", fv_left, "comma-separated left variables");
  fv_cmd->add_option("--right", fv_right, "comma-separated right variables");
  fv_cmd->add_flag("--exclusive", fv_exclusive, "refine the left components to be exclusive");
  fv_cmd->add_option("--out", fv_out, "machine-readable pair listing (json)");
  add_common(fv_cmd, fv_opts);
  fv_cmd->callback([&] {
    FormulaFile f = load_formula(fv_formula);
    ContextHolder holder(f.sig, fv_opts);
    auto split_names = [](const std::string& text) {
      std::vector<std::string> out;
      std::istringstream in(text);
      std::string piece;
      while (std::getline(in, piece, ','))
        if (!piece.empty()) out.push_back(piece);
      return out;
    };
    FvDecomposition d =
        fv_decompose(f.expr, split_names(fv_left), split_names(fv_right), holder.ctx);
    if (fv_exclusive) d = fv_make_exclusive(d, holder.ctx);
    json j;
    j["left_vars"] = d.left_vars;
    j["right_vars"] = d.right_vars;
    j["mutually_exclusive"] = d.mutually_exclusive;
    j["pairs"] = json::array();
    for (const FvPair& p : d.pairs) {
      j["pairs"].push_back({{"alpha", to_text(p.alpha)}, {"beta", to_text(p.beta)}});
      std::cout << "(" << to_text(p.alpha) << " ; " << to_text(p.beta) << ")\n";
    }
    if (!fv_out.empty()) write_file(fv_out, j.dump(2) + "\n");
  });

  // gaifman --------------------------------------------------------------------
  auto* gaifman_cmd = app.add_subcommand("gaifman", "Gaifman normal form");
  std::string gaifman_formula, gaifman_out;
  CommonOpts gaifman_opts;
  gaifman_cmd->add_option("--formula", gaifman_formula)->required();
  gaifman_cmd->add_option("--out", gaifman_out, "machine-readable leaf listing (json)");
  add_common(gaifman_cmd, gaifman_opts);
  gaifman_cmd->callback([&] {
    FormulaFile f = load_formula(gaifman_formula);
    ContextHolder holder(f.sig, gaifman_opts);
    GaifmanNF g = gaifman_nf(f.expr, holder.ctx);
    validate_gnf(g, f.expr->free);
    json j;
    j["formula"] = to_text(g.to_expr());
    j["leaves"] = json::array();
    for (const GnfLeaf& l : g.leaves) {
      json leaf;
      leaf["kind"] = l.kind == GnfLeafKind::Local        ? "local"
                     : l.kind == GnfLeafKind::BasicLocal ? "basic-local"
                                                         : "local-aggregation";
      leaf["radius"] = l.radius;
      leaf["formula"] = to_text(l.formula);
      if (l.kind == GnfLeafKind::BasicLocal) leaf["ell"] = l.ell;
      j["leaves"].push_back(leaf);
      std::cout << leaf["kind"].get<std::string>() << " r=" << l.radius << " "
                << to_text(l.formula) << "\n";
    }
    if (!gaifman_out.empty()) write_file(gaifman_out, j.dump(2) + "\n");
  });

  // cl-decompose ----------------------------------------------------------------
  auto* cld_cmd = app.add_subcommand("cl-decompose", "staged marker decomposition");
  std::string cld_formula, cld_out;
  CommonOpts cld_opts;
  cld_cmd->add_option("--formula", cld_formula)->required();
  cld_cmd->add_option("--out", cld_out, "machine-readable layer listing (json)");
  add_common(cld_cmd, cld_opts);
  cld_cmd->callback([&] {
    FormulaFile f = load_formula(cld_formula);
    ContextHolder holder(f.sig, cld_opts);
    ClDecomposition d = cl_decompose(f.expr, holder.ctx);
    json j;
    j["layers"] = json::array();
    for (size_t i = 0; i < d.layers.size(); ++i) {
      json layer = json::array();
      for (const LayerSymbol& sym : d.layers[i].symbols) {
        layer.push_back({{"name", sym.name}, {"arity", sym.arity}, {"iota", sym.iota.text()}});
        std::cout << "L" << (i + 1) << " " << sym.name << "/" << sym.arity << " := "
                  << sym.iota.text() << "\n";
      }
      j["layers"].push_back(layer);
    }
    j["phi_prime"] = to_text(d.phi_prime);
    j["local_radius"] = d.local_radius;
    std::cout << "phi' = " << to_text(d.phi_prime) << "\n";
    if (!cld_out.empty()) write_file(cld_out, j.dump(2) + "\n");
  });

  // expand -----------------------------------------------------------------------
  auto* expand_cmd = app.add_subcommand("expand", "materialize marker relations");
  std::string expand_structure_path, expand_formula, expand_out, expand_manifest;
  CommonOpts expand_opts;
  expand_cmd->add_option("--structure", expand_structure_path)->required();
  expand_cmd->add_option("--formula", expand_formula)->required();
  expand_cmd->add_option("--out", expand_out)->required();
  expand_cmd->add_option("--manifest", expand_manifest, "sidecar mapping symbols to definitions");
  add_common(expand_cmd, expand_opts);
  expand_cmd->callback([&] {
    WeightedStructure s = load_structure(expand_structure_path);
    FormulaFile f = load_formula(expand_formula, &s.signature());
    ContextHolder holder(s.signature(), expand_opts);
    ExpansionResult res = expand_structure(s, f.expr, holder.ctx);
    write_file(expand_out, save_structure_text(res.expanded));
    json j;
    j["phi_prime"] = to_text(res.phi_prime);
    j["local_radius"] = res.decomposition.local_radius;
    j["query_counts"] = json::parse(counts_json(res.queries));
    j["symbols"] = json::array();
    for (size_t i = 0; i < res.decomposition.layers.size(); ++i)
      for (const LayerSymbol& sym : res.decomposition.layers[i].symbols)
        j["symbols"].push_back({{"layer", i + 1},
                                {"name", sym.name},
                                {"arity", sym.arity},
                                {"iota", sym.iota.text()}});
    std::string manifest = expand_manifest.empty() ? expand_out + ".manifest.json"
                                                   : expand_manifest;
    write_file(manifest, j.dump(2) + "\n");
    std::cout << "expanded " << expand_out << " (+" << j["symbols"].size() << " symbols)\n";
  });

  // learners -----------------------------------------------------------------------
  auto add_learner = [&](const char* name, bool exact) {
    auto* cmd = app.add_subcommand(
        name, exact ? "consistent-hypothesis search" : "empirical risk minimization");
    auto structure_path = std::make_shared<std::string>();
    auto class_path = std::make_shared<std::string>();
    auto train_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--structure", *structure_path)->required();
    cmd->add_option("--class", *class_path)->required();
    cmd->add_option("--train", *train_path)->required();
    cmd->add_option("--out", *out_path);
    cmd->callback([=] {
      WeightedStructure s = load_structure(*structure_path);
      HypothesisClass cls = load_hypothesis_class(*class_path, s.signature());
      TrainingSequence train = load_training_csv(*train_path, cls.k(), s.size());
      LocalAccessOracle oracle(s);
      LearnResult res = exact ? exact_learn(oracle, cls, train) : pac_learn(oracle, cls, train);
      if (res.rejected) {
        std::cerr << "no consistent hypothesis\n";
        std::exit(2);
      }
      json j = hypothesis_json(res, cls);
      std::cout << j.dump(2) << "\n";
      if (!out_path->empty()) write_file(*out_path, j.dump(2) + "\n");
    });
  };
  add_learner("learn-exact", true);
  add_learner("learn-pac", false);

  // experiment -----------------------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "generalization experiment (Monte Carlo)");
  std::string exp_structure, exp_class, exp_target, exp_target_params, exp_out, exp_summary;
  double exp_eps = 0.2, exp_delta = 0.2;
  std::uint64_t exp_trials = 200, exp_noise = 0;
  CommonOpts exp_opts;
  exp_cmd->add_option("--structure", exp_structure)->required();
  exp_cmd->add_option("--class", exp_class)->required();
  exp_cmd->add_option("--target", exp_target, "formula file labelling the examples")->required();
  exp_cmd->add_option("--target-params", exp_target_params, "parameter tuple of the target");
  exp_cmd->add_option("--epsilon", exp_eps);
  exp_cmd->add_option("--delta", exp_delta);
  exp_cmd->add_option("--trials", exp_trials);
  exp_cmd->add_option("--noise-percent", exp_noise, "label flip probability in percent");
  exp_cmd->add_option("--out", exp_out, "per-trial csv");
  exp_cmd->add_option("--summary", exp_summary, "summary json");
  add_common(exp_cmd, exp_opts);
  exp_cmd->callback([&] {
    WeightedStructure s = load_structure(exp_structure);
    HypothesisClass cls = load_hypothesis_class(exp_class, s.signature());
    FormulaFile target = load_formula(exp_target, &s.signature());
    LabelDistribution dist;
    dist.target = target.expr;
    dist.target_params = parse_tuple(exp_target_params, s.size());
    dist.noise_num = exp_noise;
    dist.noise_den = 100;
    ExperimentReport rep = run_generalization_experiment(s, cls, dist, exp_eps, exp_delta,
                                                         exp_trials, exp_opts.seed);
    std::ostringstream csv;
    csv << "trial,samples,train_error,dist_error,best_dist_error,success,"
           "relation_probes,weight_lookups,neighbor_queries\n";
    for (const TrialRow& row : rep.rows)
      csv << row.trial << ',' << row.samples << ',' << row.train_error << ','
          << row.dist_error << ',' << row.best_dist_error << ',' << (row.success ? 1 : 0) << ','
          << row.queries.relation_probes << ',' << row.queries.weight_lookups << ','
          << row.queries.neighbor_queries << "\n";
    std::ostringstream sum;
    sum << "summary,success_frequency=" << rep.success_frequency
        << ",mean_dist_error=" << rep.mean_dist_error
        << ",best_dist_error=" << rep.best_dist_error
        << ",samples_per_trial=" << rep.samples_per_trial << "\n";
    csv << sum.str();
    if (!exp_out.empty()) write_file(exp_out, csv.str());
    json j;
    std::ostringstream sf, me, be;
    sf << rep.success_frequency;
    me << rep.mean_dist_error;
    be << rep.best_dist_error;
    j["success_frequency"] = sf.str();
    j["mean_dist_error"] = me.str();
    j["best_dist_error"] = be.str();
    j["samples_per_trial"] = rep.samples_per_trial;
    j["trials"] = exp_trials;
    std::cout << j.dump(2) << "\n";
    if (!exp_summary.empty()) write_file(exp_summary, j.dump(2) + "\n");
  });

  // gen-structure -----------------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-structure", "seeded bounded-degree fixture");
  std::string gen_out;
  int gen_n = 12, gen_degree = 3, gen_edge_attempts = 2, gen_unary = 40, gen_weightpct = 60;
  std::uint64_t gen_seed = 1;
  bool gen_no_weights = false;
  gen_cmd->add_option("--n", gen_n);
  gen_cmd->add_option("--degree", gen_degree);
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--edge-attempts", gen_edge_attempts, "per vertex");
  gen_cmd->add_option("--unary-percent", gen_unary);
  gen_cmd->add_option("--weight-percent", gen_weightpct);
  gen_cmd->add_flag("--no-weights", gen_no_weights);
  gen_cmd->add_option("--out", gen_out)->required();
  gen_cmd->callback([&] {
    Signature sig;
    sig.add_relation("E", 2);
    sig.add_relation("R", 1);
    sig.add_relation("B", 1);
    sig.add_weight("w", 2, Carrier::rationals());
    sig.add_weight("one", 1, Carrier::integers(), true);
    sig.add_weight("one2", 1, Carrier::residues(2), true);
    GenSpec spec;
    spec.n = gen_n;
    spec.degree_bound = gen_degree;
    spec.seed = gen_seed;
    spec.edge_attempts_per_vertex = gen_edge_attempts;
    spec.unary_percent = gen_unary;
    spec.weight_percent = gen_weightpct;
    if (!gen_no_weights)
      spec.weight_pool = {Value::rational(BigRat(1, 2)), Value::rational(BigRat(2)),
                          Value::rational(BigRat(1))};
    write_file(gen_out, save_structure_text(generate_structure(sig, spec)));
    std::cout << "wrote " << gen_out << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "IoError: " << e.what() << "\n";
    return 1;
  }
}

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "fowa/expr.hpp"

namespace fowa {

enum class Fragment { FO, FOW1, WA1, WA };

inline const char* fragment_name(Fragment f) {
  switch (f) {
    case Fragment::FO: return "FO";
    case Fragment::FOW1: return "FOW1";
    case Fragment::WA1: return "WA1";
    case Fragment::WA: return "WA";
  }
  return "?";
}

struct ExprInfo {
  std::vector<std::string> free_vars;  // first-occurrence order
  int quantifier_rank = 0;             // nesting of exists and sumEq
  int agg_depth = 0;                   // nesting of aggregation terms
  Fragment fragment = Fragment::FO;
};

namespace detail {

struct AnalyzeState {
  bool non_fo = false;        // anything beyond =, R, not, or, exists, dist
  bool wa1_violation = false; // sumEq over an infinite carrier, or a predicate
                              // application with more than one free variable
  bool uses_agg = false;
};

inline int qr_walk(const ExprPtr& e, AnalyzeState& st);

inline int qr_kids_max(const ExprPtr& e, AnalyzeState& st) {
  int m = 0;
  for (const ExprPtr& k : e->kids) m = std::max(m, qr_walk(k, st));
  return m;
}

inline int qr_walk(const ExprPtr& e, AnalyzeState& st) {
  // The canonical truth constants are quantified idioms; they count as
  // rank-0 formula constants.
  if (is_bot(e)) return 0;
  switch (e->kind) {
    case NodeKind::VarEq:
    case NodeKind::RelAtom:
      return 0;
    case NodeKind::DistLeq:
      // Convention: the primitive counts as its FO unfolding's depth.
      return e->radius;
    case NodeKind::WeightEq:
      st.non_fo = true;
      return 0;
    case NodeKind::Not:
    case NodeKind::Or:
      return qr_kids_max(e, st);
    case NodeKind::Exists:
      return 1 + qr_kids_max(e, st);
    case NodeKind::SumEq:
      st.non_fo = true;
      if (!e->value->carrier().is_finite()) st.wa1_violation = true;
      return 1 + qr_kids_max(e, st);
    case NodeKind::PredApp: {
      st.non_fo = true;
      std::vector<std::string> frees;
      for (const ExprPtr& t : e->kids) detail::merge_vars(frees, t->free);
      if (frees.size() > 1) st.wa1_violation = true;
      return qr_kids_max(e, st);
    }
    case NodeKind::ConstTerm:
      st.non_fo = true;
      return 0;
    case NodeKind::WeightTerm:
      st.non_fo = true;
      return 0;
    case NodeKind::Arith:
      st.non_fo = true;
      return qr_kids_max(e, st);
    case NodeKind::Agg:
      st.non_fo = true;
      st.uses_agg = true;
      return qr_kids_max(e, st);
  }
  return 0;
}

inline int agg_depth_walk(const ExprPtr& e) {
  int m = 0;
  for (const ExprPtr& k : e->kids) m = std::max(m, agg_depth_walk(k));
  return e->kind == NodeKind::Agg ? m + 1 : m;
}

}  // namespace detail

inline int quantifier_rank(const ExprPtr& e) {
  detail::AnalyzeState st;
  return detail::qr_walk(e, st);
}

inline int agg_depth(const ExprPtr& e) { return detail::agg_depth_walk(e); }

inline ExprInfo analyze(const ExprPtr& e) {
  ExprInfo info;
  info.free_vars = e->free;
  detail::AnalyzeState st;
  info.quantifier_rank = detail::qr_walk(e, st);
  info.agg_depth = detail::agg_depth_walk(e);
  if (st.wa1_violation)
    info.fragment = Fragment::WA;
  else if (st.uses_agg)
    info.fragment = Fragment::WA1;
  else if (st.non_fo)
    info.fragment = Fragment::FOW1;
  else
    info.fragment = Fragment::FO;
  return info;
}

inline bool in_fragment(const ExprPtr& e, Fragment f) {
  return static_cast<int>(analyze(e).fragment) <= static_cast<int>(f);
}

// Symbols referenced by an expression; used for output-class discipline
// checks and for building formula-file headers.
struct SymbolUse {
  std::set<std::string> relations;
  std::set<std::string> weights;
  std::set<std::string> predicates;  // display() strings, carrier-specific
  std::set<std::string> carriers;
  std::set<std::string> constants;   // annotated constant terms
};

inline void collect_symbols(const ExprPtr& e, SymbolUse& out) {
  switch (e->kind) {
    case NodeKind::RelAtom:
      out.relations.insert(e->symbol);
      break;
    case NodeKind::WeightEq:
    case NodeKind::SumEq:
      out.weights.insert(e->symbol);
      out.carriers.insert(e->value->carrier().name());
      break;
    case NodeKind::WeightTerm:
      out.weights.insert(e->symbol);
      out.carriers.insert(e->type->name());
      break;
    case NodeKind::PredApp:
      out.predicates.insert(e->pred->display());
      break;
    case NodeKind::ConstTerm:
      out.carriers.insert(e->type->name());
      out.constants.insert(e->value->annotated());
      break;
    case NodeKind::Agg:
      out.carriers.insert(e->type->name());
      for (const WFactor& f : e->product->factors) {
        if (f.is_constant())
          out.constants.insert(f.constant->annotated());
        else
          out.weights.insert(f.weight);
      }
      break;
    default:
      break;
  }
  for (const ExprPtr& k : e->kids) collect_symbols(k, out);
}

}  // namespace fowa

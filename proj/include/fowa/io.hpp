#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fowa/analyze.hpp"
#include "fowa/learning.hpp"
#include "fowa/parser.hpp"
#include "fowa/structure.hpp"

namespace fowa {

// ---------------------------------------------------------------------------
// File formats. All files are UTF-8 text, 0-based element ids, '#' comments.
//
// Structure (.wst):
//   wst 1
//   pred-lib 1
//   relation E 2
//   weight w 2 Q
//   weight one 1 Z ones
//   universe 3
//   E(0,1)
//   w(1,2) = 1/2
//
// Formula (.fml): the same declaration header, then `formula <expression>`.
// Hypothesis class (.phi): header, `vars x .. | y ..`, `radius r`, then one
// `formula <expression>` per hypothesis.
// Training data (.csv): one `a1,...,ak,label` row per example.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Header line `relation NAME ARITY` / `weight NAME ARITY CARRIER [ones]`.
inline bool parse_decl_line(const std::string& line, Signature& sig) {
  std::vector<std::string> ws = words(line);
  if (ws.empty()) return false;
  if (ws[0] == "relation") {
    require(ws.size() == 3, errc::parse_error, "relation line: " + line);
    sig.add_relation(ws[1], std::stoi(ws[2]));
    return true;
  }
  if (ws[0] == "weight") {
    require(ws.size() == 4 || (ws.size() == 5 && ws[4] == "ones"), errc::parse_error,
            "weight line: " + line);
    auto c = Carrier::parse(ws[3]);
    require(c.has_value(), errc::parse_error, "bad carrier in: " + line);
    sig.add_weight(ws[1], std::stoi(ws[2]), *c, ws.size() == 5);
    return true;
  }
  return false;
}

// `E(0,1)` or `w(1,2) = 1/2`; spec-style `(a, b, c)` vectors and `3 mod 5`
// residue spellings are normalized here.
inline void parse_body_line(const std::string& line, const Signature& sig, int n,
                            std::vector<std::set<Tuple>>& rels,
                            std::vector<std::map<Tuple, Value>>& wgts) {
  size_t open = line.find('(');
  require(open != std::string::npos, errc::parse_error, "bad body line: " + line);
  std::string name = strip(line.substr(0, open));
  size_t close = line.find(')', open);
  require(close != std::string::npos, errc::parse_error, "bad body line: " + line);
  Tuple tuple;
  {
    std::string args = line.substr(open + 1, close - open - 1);
    std::istringstream in(args);
    std::string piece;
    while (std::getline(in, piece, ',')) {
      piece = strip(piece);
      if (piece.empty()) continue;
      int a = std::stoi(piece);
      require(a >= 0 && a < n, errc::unknown_element, "element " + piece + " in: " + line);
      tuple.push_back(a);
    }
  }
  std::string rest = strip(line.substr(close + 1));
  if (auto ri = sig.relation_index(name)) {
    require(rest.empty(), errc::parse_error, "trailing text after relation tuple: " + line);
    require(static_cast<int>(tuple.size()) == sig.relation(*ri).arity, errc::arity_error,
            "tuple arity in: " + line);
    rels[*ri].insert(std::move(tuple));
    return;
  }
  if (auto wi = sig.weight_index(name)) {
    require(!rest.empty() && rest[0] == '=', errc::parse_error, "weight line needs '=': " + line);
    std::string vtext = strip(rest.substr(1));
    const WeightDecl& d = sig.weight(*wi);
    // normalize alternative spellings
    if (d.carrier.kind() == CarrierKind::ResidueGroup) {
      size_t mod = vtext.find(" mod ");
      if (mod != std::string::npos) {
        std::string m = strip(vtext.substr(mod + 5));
        require(m == std::to_string(d.carrier.modulus()), errc::type_error,
                "modulus mismatch in: " + line);
        vtext = strip(vtext.substr(0, mod));
      }
    }
    if (d.carrier.kind() == CarrierKind::RationalVectorGroup && !vtext.empty() &&
        vtext[0] == '(') {
      require(vtext.back() == ')', errc::parse_error, "bad vector in: " + line);
      std::string inner = vtext.substr(1, vtext.size() - 2);
      std::string squeezed = "[";
      for (char c : inner)
        if (c != ' ' && c != '\t') squeezed += c;
      vtext = squeezed + "]";
    }
    auto v = Value::parse(vtext, d.carrier);
    require(v.has_value(), errc::parse_error, "bad value in: " + line);
    require(static_cast<int>(tuple.size()) == d.arity, errc::arity_error,
            "weight tuple arity in: " + line);
    if (!v->is_zero()) wgts[*wi].emplace(std::move(tuple), *v);
    return;
  }
  fail(errc::parse_error, "unknown symbol " + name + " in: " + line);
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot write " + path);
  out << content;
}

// --- structures --------------------------------------------------------------

inline WeightedStructure load_structure_text(const std::string& text) {
  Signature sig;
  int n = -1;
  std::vector<std::set<Tuple>> rels;
  std::vector<std::map<Tuple, Value>> wgts;
  bool saw_magic = false;
  for (const std::string& raw : detail::split_lines(text)) {
    std::string line = detail::strip(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::vector<std::string> ws = detail::words(line);
    if (ws[0] == "wst") {
      require(ws.size() == 2 && ws[1] == "1", errc::parse_error, "unsupported format version");
      saw_magic = true;
      continue;
    }
    if (ws[0] == "pred-lib") {
      require(ws.size() == 2 && std::stoi(ws[1]) == kPredicateLibraryVersion, errc::parse_error,
              "unsupported predicate library version");
      continue;
    }
    if (ws[0] == "universe") {
      require(n < 0, errc::parse_error, "duplicate universe line");
      n = std::stoi(ws[1]);
      require(n >= 1, errc::parse_error, "universe must be >= 1");
      rels.resize(sig.relations().size());
      wgts.resize(sig.weights().size());
      continue;
    }
    if (n < 0) {
      require(detail::parse_decl_line(line, sig), errc::parse_error,
              "expected a declaration: " + line);
      continue;
    }
    detail::parse_body_line(line, sig, n, rels, wgts);
  }
  require(saw_magic, errc::parse_error, "missing `wst 1` header");
  require(n >= 1, errc::parse_error, "missing universe line");
  return WeightedStructure::build(std::move(sig), n, std::move(rels), std::move(wgts));
}

inline WeightedStructure load_structure(const std::string& path) {
  return load_structure_text(read_file(path));
}

inline std::string signature_header(const Signature& sig) {
  std::ostringstream out;
  for (const RelationDecl& r : sig.relations())
    out << "relation " << r.name << ' ' << r.arity << '\n';
  for (const WeightDecl& w : sig.weights()) {
    out << "weight " << w.name << ' ' << w.arity << ' ' << w.carrier.name();
    if (w.all_ones) out << " ones";
    out << '\n';
  }
  return out.str();
}

inline std::string save_structure_text(const WeightedStructure& s) {
  std::ostringstream out;
  out << "wst 1\n";
  out << "pred-lib " << kPredicateLibraryVersion << "\n";
  out << signature_header(s.signature());
  out << "universe " << s.size() << "\n";
  const Signature& sig = s.signature();
  for (size_t ri = 0; ri < sig.relations().size(); ++ri)
    for (const Tuple& t : s.relation_table(static_cast<int>(ri))) {
      out << sig.relations()[ri].name << '(';
      for (size_t i = 0; i < t.size(); ++i) {
        if (i) out << ',';
        out << t[i];
      }
      out << ")\n";
    }
  for (size_t wi = 0; wi < sig.weights().size(); ++wi)
    for (const auto& [t, v] : s.weight_table(static_cast<int>(wi))) {
      out << sig.weights()[wi].name << '(';
      for (size_t i = 0; i < t.size(); ++i) {
        if (i) out << ',';
        out << t[i];
      }
      out << ") = " << v.text() << "\n";
    }
  return out.str();
}

// --- formulas ----------------------------------------------------------------

struct FormulaFile {
  Signature sig;
  ExprPtr expr;
};

inline FormulaFile load_formula_text(const std::string& text,
                                     const Signature* context_sig = nullptr) {
  FormulaFile out;
  bool saw_magic = false;
  std::string formula_text;
  bool in_formula = false;
  for (const std::string& raw : detail::split_lines(text)) {
    if (in_formula) {
      formula_text += "\n" + raw;
      continue;
    }
    std::string line = detail::strip(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::vector<std::string> ws = detail::words(line);
    if (ws[0] == "fml") {
      require(ws.size() == 2 && ws[1] == "1", errc::parse_error, "unsupported format version");
      saw_magic = true;
      continue;
    }
    if (ws[0] == "pred-lib") {
      require(std::stoi(ws[1]) == kPredicateLibraryVersion, errc::parse_error,
              "unsupported predicate library version");
      continue;
    }
    if (ws[0] == "formula") {
      formula_text = line.substr(std::string("formula").size());
      in_formula = true;
      continue;
    }
    require(detail::parse_decl_line(line, out.sig), errc::parse_error,
            "expected a declaration: " + line);
  }
  require(saw_magic, errc::parse_error, "missing `fml 1` header");
  require(in_formula, errc::parse_error, "missing formula");
  const Signature& sig = context_sig ? *context_sig : out.sig;
  out.expr = parse_expression(formula_text, sig, /*allow_reserved_vars=*/false);
  if (context_sig) out.sig = *context_sig;
  return out;
}

inline FormulaFile load_formula(const std::string& path,
                                const Signature* context_sig = nullptr) {
  return load_formula_text(read_file(path), context_sig);
}

inline std::string save_formula_text(const Signature& sig, const ExprPtr& e) {
  std::ostringstream out;
  out << "fml 1\n";
  out << "pred-lib " << kPredicateLibraryVersion << "\n";
  out << signature_header(sig);
  out << "formula " << to_text(e) << "\n";
  return out.str();
}

// --- hypothesis classes --------------------------------------------------------

inline HypothesisClass load_hypothesis_class_text(const std::string& text,
                                                  const Signature& sig) {
  HypothesisClass out;
  bool saw_magic = false;
  bool saw_vars = false;
  for (const std::string& raw : detail::split_lines(text)) {
    std::string line = detail::strip(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::vector<std::string> ws = detail::words(line);
    if (ws[0] == "phi") {
      require(ws.size() == 2 && ws[1] == "1", errc::parse_error, "unsupported format version");
      saw_magic = true;
      continue;
    }
    if (ws[0] == "pred-lib") continue;
    if (ws[0] == "vars") {
      bool right = false;
      for (size_t i = 1; i < ws.size(); ++i) {
        if (ws[i] == "|") {
          right = true;
          continue;
        }
        (right ? out.ys : out.xs).push_back(ws[i]);
      }
      saw_vars = true;
      continue;
    }
    if (ws[0] == "radius") {
      out.radius = std::stoi(ws[1]);
      continue;
    }
    if (ws[0] == "formula") {
      out.formulas.push_back(parse_expression(line.substr(std::string("formula").size()), sig,
                                              /*allow_reserved_vars=*/false));
      continue;
    }
    Signature scratch;  // declarations are allowed but the context wins
    if (detail::parse_decl_line(line, scratch)) continue;
    fail(errc::parse_error, "unexpected line: " + line);
  }
  require(saw_magic, errc::parse_error, "missing `phi 1` header");
  require(saw_vars, errc::parse_error, "missing vars line");
  out.validate();
  return out;
}

inline HypothesisClass load_hypothesis_class(const std::string& path, const Signature& sig) {
  return load_hypothesis_class_text(read_file(path), sig);
}

// --- training sequences ---------------------------------------------------------

inline TrainingSequence load_training_csv_text(const std::string& text, int k, int n) {
  TrainingSequence out;
  for (const std::string& raw : detail::split_lines(text)) {
    std::string line = detail::strip(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(detail::strip(cell));
    require(static_cast<int>(cells.size()) == k + 1, errc::parse_error,
            "training row needs k+1 cells: " + line);
    Example ex;
    for (int i = 0; i < k; ++i) {
      int a = std::stoi(cells[static_cast<size_t>(i)]);
      require(a >= 0 && a < n, errc::unknown_element, "element in training row: " + line);
      ex.point.push_back(a);
    }
    const std::string& lab = cells.back();
    require(lab == "0" || lab == "1", errc::parse_error, "label must be 0/1: " + line);
    ex.label = lab == "1";
    out.push_back(std::move(ex));
  }
  return out;
}

inline TrainingSequence load_training_csv(const std::string& path, int k, int n) {
  return load_training_csv_text(read_file(path), k, n);
}

}  // namespace fowa

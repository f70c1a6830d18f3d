#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fowa/analyze.hpp"
#include "fowa/expr.hpp"
#include "fowa/structure.hpp"

namespace fowa {

// Parser for the canonical prefix syntax plus sugar. The desugaring table:
//
//   (and a b)            ~((~a) | (~b))
//   (forall y f)         ~exists y ~f
//   (top) / (bot)        ~exists z ~z=z   /   exists z ~z=z
//   (distgt r x y)       (not (distle r x y))
//   (# (y1..yk) f)       (agg (* (one y1) .. (one yk)) f)      [needs `one`]
//   (existsmod i m y f)  (sumEq i:Z/m onem (y) f)              [needs all-ones Z/m weight]
//   (geq t u), (gt t u), (eq t u) on terms, (geq1 t), ...      (pred <name> t ...)
//
// Canonical output of the printer is always the desugared form.

namespace detail {

struct Token {
  std::string text;
  int line = 1, col = 1;
  bool lparen = false, rparen = false;
};

inline std::vector<Token> tokenize(const std::string& input) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto step = [&](char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  };
  while (i < input.size()) {
    char c = input[i];
    if (c == ';') {  // comment to end of line
      while (i < input.size() && input[i] != '\n') step(input[i++]);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      step(c);
      ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (c == '(') {
      t.lparen = true;
      t.text = "(";
      step(c);
      ++i;
    } else if (c == ')') {
      t.rparen = true;
      t.text = ")";
      step(c);
      ++i;
    } else {
      size_t start = i;
      // '[' opens a vector literal: consume through the matching ']' and any
      // carrier annotation; vectors are single no-space tokens.
      if (c == '[') {
        while (i < input.size() && input[i] != ']') step(input[i++]);
        if (i < input.size()) step(input[i++]);  // ']'
      }
      while (i < input.size() && input[i] != ' ' && input[i] != '\t' && input[i] != '\r' &&
             input[i] != '\n' && input[i] != '(' && input[i] != ')' && input[i] != ';')
        step(input[i++]);
      t.text = input.substr(start, i - start);
    }
    out.push_back(std::move(t));
  }
  return out;
}

struct Sexp {
  bool atom = false;
  std::string text;  // atom text
  int line = 1, col = 1;
  std::vector<Sexp> kids;
};

inline Sexp parse_sexp(const std::vector<Token>& toks, size_t& pos) {
  require(pos < toks.size(), errc::syntax_error, "unexpected end of input");
  const Token& t = toks[pos];
  if (t.lparen) {
    Sexp s;
    s.line = t.line;
    s.col = t.col;
    ++pos;
    while (pos < toks.size() && !toks[pos].rparen) s.kids.push_back(parse_sexp(toks, pos));
    require(pos < toks.size(), errc::syntax_error,
            "missing ')' for '(' at line " + std::to_string(t.line));
    ++pos;
    return s;
  }
  require(!t.rparen, errc::syntax_error, "unexpected ')' at line " + std::to_string(t.line));
  Sexp s;
  s.atom = true;
  s.text = t.text;
  s.line = t.line;
  s.col = t.col;
  ++pos;
  return s;
}

[[noreturn]] inline void syntax_fail(const Sexp& at, const std::string& msg) {
  fail(errc::syntax_error,
       msg + " (line " + std::to_string(at.line) + ", col " + std::to_string(at.col) + ")");
}

inline bool looks_like_value(const std::string& t) {
  if (t.empty()) return false;
  char c = t[0];
  return (c >= '0' && c <= '9') || c == '-' || c == '[';
}

inline bool valid_variable(const std::string& t) {
  if (t.empty() || looks_like_value(t)) return false;
  char c = t[0];
  bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (!alpha) return false;  // '_' prefix is reserved for generated names
  for (char ch : t)
    if (!((ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
          ch == '_' || ch == '\''))
      return false;
  return true;
}

class ExprParser {
public:
  ExprParser(const Signature& sig, bool allow_reserved_vars)
      : sig_(sig), allow_reserved_(allow_reserved_vars) {}

  ExprPtr expression(const Sexp& s) {
    if (s.atom) {
      require(looks_like_value(s.text), errc::syntax_error, "bare atom " + s.text);
      return mk::cst(value_atom(s, std::nullopt));
    }
    if (s.kids.empty()) syntax_fail(s, "empty expression");
    const Sexp& head = s.kids[0];
    if (!head.atom) syntax_fail(head, "expected an operator");
    const std::string& h = head.text;

    if (h == "eq") {
      // (eq x y) on variables; (eq t u) on terms desugars to the predicate.
      need(s, 3);
      if (s.kids[1].atom && valid_var(s.kids[1]) && s.kids[2].atom && valid_var(s.kids[2]))
        return mk::var_eq(var(s.kids[1]), var(s.kids[2]));
      return pred_sugar("eq", s);
    }
    if (h == "rel") {
      require(s.kids.size() >= 2 && s.kids[1].atom, errc::syntax_error, "malformed rel");
      auto ri = sig_.relation_index(s.kids[1].text);
      if (!ri) syntax_fail(s.kids[1], "unknown relation " + s.kids[1].text);
      std::vector<std::string> vars;
      for (size_t i = 2; i < s.kids.size(); ++i) vars.push_back(var(s.kids[i]));
      require(static_cast<int>(vars.size()) == sig_.relation(*ri).arity, errc::type_error,
              "relation " + s.kids[1].text + " arity");
      return mk::rel(s.kids[1].text, std::move(vars));
    }
    if (h == "weq") {
      require(s.kids.size() >= 3 && s.kids[2].atom, errc::syntax_error, "malformed weq");
      const WeightDecl& d = weight(s.kids[2]);
      Value v = value_atom(s.kids[1], d.carrier);
      std::vector<std::string> vars;
      for (size_t i = 3; i < s.kids.size(); ++i) vars.push_back(var(s.kids[i]));
      require(static_cast<int>(vars.size()) == d.arity, errc::type_error,
              "weight " + d.name + " arity");
      return mk::weight_eq(std::move(v), d.name, std::move(vars), d.carrier);
    }
    if (h == "not") {
      need(s, 2);
      return mk::not_(formula(s.kids[1]));
    }
    if (h == "or" || h == "and") {
      require(s.kids.size() >= 3, errc::syntax_error, h + " needs at least two operands");
      std::vector<ExprPtr> fs;
      for (size_t i = 1; i < s.kids.size(); ++i) fs.push_back(formula(s.kids[i]));
      return h == "or" ? mk::or_all(fs) : mk::and_all(fs);
    }
    if (h == "exists" || h == "forall") {
      need(s, 3);
      std::string y = var(s.kids[1]);
      ExprPtr body = formula(s.kids[2]);
      return h == "exists" ? mk::exists(y, body) : mk::forall(y, body);
    }
    if (h == "top") return mk::top();
    if (h == "bot") return mk::bot();
    if (h == "sumEq" || h == "sumeq") {
      need(s, 5);
      require(s.kids[2].atom, errc::syntax_error, "sumEq weight name");
      const WeightDecl& d = weight(s.kids[2]);
      Value v = value_atom(s.kids[1], d.carrier);
      std::vector<std::string> ybar = var_list(s.kids[3]);
      require(static_cast<int>(ybar.size()) == d.arity, errc::type_error,
              "weight " + d.name + " arity in sumEq");
      return mk::sum_eq(std::move(v), d.name, std::move(ybar), d.carrier, formula(s.kids[4]));
    }
    if (h == "pred") {
      require(s.kids.size() >= 3 && s.kids[1].atom, errc::syntax_error, "malformed pred");
      return pred_app(s.kids[1].text, s, 2);
    }
    if (h == "distle" || h == "distgt") {
      need(s, 4);
      int r = int_atom(s.kids[1]);
      ExprPtr d = mk::dist_leq(var(s.kids[2]), var(s.kids[3]), r);
      return h == "distle" ? d : mk::not_(d);
    }
    if (h == "existsmod") {
      need(s, 5);
      int m = int_atom(s.kids[2]);
      require(m >= 2, errc::type_error, "modulus must be >= 2");
      const WeightDecl* ones = all_ones_weight(Carrier::residues(static_cast<unsigned>(m)));
      if (!ones)
        fail(errc::missing_one_weight,
             "existsmod needs an all-ones weight of type Z/" + std::to_string(m));
      Value v = value_atom(s.kids[1], ones->carrier);
      return mk::sum_eq(std::move(v), ones->name, {var(s.kids[3])}, ones->carrier,
                        formula(s.kids[4]));
    }
    if (h == "agg") {
      need(s, 3);
      return mk::agg(product(s.kids[1]), formula(s.kids[2]));
    }
    if (h == "#") {
      need(s, 3);
      const WeightDecl* one = all_ones_weight(Carrier::integers());
      if (!one) fail(errc::missing_one_weight, "# needs the all-ones weight `one` of type Z");
      std::vector<WFactor> fs;
      for (const std::string& y : var_list(s.kids[1]))
        fs.push_back(WFactor{std::nullopt, one->name, {y}});
      return mk::agg(make_wproduct(Carrier::integers(), std::move(fs)), formula(s.kids[2]));
    }
    if (h == "+" || h == "-" || h == "*") {
      need(s, 3);
      return mk::arith(h[0], term(s.kids[1]), term(s.kids[2]));
    }
    // Weight application term: head is a declared weight symbol.
    if (sig_.weight_index(h)) {
      const WeightDecl& d = weight(head);
      std::vector<std::string> vars;
      for (size_t i = 1; i < s.kids.size(); ++i) vars.push_back(var(s.kids[i]));
      require(static_cast<int>(vars.size()) == d.arity, errc::type_error,
              "weight " + d.name + " arity");
      return mk::weight_term(d.name, std::move(vars), d.carrier);
    }
    // Bare predicate family head: (geq t u), (geq1 t), ...
    return pred_sugar(h, s);
  }

  ExprPtr formula(const Sexp& s) {
    ExprPtr e = expression(s);
    if (!e->is_formula()) syntax_fail(s, "expected a formula");
    return e;
  }

  ExprPtr term(const Sexp& s) {
    ExprPtr e = expression(s);
    if (!e->is_term()) syntax_fail(s, "expected a term");
    return e;
  }

private:
  void need(const Sexp& s, size_t n) {
    if (s.kids.size() != n) syntax_fail(s, "wrong number of operands for " + s.kids[0].text);
  }

  bool valid_var(const Sexp& s) const {
    return valid_variable(s.text) || (allow_reserved_ && s.text.size() > 1 && s.text[0] == '_');
  }

  std::string var(const Sexp& s) {
    if (!s.atom || !valid_var(s)) syntax_fail(s, "expected a variable, got " + s.text);
    return s.text;
  }

  std::vector<std::string> var_list(const Sexp& s) {
    if (s.atom) syntax_fail(s, "expected a variable list");
    std::vector<std::string> out;
    for (const Sexp& k : s.kids) out.push_back(var(k));
    return out;
  }

  int int_atom(const Sexp& s) {
    if (!s.atom) syntax_fail(s, "expected a number");
    try {
      return std::stoi(s.text);
    } catch (...) {
      syntax_fail(s, "expected a number, got " + s.text);
    }
  }

  const WeightDecl& weight(const Sexp& s) {
    auto wi = sig_.weight_index(s.text);
    if (!wi) syntax_fail(s, "unknown weight " + s.text);
    return sig_.weight(*wi);
  }

  const WeightDecl* all_ones_weight(const Carrier& c) const {
    for (const WeightDecl& d : sig_.weights())
      if (d.all_ones && d.carrier == c) return &d;
    return nullptr;
  }

  // Value literal `payload:Carrier`, or bare payload when the context fixes
  // the carrier.
  Value value_atom(const Sexp& s, std::optional<Carrier> expected) {
    if (!s.atom) syntax_fail(s, "expected a value");
    std::string text = s.text;
    size_t colon = text.rfind(':');
    // ':' inside a vector body can't happen (rationals only), so rfind is safe.
    std::optional<Carrier> annot;
    if (colon != std::string::npos) {
      annot = Carrier::parse(text.substr(colon + 1));
      if (!annot) syntax_fail(s, "bad carrier annotation in " + text);
      text = text.substr(0, colon);
    }
    if (!annot && !expected) syntax_fail(s, "constant " + s.text + " needs a carrier annotation");
    Carrier c = annot ? *annot : *expected;
    if (expected && annot)
      require(*annot == *expected, errc::type_error, "constant carrier mismatch in " + s.text);
    auto v = Value::parse(text, c);
    if (!v) syntax_fail(s, "bad " + c.name() + " literal " + text);
    return *v;
  }

  WProduct product(const Sexp& s) {
    if (s.atom || s.kids.empty() || !s.kids[0].atom || s.kids[0].text != "*")
      syntax_fail(s, "expected a W-product (* factor ...)");
    std::vector<WFactor> factors;
    std::optional<Carrier> type;
    for (size_t i = 1; i < s.kids.size(); ++i) {
      const Sexp& f = s.kids[i];
      WFactor factor;
      if (f.atom) {
        Value v = value_atom(f, type);
        if (!type) type = v.carrier();
        factor.constant = std::move(v);
      } else {
        require(!f.kids.empty() && f.kids[0].atom, errc::syntax_error, "malformed factor");
        const WeightDecl& d = weight(f.kids[0]);
        if (type)
          require(d.carrier == *type, errc::carrier_mismatch, "mixed carriers in W-product");
        type = d.carrier;
        factor.weight = d.name;
        for (size_t j = 1; j < f.kids.size(); ++j) factor.vars.push_back(var(f.kids[j]));
        require(static_cast<int>(factor.vars.size()) == d.arity, errc::type_error,
                "weight " + d.name + " arity in product");
      }
      factors.push_back(std::move(factor));
    }
    if (!type) syntax_fail(s, "W-product needs at least one factor");
    return make_wproduct(*type, std::move(factors));
  }

  ExprPtr pred_app(const std::string& name, const Sexp& s, size_t first_arg) {
    std::vector<ExprPtr> terms;
    std::vector<Carrier> types;
    for (size_t i = first_arg; i < s.kids.size(); ++i) {
      terms.push_back(term(s.kids[i]));
      types.push_back(*terms.back()->type);
    }
    auto def = resolve_predicate(name, types);
    if (!def) syntax_fail(s, "no predicate " + name + " at these argument carriers");
    return mk::pred(std::make_shared<const PredicateDef>(*def), std::move(terms));
  }

  ExprPtr pred_sugar(const std::string& name, const Sexp& s) { return pred_app(name, s, 1); }

  const Signature& sig_;
  bool allow_reserved_;
};

}  // namespace detail

// Parses one expression (formula or term) against a signature. Reserved
// "_"-prefixed variables are only admitted when reparsing generated text.
inline ExprPtr parse_expression(const std::string& text, const Signature& sig,
                                bool allow_reserved_vars = true) {
  std::vector<detail::Token> toks = detail::tokenize(text);
  size_t pos = 0;
  detail::Sexp s = detail::parse_sexp(toks, pos);
  require(pos == toks.size(), errc::syntax_error, "trailing input after expression");
  detail::ExprParser p(sig, allow_reserved_vars);
  return p.expression(s);
}

inline ExprPtr parse_formula(const std::string& text, const Signature& sig,
                             bool allow_reserved_vars = true) {
  ExprPtr e = parse_expression(text, sig, allow_reserved_vars);
  require(e->is_formula(), errc::syntax_error, "expected a formula");
  return e;
}

}  // namespace fowa

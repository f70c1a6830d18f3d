#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fowa/error.hpp"

namespace fowa {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Carriers: the rings / abelian groups values live in. Four kinds are
// shipped: Z, Q (rings), Z/m and Q^d (groups). All arithmetic is exact;
// semantics of the logic compares values for equality, so floating point is
// out of the question.
// ---------------------------------------------------------------------------

enum class CarrierKind { IntegerRing, RationalField, ResidueGroup, RationalVectorGroup };

class Carrier {
public:
  static Carrier integers() { return Carrier(CarrierKind::IntegerRing, 0); }
  static Carrier rationals() { return Carrier(CarrierKind::RationalField, 0); }
  static Carrier residues(unsigned m) {
    require(m >= 2, errc::out_of_range, "residue modulus must be >= 2");
    return Carrier(CarrierKind::ResidueGroup, m);
  }
  static Carrier vectors(unsigned dim) {
    require(dim >= 1, errc::out_of_range, "vector dimension must be >= 1");
    return Carrier(CarrierKind::RationalVectorGroup, dim);
  }

  CarrierKind kind() const { return kind_; }
  unsigned modulus() const { return param_; }
  unsigned dimension() const { return param_; }

  bool is_ring() const {
    return kind_ == CarrierKind::IntegerRing || kind_ == CarrierKind::RationalField;
  }
  // Rule (5) of the formula syntax is only admissible over finite carriers.
  bool is_finite() const { return kind_ == CarrierKind::ResidueGroup; }

  std::string name() const {
    switch (kind_) {
      case CarrierKind::IntegerRing: return "Z";
      case CarrierKind::RationalField: return "Q";
      case CarrierKind::ResidueGroup: return "Z/" + std::to_string(param_);
      case CarrierKind::RationalVectorGroup: return "Q^" + std::to_string(param_);
    }
    return "?";
  }

  // Carrier literals: Z, Q, Z/5, Q^3.
  static std::optional<Carrier> parse(const std::string& text) {
    if (text == "Z") return integers();
    if (text == "Q") return rationals();
    auto tail_number = [](const std::string& s, size_t from) -> std::optional<unsigned> {
      if (from >= s.size()) return std::nullopt;
      unsigned v = 0;
      for (size_t i = from; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + static_cast<unsigned>(s[i] - '0');
        if (v > 1000000) return std::nullopt;
      }
      return v;
    };
    if (text.rfind("Z/", 0) == 0) {
      if (auto m = tail_number(text, 2); m && *m >= 2) return residues(*m);
      return std::nullopt;
    }
    if (text.rfind("Q^", 0) == 0) {
      if (auto d = tail_number(text, 2); d && *d >= 1) return vectors(*d);
      return std::nullopt;
    }
    return std::nullopt;
  }

  friend bool operator==(const Carrier& a, const Carrier& b) {
    return a.kind_ == b.kind_ && a.param_ == b.param_;
  }
  friend bool operator!=(const Carrier& a, const Carrier& b) { return !(a == b); }
  friend bool operator<(const Carrier& a, const Carrier& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    return a.param_ < b.param_;
  }

private:
  Carrier(CarrierKind k, unsigned p) : kind_(k), param_(p) {}
  CarrierKind kind_;
  unsigned param_;
};

// ---------------------------------------------------------------------------
// Values. Payloads are kept canonical so that equality is structural:
// rationals in lowest terms (cpp_rational maintains that), residues reduced
// into [0, m), vectors with exactly `dim` components.
// ---------------------------------------------------------------------------

enum class ArithOp { Add, Sub, Mul };

class Value {
public:
  static Value integer(BigInt v) { return Value(Carrier::integers(), std::move(v)); }
  static Value rational(BigRat v) { return Value(Carrier::rationals(), std::move(v)); }
  static Value residue(BigInt v, unsigned m) {
    Carrier c = Carrier::residues(m);
    BigInt r = v % m;
    if (r < 0) r += m;
    return Value(c, std::move(r));
  }
  static Value vector(std::vector<BigRat> comps) {
    require(!comps.empty(), errc::out_of_range, "vector value needs components");
    Carrier c = Carrier::vectors(static_cast<unsigned>(comps.size()));
    return Value(c, std::move(comps));
  }

  static Value zero(const Carrier& c) {
    switch (c.kind()) {
      case CarrierKind::IntegerRing: return integer(0);
      case CarrierKind::RationalField: return rational(BigRat(0));
      case CarrierKind::ResidueGroup: return residue(0, c.modulus());
      case CarrierKind::RationalVectorGroup:
        return vector(std::vector<BigRat>(c.dimension(), BigRat(0)));
    }
    fail(errc::out_of_range, "bad carrier");
  }

  // Multiplicative identity; only rings have one. Z/m's literal 1 is still a
  // legal group element, which `literal_one` exposes for all-ones weights.
  static Value one(const Carrier& c) {
    require(c.is_ring(), errc::mul_on_group, "1_S requested on a non-ring carrier " + c.name());
    return c.kind() == CarrierKind::IntegerRing ? integer(1) : rational(BigRat(1));
  }

  static std::optional<Value> literal_one(const Carrier& c) {
    switch (c.kind()) {
      case CarrierKind::IntegerRing: return integer(1);
      case CarrierKind::RationalField: return rational(BigRat(1));
      case CarrierKind::ResidueGroup: return residue(1, c.modulus());
      case CarrierKind::RationalVectorGroup: return std::nullopt;
    }
    return std::nullopt;
  }

  const Carrier& carrier() const { return carrier_; }

  bool is_zero() const { return *this == zero(carrier_); }

  const BigInt& as_int() const { return std::get<BigInt>(payload_); }
  const BigRat& as_rat() const { return std::get<BigRat>(payload_); }
  const std::vector<BigRat>& as_vec() const { return std::get<std::vector<BigRat>>(payload_); }

  friend bool operator==(const Value& a, const Value& b) {
    return a.carrier_ == b.carrier_ && a.payload_ == b.payload_;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b) {
    if (!(a.carrier_ == b.carrier_)) return a.carrier_ < b.carrier_;
    return a.payload_ < b.payload_;
  }

  // Canonical text without the carrier annotation: 7, -3/4, [1/2,0,-1].
  std::string text() const {
    std::ostringstream out;
    switch (carrier_.kind()) {
      case CarrierKind::IntegerRing:
      case CarrierKind::ResidueGroup:
        out << as_int();
        break;
      case CarrierKind::RationalField:
        print_rat(out, as_rat());
        break;
      case CarrierKind::RationalVectorGroup: {
        out << '[';
        const auto& v = as_vec();
        for (size_t i = 0; i < v.size(); ++i) {
          if (i) out << ',';
          print_rat(out, v[i]);
        }
        out << ']';
        break;
      }
    }
    return out.str();
  }

  std::string annotated() const { return text() + ":" + carrier_.name(); }

  // Parses the canonical payload text for a known carrier. Structure files
  // additionally allow "3 mod 5" and "(a, b, c)" spellings; those are
  // normalized by the io layer before reaching this point.
  static std::optional<Value> parse(const std::string& text, const Carrier& c) {
    switch (c.kind()) {
      case CarrierKind::IntegerRing: {
        auto v = parse_int(text);
        if (!v) return std::nullopt;
        return integer(*v);
      }
      case CarrierKind::ResidueGroup: {
        auto v = parse_int(text);
        if (!v) return std::nullopt;
        return residue(*v, c.modulus());
      }
      case CarrierKind::RationalField: {
        auto v = parse_rat(text);
        if (!v) return std::nullopt;
        return rational(*v);
      }
      case CarrierKind::RationalVectorGroup: {
        if (text.size() < 2 || text.front() != '[' || text.back() != ']') return std::nullopt;
        std::vector<BigRat> comps;
        std::string body = text.substr(1, text.size() - 2);
        size_t pos = 0;
        while (pos <= body.size()) {
          size_t comma = body.find(',', pos);
          std::string piece = body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                          : comma - pos);
          auto v = parse_rat(piece);
          if (!v) return std::nullopt;
          comps.push_back(*v);
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
        if (comps.size() != c.dimension()) return std::nullopt;
        return vector(std::move(comps));
      }
    }
    return std::nullopt;
  }

private:
  Value(Carrier c, BigInt v) : carrier_(c), payload_(std::move(v)) {}
  Value(Carrier c, BigRat v) : carrier_(c), payload_(std::move(v)) {}
  Value(Carrier c, std::vector<BigRat> v) : carrier_(c), payload_(std::move(v)) {}

  static void print_rat(std::ostream& out, const BigRat& q) {
    out << numerator(q);
    if (denominator(q) != 1) out << '/' << denominator(q);
  }

  static std::optional<BigInt> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    size_t i = s[0] == '-' ? 1 : 0;
    if (i == s.size()) return std::nullopt;
    for (size_t j = i; j < s.size(); ++j)
      if (s[j] < '0' || s[j] > '9') return std::nullopt;
    return BigInt(s);
  }

  static std::optional<BigRat> parse_rat(const std::string& s) {
    size_t slash = s.find('/');
    if (slash == std::string::npos) {
      auto n = parse_int(s);
      if (!n) return std::nullopt;
      return BigRat(*n);
    }
    auto n = parse_int(s.substr(0, slash));
    auto d = parse_int(s.substr(slash + 1));
    if (!n || !d || *d == 0) return std::nullopt;
    return BigRat(*n, *d);
  }

  Carrier carrier_;
  std::variant<BigInt, BigRat, std::vector<BigRat>> payload_;
};

// Exact group/ring operation; inputs must share a carrier and `Mul` needs a
// ring. Results are canonical by construction.
inline Value combine(const Value& a, const Value& b, ArithOp op) {
  require(a.carrier() == b.carrier(), errc::carrier_mismatch,
          "combine over " + a.carrier().name() + " vs " + b.carrier().name());
  const Carrier& c = a.carrier();
  if (op == ArithOp::Mul)
    require(c.is_ring(), errc::mul_on_group, "multiplication on " + c.name());
  switch (c.kind()) {
    case CarrierKind::IntegerRing: {
      const BigInt &x = a.as_int(), &y = b.as_int();
      BigInt r;
      if (op == ArithOp::Add) r = x + y;
      else if (op == ArithOp::Sub) r = x - y;
      else r = x * y;
      return Value::integer(std::move(r));
    }
    case CarrierKind::RationalField: {
      const BigRat &x = a.as_rat(), &y = b.as_rat();
      BigRat r;
      if (op == ArithOp::Add) r = x + y;
      else if (op == ArithOp::Sub) r = x - y;
      else r = x * y;
      return Value::rational(std::move(r));
    }
    case CarrierKind::ResidueGroup: {
      const BigInt &x = a.as_int(), &y = b.as_int();
      BigInt r;
      if (op == ArithOp::Add) r = x + y;
      else r = x - y;
      return Value::residue(std::move(r), c.modulus());
    }
    case CarrierKind::RationalVectorGroup: {
      const auto &x = a.as_vec(), &y = b.as_vec();
      std::vector<BigRat> r(x.size());
      for (size_t i = 0; i < x.size(); ++i) {
        if (op == ArithOp::Add) r[i] = x[i] + y[i];
        else r[i] = x[i] - y[i];
      }
      return Value::vector(std::move(r));
    }
  }
  fail(errc::out_of_range, "bad carrier");
}

inline Value neg(const Value& a) { return combine(Value::zero(a.carrier()), a, ArithOp::Sub); }

// Fold of the carrier's addition; the empty multiset yields 0_S.
template <typename Iter>
Value aggregate(Iter begin, Iter end, const Carrier& c) {
  Value acc = Value::zero(c);
  for (Iter it = begin; it != end; ++it) {
    require(it->carrier() == c, errc::carrier_mismatch, "aggregate over mixed carriers");
    acc = combine(acc, *it, ArithOp::Add);
  }
  return acc;
}

inline Value aggregate(const std::vector<Value>& vs, const Carrier& c) {
  return aggregate(vs.begin(), vs.end(), c);
}

// Canonical Z-module action n * x (iterated addition); defined on every
// abelian group, which is what lets counting terms scale group values.
inline Value zscale(const BigInt& n, const Value& x) {
  const Carrier& c = x.carrier();
  switch (c.kind()) {
    case CarrierKind::IntegerRing: return Value::integer(n * x.as_int());
    case CarrierKind::RationalField: return Value::rational(BigRat(n) * x.as_rat());
    case CarrierKind::ResidueGroup: return Value::residue(n * x.as_int(), c.modulus());
    case CarrierKind::RationalVectorGroup: {
      std::vector<BigRat> r(x.as_vec());
      for (auto& q : r) q *= BigRat(n);
      return Value::vector(std::move(r));
    }
  }
  fail(errc::out_of_range, "bad carrier");
}

// ---------------------------------------------------------------------------
// Predicate collection. Predicates are total decision procedures on typed
// value tuples. A small fixed library realizes the computable oracle the
// semantics assumes; families are instantiated at concrete carriers on
// demand (e.g. eq over any carrier, geq over Z or Q).
// ---------------------------------------------------------------------------

struct PredicateDef {
  std::string name;  // family name as written in formulas
  std::vector<Carrier> arg_types;
  std::function<bool(const std::vector<Value>&)> test;

  std::string display() const {
    std::string s = name + "(";
    for (size_t i = 0; i < arg_types.size(); ++i) {
      if (i) s += ",";
      s += arg_types[i].name();
    }
    return s + ")";
  }
};

using PredicatePtr = std::shared_ptr<const PredicateDef>;

inline bool eval_predicate(const PredicateDef& p, const std::vector<Value>& args) {
  require(args.size() == p.arg_types.size(), errc::arity_mismatch,
          "predicate " + p.name + " expects " + std::to_string(p.arg_types.size()) + " args");
  for (size_t i = 0; i < args.size(); ++i)
    require(args[i].carrier() == p.arg_types[i], errc::carrier_mismatch,
            "predicate " + p.name + " arg " + std::to_string(i + 1));
  return p.test(args);
}

inline constexpr int kPredicateLibraryVersion = 1;

// Instantiates a built-in predicate family at the given argument carriers;
// nullopt if the family does not exist at those types.
inline std::optional<PredicateDef> resolve_predicate(const std::string& name,
                                                     const std::vector<Carrier>& types) {
  auto same2 = [&]() { return types.size() == 2 && types[0] == types[1]; };
  auto cmp_rat = [](const Value& v) {
    return v.carrier().kind() == CarrierKind::IntegerRing ? BigRat(v.as_int()) : v.as_rat();
  };
  if (name == "eq" && same2()) {
    return PredicateDef{name, types, [](const std::vector<Value>& a) { return a[0] == a[1]; }};
  }
  if ((name == "geq" || name == "gt") && same2() && types[0].is_ring()) {
    bool strict = name == "gt";
    return PredicateDef{name, types, [strict, cmp_rat](const std::vector<Value>& a) {
                          BigRat x = cmp_rat(a[0]), y = cmp_rat(a[1]);
                          return strict ? x > y : x >= y;
                        }};
  }
  if (name == "geq1" && types.size() == 1 && types[0] == Carrier::integers()) {
    return PredicateDef{name, types,
                        [](const std::vector<Value>& a) { return a[0].as_int() >= 1; }};
  }
  // Euclidean distance threshold on Q^d, compared via squares to stay exact:
  // ped(u, v, q)  <=>  d(u,v) <= q.
  if (name == "ped" && types.size() == 3 &&
      types[0].kind() == CarrierKind::RationalVectorGroup && types[1] == types[0] &&
      types[2] == Carrier::rationals()) {
    return PredicateDef{name, types, [](const std::vector<Value>& a) {
                          const auto &u = a[0].as_vec(), &v = a[1].as_vec();
                          const BigRat& q = a[2].as_rat();
                          if (q < 0) return false;
                          BigRat d2(0);
                          for (size_t i = 0; i < u.size(); ++i)
                            d2 += (u[i] - v[i]) * (u[i] - v[i]);
                          return d2 <= q * q;
                        }};
  }
  // pdistlt(v, l, w, delta)  <=>  l > 0 and d(v, w/l) < delta, exactly:
  // sum (l*v_i - w_i)^2 < delta^2 * l^2.
  if (name == "pdistlt" && types.size() == 4 &&
      types[0].kind() == CarrierKind::RationalVectorGroup && types[2] == types[0] &&
      types[1] == Carrier::integers() && types[3] == Carrier::rationals()) {
    return PredicateDef{name, types, [](const std::vector<Value>& a) {
                          const auto &v = a[0].as_vec(), &w = a[2].as_vec();
                          const BigInt& l = a[1].as_int();
                          const BigRat& delta = a[3].as_rat();
                          if (l <= 0 || delta <= 0) return false;
                          BigRat lhs(0);
                          for (size_t i = 0; i < v.size(); ++i) {
                            BigRat t = BigRat(l) * v[i] - w[i];
                            lhs += t * t;
                          }
                          return lhs < delta * delta * BigRat(l) * BigRat(l);
                        }};
  }
  return std::nullopt;
}

}  // namespace fowa

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

RewriteContext make_ctx() {
  RewriteContext ctx;
  ctx.sig = &sig();
  return ctx;
}

// Semantic equivalence of the normal form against the input on every
// assignment of every pool structure.
void check_equivalent(const ExprPtr& phi, const GaifmanNF& g,
                      const std::vector<WeightedStructure>& pool) {
  ExprPtr gamma = g.to_expr();
  for (const WeightedStructure& s : pool) {
    size_t k = phi->free.size();
    Tuple t(k, 0);
    while (true) {
      naive::Assignment asg;
      for (size_t i = 0; i < k; ++i) asg[phi->free[i]] = t[i];
      REQUIRE(naive::holds(s, asg, phi) == naive::holds(s, asg, gamma));
      if (k == 0) break;
      size_t pos = k;
      while (pos > 0) {
        if (++t[pos - 1] < s.size()) break;
        t[pos - 1] = 0;
        --pos;
      }
      if (pos == 0) break;
    }
  }
}

}  // namespace

TEST_CASE("atoms are already local", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  GaifmanNF g = gaifman_nf(parse_formula("(rel R x)", sig()), ctx);
  REQUIRE(g.leaves.size() == 1);
  CHECK(g.leaves[0].kind == GnfLeafKind::Local);
  CHECK(g.leaves[0].radius == 0);
  validate_gnf(g, {"x"});
}

TEST_CASE("a bare existential sentence becomes one scattered witness", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  GaifmanNF g = gaifman_nf(parse_formula("(exists x (rel R x))", sig()), ctx);
  validate_gnf(g, {});
  REQUIRE(g.leaves.size() == 1);
  CHECK(g.leaves[0].kind == GnfLeafKind::BasicLocal);
  CHECK(g.leaves[0].ell == 1);
  CHECK(g.leaves[0].radius == 0);
  auto pool = fixtures::structure_pool(sig(), 3, 6, 7);
  check_equivalent(parse_formula("(exists x (rel R x))", sig()), g, pool);
}

TEST_CASE("a local aggregation equality passes through as a sentence leaf", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  ExprPtr phi = parse_formula("(sumEq 0:Z/2 one2 (y) (rel R y))", sig());
  GaifmanNF g = gaifman_nf(phi, ctx);
  validate_gnf(g, {});
  bool has_las = false;
  for (const GnfLeaf& l : g.leaves)
    if (l.kind == GnfLeafKind::LocalAgg) has_las = true;
  CHECK(has_las);
  auto pool = fixtures::structure_pool(sig(), 3, 6, 8);
  check_equivalent(phi, g, pool);
}

TEST_CASE("aggregation-free fragment is required", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  CHECK_THROWS_WITH(
      gaifman_nf(parse_formula("(geq (agg (* (one y)) (rel R y)) 1:Z)", sig()), ctx),
      Catch::Matchers::StartsWith("NotInFragment"));
  Signature zsig = fixtures::test_signature();
  zsig.add_weight("zw", 1, Carrier::integers());
  RewriteContext zctx;
  zctx.sig = &zsig;
  CHECK_THROWS_WITH(gaifman_nf(parse_formula("(sumEq 3:Z zw (y) (rel R y))", zsig), zctx),
                    Catch::Matchers::StartsWith("NotInFragment"));
}

TEST_CASE("free variables survive the transformation", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  ExprPtr phi = parse_formula("(exists y (and (rel E x y) (rel B y)))", sig());
  GaifmanNF g = gaifman_nf(phi, ctx);
  validate_gnf(g, phi->free);
  ExprPtr gamma = g.to_expr();
  for (const std::string& v : gamma->free)
    CHECK(std::find(phi->free.begin(), phi->free.end(), v) != phi->free.end());
}

TEST_CASE("normal form battery: shapes and semantics", "[gaifman]") {
  auto pool = fixtures::structure_pool(sig(), 4, 5, 17);
  fixtures::FormulaGen gen({2, 0, false, 4}, 9090);
  RewriteContext ctx = make_ctx();
  int done = 0;
  for (int i = 0; done < 18 && i < 120; ++i) {
    std::vector<std::string> frees = (i % 3 == 0) ? std::vector<std::string>{}
                                                  : std::vector<std::string>{"x"};
    ExprPtr phi = gen.formula(frees);
    GaifmanNF g;
    try {
      g = gaifman_nf(phi, ctx);
    } catch (const Error& e) {
      if (e.code() == errc::blowup_exceeded) continue;
      throw;
    }
    validate_gnf(g, phi->free);
    check_equivalent(phi, g, pool);
    ++done;
  }
  CHECK(done >= 15);
}

TEST_CASE("existentials over two free variables decompose", "[gaifman]") {
  // exercises the far-witness scattering with k = 2
  RewriteContext ctx = make_ctx();
  ExprPtr phi = parse_formula("(exists z (and (rel B z) (not (rel E x z)) (not (rel E y z))))",
                              sig());
  GaifmanNF g = gaifman_nf(phi, ctx);
  validate_gnf(g, phi->free);
  auto pool = fixtures::structure_pool(sig(), 3, 5, 23);
  check_equivalent(phi, g, pool);
}

TEST_CASE("aggregation equality with a free variable decomposes", "[gaifman]") {
  RewriteContext ctx = make_ctx();
  // parity of the blue neighbours of x
  ExprPtr phi = parse_formula("(sumEq 1:Z/2 one2 (y) (and (rel E x y) (rel B y)))", sig());
  GaifmanNF g = gaifman_nf(phi, ctx);
  validate_gnf(g, phi->free);
  auto pool = fixtures::structure_pool(sig(), 4, 5, 29);
  check_equivalent(phi, g, pool);
  // leaf radii are reported
  CHECK(g.max_radius() >= 0);
}

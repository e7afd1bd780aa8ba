#include <random>

#include "doctest.h"
#include "s2ctl/experiments.hpp"
#include "s2ctl/saturation.hpp"

using namespace s2ctl;

namespace {

SpherePolynomial P(const char* text) { return ParsePolynomial(text); }

std::vector<int> Dimensions(const std::vector<PhaseSubspace>& chain) {
  std::vector<int> out;
  for (const auto& level : chain) out.push_back(level.dimension());
  return out;
}

}  // namespace

TEST_SUITE("saturation") {

TEST_CASE("H_1 of the dipoles is the span of x, y, z") {
  const PhaseSubspace h1 = InitialSpace(DipolePotentials());
  CHECK(h1.dimension() == 3);
  CHECK(Membership(P("2 x - 1/3 y + z"), h1).is_member());
  CHECK_FALSE(Membership(P("1"), h1).is_member());
  CHECK_THROWS_AS(InitialSpace({}), std::invalid_argument);
  CHECK_THROWS_AS(InitialSpace({SpherePolynomial()}), std::invalid_argument);
}

TEST_CASE("chain dimensions at cap n") {
  CHECK(Dimensions(Saturate(DipolePotentials(), 2, 2)) == std::vector<int>{3, 9});
  CHECK(Dimensions(Saturate(DipolePotentials(), 3, 3)) == std::vector<int>{3, 9, 16});
  CHECK(Dimensions(Saturate(DipolePotentials(), 4, 4)) == std::vector<int>{3, 9, 25, 25});
  CHECK(Dimensions(Saturate(DipolePotentials(), 5, 5)) ==
        std::vector<int>{3, 9, 25, 36, 36});
  CHECK(Dimensions(Saturate(DipolePotentials(), 6, 6)) ==
        std::vector<int>{3, 9, 25, 49, 49, 49});
}

TEST_CASE("echelon invariants") {
  for (const PhaseSubspace& level : Saturate(DipolePotentials(), 4, 4)) {
    const auto& basis = level.basis();
    for (std::size_t k = 0; k < basis.size(); ++k) {
      CHECK(basis[k].degree() <= level.degree_cap());
      CHECK(basis[k].coefficient(basis[k].leading_monomial()) == 1);
      if (k > 0)
        CHECK(GrlexDescending{}(basis[k - 1].leading_monomial(),
                                basis[k].leading_monomial()));
      // Reduced form: no other basis vector contains this pivot.
      for (std::size_t o = 0; o < basis.size(); ++o)
        if (o != k) CHECK(basis[o].coefficient(basis[k].leading_monomial()) == 0);
    }
  }
}

TEST_CASE("provenance recombines to the basis") {
  for (const PhaseSubspace& level : Saturate(DipolePotentials(), 3, 3)) {
    for (int k = 0; k < level.dimension(); ++k) {
      SpherePolynomial sum;
      for (const auto& [g, c] : level.provenance()[static_cast<std::size_t>(k)])
        sum += level.generators()[static_cast<std::size_t>(g)].value * c;
      CHECK(sum == level.basis()[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("chain is monotone") {
  const auto chain = Saturate(DipolePotentials(), 4, 4);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    for (const auto& b : chain[k].basis()) CHECK(Membership(b, chain[k + 1]).is_member());
}

TEST_CASE("polarization closure") {
  const auto chain = Saturate(DipolePotentials(), 3, 4);
  std::mt19937 rng(5);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    const auto& basis = chain[k].basis();
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    for (int t = 0; t < 10; ++t) {
      const SpherePolynomial g = GradInner(basis[pick(rng)], basis[pick(rng)]);
      if (g.degree() <= chain[k + 1].degree_cap())
        CHECK(Membership(g, chain[k + 1]).is_member());
    }
  }
}

TEST_CASE("certificates are sound") {
  const auto chain = Saturate(DipolePotentials(), 3, 3);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const SpherePolynomial p = RandomPolynomial(rng, 3);
    const MembershipResult r = Membership(p, chain.back());
    if (r.is_member()) {
      CHECK(r.residual.is_zero());
      CHECK(Recombine(*r.certificate, chain.back()) == p);
    } else {
      CHECK_FALSE(r.residual.is_zero());
    }
  }
}

TEST_CASE("monomials of degree n lie in H_n") {
  for (int n = 2; n <= 6; ++n) {
    const InclusionReport report = VerifyPnSubset(n);
    CHECK(report.all_certified);
    CHECK(report.monomials.size() == static_cast<std::size_t>((n + 1) * (n + 1)));
  }
  CHECK_THROWS_AS(VerifyPnSubset(1), std::invalid_argument);
}

TEST_CASE("degree cap truncation is reported") {
  const auto chain = Saturate(DipolePotentials(), 3, 3);
  CHECK_FALSE(chain[1].truncated());
  CHECK(chain[2].truncated());
  CHECK_FALSE(Membership(P("z^3"), chain[1]).is_member());
  CHECK(Membership(P("z^3"), chain[2]).is_member());
}

TEST_CASE("plans for the documented targets") {
  const auto chain = Saturate(DipolePotentials(), 2, 2);

  const SynthesisPlan leaf = BuildSynthesisPlan(P("x"), chain);
  CHECK(leaf.level == 1);
  CHECK(leaf.root.kind == PlanNode::Kind::kPulse);
  CHECK(leaf.root.u[0] == 1);
  CHECK(leaf.root.u[1] == 0);

  const SynthesisPlan g = BuildSynthesisPlan(P("1 - z^2"), chain);
  CHECK(g.level == 2);
  CHECK(PlanIsSound(g));
  CHECK(g.root.CountConjugates() == 1);

  const SynthesisPlan xz = BuildSynthesisPlan(P("4 x z"), chain);
  CHECK(PlanIsSound(xz));
  CHECK(xz.root.Accumulated() == P("4 x z"));
  CHECK(xz.root.depth() <= xz.level);
  int negative = 0;
  for (const PlanNode& child : xz.root.children)
    if (child.kind == PlanNode::Kind::kConjugate && child.sign < 0) ++negative;
  CHECK(negative >= 1);

  CHECK_THROWS_AS(BuildSynthesisPlan(P("x^3"), chain), std::invalid_argument);
}

TEST_CASE("plan soundness for random members of H_2") {
  const auto chain = Saturate(DipolePotentials(), 2, 2);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 15; ++t) {
    const SpherePolynomial p = RandomPolynomial(rng, 2);
    const SynthesisPlan plan = BuildSynthesisPlan(p, chain);
    CHECK(PlanIsSound(plan));
    CHECK(plan.root.Accumulated() == p);
  }
}

TEST_CASE("plan serialization round trip") {
  const auto chain = Saturate(DipolePotentials(), 2, 2);
  const SynthesisPlan plan = BuildSynthesisPlan(P("4 x z - y + 1/2"), chain);
  const std::string text = SerializePlan(plan);
  CHECK(text.find("nonphysical (adjoint)") != std::string::npos);
  const SynthesisPlan back = ParsePlan(text);
  CHECK(back.target == plan.target);
  CHECK(PlanIsSound(back));
  CHECK(SerializePlan(back) == text);
  CHECK_THROWS_AS(ParsePlan("{"), std::invalid_argument);
  CHECK_THROWS_AS(ParsePlan("{\"root\": 3}"), std::invalid_argument);
}

}  // TEST_SUITE

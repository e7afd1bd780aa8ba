#pragma once

// Saturation chain H_1 ⊂ H_2 ⊂ ... of phase directions on S^2.
//
// H_1 is the span of the interaction potentials. H_n is generated by H_{n-1}
// together with the squared-gradient terms g(grad b_i, grad b_j) of its basis
// elements; cross terms follow from the diagonal ones by polarization. Every
// level is kept in reduced row echelon form over the graded-lex order and
// filtered to polynomials of degree <= degree_cap.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2ctl/sphere_poly.hpp"

namespace s2ctl {

/// Where an accepted generator of a level came from.
struct Generator {
  enum class Kind {
    kInitial,    // W[index]
    kInherited,  // basis[index] of the previous level
    kPair,       // g(grad b_i, grad b_j) for previous-level basis b
  };
  Kind kind = Kind::kInitial;
  int index = -1;
  int i = -1;
  int j = -1;
  SpherePolynomial value;
};

class PhaseSubspace {
 public:
  PhaseSubspace() = default;

  int level() const { return level_; }
  int degree_cap() const { return degree_cap_; }
  int dimension() const { return static_cast<int>(basis_.size()); }
  /// Reduced echelon basis, leading monomials strictly decreasing in grlex.
  const std::vector<SpherePolynomial>& basis() const { return basis_; }
  /// Linearly independent generators that entered the echelon form.
  const std::vector<Generator>& generators() const { return generators_; }
  /// basis()[k] == sum over (g, c) in provenance()[k] of c * generators()[g].
  const std::vector<std::vector<std::pair<int, Rational>>>& provenance() const {
    return provenance_;
  }
  /// True when degree_cap was below the natural degree of the new terms, so
  /// the level is a strict truncation of the unfiltered span.
  bool truncated() const { return truncated_; }
  int max_degree() const;

 private:
  friend PhaseSubspace InitialSpace(const std::vector<SpherePolynomial>&);
  friend PhaseSubspace SaturateStep(const PhaseSubspace&, int);

  int level_ = 0;
  int degree_cap_ = 0;
  bool truncated_ = false;
  std::vector<SpherePolynomial> basis_;
  std::vector<Generator> generators_;
  std::vector<std::vector<std::pair<int, Rational>>> provenance_;
};

/// Echelonized span of W, level 1. Throws std::invalid_argument when W is
/// empty or spans only zero.
PhaseSubspace InitialSpace(const std::vector<SpherePolynomial>& potentials);

/// Span of space ∪ {g(b_i, b_j)}, filtered to degree <= degree_cap.
PhaseSubspace SaturateStep(const PhaseSubspace& space, int degree_cap);

/// H_1 .. H_n with a common degree cap. Throws std::invalid_argument if
/// levels < 1.
std::vector<PhaseSubspace> Saturate(const std::vector<SpherePolynomial>& potentials,
                                    int levels, int degree_cap);

/// The dipole potentials x, y, z.
std::vector<SpherePolynomial> DipolePotentials();

struct MembershipCertificate {
  /// (basis index, coefficient) pairs, basis index increasing.
  std::vector<std::pair<int, Rational>> coefficients;
};

struct MembershipResult {
  std::optional<MembershipCertificate> certificate;
  /// p minus its echelon projection; zero iff p is a member.
  SpherePolynomial residual;

  bool is_member() const { return certificate.has_value(); }
};

MembershipResult Membership(const SpherePolynomial& p, const PhaseSubspace& space);

/// sum c_k basis_k for the certificate's coefficients.
SpherePolynomial Recombine(const MembershipCertificate& certificate,
                           const PhaseSubspace& space);

struct MonomialCertificate {
  Monomial monomial;
  bool certified = false;
  MembershipCertificate certificate;
};

struct InclusionReport {
  int n = 0;
  std::vector<int> dimensions;  // dim H_1 .. H_n
  std::vector<MonomialCertificate> monomials;
  bool all_certified = false;
  double seconds = 0.0;
};

/// Certifies every canonical monomial of degree <= n in H_n built from the
/// dipole potentials with degree cap n. Throws std::invalid_argument if n < 2.
InclusionReport VerifyPnSubset(int n);

// ---------------------------------------------------------------------------
// Synthesis plans

/// Node of a synthesis plan. Executing a node for step size delta converges,
/// as delta -> 0, to multiplication by exp(-i * phase), where phase is
///   Pulse:     u1 x + u2 y + u3 z (the strong-pulse direction),
///   Conjugate: sign * weight * g(grad phi, grad phi),
///   Phase:     the sum of its children, applied in sequence.
/// A Conjugate child realizes phi itself and is only needed when the phase
/// kicks are synthesized instead of idealized.
struct PlanNode {
  enum class Kind { kPulse, kPhase, kConjugate };

  Kind kind = Kind::kPulse;
  SpherePolynomial phase;
  std::array<Rational, 3> u{};  // Pulse
  SpherePolynomial phi;         // Conjugate
  Rational weight;              // Conjugate, >= 0
  int sign = 1;                 // Conjugate
  std::vector<PlanNode> children;

  static PlanNode Pulse(const std::array<Rational, 3>& u);
  static PlanNode Conjugate(const SpherePolynomial& phi, const Rational& weight,
                            int sign, PlanNode child);
  static PlanNode Phase(const SpherePolynomial& phase,
                        std::vector<PlanNode> children);

  /// Pulse = 1, Conjugate = 1 + child depth, Phase = max over children.
  int depth() const;
  /// Re-accumulates the realized phase from the leaves up.
  SpherePolynomial Accumulated() const;
  int CountConjugates() const;
};

struct SynthesisPlan {
  SpherePolynomial target;
  int level = 0;  // smallest chain level containing target
  PlanNode root;
};

/// Compiles target into a plan through the chain's recorded provenance.
/// Throws std::invalid_argument when target is not in the top space, or when
/// a level-1 piece is not a linear form in x, y, z.
SynthesisPlan BuildSynthesisPlan(const SpherePolynomial& target,
                                 const std::vector<PhaseSubspace>& chain);

/// Static soundness: every node's phase matches its accumulated value, every
/// Conjugate child realizes its phi, and the root reproduces the target.
bool PlanIsSound(const SynthesisPlan& plan);

/// JSON document with nested nodes (kind, phase, phi, weight, sign, u).
std::string SerializePlan(const SynthesisPlan& plan);
/// Throws std::invalid_argument on malformed documents.
SynthesisPlan ParsePlan(std::string_view text);

}  // namespace s2ctl

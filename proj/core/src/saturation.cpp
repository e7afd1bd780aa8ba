#include "s2ctl/saturation.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace s2ctl {

namespace {

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const {
    return (static_cast<std::size_t>(m.x) * 73856093u) ^
           (static_cast<std::size_t>(m.y) * 19349663u) ^
           (static_cast<std::size_t>(m.z) * 83492791u);
  }
};

// Incremental reduced row echelon form over dense coordinates in the
// canonical monomial basis of degree <= max_degree. Column 0 is the largest
// monomial in graded-lex order, so a row's pivot is its leading monomial.
class Echelon {
 public:
  explicit Echelon(int max_degree) : columns_(CanonicalMonomials(max_degree)) {
    for (std::size_t c = 0; c < columns_.size(); ++c) column_of_[columns_[c]] = c;
  }

  // Returns true when value was independent of the current rows and has been
  // accepted as generator number accepted_count().
  bool Add(const SpherePolynomial& value) {
    std::vector<Rational> v(columns_.size());
    for (const auto& [m, c] : value.terms()) {
      auto it = column_of_.find(m);
      if (it == column_of_.end())
        throw std::logic_error("echelon column range too small");
      v[it->second] = c;
    }
    std::map<int, Rational> combo;
    for (const Row& row : rows_) {
      const Rational c = v[row.pivot];
      if (c == 0) continue;
      for (std::size_t k = row.pivot; k < v.size(); ++k) {
        if (row.v[k] != 0) v[k] -= c * row.v[k];
      }
      for (const auto& [g, a] : row.combo) combo[g] -= c * a;
    }
    const auto nz = std::find_if(v.begin(), v.end(),
                                 [](const Rational& r) { return r != 0; });
    if (nz == v.end()) return false;

    Row fresh;
    fresh.pivot = static_cast<std::size_t>(nz - v.begin());
    combo[accepted_++] += 1;
    const Rational lead = v[fresh.pivot];
    for (auto& entry : v) {
      if (entry != 0) entry /= lead;
    }
    for (auto& [g, a] : combo) a /= lead;
    std::erase_if(combo, [](const auto& kv) { return kv.second == 0; });
    fresh.v = std::move(v);
    fresh.combo = std::move(combo);

    for (Row& row : rows_) {
      const Rational c = row.v[fresh.pivot];
      if (c == 0) continue;
      for (std::size_t k = fresh.pivot; k < row.v.size(); ++k) {
        if (fresh.v[k] != 0) row.v[k] -= c * fresh.v[k];
      }
      for (const auto& [g, a] : fresh.combo) row.combo[g] -= c * a;
      std::erase_if(row.combo, [](const auto& kv) { return kv.second == 0; });
    }
    auto pos = std::lower_bound(
        rows_.begin(), rows_.end(), fresh.pivot,
        [](const Row& r, std::size_t p) { return r.pivot < p; });
    rows_.insert(pos, std::move(fresh));
    return true;
  }

  int accepted_count() const { return accepted_; }

  // Writes rows whose leading monomial has degree <= cap into space order.
  void Export(int cap, std::vector<SpherePolynomial>& basis,
              std::vector<std::vector<std::pair<int, Rational>>>& provenance)
      const {
    for (const Row& row : rows_) {
      if (columns_[row.pivot].degree() > cap) continue;
      TermMap terms;
      for (std::size_t k = row.pivot; k < row.v.size(); ++k) {
        if (row.v[k] != 0) terms.emplace(columns_[k], row.v[k]);
      }
      basis.push_back(Reduce(AmbientPolynomial(std::move(terms))));
      provenance.emplace_back(row.combo.begin(), row.combo.end());
    }
  }

 private:
  struct Row {
    std::size_t pivot = 0;
    std::vector<Rational> v;
    std::map<int, Rational> combo;
  };

  std::vector<Monomial> columns_;
  std::unordered_map<Monomial, std::size_t, MonomialHash> column_of_;
  std::vector<Row> rows_;
  int accepted_ = 0;
};

}  // namespace

int PhaseSubspace::max_degree() const {
  int d = 0;
  for (const auto& b : basis_) d = std::max(d, b.degree());
  return d;
}

std::vector<SpherePolynomial> DipolePotentials() {
  return {SpherePolynomial::X(), SpherePolynomial::Y(), SpherePolynomial::Z()};
}

PhaseSubspace InitialSpace(const std::vector<SpherePolynomial>& potentials) {
  if (potentials.empty())
    throw std::invalid_argument("initial space needs at least one potential");
  int max_degree = 0;
  for (const auto& w : potentials) max_degree = std::max(max_degree, w.degree());

  Echelon echelon(max_degree);
  PhaseSubspace space;
  for (std::size_t k = 0; k < potentials.size(); ++k) {
    if (echelon.Add(potentials[k])) {
      Generator g;
      g.kind = Generator::Kind::kInitial;
      g.index = static_cast<int>(k);
      g.value = potentials[k];
      space.generators_.push_back(std::move(g));
    }
  }
  if (space.generators_.empty())
    throw std::invalid_argument("potentials span only the zero polynomial");
  space.level_ = 1;
  space.degree_cap_ = max_degree;
  echelon.Export(max_degree, space.basis_, space.provenance_);
  return space;
}

PhaseSubspace SaturateStep(const PhaseSubspace& space, int degree_cap) {
  const auto& prev = space.basis();
  const int prev_degree = space.max_degree();

  std::vector<Generator> candidates;
  for (std::size_t k = 0; k < prev.size(); ++k) {
    Generator g;
    g.kind = Generator::Kind::kInherited;
    g.index = static_cast<int>(k);
    g.value = prev[k];
    candidates.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < prev.size(); ++i) {
    for (std::size_t j = i; j < prev.size(); ++j) {
      Generator g;
      g.kind = Generator::Kind::kPair;
      g.i = static_cast<int>(i);
      g.j = static_cast<int>(j);
      g.value = GradInner(prev[i], prev[j]);
      if (!g.value.is_zero()) candidates.push_back(std::move(g));
    }
  }
  // Normally 2 * prev_degree bounds every candidate, but a broken rewrite
  // rule (mutation testing) can exceed it.
  int columns = std::max(prev_degree, 2 * prev_degree);
  for (const Generator& g : candidates) columns = std::max(columns, g.value.degree());

  Echelon echelon(columns);
  PhaseSubspace next;
  for (Generator& g : candidates) {
    if (echelon.Add(g.value)) next.generators_.push_back(std::move(g));
  }
  next.level_ = space.level() + 1;
  next.degree_cap_ = degree_cap;
  next.truncated_ = degree_cap < columns;
  echelon.Export(degree_cap, next.basis_, next.provenance_);
  return next;
}

std::vector<PhaseSubspace> Saturate(
    const std::vector<SpherePolynomial>& potentials, int levels,
    int degree_cap) {
  if (levels < 1) throw std::invalid_argument("saturation needs n >= 1");
  std::vector<PhaseSubspace> chain;
  chain.reserve(static_cast<std::size_t>(levels));
  chain.push_back(InitialSpace(potentials));
  for (int n = 2; n <= levels; ++n) {
    chain.push_back(SaturateStep(chain.back(), degree_cap));
  }
  return chain;
}

MembershipResult Membership(const SpherePolynomial& p,
                            const PhaseSubspace& space) {
  MembershipCertificate cert;
  SpherePolynomial projection;
  const auto& basis = space.basis();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Rational c = p.coefficient(basis[k].leading_monomial());
    if (c == 0) continue;
    cert.coefficients.emplace_back(static_cast<int>(k), c);
    projection += basis[k] * c;
  }
  MembershipResult result;
  result.residual = p - projection;
  if (result.residual.is_zero()) result.certificate = std::move(cert);
  return result;
}

SpherePolynomial Recombine(const MembershipCertificate& certificate,
                           const PhaseSubspace& space) {
  SpherePolynomial sum;
  for (const auto& [k, c] : certificate.coefficients) {
    sum += space.basis().at(static_cast<std::size_t>(k)) * c;
  }
  return sum;
}

InclusionReport VerifyPnSubset(int n) {
  if (n < 2) throw std::invalid_argument("inclusion check needs n >= 2");
  const auto start = std::chrono::steady_clock::now();
  InclusionReport report;
  report.n = n;
  const auto chain = Saturate(DipolePotentials(), n, n);
  for (const auto& level : chain) report.dimensions.push_back(level.dimension());
  report.all_certified = true;
  for (const Monomial& m : CanonicalMonomials(n)) {
    MonomialCertificate entry;
    entry.monomial = m;
    auto result = Membership(SpherePolynomial::FromMonomial(m), chain.back());
    if (result.is_member()) {
      entry.certified = true;
      entry.certificate = std::move(*result.certificate);
    } else {
      report.all_certified = false;
    }
    report.monomials.push_back(std::move(entry));
  }
  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return report;
}

}  // namespace s2ctl

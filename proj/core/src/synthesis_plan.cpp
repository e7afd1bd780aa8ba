#include <algorithm>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "s2ctl/saturation.hpp"

namespace s2ctl {

namespace {

using nlohmann::json;

SpherePolynomial LinearForm(const std::array<Rational, 3>& u) {
  return SpherePolynomial::X() * u[0] + SpherePolynomial::Y() * u[1] +
         SpherePolynomial::Z() * u[2];
}

int Sign(const Rational& r) { return r < 0 ? -1 : 1; }

Rational Abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

class Planner {
 public:
  explicit Planner(const std::vector<PhaseSubspace>& chain) : chain_(chain) {}

  // Smallest 1-based level <= max_level containing p, or 0.
  int MinimalLevel(const SpherePolynomial& p, int max_level) const {
    for (int level = 1; level <= max_level; ++level) {
      if (Membership(p, chain_[static_cast<std::size_t>(level - 1)]).is_member())
        return level;
    }
    return 0;
  }

  PlanNode PlanFor(const SpherePolynomial& p, int max_level) const {
    const int level = MinimalLevel(p, max_level);
    if (level == 0) {
      throw std::invalid_argument("polynomial " + ToString(p) +
                                  " is not in the saturation chain");
    }
    return PlanAt(p, level);
  }

  PlanNode PlanAt(const SpherePolynomial& p, int level) const {
    if (p.is_zero()) return PlanNode::Phase(p, {});
    if (level == 1) return PulseFor(p);

    const PhaseSubspace& space = chain_[static_cast<std::size_t>(level - 1)];
    const auto& previous = chain_[static_cast<std::size_t>(level - 2)].basis();
    const auto cert = Membership(p, space).certificate;
    if (!cert) throw std::logic_error("planning a non-member");

    // Coefficients on the accepted generators of this level.
    std::map<int, Rational> on_generator;
    for (const auto& [k, c] : cert->coefficients) {
      for (const auto& [g, a] : space.provenance()[static_cast<std::size_t>(k)])
        on_generator[g] += c * a;
    }

    SpherePolynomial inherited;
    std::vector<PlanNode> children;
    std::vector<PlanNode> conjugates;
    for (const auto& [g, d] : on_generator) {
      if (d == 0) continue;
      const Generator& gen = space.generators()[static_cast<std::size_t>(g)];
      if (gen.kind == Generator::Kind::kInherited) {
        inherited += gen.value * d;
        continue;
      }
      const SpherePolynomial& bi = previous[static_cast<std::size_t>(gen.i)];
      const SpherePolynomial& bj = previous[static_cast<std::size_t>(gen.j)];
      if (gen.i == gen.j) {
        conjugates.push_back(PlanNode::Conjugate(bi, Abs(d), Sign(d),
                                                 PlanFor(bi, level - 1)));
      } else {
        // d g(bi, bj) = d/4 g(bi + bj) - d/4 g(bi - bj)
        const Rational quarter = Abs(d) / 4;
        const SpherePolynomial sum = bi + bj;
        const SpherePolynomial diff = bi - bj;
        conjugates.push_back(PlanNode::Conjugate(sum, quarter, Sign(d),
                                                 PlanFor(sum, level - 1)));
        conjugates.push_back(PlanNode::Conjugate(diff, quarter, -Sign(d),
                                                 PlanFor(diff, level - 1)));
      }
    }
    if (!inherited.is_zero()) children.push_back(PlanFor(inherited, level - 1));
    for (auto& c : conjugates) children.push_back(std::move(c));
    if (children.size() == 1) return std::move(children.front());
    return PlanNode::Phase(p, std::move(children));
  }

 private:
  static PlanNode PulseFor(const SpherePolynomial& p) {
    std::array<Rational, 3> u{};
    for (const auto& [m, c] : p.terms()) {
      if (m == Monomial{1, 0, 0}) u[0] = c;
      else if (m == Monomial{0, 1, 0}) u[1] = c;
      else if (m == Monomial{0, 0, 1}) u[2] = c;
      else
        throw std::invalid_argument("level-1 phase " + ToString(p) +
                                    " is not a linear form in x, y, z");
    }
    return PlanNode::Pulse(u);
  }

  const std::vector<PhaseSubspace>& chain_;
};

const char* KindName(PlanNode::Kind kind) {
  switch (kind) {
    case PlanNode::Kind::kPulse: return "pulse";
    case PlanNode::Kind::kPhase: return "phase";
    case PlanNode::Kind::kConjugate: return "conjugate";
  }
  return "?";
}

json NodeToJson(const PlanNode& node) {
  json j;
  j["kind"] = KindName(node.kind);
  j["phase"] = ToString(node.phase);
  switch (node.kind) {
    case PlanNode::Kind::kPulse:
      j["u"] = {node.u[0].get_str(), node.u[1].get_str(), node.u[2].get_str()};
      break;
    case PlanNode::Kind::kConjugate:
      j["phi"] = ToString(node.phi);
      j["weight"] = node.weight.get_str();
      j["sign"] = node.sign;
      j["drift"] = node.sign < 0 ? "nonphysical (adjoint)" : "forward";
      j["child"] = NodeToJson(node.children.front());
      break;
    case PlanNode::Kind::kPhase: {
      json children = json::array();
      for (const auto& c : node.children) children.push_back(NodeToJson(c));
      j["children"] = std::move(children);
      break;
    }
  }
  return j;
}

Rational ParseRationalField(const json& j) {
  Rational r(j.get<std::string>());
  r.canonicalize();
  return r;
}

PlanNode NodeFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pulse") {
    const json& u = j.at("u");
    if (!u.is_array() || u.size() != 3)
      throw std::invalid_argument("pulse needs three controls");
    return PlanNode::Pulse({ParseRationalField(u[0]), ParseRationalField(u[1]),
                            ParseRationalField(u[2])});
  }
  if (kind == "conjugate") {
    const int sign = j.at("sign").get<int>();
    if (sign != 1 && sign != -1)
      throw std::invalid_argument("conjugate sign must be +1 or -1");
    return PlanNode::Conjugate(ParsePolynomial(j.at("phi").get<std::string>()),
                               ParseRationalField(j.at("weight")), sign,
                               NodeFromJson(j.at("child")));
  }
  if (kind == "phase") {
    std::vector<PlanNode> children;
    for (const auto& c : j.at("children")) children.push_back(NodeFromJson(c));
    return PlanNode::Phase(ParsePolynomial(j.at("phase").get<std::string>()),
                           std::move(children));
  }
  throw std::invalid_argument("unknown plan node kind '" + kind + "'");
}

bool NodeIsSound(const PlanNode& node) {
  if (node.Accumulated() != node.phase) return false;
  if (node.kind == PlanNode::Kind::kConjugate) {
    if (node.children.size() != 1 || node.weight < 0) return false;
    if (node.children.front().Accumulated() != node.phi) return false;
  }
  return std::all_of(node.children.begin(), node.children.end(), NodeIsSound);
}

}  // namespace

PlanNode PlanNode::Pulse(const std::array<Rational, 3>& u) {
  PlanNode node;
  node.kind = Kind::kPulse;
  node.u = u;
  node.phase = LinearForm(u);
  return node;
}

PlanNode PlanNode::Conjugate(const SpherePolynomial& phi,
                             const Rational& weight, int sign, PlanNode child) {
  PlanNode node;
  node.kind = Kind::kConjugate;
  node.phi = phi;
  node.weight = weight;
  node.sign = sign;
  node.phase = GradInner(phi, phi) * (weight * sign);
  node.children.push_back(std::move(child));
  return node;
}

PlanNode PlanNode::Phase(const SpherePolynomial& phase,
                         std::vector<PlanNode> children) {
  PlanNode node;
  node.kind = Kind::kPhase;
  node.phase = phase;
  node.children = std::move(children);
  return node;
}

int PlanNode::depth() const {
  switch (kind) {
    case Kind::kPulse: return 1;
    case Kind::kConjugate: return 1 + children.front().depth();
    case Kind::kPhase: {
      int d = 0;
      for (const auto& c : children) d = std::max(d, c.depth());
      return d;
    }
  }
  return 0;
}

SpherePolynomial PlanNode::Accumulated() const {
  switch (kind) {
    case Kind::kPulse: return LinearForm(u);
    case Kind::kConjugate: return GradInner(phi, phi) * (weight * sign);
    case Kind::kPhase: {
      SpherePolynomial sum;
      for (const auto& c : children) sum += c.Accumulated();
      return sum;
    }
  }
  return {};
}

int PlanNode::CountConjugates() const {
  int n = kind == Kind::kConjugate ? 1 : 0;
  for (const auto& c : children) n += c.CountConjugates();
  return n;
}

SynthesisPlan BuildSynthesisPlan(const SpherePolynomial& target,
                                 const std::vector<PhaseSubspace>& chain) {
  if (chain.empty()) throw std::invalid_argument("empty saturation chain");
  Planner planner(chain);
  SynthesisPlan plan;
  plan.target = target;
  plan.level = planner.MinimalLevel(target, static_cast<int>(chain.size()));
  if (plan.level == 0) {
    throw std::invalid_argument("target " + ToString(target) +
                                " is not in the top space of the chain");
  }
  plan.root = planner.PlanAt(target, plan.level);
  return plan;
}

bool PlanIsSound(const SynthesisPlan& plan) {
  return plan.root.Accumulated() == plan.target && NodeIsSound(plan.root) &&
         plan.root.depth() <= std::max(plan.level, 1);
}

std::string SerializePlan(const SynthesisPlan& plan) {
  json doc;
  doc["target"] = ToString(plan.target);
  doc["level"] = plan.level;
  doc["depth"] = plan.root.depth();
  doc["root"] = NodeToJson(plan.root);
  return doc.dump(2) + "\n";
}

SynthesisPlan ParsePlan(std::string_view text) {
  try {
    const json doc = json::parse(text);
    SynthesisPlan plan;
    plan.target = ParsePolynomial(doc.at("target").get<std::string>());
    plan.level = doc.at("level").get<int>();
    plan.root = NodeFromJson(doc.at("root"));
    return plan;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed plan document: ") +
                                e.what());
  }
}

}  // namespace s2ctl

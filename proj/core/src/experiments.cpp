#include "s2ctl/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace s2ctl {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Identity suite

namespace {

SpherePolynomial P(std::string_view text) { return ParsePolynomial(text); }

SpherePolynomial Power(const SpherePolynomial& p, int k) {
  SpherePolynomial out = SpherePolynomial::Constant(1);
  for (int i = 0; i < k; ++i) out = out * p;
  return out;
}

IdentityCheck Expect(std::string name, const SpherePolynomial& got,
                     const SpherePolynomial& want) {
  IdentityCheck check;
  check.name = std::move(name);
  check.passed = got == want;
  check.detail = check.passed ? ToString(got)
                              : "got " + ToString(got) + ", want " + ToString(want);
  return check;
}

Rational Binomial(int n, int k) {
  Rational r(1);
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<IdentityCheck> GradientIdentities() {
  std::vector<IdentityCheck> out;
  const SpherePolynomial x = SpherePolynomial::X();
  const SpherePolynomial y = SpherePolynomial::Y();
  const SpherePolynomial z = SpherePolynomial::Z();

  const TangentField gz = TangentialGradient(z);
  out.push_back(Expect("gradient of z, component 1", gz.components[0], P("-x z")));
  out.push_back(Expect("gradient of z, component 2", gz.components[1], P("-y z")));
  out.push_back(Expect("gradient of z, component 3", gz.components[2], P("1 - z^2")));
  out.push_back(Expect("g(z, z)", GradInner(z, z), P("1 - z^2")));
  out.push_back(Expect("g(x, x) + g(y, y) + g(z, z)",
                       GradInner(x, x) + GradInner(y, y) + GradInner(z, z),
                       SpherePolynomial::Constant(2)));

  const std::pair<const char*, std::pair<SpherePolynomial, SpherePolynomial>> pairs[] = {
      {"xz", {x, z}}, {"xy", {x, y}}, {"yz", {y, z}}};
  for (const auto& [label, ab] : pairs) {
    const auto& [a, b] = ab;
    out.push_back(Expect(std::string("polarization 4 ") + label,
                         GradInner(a - b, a - b) - GradInner(a + b, a + b),
                         a * b * Rational(4)));
  }

  for (const auto& [k, m] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
    const SpherePolynomial minus = Power(z, k) - Power(z, m);
    const SpherePolynomial plus = Power(z, k) + Power(z, m);
    const Rational c(4 * k * m);
    out.push_back(Expect("z^k, z^m with (k, m) = (" + std::to_string(k) + ", " +
                             std::to_string(m) + ")",
                         GradInner(minus, minus) - GradInner(plus, plus),
                         Power(z, k + m) * c - Power(z, k + m - 2) * c));
  }

  const std::array<int, 3> triples[] = {{1, 1, 1}, {2, 1, 0}, {2, 0, 1}, {1, 2, 1}};
  for (const auto& [k, l, m] : triples) {
    const SpherePolynomial xk = Power(x, k);
    const SpherePolynomial ylzm = Power(y, l) * Power(z, m);
    const SpherePolynomial minus = xk - ylzm;
    const SpherePolynomial plus = xk + ylzm;
    out.push_back(Expect("x^k, y^l z^m with (k, l, m) = (" + std::to_string(k) + ", " +
                             std::to_string(l) + ", " + std::to_string(m) + ")",
                         GradInner(minus, minus) - GradInner(plus, plus),
                         xk * ylzm * Rational(4 * k * (l + m))));
  }
  return out;
}

SpherePolynomial RandomPolynomial(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> term_count(1, 5);
  std::uniform_int_distribution<int> exponent(0, std::max(0, max_degree));
  std::uniform_int_distribution<int> numerator(-5, 5);
  std::uniform_int_distribution<int> denominator(1, 4);
  AmbientPolynomial raw;
  const int terms = term_count(rng);
  for (int t = 0; t < terms; ++t) {
    Monomial m;
    m.x = exponent(rng);
    m.y = exponent(rng);
    m.z = exponent(rng);
    while (m.degree() > max_degree) {
      if (m.x > 0) --m.x;
      else if (m.y > 0) --m.y;
      else --m.z;
    }
    int num = numerator(rng);
    if (num == 0) num = 1;
    raw.AddTerm(m, MakeRational(num, denominator(rng)));
  }
  return Reduce(raw);
}

std::vector<SpherePolynomial> ConjugationCoefficients(const SpherePolynomial& phi,
                                                      const SpherePolynomial& psi,
                                                      int max_order) {
  std::vector<SpherePolynomial> out;
  for (int n = 0; n <= max_order; ++n) {
    SpherePolynomial sum;
    for (int k = 0; k <= n; ++k) {
      SpherePolynomial term = Power(-phi, n - k) * LaplaceBeltrami(Power(phi, k) * psi);
      sum += term * Binomial(n, k);
    }
    out.push_back(std::move(sum));
  }
  return out;
}

std::vector<IdentityCheck> RunIdentitySuite(const IdentitySuiteOptions& options) {
  std::vector<IdentityCheck> out = GradientIdentities();
  std::mt19937_64 rng(options.seed);
  const int pairs = options.random_pairs;

  struct Family {
    std::string name;
    int passed = 0;
    std::string first_failure;

    explicit Family(std::string n) : name(std::move(n)) {}
  };
  Family leibniz{"Leibniz rule"}, rep_grad{"representative independence, gradient"},
      rep_lap{"representative independence, Laplace-Beltrami"},
      tangency{"tangency of the gradient"}, conj{"conjugation expansion"},
      ad2{"ad2 = -2 g(grad phi, grad phi) h"}, ad3{"ad3 = 0"},
      degree{"degree of g(grad p, grad p) <= 2 deg p"};
  auto note = [](Family& f, bool ok, const std::string& what) {
    if (ok) ++f.passed;
    else if (f.first_failure.empty()) f.first_failure = what;
  };

  for (int t = 0; t < pairs; ++t) {
    const SpherePolynomial p = RandomPolynomial(rng, options.max_degree);
    const SpherePolynomial q = RandomPolynomial(rng, options.max_degree);
    const SpherePolynomial r = RandomPolynomial(rng, options.max_degree);
    const std::string tag = "p = " + ToString(p) + ", q = " + ToString(q);

    note(leibniz,
         LaplaceBeltrami(p * q) ==
             p * LaplaceBeltrami(q) + q * LaplaceBeltrami(p) + GradInner(p, q) * Rational(2),
         tag);

    // p plus a multiple of the sphere relation is another representative.
    const AmbientPolynomial other =
        p.representative() + AmbientPolynomial::SphereRelation() * r.representative();
    const TangentField g1 = TangentialGradient(p);
    const TangentField g2 = TangentialGradient(other);
    note(rep_grad, g1.components == g2.components, tag);
    note(rep_lap, LaplaceBeltrami(other) == LaplaceBeltrami(p), tag);
    note(tangency, g1.normal_component().is_zero(), tag);

    const auto coeffs = ConjugationCoefficients(p, q, 4);
    const bool conj_ok = coeffs[0] == LaplaceBeltrami(q) &&
                         coeffs[1] == q * LaplaceBeltrami(p) +
                                          GradInner(p, q) * Rational(2) &&
                         coeffs[2] == GradInner(p, p) * q * Rational(2) &&
                         coeffs[3].is_zero() && coeffs[4].is_zero();
    note(conj, conj_ok, tag);

    note(ad2, Ad2H0(p, q) + GradInner(p, p) * q * Rational(2) == SpherePolynomial(), tag);
    note(ad3, Ad3H0(p, q).is_zero(), tag);
    note(degree, GradInner(p, p).degree() <= 2 * p.degree(), tag);
  }

  for (Family* f : {&leibniz, &rep_grad, &rep_lap, &tangency, &conj, &ad2, &ad3, &degree}) {
    IdentityCheck check;
    check.name = f->name;
    check.passed = f->passed == pairs;
    check.detail = std::to_string(f->passed) + "/" + std::to_string(pairs);
    if (!f->first_failure.empty()) check.detail += "; first failure " + f->first_failure;
    out.push_back(std::move(check));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

long long ParseInteger(const std::string& key, const std::string& value) {
  long long out = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  return out;
}

int ParseInt(const std::string& key, const std::string& value) {
  const long long v = ParseInteger(key, value);
  if (v < -1000000000LL || v > 1000000000LL)
    throw ConfigError("'" + key + "' is out of range");
  return static_cast<int>(v);
}

double ParseReal(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v))
    throw ConfigError("'" + key + "' expects a finite number, got '" + value + "'");
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

std::vector<double> ParseReals(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : Split(value, ',')) out.push_back(ParseReal(key, item));
  return out;
}

std::string Format(const std::vector<double>& values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(FormatDouble(v));
  return Join(items, ", ");
}

void CheckPolynomial(const std::string& key, const std::string& text) {
  try {
    ParsePolynomial(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

}  // namespace

ConfigMap ParseConfigText(std::string_view text) {
  ConfigMap out;
  std::string section = "general";
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("line " + std::to_string(number) + ": malformed section header");
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("line " + std::to_string(number) + ": empty key");
    out[section + "." + key] = Trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap LoadConfigFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseConfigText(buffer.str());
}

void ApplyConfig(const ConfigMap& values, ExperimentConfig& c) {
  for (const auto& [key, value] : values) {
    if (key == "general.j_max") c.j_max = ParseInt(key, value);
    else if (key == "general.oversample") c.oversample = ParseInt(key, value);
    else if (key == "general.seed") {
      const long long v = ParseInteger(key, value);
      if (v < 0) throw ConfigError("'general.seed' must be non-negative");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "general.out") c.out_dir = value;
    else if (key == "verify.n") c.verify_n = ParseInt(key, value);
    else if (key == "verify.pairs") c.verify_pairs = ParseInt(key, value);
    else if (key == "verify.mutation") c.mutation = ParseBool(key, value);
    else if (key == "saturate.n") c.saturate_n = ParseInt(key, value);
    else if (key == "saturate.cap") c.saturate_cap = ParseInt(key, value);
    else if (key == "saturate.potentials") c.potentials = Split(value, ';');
    else if (key == "converge.phi") c.phi = value;
    else if (key == "converge.potential") c.potential = value;
    else if (key == "converge.u") {
      const auto u = ParseReals(key, value);
      if (u.size() != 3) throw ConfigError("'converge.u' expects three numbers");
      c.u = {u[0], u[1], u[2]};
    } else if (key == "converge.deltas") {
      c.deltas = value == "default" ? DefaultDeltaSchedule() : ParseReals(key, value);
    } else if (key == "converge.state") {
      const auto jm = Split(value, ',');
      if (jm.size() != 2) throw ConfigError("'converge.state' expects j, m");
      c.state_j = ParseInt(key, jm[0]);
      c.state_m = ParseInt(key, jm[1]);
    } else if (key == "transfer.j") c.transfer_j = ParseInt(key, value);
    else if (key == "transfer.degrees") {
      c.degrees.clear();
      for (const std::string& d : Split(value, ',')) c.degrees.push_back(ParseInt(key, d));
    } else if (key == "transfer.mode") c.transfer_mode = value;
    else if (key == "transfer.delta") c.transfer_delta = ParseReal(key, value);
    else if (key == "transfer.fit_band") c.fit_band = ParseInt(key, value);
    else if (key == "bch.phi") c.bch_phis = Split(value, ';');
    else if (key == "bch.tolerance") c.bch_tolerance = ParseReal(key, value);
    else if (key == "plan.target") c.plan_target = value;
    else if (key == "plan.n") c.plan_n = ParseInt(key, value);
    else if (key == "plan.cap") c.plan_cap = ParseInt(key, value);
    else if (key == "plan.execute") c.plan_execute = ParseBool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

void ValidateConfig(const ExperimentConfig& c) {
  static const char* kCommands[] = {"verify-lemma", "saturate", "converge",
                                    "transfer",     "bch-check", "plan"};
  if (std::find(std::begin(kCommands), std::end(kCommands), c.command) ==
      std::end(kCommands))
    throw ConfigError("unknown command '" + c.command + "'");
  if (c.j_max < 1) throw ConfigError("j_max must be >= 1");
  if (c.oversample < 1) throw ConfigError("oversample must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("output directory must be set");
  if (c.verify_n < 2) throw ConfigError("verify.n must be >= 2");
  if (c.verify_pairs < 1) throw ConfigError("verify.pairs must be >= 1");
  if (c.saturate_n < 1) throw ConfigError("saturate.n must be >= 1");
  if (c.saturate_cap < -1 || c.saturate_cap == 0)
    throw ConfigError("saturate.cap must be positive");
  if (c.potentials.empty()) throw ConfigError("saturate.potentials is empty");
  for (const auto& w : c.potentials) CheckPolynomial("saturate.potentials", w);
  CheckPolynomial("converge.phi", c.phi);
  if (!c.potential.empty()) CheckPolynomial("converge.potential", c.potential);
  if (c.deltas.empty()) throw ConfigError("converge.deltas is empty");
  for (std::size_t k = 0; k < c.deltas.size(); ++k) {
    if (!(c.deltas[k] > 0.0)) throw ConfigError("converge.deltas must be positive");
    if (k > 0 && !(c.deltas[k] < c.deltas[k - 1]))
      throw ConfigError("converge.deltas must be strictly decreasing");
  }
  if (c.state_j < 0 || c.state_j > c.j_max || std::abs(c.state_m) > c.state_j)
    throw ConfigError("converge.state must satisfy 0 <= j <= j_max and |m| <= j");
  if (c.transfer_j < 1 || c.transfer_j > c.j_max)
    throw ConfigError("transfer.j must satisfy 1 <= j <= j_max");
  if (c.transfer_mode != "exact" && c.transfer_mode != "idealized" &&
      c.transfer_mode != "synthesized")
    throw ConfigError("transfer.mode must be exact, idealized or synthesized");
  if (c.degrees.empty()) throw ConfigError("transfer.degrees is empty");
  if (c.fit_band < 1) throw ConfigError("transfer.fit_band must be >= 1");
  for (int d : c.degrees) {
    if (d < 0 || d > c.fit_band)
      throw ConfigError("transfer.degrees must lie in [0, fit_band]");
    if (c.transfer_mode == "synthesized" && d > 2)
      throw ConfigError("synthesized transfer supports degrees <= 2");
  }
  if (!(c.transfer_delta > 0.0)) throw ConfigError("transfer.delta must be positive");
  if (c.bch_phis.empty()) throw ConfigError("bch.phi is empty");
  for (const auto& phi : c.bch_phis) CheckPolynomial("bch.phi", phi);
  if (!(c.bch_tolerance > 0.0)) throw ConfigError("bch.tolerance must be positive");
  CheckPolynomial("plan.target", c.plan_target);
  if (c.plan_n < 1) throw ConfigError("plan.n must be >= 1");
  if (c.plan_cap < 1) throw ConfigError("plan.cap must be >= 1");
}

ConfigMap ConfigSnapshot(const ExperimentConfig& c) {
  ConfigMap m;
  m["general.j_max"] = std::to_string(c.j_max);
  m["general.oversample"] = std::to_string(c.oversample);
  m["general.seed"] = std::to_string(c.seed);
  m["general.out"] = c.out_dir;
  m["verify.n"] = std::to_string(c.verify_n);
  m["verify.pairs"] = std::to_string(c.verify_pairs);
  m["verify.mutation"] = c.mutation ? "true" : "false";
  m["saturate.n"] = std::to_string(c.saturate_n);
  m["saturate.cap"] = std::to_string(c.saturate_cap < 0 ? c.saturate_n : c.saturate_cap);
  m["saturate.potentials"] = Join(c.potentials, "; ");
  m["converge.phi"] = c.phi;
  m["converge.potential"] = c.potential;
  m["converge.u"] = Format({c.u[0], c.u[1], c.u[2]});
  m["converge.deltas"] = Format(c.deltas);
  m["converge.state"] = std::to_string(c.state_j) + ", " + std::to_string(c.state_m);
  m["transfer.j"] = std::to_string(c.transfer_j);
  std::vector<std::string> degrees;
  for (int d : c.degrees) degrees.push_back(std::to_string(d));
  m["transfer.degrees"] = Join(degrees, ", ");
  m["transfer.mode"] = c.transfer_mode;
  m["transfer.delta"] = FormatDouble(c.transfer_delta);
  m["transfer.fit_band"] = std::to_string(c.fit_band);
  m["bch.phi"] = Join(c.bch_phis, "; ");
  m["bch.tolerance"] = FormatDouble(c.bch_tolerance);
  m["plan.target"] = c.plan_target;
  m["plan.n"] = std::to_string(c.plan_n);
  m["plan.cap"] = std::to_string(c.plan_cap);
  m["plan.execute"] = c.plan_execute ? "true" : "false";
  return m;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

// Summary documents echo the config without the output path, so that two
// runs differing only in --out produce identical bytes.
ordered_json SummaryHeader(const ExperimentConfig& c) {
  ordered_json doc;
  doc["command"] = c.command;
  doc["version"] = kArtifactVersion;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : ConfigSnapshot(c)) {
    if (k != "general.out") config[k] = v;
  }
  doc["config"] = std::move(config);
  return doc;
}

std::string Dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

std::string CertificateText(const MembershipCertificate& cert) {
  std::vector<std::string> items;
  for (const auto& [k, c] : cert.coefficients)
    items.push_back(std::to_string(k) + ":" + c.get_str());
  return Join(items, ";");
}

std::string Csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  return out + "\"";
}

const char* GeneratorKind(Generator::Kind kind) {
  switch (kind) {
    case Generator::Kind::kInitial: return "initial";
    case Generator::Kind::kInherited: return "inherited";
    case Generator::Kind::kPair: return "pair";
  }
  return "?";
}

}  // namespace

CommandOutcome CmdVerifyLemma(const ExperimentConfig& config, OutputDirectory& out,
                              std::ostream& log) {
  std::vector<IdentityCheck> checks;
  InclusionReport report;
  {
    std::optional<testing::ScopedCorruptRewrite> corrupt;
    if (config.mutation) {
      log << "mutation mode: sphere rewrite corrupted to z^2 -> 1 - x^2 + y^2\n";
      corrupt.emplace();
    }
    checks = RunIdentitySuite({config.seed, config.verify_pairs, 4});
    report = VerifyPnSubset(config.verify_n);
  }

  int passed = 0;
  std::ostringstream identities;
  identities << "name,passed,detail\n";
  for (const IdentityCheck& c : checks) {
    if (c.passed) ++passed;
    identities << Csv(c.name) << "," << (c.passed ? 1 : 0) << "," << Csv(c.detail) << "\n";
    if (!c.passed) log << "FAILED " << c.name << ": " << c.detail << "\n";
  }
  out.Write("verify_identities.csv", identities.str());

  std::ostringstream certs;
  certs << "monomial,certified,certificate\n";
  int certified = 0;
  for (const MonomialCertificate& m : report.monomials) {
    if (m.certified) ++certified;
    const std::string name = ToString(m.monomial);
    certs << Csv(name.empty() ? "1" : name) << "," << (m.certified ? 1 : 0) << ","
          << CertificateText(m.certificate) << "\n";
  }
  out.Write("verify_certificates.csv", certs.str());

  const bool ok = passed == static_cast<int>(checks.size()) && report.all_certified;
  ordered_json doc = SummaryHeader(config);
  doc["n"] = config.verify_n;
  doc["mutation"] = config.mutation;
  doc["dimensions"] = report.dimensions;
  doc["identities_passed"] = passed;
  doc["identities_total"] = checks.size();
  doc["monomials"] = report.monomials.size();
  doc["monomials_certified"] = certified;
  doc["all_passed"] = ok;
  out.Write("verify.json", Dump(doc));

  log << "identities " << passed << "/" << checks.size() << ", monomials " << certified
      << "/" << report.monomials.size() << " certified in H_" << config.verify_n
      << " (" << report.seconds << " s)\n";
  return {ok ? kExitSuccess : kExitSuiteFailure, out.written()};
}

CommandOutcome CmdSaturate(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log) {
  std::vector<SpherePolynomial> potentials;
  for (const auto& w : config.potentials) potentials.push_back(ParsePolynomial(w));
  const int cap = config.saturate_cap < 0 ? config.saturate_n : config.saturate_cap;
  const auto chain = Saturate(potentials, config.saturate_n, cap);

  std::ostringstream dims, basis;
  dims << "level,dimension\n";
  basis << "level,index,polynomial\n";
  ordered_json provenance = ordered_json::array();
  std::vector<std::string> warnings;
  std::vector<int> dimensions;
  for (const PhaseSubspace& level : chain) {
    dims << level.level() << "," << level.dimension() << "\n";
    dimensions.push_back(level.dimension());
    for (int k = 0; k < level.dimension(); ++k)
      basis << level.level() << "," << k << ","
            << Csv(ToString(level.basis()[static_cast<std::size_t>(k)])) << "\n";
    if (level.truncated()) {
      warnings.push_back("H_" + std::to_string(level.level()) +
                         " truncated by degree cap " + std::to_string(cap));
    }
    ordered_json entry;
    entry["level"] = level.level();
    ordered_json gens = ordered_json::array();
    for (const Generator& g : level.generators()) {
      ordered_json item;
      item["kind"] = GeneratorKind(g.kind);
      if (g.kind == Generator::Kind::kPair) {
        item["i"] = g.i;
        item["j"] = g.j;
      } else {
        item["index"] = g.index;
      }
      item["value"] = ToString(g.value);
      gens.push_back(std::move(item));
    }
    entry["generators"] = std::move(gens);
    ordered_json rows = ordered_json::array();
    for (const auto& combo : level.provenance()) {
      ordered_json row = ordered_json::array();
      for (const auto& [g, c] : combo) row.push_back({g, c.get_str()});
      rows.push_back(std::move(row));
    }
    entry["basis_provenance"] = std::move(rows);
    provenance.push_back(std::move(entry));
  }
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  out.Write("saturate_dims.csv", dims.str());
  out.Write("saturate_basis.csv", basis.str());
  out.Write("saturate_provenance.json", Dump(provenance));

  ordered_json doc = SummaryHeader(config);
  doc["n"] = config.saturate_n;
  doc["degree_cap"] = cap;
  doc["dimensions"] = dimensions;
  doc["warnings"] = warnings;
  out.Write("saturate.json", Dump(doc));
  log << "dimensions:";
  for (int d : dimensions) log << " " << d;
  log << "\n";
  return {kExitSuccess, out.written()};
}

CommandOutcome CmdConverge(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log) {
  const SpherePolynomial phi = ParsePolynomial(config.phi);
  std::optional<SpherePolynomial> potential;
  if (!config.potential.empty()) potential = ParsePolynomial(config.potential);
  const WaveFunction psi0 =
      WaveFunction::Harmonic(config.j_max, config.state_j, config.state_m);

  ConvergenceRecord record;
  try {
    record = ConvergenceStudy(psi0, phi, config.u, config.deltas, config.j_max,
                              config.oversample, potential);
  } catch (const InsufficientRows& e) {
    log << "error: " << e.what() << "\n";
    return {kExitSuiteFailure, out.written()};
  }
  out.Write("converge.csv", ConvergenceCsv(record));

  ordered_json doc = SummaryHeader(config);
  doc["slope"] = record.slope;
  doc["intercept"] = record.intercept;
  doc["fitted_rows"] = record.fitted_rows;
  doc["flagged_rows"] = record.rows.size() - static_cast<std::size_t>(record.fitted_rows);
  doc["monotone_above_floor"] = record.monotone_above_floor;
  doc["j_max"] = record.j_max;
  doc["oversample"] = record.oversample;
  doc["smallest_delta_error"] = record.rows.back().error;
  out.Write("converge.json", Dump(doc));

  PlotSpec plot;
  plot.title = "three-exponential error, phi = " + config.phi;
  plot.x_label = "delta";
  plot.y_label = "L2 error";
  plot.log_x = plot.log_y = true;
  PlotSeries rows{"error (hollow: flagged)", {}, {}, {}, false};
  for (const auto& r : record.rows) {
    rows.x.push_back(r.delta);
    rows.y.push_back(r.error);
    rows.hollow.push_back(r.flagged);
  }
  PlotSeries fit{"fit, slope " + FormatDouble(std::round(record.slope * 1000) / 1000),
                 {}, {}, {}, true};
  for (const double d : {record.rows.front().delta, record.rows.back().delta}) {
    fit.x.push_back(d);
    fit.y.push_back(std::exp(record.intercept + record.slope * std::log(d)));
  }
  plot.series = {rows, fit};
  out.Write("converge.svg", RenderSvg(plot));

  log << "slope " << record.slope << " over " << record.fitted_rows << " rows"
      << (record.monotone_above_floor ? "" : " (not monotone)") << "\n";
  return {kExitSuccess, out.written()};
}

CommandOutcome CmdTransfer(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log) {
  TransferOptions options;
  options.j_max = config.j_max;
  options.oversample = config.oversample;
  options.fit_band = config.fit_band;
  options.delta = config.transfer_delta;
  const int j = config.transfer_j;

  std::vector<TransferResult> rows;
  rows.push_back(TransferExperiment(j, -1, TransferMode::kExactPhase, options));
  std::vector<TransferResult> fitted;
  if (config.transfer_mode == "idealized") {
    fitted = TransferSweep(j, config.degrees, options);
  } else if (config.transfer_mode == "synthesized") {
    for (int d : config.degrees)
      fitted.push_back(TransferExperiment(j, d, TransferMode::kSynthesized, options));
  }
  rows.insert(rows.end(), fitted.begin(), fitted.end());
  out.Write("transfer.csv", TransferCsv(rows));

  bool increasing = true;
  int first_above = -1;
  for (std::size_t k = 0; k < fitted.size(); ++k) {
    if (k > 0 && !(fitted[k].overlap > fitted[k - 1].overlap)) increasing = false;
    if (first_above < 0 && fitted[k].overlap > 0.9) first_above = fitted[k].degree;
  }

  ordered_json doc = SummaryHeader(config);
  doc["j"] = j;
  doc["exact_phase_distance"] = rows.front().distance;
  doc["exact_phase_residual"] = rows.front().residual;
  ordered_json list = ordered_json::array();
  for (const TransferResult& r : rows) {
    ordered_json item;
    item["degree"] = r.degree;
    item["overlap"] = r.overlap;
    item["distance"] = r.distance;
    item["residual"] = r.residual;
    item["fit_residual"] = r.fit_residual;
    item["mirror_overlap"] = r.mirror_overlap;
    item["mirror_distance"] = r.mirror_distance;
    list.push_back(std::move(item));
  }
  doc["rows"] = std::move(list);
  if (!fitted.empty()) {
    doc["overlap_strictly_increasing"] = increasing;
    doc["first_degree_above_0_9"] = first_above;
  }
  out.Write("transfer.json", Dump(doc));

  if (!fitted.empty()) {
    PlotSpec plot;
    plot.title = "transfer overlap, j = " + std::to_string(j);
    plot.x_label = "fit degree d";
    plot.y_label = "overlap";
    PlotSeries series{"overlap", {}, {}, {}, false};
    for (const auto& r : fitted) {
      series.x.push_back(r.degree);
      series.y.push_back(r.overlap);
    }
    PlotSeries exact{"exact phase", {fitted.front().degree * 1.0, fitted.back().degree * 1.0},
                     {rows.front().overlap, rows.front().overlap}, {}, true};
    plot.series = {series, exact};
    out.Write("transfer.svg", RenderSvg(plot));
  }

  log << "exact phase distance " << rows.front().distance << " (residual "
      << rows.front().residual << ")\n";
  for (const auto& r : fitted)
    log << "d = " << r.degree << ": overlap " << r.overlap << "\n";
  return {kExitSuccess, out.written()};
}

CommandOutcome CmdBchCheck(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log) {
  std::ostringstream csv;
  csv << "phi,interior_band,commutator_x,commutator_y,commutator_z,ad2_error,ad3_max,passed\n";
  ordered_json doc = SummaryHeader(config);
  ordered_json reports = ordered_json::array();
  bool all = true;
  for (const std::string& text : config.bch_phis) {
    const BchReport r = BchMatrixCheck(ParsePolynomial(text), config.j_max,
                                       config.bch_tolerance);
    all = all && r.passed;
    csv << Csv(text) << "," << r.interior_band << "," << FormatDouble(r.commutator_w[0])
        << "," << FormatDouble(r.commutator_w[1]) << ","
        << FormatDouble(r.commutator_w[2]) << "," << FormatDouble(r.ad2_error) << ","
        << FormatDouble(r.ad3_max) << "," << (r.passed ? 1 : 0) << "\n";
    ordered_json item;
    item["phi"] = text;
    item["interior_band"] = r.interior_band;
    item["commutator_w"] = r.commutator_w;
    item["ad2_error"] = r.ad2_error;
    item["ad3_max"] = r.ad3_max;
    item["passed"] = r.passed;
    reports.push_back(std::move(item));
    log << "phi = " << text << ": " << (r.passed ? "pass" : "FAIL") << " (ad2 "
        << r.ad2_error << ", ad3 " << r.ad3_max << ")\n";
  }
  doc["tolerance"] = config.bch_tolerance;
  doc["reports"] = std::move(reports);
  doc["all_passed"] = all;
  out.Write("bch.csv", csv.str());
  out.Write("bch.json", Dump(doc));
  return {all ? kExitSuccess : kExitSuiteFailure, out.written()};
}

CommandOutcome CmdPlan(const ExperimentConfig& config, OutputDirectory& out,
                       std::ostream& log) {
  const SpherePolynomial target = ParsePolynomial(config.plan_target);
  const auto chain = Saturate(DipolePotentials(), config.plan_n, config.plan_cap);
  SynthesisPlan plan;
  try {
    plan = BuildSynthesisPlan(target, chain);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return {kExitSuiteFailure, out.written()};
  }
  out.Write("plan.json", SerializePlan(plan));

  ordered_json doc = SummaryHeader(config);
  doc["target"] = ToString(plan.target);
  doc["level"] = plan.level;
  doc["depth"] = plan.root.depth();
  doc["conjugates"] = plan.root.CountConjugates();
  doc["sound"] = PlanIsSound(plan);

  if (config.plan_execute) {
    const Propagator propagator(config.j_max, config.oversample);
    const WaveFunction psi0 =
        WaveFunction::Harmonic(config.j_max, config.state_j, config.state_m);
    const PhaseResult reference = propagator.Kick(psi0, target, -1.0);
    std::ostringstream csv;
    csv << "delta,error,kick_residual,nonphysical_segments,drift_label,accuracy_warning\n";
    double last = 0.0;
    for (double delta : config.deltas) {
      PlanDiagnostics diag;
      const WaveFunction result = ExecutePlan(propagator, psi0, plan, delta, {}, &diag);
      last = (result.coeffs - reference.psi.coeffs).norm();
      csv << FormatDouble(delta) << "," << FormatDouble(last) << ","
          << FormatDouble(diag.evolution.kick_residual) << ","
          << diag.evolution.nonphysical_segments << ","
          << (diag.evolution.nonphysical_segments > 0 ? "nonphysical (adjoint)"
                                                      : "physical")
          << "," << (diag.accuracy_warning ? 1 : 0) << "\n";
    }
    out.Write("plan_execution.csv", csv.str());
    doc["smallest_delta_error"] = last;
    log << "execution error at smallest delta " << last << "\n";
  }
  out.Write("plan_summary.json", Dump(doc));
  log << "plan for " << ToString(plan.target) << ": level " << plan.level << ", depth "
      << plan.root.depth() << ", " << plan.root.CountConjugates() << " conjugations\n";
  return {kExitSuccess, out.written()};
}

CommandOutcome RunCommand(const ExperimentConfig& config, std::ostream& log) {
  ValidateConfig(config);
  const std::string started = UtcTimestamp();
  const auto t0 = std::chrono::steady_clock::now();
  OutputDirectory out(config.out_dir);

  CommandOutcome outcome;
  if (config.command == "verify-lemma") outcome = CmdVerifyLemma(config, out, log);
  else if (config.command == "saturate") outcome = CmdSaturate(config, out, log);
  else if (config.command == "converge") outcome = CmdConverge(config, out, log);
  else if (config.command == "transfer") outcome = CmdTransfer(config, out, log);
  else if (config.command == "bch-check") outcome = CmdBchCheck(config, out, log);
  else outcome = CmdPlan(config, out, log);

  ManifestInfo info;
  info.command = config.command;
  info.config = config;
  info.started_utc = started;
  info.finished_utc = UtcTimestamp();
  info.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  info.exit_code = outcome.exit_code;
  WriteManifest(out, info);
  return outcome;
}

}  // namespace s2ctl

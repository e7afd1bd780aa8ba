#pragma once

// Experiment configuration, the exact identity suite, and the command
// drivers behind the s2ctl executable. Every command writes its artifacts
// into one output directory and finishes with a manifest of checksums.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "s2ctl/propagator.hpp"
#include "s2ctl/saturation.hpp"
#include "s2ctl/sphere_poly.hpp"

namespace s2ctl {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode : int {
  kExitSuccess = 0,
  kExitSuiteFailure = 1,
  kExitUsage = 2,
};

// ---------------------------------------------------------------------------
// Identity suite

struct IdentityCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The exact gradient identities behind the inclusion P_n in H_n: the
/// gradient of z, the sum of squared coordinate gradients, the three
/// polarization products, and the z^k / z^m and x^k / y^l z^m families.
std::vector<IdentityCheck> GradientIdentities();

struct IdentitySuiteOptions {
  std::uint64_t seed = 20240611;
  int random_pairs = 20;
  int max_degree = 4;
};

/// GradientIdentities plus seeded random checks of the Leibniz rule,
/// representative independence, tangency, the conjugation expansion, the
/// commutator identities and the degree bound of g(grad p, grad p).
std::vector<IdentityCheck> RunIdentitySuite(const IdentitySuiteOptions& options);

/// Random canonical polynomial with up to five terms of degree <= max_degree
/// and small rational coefficients.
SpherePolynomial RandomPolynomial(std::mt19937_64& rng, int max_degree);

/// The identities (a, b) of the conjugation expansion: the coefficient of
/// (i c)^n / n! in exp(-i c phi) Lap(exp(i c phi) psi), for n = 0..max_order.
std::vector<SpherePolynomial> ConjugationCoefficients(const SpherePolynomial& phi,
                                                      const SpherePolynomial& psi,
                                                      int max_order);

// ---------------------------------------------------------------------------
// Configuration

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key" -> value map.
using ConfigMap = std::map<std::string, std::string>;

struct ExperimentConfig {
  std::string command;
  int j_max = 16;
  int oversample = 2;
  std::uint64_t seed = 20240611;
  std::string out_dir = "s2ctl-out";

  // verify-lemma
  int verify_n = 4;
  int verify_pairs = 20;
  bool mutation = false;

  // saturate
  int saturate_n = 2;
  int saturate_cap = -1;  // -1: same as saturate_n
  std::vector<std::string> potentials = {"x", "y", "z"};

  // converge
  std::string phi = "z";
  Controls u{0.0, 0.0, 0.0};
  std::string potential;  // V, empty for none
  std::vector<double> deltas = DefaultDeltaSchedule();
  int state_j = 0;
  int state_m = 0;

  // transfer
  int transfer_j = 1;
  std::vector<int> degrees = {1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64};
  std::string transfer_mode = "idealized";  // exact | idealized | synthesized
  double transfer_delta = 1e-3;
  int fit_band = 64;

  // bch-check
  std::vector<std::string> bch_phis = {"z", "x", "x + y"};
  double bch_tolerance = 1e-8;

  // plan
  std::string plan_target = "4 x z";
  int plan_n = 2;
  int plan_cap = 2;
  bool plan_execute = false;
};

/// Parses "[section]" headers and "key = value" lines; '#' starts a comment.
/// Keys outside any section belong to "general". Throws ConfigError.
ConfigMap ParseConfigText(std::string_view text);
ConfigMap LoadConfigFile(const std::filesystem::path& path);

/// Applies known keys onto config, validating values. Unknown keys and
/// unparsable values throw ConfigError.
void ApplyConfig(const ConfigMap& values, ExperimentConfig& config);

/// Positivity and parse checks on the assembled config. Throws ConfigError.
void ValidateConfig(const ExperimentConfig& config);

/// Every key with its effective value, for echoing into summaries.
ConfigMap ConfigSnapshot(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Output

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

/// Formats a double with 17 significant digits.
std::string FormatDouble(double value);

/// Single-owner writer for one output directory.
class OutputDirectory {
 public:
  explicit OutputDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Writes content to root/name and records it. Returns the full path.
  std::filesystem::path Write(const std::string& name, const std::string& content);
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

struct ManifestInfo {
  std::string command;
  ExperimentConfig config;
  std::string started_utc;
  std::string finished_utc;
  double wall_seconds = 0.0;
  int exit_code = 0;
};

/// Writes manifest.json listing every regular file under the directory
/// (except the manifest) with size and SHA-256.
void WriteManifest(const OutputDirectory& out, const ManifestInfo& info);

struct ManifestCheck {
  bool ok = false;
  std::vector<std::string> problems;
};

/// Recomputes every checksum and checks that every file is listed.
ManifestCheck VerifyManifest(const std::filesystem::path& directory);

std::string UtcTimestamp();

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<bool> hollow;  // optional marker style per point
  bool line = false;         // polyline instead of markers
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

/// Self-contained SVG scatter/line plot.
std::string RenderSvg(const PlotSpec& plot);

std::string ConvergenceCsv(const ConvergenceRecord& record);
std::string TransferCsv(const std::vector<TransferResult>& rows);

// ---------------------------------------------------------------------------
// Commands

struct CommandOutcome {
  int exit_code = kExitSuccess;
  std::vector<std::string> files;
};

/// Runs the configured command, writing artifacts and a manifest into
/// config.out_dir. Progress and headline numbers go to log.
CommandOutcome RunCommand(const ExperimentConfig& config, std::ostream& log);

CommandOutcome CmdVerifyLemma(const ExperimentConfig& config, OutputDirectory& out,
                              std::ostream& log);
CommandOutcome CmdSaturate(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log);
CommandOutcome CmdConverge(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log);
CommandOutcome CmdTransfer(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log);
CommandOutcome CmdBchCheck(const ExperimentConfig& config, OutputDirectory& out,
                           std::ostream& log);
CommandOutcome CmdPlan(const ExperimentConfig& config, OutputDirectory& out,
                       std::ostream& log);

}  // namespace s2ctl

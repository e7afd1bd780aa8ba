#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "s2ctl/experiments.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::string out_dir;
  int j_max = -1;
  int oversample = -1;
  long long seed = -1;
  std::vector<std::string> sets;
  bool mutation = false;
};

void AddCommon(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config_file, "INI-style config file")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", flags.out_dir, "output directory");
  sub->add_option("--jmax", flags.j_max, "band limit j_max");
  sub->add_option("--oversample", flags.oversample, "quadrature oversampling factor");
  sub->add_option("--seed", flags.seed, "random seed");
  sub->add_option("--set", flags.sets, "override a config key, section.key=value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear control experiments for the Schroedinger equation on the sphere"};
  app.set_version_flag("--version", std::string(s2ctl::kArtifactVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"verify-lemma", "exact identity suite and certificates that P_n lies in H_n"},
      {"saturate", "saturation chain H_1 .. H_n with bases and provenance"},
      {"converge", "three-exponential convergence study"},
      {"transfer", "transfer Y^j_{-j} -> Y^j_j by fitted phases"},
      {"bch-check", "commutator identities on the truncated basis"},
      {"plan", "synthesis plan for a target phase"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, flags);
    if (std::string(name) == "verify-lemma")
      sub->add_flag("--mutation", flags.mutation,
                    "corrupt the sphere rewrite rule; the suite must then fail");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? s2ctl::kExitSuccess : s2ctl::kExitUsage;
  }

  s2ctl::ExperimentConfig config;
  config.command = app.get_subcommands().front()->get_name();
  try {
    s2ctl::ConfigMap values;
    if (!flags.config_file.empty()) values = s2ctl::LoadConfigFile(flags.config_file);
    for (const std::string& item : flags.sets) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw s2ctl::ConfigError("--set expects section.key=value, got '" + item + "'");
      std::string key = item.substr(0, eq);
      if (key.find('.') == std::string::npos) key = "general." + key;
      values[key] = item.substr(eq + 1);
    }
    if (!flags.out_dir.empty()) values["general.out"] = flags.out_dir;
    if (flags.j_max >= 0) values["general.j_max"] = std::to_string(flags.j_max);
    if (flags.oversample >= 0) values["general.oversample"] = std::to_string(flags.oversample);
    if (flags.seed >= 0) values["general.seed"] = std::to_string(flags.seed);
    if (flags.mutation) values["verify.mutation"] = "true";
    s2ctl::ApplyConfig(values, config);
    s2ctl::ValidateConfig(config);
  } catch (const s2ctl::ConfigError& e) {
    std::cerr << "s2ctl: " << e.what() << "\n";
    return s2ctl::kExitUsage;
  }

  try {
    const s2ctl::CommandOutcome outcome = s2ctl::RunCommand(config, std::cout);
    std::cout << "wrote " << outcome.files.size() << " files to " << config.out_dir << "\n";
    return outcome.exit_code;
  } catch (const s2ctl::ConfigError& e) {
    std::cerr << "s2ctl: " << e.what() << "\n";
    return s2ctl::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "s2ctl: " << e.what() << "\n";
    return s2ctl::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "s2ctl: error: " << e.what() << "\n";
    return s2ctl::kExitSuiteFailure;
  }
}

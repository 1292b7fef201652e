// avcurate: command-line driver for the curation pipeline.
//
//   avcurate <command> --root DIR [--config FILE] [--set key=value]...
//            [--seed N] [--eps E[,E...]] [--jobs N] [--provider mock]
//
// Exit codes: 0 ok, 1 usage, 2 missing input, 3 config or manifest schema,
// 4 stage order, 5 malformed data file, 6 internal error.

#include <iostream>

#include "CLI11.hpp"
#include "avcurate/config.h"
#include "avcurate/pipeline.h"

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual speaker corpus curation"};

  avcurate::RunOptions opts;
  std::string root;
  std::string config;
  std::uint64_t seed = 0;
  std::vector<double> eps;
  std::size_t jobs = 1;
  bool list_keys = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--root", root, "Pipeline root directory")->required();
    cmd->add_option("--config", config, "Config file (JSON or key=value lines)");
    cmd->add_option("--set", opts.overrides, "Override a config key: key=value");
    cmd->add_option("--seed", seed, "Global seed");
    cmd->add_option("--eps", eps, "DBSCAN eps for clean, or the list for sweep")->delimiter(',');
    cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--provider", opts.provider, "Media provider")->check(CLI::IsMember({"mock"}));
  };

  const char* help[] = {"Build template faces from image search results",
                        "Fetch interview videos and detect shots",
                        "Track the POI through each video",
                        "Extract speaking segments into the manifest",
                        "Clean each speaker's segments by PLDA-distance DBSCAN",
                        "Train the LDA/PLDA backend on the training speakers",
                        "Score verification trials before and after cleaning",
                        "Sweep cleaning eps and report VSR, EER and minDCF",
                        "Create a synthetic world, or its x-vectors (--stage xvectors)",
                        "Print and save corpus statistics and result tables"};
  const auto& names = avcurate::command_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto* cmd = app.add_subcommand(names[k], help[k]);
    add_common(cmd);
    if (names[k] == "synth") {
      cmd->add_option("--stage", opts.stage, "world or xvectors")->check(CLI::IsMember({"world", "xvectors"}));
    }
  }
  app.add_flag("--list-keys", list_keys, "Print every config key and exit");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(avcurate::ExitCode::kUsage);
  }
  if (list_keys) {
    for (const auto& k : avcurate::config_keys()) std::cout << k << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return static_cast<int>(avcurate::ExitCode::kUsage);
  }
  auto* cmd = app.get_subcommands().front();
  opts.root = root;
  if (!config.empty()) opts.config = config;
  if (cmd->count("--seed")) opts.seed = seed;
  if (cmd->count("--eps")) opts.eps = eps;
  if (cmd->count("--jobs")) opts.jobs = jobs;
  return avcurate::run_command_checked(cmd->get_name(), opts, std::cout, std::cerr);
}

// Stage wiring for the command-line pipeline.
//
// Root layout:
//   manifest.json                 speakers, segments, embedding files
//   world.json                    synthetic world (mock provider only)
//   media/images/*.emb            fetched face crops
//   media/videos/*.frf, *.syn     fetched frame features and sync traces
//   media/catalog.json            video -> speaker, file paths
//   truth/                        ground-truth sidecars; no stage reads them
//   templates/<speaker>.emb, templates/summary.json
//   shots/<video>.json
//   tracks/<video>.json, tracks/summary.json
//   xvectors/xvectors.emb
//   backend/backend.plda, backend/split.json, backend/fit.json
//   clean/cleaning.json, clean/finetune.json
//   eval/report.json, eval/trials.txt
//   sweep/sweep.json, sweep/sweep.txt
//   report/report.json, report/report.txt
//
// All paths inside outputs are relative to the root, and nothing records a
// time, so equal inputs and seeds give byte-identical files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avcurate/config.h"

namespace avcurate {

enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kMissingInput = 2,
  kConfig = 3,      // config or manifest schema violation
  kStageOrder = 4,  // an upstream stage has not run
  kFormat = 5,      // malformed data file
  kInternal = 6,
};

class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StageOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::filesystem::path root;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> eps;
  std::optional<std::size_t> jobs;
  std::string provider = "mock";
  std::string stage = "world";  // synth: world | xvectors
};

const std::vector<std::string>& command_names();

// Config file, then --set overrides, then --seed/--jobs; validated.
PipelineConfig resolve_config(const RunOptions& opts);

// Runs one command. Throws the typed errors above, ConfigError or
// FormatError on failure.
void run_command(const std::string& command, const RunOptions& opts, std::ostream& out);

// run_command with errors mapped to exit codes and reported on `err`.
int run_command_checked(const std::string& command, const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace avcurate

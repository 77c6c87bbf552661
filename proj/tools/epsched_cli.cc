// epsched: map Chromium priorities to EPS urgencies, replay manifests over a
// simulated link, and compare the resulting proxy metrics.
//
//   epsched map --manifest site.json --strategy rtam
//   epsched simulate --manifest site.json --strategy baseline,dm,rtam \
//       --mode fifo,urgency --reps 10 --out results/site
//   epsched compare results/*/summary/*.median.json --baseline baseline/fifo
//   epsched summarize --manifest site.json --out summaries/site

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epsched/manifest.h"
#include "epsched/metrics.h"
#include "epsched/report.h"

namespace fs = std::filesystem;
using namespace epsched;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

StrategyChoice strategyFromFlag(const std::string& name) {
  auto choice = parseStrategyChoice(name);
  if (!choice) {
    throw InputError("unknown strategy '" + name + "'");
  }
  return *choice;
}

SchedulerMode modeFromFlag(const std::string& name) {
  auto mode = parseSchedulerMode(name);
  if (!mode) {
    throw InputError("unknown mode '" + name + "'");
  }
  return *mode;
}

void writeOrPrint(const std::string& outPath, const std::string& text) {
  if (outPath.empty()) {
    std::cout << text;
    return;
  }
  fs::path path(outPath);
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    throw std::runtime_error("cannot write " + outPath);
  }
}

struct LinkFlags {
  double bandwidth = LinkModel{}.bandwidthBytesPerSec;
  std::optional<double> delayMs;
  std::optional<double> loss;
  std::uint64_t seed = LinkModel{}.seed;
  bool challenging = false;

  LinkModel resolve() const {
    LinkModel link = challenging ? LinkModel::challenging() : LinkModel{};
    link.bandwidthBytesPerSec = bandwidth;
    link.seed = seed;
    if (delayMs) {
      link.oneWayDelayMs = *delayMs;
    }
    if (loss) {
      link.lossRate = *loss;
    }
    return link;
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"EPS urgency mapping and multiplexed delivery simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "epsched 0.1.0");

  std::string manifestPath;
  std::string outPath;
  std::optional<std::uint64_t> samThreshold;

  // map
  auto* mapCmd = app.add_subcommand("map", "Print per-resource urgency assignments");
  std::string mapStrategy = "rtam";
  mapCmd->add_option("--manifest", manifestPath, "Manifest JSON file")->required();
  mapCmd->add_option("--strategy", mapStrategy, "dm, rtam, sam or baseline")
      ->capture_default_str();
  mapCmd->add_option("--sam-threshold", samThreshold,
                     "SAM size threshold in bytes (default: pooled mean)");
  mapCmd->add_option("--out", outPath, "Write CSV here instead of stdout");

  // simulate
  auto* simCmd = app.add_subcommand("simulate", "Replay a manifest over the simulated link");
  std::vector<std::string> simStrategies = {"baseline", "dm", "rtam"};
  std::vector<std::string> simModes = {"fifo", "urgency"};
  LinkFlags link;
  std::uint64_t quantum = Scheduler::kDefaultQuantumBytes;
  unsigned reps = 10;
  unsigned jobs = 1;
  simCmd->add_option("--manifest", manifestPath, "Manifest JSON file")->required();
  simCmd->add_option("--strategy", simStrategies, "Comma-separated strategies")
      ->delimiter(',')
      ->capture_default_str();
  simCmd->add_option("--mode", simModes, "Comma-separated modes: fifo, urgency, urgency-incremental")
      ->delimiter(',')
      ->capture_default_str();
  simCmd->add_option("--bandwidth", link.bandwidth, "Link bandwidth in bytes/s")
      ->capture_default_str();
  simCmd->add_option("--delay-ms", link.delayMs, "One-way delay per direction (default 10)");
  simCmd->add_option("--loss", link.loss, "Loss probability per direction (default 0.0005)");
  simCmd->add_flag("--challenging", link.challenging, "20 ms delay and 0.1% loss");
  simCmd->add_option("--seed", link.seed, "Base seed; repetition k uses seed + k")
      ->capture_default_str();
  simCmd->add_option("--quantum", quantum, "Scheduling quantum in bytes")
      ->capture_default_str();
  simCmd->add_option("--reps", reps, "Repetitions per strategy and mode")
      ->capture_default_str();
  simCmd->add_option("--sam-threshold", samThreshold,
                     "SAM size threshold in bytes (default: pooled mean)");
  simCmd->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();
  simCmd->add_option("--out", outPath, "Output directory (absent or empty)")->required();

  // compare
  auto* cmpCmd = app.add_subcommand("compare", "Sign matrix and relative changes versus a baseline");
  std::vector<std::string> metricsFiles;
  std::string baseline = "baseline/fifo";
  double epsilon = kDefaultSignEpsilon;
  cmpCmd->add_option("files", metricsFiles, "Metrics JSON files")->required();
  cmpCmd->add_option("--baseline", baseline, "Baseline run label")->capture_default_str();
  cmpCmd->add_option("--epsilon", epsilon, "No-change band as a fraction")
      ->capture_default_str();
  cmpCmd->add_option("--out", outPath, "Directory for compare.txt and compare.csv");

  // summarize
  auto* sumCmd = app.add_subcommand("summarize", "Priority and type distribution tables");
  sumCmd->add_option("--manifest", manifestPath, "Manifest JSON file")->required();
  sumCmd->add_option("--out", outPath, "Directory for by_priority.csv and by_type.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*mapCmd) {
      WebsiteManifest manifest = loadManifest(manifestPath);
      std::ostringstream csv;
      writeUrgencyCsv(csv, manifest, strategyFromFlag(mapStrategy), samThreshold);
      writeOrPrint(outPath, csv.str());
    } else if (*simCmd) {
      ExperimentConfig config;
      config.manifestPath = manifestPath;
      config.strategies.clear();
      for (const auto& s : simStrategies) {
        config.strategies.push_back(strategyFromFlag(s));
      }
      config.modes.clear();
      for (const auto& m : simModes) {
        config.modes.push_back(modeFromFlag(m));
      }
      config.link = link.resolve();
      config.quantumBytes = quantum;
      config.repetitions = reps;
      config.outputDir = outPath;
      config.samThresholdBytes = samThreshold;
      config.jobs = jobs;
      auto files = runSimulate(config);
      std::cout << "wrote " << files.size() << " files to " << outPath << '\n';
    } else if (*cmpCmd) {
      std::vector<fs::path> paths(metricsFiles.begin(), metricsFiles.end());
      auto result = runCompare(paths, baseline, epsilon);
      std::string matrix = formatSignMatrix(result);
      std::cout << matrix;
      if (!outPath.empty()) {
        fs::create_directories(outPath);
        writeOrPrint((fs::path(outPath) / "compare.txt").string(), matrix);
        writeOrPrint((fs::path(outPath) / "compare.csv").string(),
                     formatComparisonCsv(result));
      }
    } else if (*sumCmd) {
      WebsiteManifest manifest = loadManifest(manifestPath);
      std::cout << formatSummaryText(manifest);
      if (!outPath.empty()) {
        fs::create_directories(outPath);
        writeOrPrint((fs::path(outPath) / "by_priority.csv").string(),
                     formatPrioritySummaryCsv(manifest));
        writeOrPrint((fs::path(outPath) / "by_type.csv").string(),
                     formatTypeSummaryCsv(manifest));
      }
    }
  } catch (const ManifestParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ManifestValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const UnknownBaseline& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

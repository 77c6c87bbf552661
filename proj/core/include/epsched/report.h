#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epsched/manifest.h"
#include "epsched/metrics.h"
#include "epsched/netsim.h"

namespace epsched {

inline constexpr int kReportSchemaVersion = 1;

/// Bad flags, unreadable or inconsistent inputs. The CLI exits with 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MismatchedMetrics : public InputError {
 public:
  using InputError::InputError;
};

enum class StrategyChoice : std::uint8_t { Baseline, Dm, Rtam, Sam };

std::string_view toString(StrategyChoice choice);
std::optional<StrategyChoice> parseStrategyChoice(std::string_view name);

/// SAM without an explicit threshold uses the manifest's pooled mean
/// script/image size.
DeliveryPolicy resolvePolicy(
    StrategyChoice choice,
    const WebsiteManifest& manifest,
    std::optional<std::uint64_t> samThresholdBytes);

struct ExperimentConfig {
  std::filesystem::path manifestPath;
  std::vector<StrategyChoice> strategies = {
      StrategyChoice::Baseline, StrategyChoice::Dm, StrategyChoice::Rtam};
  std::vector<SchedulerMode> modes = {
      SchedulerMode::SequentialFifo, SchedulerMode::UrgencyNonIncremental};
  LinkModel link;
  std::uint64_t quantumBytes = Scheduler::kDefaultQuantumBytes;
  unsigned repetitions = 10;
  std::filesystem::path outputDir;
  std::optional<std::uint64_t> samThresholdBytes;
  /// Worker threads; outputs do not depend on it.
  unsigned jobs = 1;

  /// Throws InputError.
  void validate() const;
};

struct RunPlan {
  StrategyChoice strategy;
  SchedulerMode mode;

  /// "<strategy>/<mode>", e.g. "rtam/urgency".
  std::string label() const;
};

/// strategies x modes, minus baseline paired with a non-fifo mode.
std::vector<RunPlan> planRuns(const ExperimentConfig& config);

/// Seed used by repetition k (0-based).
std::uint64_t repetitionSeed(std::uint64_t baseSeed, unsigned repetition);

// `map`: one row per resource,
// resource_id,type,chromium_priority,urgency
void writeUrgencyCsv(
    std::ostream& out,
    const WebsiteManifest& manifest,
    StrategyChoice choice,
    std::optional<std::uint64_t> samThresholdBytes);

/// Trace CSV: resource_id,request_ms,first_byte_ms,completion_ms
void writeTraceCsv(
    std::ostream& out,
    const DeliveryTrace& trace,
    const std::vector<std::string>& headerComments);

// `simulate`: writes runs/, summary/, index.csv and metrics_median.csv
// under config.outputDir, which must be absent or empty. Everything is
// staged next to it and moved into place only after every run succeeded.
// Returns the written files relative to outputDir.
std::vector<std::filesystem::path> runSimulate(const ExperimentConfig& config);

struct MetricsRecord {
  std::string siteName;
  std::string label;
  ProxyMetrics metrics;
};

/// Reads a run or median metrics file written by runSimulate.
MetricsRecord loadMetricsFile(const std::filesystem::path& path);

struct SiteComparison {
  std::string siteName;
  Comparison comparison;
};

// `compare`: groups records by site (first-seen order) and compares each
// site against its own baseline-labeled run. Throws UnknownBaseline when
// any site lacks one.
std::vector<SiteComparison> compareRecords(
    const std::vector<MetricsRecord>& records,
    std::string_view baselineLabel,
    double epsilon = kDefaultSignEpsilon);

std::vector<SiteComparison> runCompare(
    const std::vector<std::filesystem::path>& metricsFiles,
    std::string_view baselineLabel,
    double epsilon = kDefaultSignEpsilon);

/// Aligned sign matrix: one row per site:label, one column per metric.
std::string formatSignMatrix(const std::vector<SiteComparison>& comparisons);

/// row,metric,baseline_ms,value_ms,relative_change,sign
std::string formatComparisonCsv(
    const std::vector<SiteComparison>& comparisons);

// `summarize`
std::string formatPrioritySummaryCsv(const WebsiteManifest& manifest);
std::string formatTypeSummaryCsv(const WebsiteManifest& manifest);
std::string formatSummaryText(const WebsiteManifest& manifest);

} // namespace epsched

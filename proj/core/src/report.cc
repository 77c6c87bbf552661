#include "epsched/report.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace epsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kModelNotes = {
    "metrics are delivery-order proxies, not browser measurements",
    "loss is drawn per quantum and per request; lost data is resent after "
    "2 x one-way delay; no congestion control",
    "urgency preemption takes effect at quantum boundaries",
};

std::string csvField(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

void writeComments(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& line : lines) {
    out << "# " << line << '\n';
  }
}

std::string shortest(double v) {
  return fmt::format("{}", v);
}

void writeFile(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << contents;
  if (!out.flush()) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

json metricsJson(const ProxyMetrics& m) {
  json obj = json::object();
  for (auto metric : kAllMetrics) {
    obj[std::string(metricKey(metric))] = metricValue(m, metric);
  }
  return obj;
}

std::optional<std::uint64_t> effectiveThreshold(
    StrategyChoice choice,
    const DeliveryPolicy& policy) {
  if (choice != StrategyChoice::Sam || !policy) {
    return std::nullopt;
  }
  return policy->samThresholdBytes();
}

struct RunSetup {
  RunPlan plan;
  DeliveryPolicy policy;
};

json runConfigJson(
    const ExperimentConfig& config,
    const WebsiteManifest& manifest,
    const RunSetup& setup,
    std::optional<unsigned> repetition) {
  json link = {
      {"bandwidth_bytes_per_sec", config.link.bandwidthBytesPerSec},
      {"one_way_delay_ms", config.link.oneWayDelayMs},
      {"loss_rate", config.link.lossRate},
      {"base_seed", config.link.seed},
  };
  if (repetition) {
    link["seed"] = repetitionSeed(config.link.seed, *repetition);
  }
  auto threshold = effectiveThreshold(setup.plan.strategy, setup.policy);
  json cfg = {
      {"schema_version", kReportSchemaVersion},
      {"manifest", config.manifestPath.generic_string()},
      {"site_name", manifest.siteName},
      {"strategy", toString(setup.plan.strategy)},
      {"sam_threshold_bytes",
       threshold ? json(*threshold) : json(nullptr)},
      {"mode", toString(setup.plan.mode)},
      {"link", std::move(link)},
      {"quantum_bytes", config.quantumBytes},
      {"repetitions", config.repetitions},
      {"model", kModelNotes},
  };
  if (repetition) {
    cfg["repetition"] = *repetition;
  }
  return cfg;
}

// Flattens a config object into "key=value" comment lines.
std::vector<std::string> configComments(const json& cfg) {
  std::vector<std::string> lines;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "link") {
      for (const auto& [lk, lv] : value.items()) {
        lines.push_back("link." + lk + "=" + lv.dump());
      }
    } else if (key == "model") {
      for (const auto& note : value) {
        lines.push_back("model: " + note.get<std::string>());
      }
    } else {
      lines.push_back(key + "=" + (value.is_string()
                                       ? value.get<std::string>()
                                       : value.dump()));
    }
  }
  return lines;
}

std::string runStem(const RunPlan& plan, unsigned repetition) {
  return fmt::format(
      "{}_{}_rep{:02}", toString(plan.strategy), toString(plan.mode),
      repetition);
}

std::string planStem(const RunPlan& plan) {
  return fmt::format("{}_{}", toString(plan.strategy), toString(plan.mode));
}

struct RunOutcome {
  DeliveryTrace trace;
  ProxyMetrics metrics;
};

std::vector<RunOutcome> executeRuns(
    const ExperimentConfig& config,
    const WebsiteManifest& manifest,
    const std::vector<RunSetup>& setups) {
  std::size_t total = setups.size() * config.repetitions;
  std::vector<RunOutcome> outcomes(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const RunSetup& setup = setups[i / config.repetitions];
      auto rep = static_cast<unsigned>(i % config.repetitions);
      try {
        LinkModel link = config.link;
        link.seed = repetitionSeed(config.link.seed, rep);
        DeliveryTrace trace = simulate(
            manifest, setup.policy, setup.plan.mode, link,
            config.quantumBytes);
        ProxyMetrics metrics = computeMetrics(trace, manifest);
        outcomes[i] = RunOutcome{std::move(trace), metrics};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  unsigned threads = std::clamp<unsigned>(
      config.jobs, 1, static_cast<unsigned>(std::max<std::size_t>(total, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    worker();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return outcomes;
}

fs::path prepareStaging(const fs::path& outputDir) {
  if (outputDir.empty()) {
    throw InputError("an output directory is required");
  }
  if (fs::exists(outputDir) &&
      (!fs::is_directory(outputDir) || !fs::is_empty(outputDir))) {
    throw InputError(
        "output directory " + outputDir.string() +
        " already exists and is not empty");
  }
  fs::path staging = outputDir;
  staging += ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging / "runs");
  fs::create_directories(staging / "summary");
  return staging;
}

} // namespace

std::string_view toString(StrategyChoice choice) {
  switch (choice) {
    case StrategyChoice::Baseline:
      return "baseline";
    case StrategyChoice::Dm:
      return "dm";
    case StrategyChoice::Rtam:
      return "rtam";
    case StrategyChoice::Sam:
      return "sam";
  }
  return "unknown";
}

std::optional<StrategyChoice> parseStrategyChoice(std::string_view name) {
  for (auto c : {StrategyChoice::Baseline, StrategyChoice::Dm,
                 StrategyChoice::Rtam, StrategyChoice::Sam}) {
    if (toString(c) == name) {
      return c;
    }
  }
  return std::nullopt;
}

DeliveryPolicy resolvePolicy(
    StrategyChoice choice,
    const WebsiteManifest& manifest,
    std::optional<std::uint64_t> samThresholdBytes) {
  switch (choice) {
    case StrategyChoice::Baseline:
      return std::nullopt;
    case StrategyChoice::Dm:
      return MappingStrategy::dm();
    case StrategyChoice::Rtam:
      return MappingStrategy::rtam();
    case StrategyChoice::Sam:
      if (samThresholdBytes && *samThresholdBytes == 0) {
        throw InputError("SAM threshold must be positive");
      }
      return MappingStrategy::sam(
          samThresholdBytes.value_or(meanScriptImageSize(manifest)));
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) {
    throw InputError("repetitions must be at least 1");
  }
  if (quantumBytes == 0) {
    throw InputError("quantum must be positive");
  }
  if (strategies.empty() || modes.empty()) {
    throw InputError("at least one strategy and one mode are required");
  }
  if (samThresholdBytes && *samThresholdBytes == 0) {
    throw InputError("SAM threshold must be positive");
  }
  try {
    link.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

std::string RunPlan::label() const {
  return fmt::format("{}/{}", toString(strategy), toString(mode));
}

std::vector<RunPlan> planRuns(const ExperimentConfig& config) {
  std::vector<RunPlan> plans;
  for (auto strategy : config.strategies) {
    for (auto mode : config.modes) {
      if (strategy == StrategyChoice::Baseline &&
          mode != SchedulerMode::SequentialFifo) {
        continue;
      }
      RunPlan plan{strategy, mode};
      bool duplicate = std::any_of(plans.begin(), plans.end(), [&](auto& p) {
        return p.strategy == strategy && p.mode == mode;
      });
      if (!duplicate) {
        plans.push_back(plan);
      }
    }
  }
  return plans;
}

std::uint64_t repetitionSeed(std::uint64_t baseSeed, unsigned repetition) {
  return baseSeed + repetition;
}

void writeUrgencyCsv(
    std::ostream& out,
    const WebsiteManifest& manifest,
    StrategyChoice choice,
    std::optional<std::uint64_t> samThresholdBytes) {
  DeliveryPolicy policy = resolvePolicy(choice, manifest, samThresholdBytes);
  std::vector<std::string> header = {
      fmt::format("schema_version={}", kReportSchemaVersion),
      "site_name=" + manifest.siteName,
      fmt::format("strategy={}", toString(choice)),
  };
  if (auto threshold = effectiveThreshold(choice, policy)) {
    header.push_back(fmt::format(
        "sam_threshold_bytes={}{}", *threshold,
        samThresholdBytes ? "" : " (pooled mean of script and image sizes)"));
  }
  writeComments(out, header);
  out << "resource_id,type,chromium_priority,urgency\n";
  auto urgencies = assignUrgencies(manifest, policy);
  for (std::size_t i = 0; i < manifest.resources.size(); ++i) {
    const auto& r = manifest.resources[i];
    out << csvField(r.resourceId) << ',' << toString(r.type) << ','
        << toString(r.chromiumPriority) << ',' << urgencies[i].value() << '\n';
  }
}

void writeTraceCsv(
    std::ostream& out,
    const DeliveryTrace& trace,
    const std::vector<std::string>& headerComments) {
  writeComments(out, headerComments);
  out << "resource_id,request_ms,first_byte_ms,completion_ms\n";
  for (const auto& r : trace.resources) {
    out << fmt::format(
        "{},{:.6f},{:.6f},{:.6f}\n", csvField(r.resourceId), r.requestMs,
        r.firstByteMs, r.completionMs);
  }
}

std::vector<fs::path> runSimulate(const ExperimentConfig& config) {
  config.validate();
  WebsiteManifest manifest = loadManifest(config.manifestPath);
  std::vector<RunPlan> plans = planRuns(config);
  if (plans.empty()) {
    throw InputError("the baseline strategy requires the fifo mode");
  }
  std::vector<RunSetup> setups;
  for (const auto& plan : plans) {
    setups.push_back(RunSetup{
        plan,
        resolvePolicy(plan.strategy, manifest, config.samThresholdBytes)});
  }

  std::vector<RunOutcome> outcomes = executeRuns(config, manifest, setups);

  fs::path staging = prepareStaging(config.outputDir);
  std::vector<fs::path> written;
  try {
    std::ostringstream index;
    std::ostringstream medianCsv;
    json baseConfig = runConfigJson(config, manifest, setups.front(), {});
    baseConfig.erase("strategy");
    baseConfig.erase("mode");
    baseConfig.erase("sam_threshold_bytes");
    baseConfig["strategies"] = json::array();
    for (const auto& s : setups) {
      baseConfig["strategies"].push_back(s.plan.label());
    }
    writeComments(index, configComments(baseConfig));
    index << "label,strategy,mode,repetition,seed,trace_file,events_file,"
             "metrics_file\n";
    writeComments(medianCsv, configComments(baseConfig));
    medianCsv << "label,strategy,mode,repetitions";
    for (auto metric : kAllMetrics) {
      medianCsv << ',' << metricKey(metric);
    }
    medianCsv << '\n';

    for (std::size_t s = 0; s < setups.size(); ++s) {
      const RunSetup& setup = setups[s];
      std::vector<ProxyMetrics> perRun;
      json runFiles = json::array();
      for (unsigned rep = 0; rep < config.repetitions; ++rep) {
        const RunOutcome& outcome = outcomes[s * config.repetitions + rep];
        perRun.push_back(outcome.metrics);
        json cfg = runConfigJson(config, manifest, setup, rep);
        auto comments = configComments(cfg);
        std::string stem = runStem(setup.plan, rep);
        fs::path tracePath = fs::path("runs") / (stem + ".trace.csv");
        fs::path eventsPath = fs::path("runs") / (stem + ".events.csv");
        fs::path metricsPath = fs::path("runs") / (stem + ".metrics.json");

        std::ostringstream trace;
        writeTraceCsv(trace, outcome.trace, comments);
        writeFile(staging / tracePath, trace.str());

        std::ostringstream events;
        writeComments(events, comments);
        events << "time_ms,resource_id,bytes\n";
        for (const auto& e : outcome.trace.events) {
          events << fmt::format(
              "{:.6f},{},{}\n", e.timeMs, csvField(e.resourceId), e.bytes);
        }
        writeFile(staging / eventsPath, events.str());

        json metricsDoc = {
            {"schema_version", kReportSchemaVersion},
            {"kind", "run"},
            {"site_name", manifest.siteName},
            {"label", setup.plan.label()},
            {"config", cfg},
            {"metrics", metricsJson(outcome.metrics)},
            {"lost_quanta", outcome.trace.lostQuanta},
            {"lost_requests", outcome.trace.lostRequests},
        };
        writeFile(staging / metricsPath, metricsDoc.dump(2) + "\n");

        index << fmt::format(
            "{},{},{},{},{},{},{},{}\n", setup.plan.label(),
            toString(setup.plan.strategy), toString(setup.plan.mode), rep,
            repetitionSeed(config.link.seed, rep), tracePath.generic_string(),
            eventsPath.generic_string(), metricsPath.generic_string());
        written.insert(written.end(), {tracePath, eventsPath, metricsPath});
        runFiles.push_back(metricsPath.generic_string());
      }

      ProxyMetrics median = medianMetrics(perRun);
      fs::path summaryPath =
          fs::path("summary") / (planStem(setup.plan) + ".median.json");
      json summaryDoc = {
          {"schema_version", kReportSchemaVersion},
          {"kind", "median"},
          {"site_name", manifest.siteName},
          {"label", setup.plan.label()},
          {"config", runConfigJson(config, manifest, setup, {})},
          {"metrics", metricsJson(median)},
          {"runs", runFiles},
      };
      writeFile(staging / summaryPath, summaryDoc.dump(2) + "\n");
      written.push_back(summaryPath);

      medianCsv << fmt::format(
          "{},{},{},{}", setup.plan.label(), toString(setup.plan.strategy),
          toString(setup.plan.mode), config.repetitions);
      for (auto metric : kAllMetrics) {
        medianCsv << ',' << shortest(metricValue(median, metric));
      }
      medianCsv << '\n';
    }

    writeFile(staging / "index.csv", index.str());
    writeFile(staging / "metrics_median.csv", medianCsv.str());
    written.insert(written.end(), {"index.csv", "metrics_median.csv"});

    if (fs::exists(config.outputDir)) {
      fs::remove(config.outputDir);
    }
    if (config.outputDir.has_parent_path()) {
      fs::create_directories(config.outputDir.parent_path());
    }
    fs::rename(staging, config.outputDir);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
  std::sort(written.begin(), written.end());
  return written;
}

MetricsRecord loadMetricsFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open metrics file " + path.string());
  }
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw InputError(path.string() + ": not a JSON object");
  }
  auto text = [&](const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw InputError(path.string() + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
  };
  MetricsRecord record{text("site_name"), text("label"), {}};
  auto metrics = doc.find("metrics");
  if (metrics == doc.end() || !metrics->is_object()) {
    throw InputError(path.string() + ": missing 'metrics' object");
  }
  std::set<std::string> present;
  for (const auto& [key, value] : metrics->items()) {
    present.insert(key);
  }
  for (auto metric : kAllMetrics) {
    auto it = metrics->find(std::string(metricKey(metric)));
    if (it == metrics->end() || !it->is_number()) {
      throw MismatchedMetrics(
          path.string() + ": metric '" + std::string(metricKey(metric)) +
          "' missing or not numeric");
    }
    setMetricValue(record.metrics, metric, it->get<double>());
    present.erase(std::string(metricKey(metric)));
  }
  if (!present.empty()) {
    throw MismatchedMetrics(
        path.string() + ": unexpected metric '" + *present.begin() + "'");
  }
  return record;
}

std::vector<SiteComparison> compareRecords(
    const std::vector<MetricsRecord>& records,
    std::string_view baselineLabel,
    double epsilon) {
  if (records.size() < 2) {
    throw InputError("compare needs at least two metrics files");
  }
  std::vector<std::string> sites;
  std::map<std::string, std::vector<LabeledMetrics>> bySite;
  for (const auto& r : records) {
    if (!bySite.contains(r.siteName)) {
      sites.push_back(r.siteName);
    }
    bySite[r.siteName].push_back(LabeledMetrics{r.label, r.metrics});
  }
  std::vector<SiteComparison> out;
  for (const auto& site : sites) {
    const auto& runs = bySite[site];
    if (runs.size() < 2) {
      throw InputError("site '" + site + "' has a single metrics file");
    }
    try {
      out.push_back(SiteComparison{site, compare(runs, baselineLabel, epsilon)});
    } catch (const UnknownBaseline&) {
      throw UnknownBaseline(
          "site '" + site + "' has no run labeled '" +
          std::string(baselineLabel) + "'");
    }
  }
  return out;
}

std::vector<SiteComparison> runCompare(
    const std::vector<fs::path>& metricsFiles,
    std::string_view baselineLabel,
    double epsilon) {
  std::vector<MetricsRecord> records;
  for (const auto& path : metricsFiles) {
    records.push_back(loadMetricsFile(path));
  }
  return compareRecords(records, baselineLabel, epsilon);
}

namespace {

std::string rowLabel(const SiteComparison& site, const ComparisonRow& row) {
  return site.siteName + ":" + row.label;
}

} // namespace

std::string formatSignMatrix(const std::vector<SiteComparison>& comparisons) {
  std::size_t width = 3;
  for (const auto& site : comparisons) {
    for (const auto& row : site.comparison.rows) {
      width = std::max(width, rowLabel(site, row).size());
    }
  }
  std::string out;
  if (!comparisons.empty()) {
    const auto& first = comparisons.front().comparison;
    out += fmt::format(
        "baseline: {}   no-change band: |change| < {}%\n",
        first.baselineLabel, first.epsilon * 100.0);
  }
  out += fmt::format("{:<{}}", "run", width);
  for (auto metric : kAllMetrics) {
    out += fmt::format("  {:<4}", metricTitle(metric));
  }
  out += '\n';
  for (const auto& site : comparisons) {
    for (const auto& row : site.comparison.rows) {
      std::string line = fmt::format("{:<{}}", rowLabel(site, row), width);
      for (const auto& change : row.changes) {
        // Symbols are multi-byte; pad by display width.
        line += "  ";
        line += symbol(change.sign);
        line += "   ";
      }
      while (!line.empty() && line.back() == ' ') {
        line.pop_back();
      }
      out += line + '\n';
    }
  }
  return out;
}

std::string formatComparisonCsv(
    const std::vector<SiteComparison>& comparisons) {
  std::ostringstream out;
  if (!comparisons.empty()) {
    const auto& first = comparisons.front().comparison;
    writeComments(out, {
        fmt::format("schema_version={}", kReportSchemaVersion),
        "baseline=" + first.baselineLabel,
        "epsilon=" + shortest(first.epsilon),
        "relative_change=(baseline-value)/baseline",
    });
  }
  out << "row,metric,baseline_ms,value_ms,relative_change,sign\n";
  for (const auto& site : comparisons) {
    for (const auto& row : site.comparison.rows) {
      for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
        const auto& c = row.changes[k];
        out << csvField(rowLabel(site, row)) << ','
            << metricKey(kAllMetrics[k]) << ',' << shortest(c.baseline) << ','
            << shortest(c.value) << ',' << shortest(c.relativeChange) << ','
            << symbol(c.sign) << '\n';
      }
    }
  }
  return out.str();
}

std::string formatPrioritySummaryCsv(const WebsiteManifest& manifest) {
  std::ostringstream out;
  writeComments(out, {
      fmt::format("schema_version={}", kReportSchemaVersion),
      "site_name=" + manifest.siteName,
  });
  out << "priority,type,count,total_bytes\n";
  for (const auto& [key, cell] : summarizeByPriority(manifest)) {
    out << toString(key.first) << ',' << toString(key.second) << ','
        << cell.count << ',' << cell.totalBytes << '\n';
  }
  return out.str();
}

std::string formatTypeSummaryCsv(const WebsiteManifest& manifest) {
  std::ostringstream out;
  writeComments(out, {
      fmt::format("schema_version={}", kReportSchemaVersion),
      "site_name=" + manifest.siteName,
  });
  out << "type,count,total_bytes\n";
  for (const auto& [type, cell] : summarizeByType(manifest)) {
    out << toString(type) << ',' << cell.count << ',' << cell.totalBytes
        << '\n';
  }
  return out.str();
}

std::string formatSummaryText(const WebsiteManifest& manifest) {
  std::uint64_t totalBytes = manifest.totalBytes();
  std::size_t totalCount = manifest.resources.size();
  auto pct = [](std::uint64_t part, std::uint64_t whole) {
    return whole == 0 ? 0.0
                      : 100.0 * static_cast<double>(part) /
            static_cast<double>(whole);
  };

  std::string out = fmt::format(
      "site: {}\nresources: {}\ntotal bytes: {}\n\n", manifest.siteName,
      totalCount, totalBytes);
  out += "bytes per chromium priority and type\n";
  out += fmt::format(
      "{:<10} {:<11} {:>6} {:>12}\n", "priority", "type", "count",
      "total_bytes");
  for (const auto& [key, cell] : summarizeByPriority(manifest)) {
    out += fmt::format(
        "{:<10} {:<11} {:>6} {:>12}\n", toString(key.first),
        toString(key.second), cell.count, cell.totalBytes);
  }
  out += fmt::format(
      "{:<10} {:<11} {:>6} {:>12}\n\n", "total", "", totalCount, totalBytes);

  out += "distribution by type\n";
  out += fmt::format(
      "{:<11} {:>6} {:>12} {:>8} {:>8}\n", "type", "count", "total_bytes",
      "count_%", "bytes_%");
  for (const auto& [type, cell] : summarizeByType(manifest)) {
    out += fmt::format(
        "{:<11} {:>6} {:>12} {:>8.1f} {:>8.1f}\n", toString(type), cell.count,
        cell.totalBytes, pct(cell.count, totalCount),
        pct(cell.totalBytes, totalBytes));
  }
  out += fmt::format(
      "{:<11} {:>6} {:>12} {:>8.1f} {:>8.1f}\n", "total", totalCount,
      totalBytes, 100.0, 100.0);
  return out;
}

} // namespace epsched

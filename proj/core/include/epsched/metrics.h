#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "epsched/manifest.h"
#include "epsched/netsim.h"

namespace epsched {

/// Delivery-order stand-ins for page-load metrics, in milliseconds. They
/// are proxies; no rendering or script execution is modeled.
struct ProxyMetrics {
  double fcpProxyMs = 0;
  double lcpProxyMs = 0;
  double ttiProxyMs = 0;
  double siProxyMs = 0;
  double pageCompleteMs = 0;

  bool operator==(const ProxyMetrics&) const = default;
};

enum class Metric : std::uint8_t { Fcp, Lcp, Tti, Si, PageComplete };

inline constexpr std::array<Metric, 5> kAllMetrics = {
    Metric::Fcp, Metric::Lcp, Metric::Tti, Metric::Si, Metric::PageComplete};

/// Field name used in metrics files, e.g. "fcp_proxy_ms".
std::string_view metricKey(Metric metric);
/// Short column title, e.g. "FCP".
std::string_view metricTitle(Metric metric);
double metricValue(const ProxyMetrics& metrics, Metric metric);
void setMetricValue(ProxyMetrics& metrics, Metric metric, double value);

class MissingResource : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * fcp: latest completion among the root document and very-high
 * stylesheets. lcp: completion of the largest image (first listed on
 * ties), or fcp without images. tti: latest of fcp and every script.
 * si: byte-weighted mean completion. pageComplete: latest completion.
 *
 * Throws MissingResource when the trace lacks a manifest resource.
 */
ProxyMetrics computeMetrics(
    const DeliveryTrace& trace,
    const WebsiteManifest& manifest);

/// Per-metric median; even counts average the two middle values.
ProxyMetrics medianMetrics(const std::vector<ProxyMetrics>& runs);

enum class ChangeSign : std::uint8_t { Improvement, Regression, NoChange };

/// "+", "−" or "·".
std::string_view symbol(ChangeSign sign);

struct MetricChange {
  double baseline = 0;
  double value = 0;
  /// (baseline - value) / baseline; positive means faster.
  double relativeChange = 0;
  ChangeSign sign = ChangeSign::NoChange;
};

struct LabeledMetrics {
  std::string label;
  ProxyMetrics metrics;
};

struct ComparisonRow {
  std::string label;
  std::array<MetricChange, kAllMetrics.size()> changes;
};

struct Comparison {
  std::string baselineLabel;
  double epsilon = 0;
  std::vector<ComparisonRow> rows;
};

class UnknownBaseline : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultSignEpsilon = 0.005;

double relativeChange(double baseline, double value);
ChangeSign classifyChange(double relativeChange, double epsilon);

// The first run carrying baselineLabel is the reference; every other run
// becomes a row, in input order. Changes with magnitude below epsilon are
// NoChange. Throws UnknownBaseline, or std::invalid_argument for fewer
// than two runs.
Comparison compare(
    const std::vector<LabeledMetrics>& runs,
    std::string_view baselineLabel,
    double epsilon = kDefaultSignEpsilon);

} // namespace epsched

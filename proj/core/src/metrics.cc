#include "epsched/metrics.h"

#include <algorithm>
#include <cmath>

namespace epsched {

std::string_view metricKey(Metric metric) {
  switch (metric) {
    case Metric::Fcp:
      return "fcp_proxy_ms";
    case Metric::Lcp:
      return "lcp_proxy_ms";
    case Metric::Tti:
      return "tti_proxy_ms";
    case Metric::Si:
      return "si_proxy_ms";
    case Metric::PageComplete:
      return "page_complete_ms";
  }
  return "unknown";
}

std::string_view metricTitle(Metric metric) {
  switch (metric) {
    case Metric::Fcp:
      return "FCP";
    case Metric::Lcp:
      return "LCP";
    case Metric::Tti:
      return "TTI";
    case Metric::Si:
      return "SI";
    case Metric::PageComplete:
      return "PAGE";
  }
  return "?";
}

double metricValue(const ProxyMetrics& m, Metric metric) {
  switch (metric) {
    case Metric::Fcp:
      return m.fcpProxyMs;
    case Metric::Lcp:
      return m.lcpProxyMs;
    case Metric::Tti:
      return m.ttiProxyMs;
    case Metric::Si:
      return m.siProxyMs;
    case Metric::PageComplete:
      return m.pageCompleteMs;
  }
  return 0;
}

void setMetricValue(ProxyMetrics& m, Metric metric, double value) {
  switch (metric) {
    case Metric::Fcp:
      m.fcpProxyMs = value;
      break;
    case Metric::Lcp:
      m.lcpProxyMs = value;
      break;
    case Metric::Tti:
      m.ttiProxyMs = value;
      break;
    case Metric::Si:
      m.siProxyMs = value;
      break;
    case Metric::PageComplete:
      m.pageCompleteMs = value;
      break;
  }
}

ProxyMetrics computeMetrics(
    const DeliveryTrace& trace,
    const WebsiteManifest& manifest) {
  std::vector<double> completion;
  completion.reserve(manifest.resources.size());
  for (const auto& r : manifest.resources) {
    const ResourceTiming* t = trace.find(r.resourceId);
    if (t == nullptr) {
      throw MissingResource("trace has no timing for '" + r.resourceId + "'");
    }
    completion.push_back(t->completionMs);
  }

  ProxyMetrics m;
  const ResourceDescriptor* largestImage = nullptr;
  double largestImageDone = 0;
  double scriptsDone = 0;
  double weighted = 0;
  double totalBytes = 0;
  for (std::size_t i = 0; i < manifest.resources.size(); ++i) {
    const auto& r = manifest.resources[i];
    double done = completion[i];
    bool root = r.type == ResourceType::Document && !r.requestedAfter;
    bool blockingSheet = r.type == ResourceType::StyleSheet &&
        r.chromiumPriority == ChromiumPriority::VeryHigh;
    if (root || blockingSheet) {
      m.fcpProxyMs = std::max(m.fcpProxyMs, done);
    }
    if (r.type == ResourceType::Image &&
        (largestImage == nullptr || r.sizeBytes > largestImage->sizeBytes)) {
      largestImage = &r;
      largestImageDone = done;
    }
    if (r.type == ResourceType::Script) {
      scriptsDone = std::max(scriptsDone, done);
    }
    auto size = static_cast<double>(r.sizeBytes);
    weighted += size * done;
    totalBytes += size;
    m.pageCompleteMs = std::max(m.pageCompleteMs, done);
  }
  m.lcpProxyMs = largestImage != nullptr ? largestImageDone : m.fcpProxyMs;
  m.ttiProxyMs = std::max(m.fcpProxyMs, scriptsDone);
  // The weighted mean can exceed the max by an ulp; keep the invariant.
  m.siProxyMs = std::min(weighted / totalBytes, m.pageCompleteMs);
  return m;
}

ProxyMetrics medianMetrics(const std::vector<ProxyMetrics>& runs) {
  if (runs.empty()) {
    throw std::invalid_argument("median of zero runs");
  }
  ProxyMetrics out;
  std::vector<double> values(runs.size());
  for (auto metric : kAllMetrics) {
    std::transform(runs.begin(), runs.end(), values.begin(),
                   [metric](const ProxyMetrics& m) {
                     return metricValue(m, metric);
                   });
    std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double median = values[mid];
    if (values.size() % 2 == 0) {
      double lower = *std::max_element(values.begin(), values.begin() + mid);
      median = (lower + median) / 2.0;
    }
    setMetricValue(out, metric, median);
  }
  return out;
}

std::string_view symbol(ChangeSign sign) {
  switch (sign) {
    case ChangeSign::Improvement:
      return "+";
    case ChangeSign::Regression:
      return "−";
    case ChangeSign::NoChange:
      return "·";
  }
  return "?";
}

double relativeChange(double baseline, double value) {
  if (baseline == value) {
    return 0.0;
  }
  return (baseline - value) / baseline;
}

ChangeSign classifyChange(double change, double epsilon) {
  if (change == 0.0 || std::fabs(change) < epsilon) {
    return ChangeSign::NoChange;
  }
  return change > 0 ? ChangeSign::Improvement : ChangeSign::Regression;
}

Comparison compare(
    const std::vector<LabeledMetrics>& runs,
    std::string_view baselineLabel,
    double epsilon) {
  if (runs.size() < 2) {
    throw std::invalid_argument("comparison needs at least two runs");
  }
  if (!(epsilon >= 0)) {
    throw std::invalid_argument("epsilon must be non-negative");
  }
  auto base = std::find_if(runs.begin(), runs.end(), [&](const auto& r) {
    return r.label == baselineLabel;
  });
  if (base == runs.end()) {
    throw UnknownBaseline(
        "no run labeled '" + std::string(baselineLabel) + "'");
  }

  Comparison out{std::string(baselineLabel), epsilon, {}};
  for (auto it = runs.begin(); it != runs.end(); ++it) {
    if (it == base) {
      continue;
    }
    ComparisonRow row{it->label, {}};
    for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
      double b = metricValue(base->metrics, kAllMetrics[k]);
      double v = metricValue(it->metrics, kAllMetrics[k]);
      double rel = relativeChange(b, v);
      row.changes[k] = MetricChange{b, v, rel, classifyChange(rel, epsilon)};
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

} // namespace epsched

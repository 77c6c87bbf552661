#include "epsched/mapping.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace epsched {

namespace {

constexpr std::array<int, 5> kDirectTable = {0, 2, 3, 5, 7};

constexpr int kNoCell = -1;

// Rows: priority VeryHigh..VeryLow. Columns: Document, StyleSheet, Script,
// Image, Other.
constexpr std::array<std::array<int, 5>, 5> kTypeAwareTable = {{
    {0, 1, kNoCell, kNoCell, kNoCell},
    {kNoCell, kNoCell, 2, 3, kNoCell},
    {kNoCell, kNoCell, 4, 5, kNoCell},
    {kNoCell, kNoCell, 6, 6, kNoCell},
    {kNoCell, kNoCell, kNoCell, kNoCell, 7},
}};

constexpr std::size_t index(ChromiumPriority p) {
  return static_cast<std::size_t>(p);
}

constexpr std::size_t index(ResourceType t) {
  return static_cast<std::size_t>(t);
}

std::string lowercase(std::string_view in) {
  std::string out(in);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::optional<ResourceType> classifyMime(std::string_view rawMime) {
  std::string mime = lowercase(rawMime.substr(0, rawMime.find(';')));
  while (!mime.empty() && mime.back() == ' ') {
    mime.pop_back();
  }
  if (mime.empty()) {
    return std::nullopt;
  }
  if (mime == "text/html" || mime == "application/xhtml+xml") {
    return ResourceType::Document;
  }
  if (mime == "text/css") {
    return ResourceType::StyleSheet;
  }
  if (mime.find("javascript") != std::string::npos ||
      mime.find("ecmascript") != std::string::npos) {
    return ResourceType::Script;
  }
  if (mime.starts_with("image/")) {
    return ResourceType::Image;
  }
  return std::nullopt;
}

std::optional<ResourceType> classifyExtension(std::string_view urlPath) {
  urlPath = urlPath.substr(0, urlPath.find_first_of("?#"));
  auto slash = urlPath.rfind('/');
  if (slash != std::string_view::npos) {
    urlPath.remove_prefix(slash + 1);
  }
  auto dot = urlPath.rfind('.');
  if (dot == std::string_view::npos) {
    return std::nullopt;
  }
  std::string ext = lowercase(urlPath.substr(dot + 1));
  if (ext == "html" || ext == "htm") {
    return ResourceType::Document;
  }
  if (ext == "css") {
    return ResourceType::StyleSheet;
  }
  if (ext == "js" || ext == "mjs") {
    return ResourceType::Script;
  }
  static constexpr std::array<std::string_view, 8> kImageExts = {
      "png", "jpg", "jpeg", "gif", "webp", "svg", "ico", "avif"};
  if (std::find(kImageExts.begin(), kImageExts.end(), ext) !=
      kImageExts.end()) {
    return ResourceType::Image;
  }
  return std::nullopt;
}

} // namespace

std::string_view toString(ChromiumPriority priority) {
  switch (priority) {
    case ChromiumPriority::VeryHigh:
      return "very_high";
    case ChromiumPriority::High:
      return "high";
    case ChromiumPriority::Medium:
      return "medium";
    case ChromiumPriority::Low:
      return "low";
    case ChromiumPriority::VeryLow:
      return "very_low";
  }
  return "unknown";
}

std::string_view toString(ResourceType type) {
  switch (type) {
    case ResourceType::Document:
      return "document";
    case ResourceType::StyleSheet:
      return "stylesheet";
    case ResourceType::Script:
      return "script";
    case ResourceType::Image:
      return "image";
    case ResourceType::Other:
      return "other";
  }
  return "unknown";
}

std::string_view toString(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Dm:
      return "dm";
    case StrategyKind::Rtam:
      return "rtam";
    case StrategyKind::Sam:
      return "sam";
  }
  return "unknown";
}

std::optional<ChromiumPriority> parseChromiumPriority(std::string_view name) {
  for (auto p : kAllPriorities) {
    if (toString(p) == name) {
      return p;
    }
  }
  return std::nullopt;
}

std::optional<ResourceType> parseResourceType(std::string_view name) {
  for (auto t : kAllResourceTypes) {
    if (toString(t) == name) {
      return t;
    }
  }
  return std::nullopt;
}

UrgencyLevel dmMap(ChromiumPriority priority) {
  return UrgencyLevel(kDirectTable.at(index(priority)));
}

bool rtamHasCell(ChromiumPriority priority, ResourceType type) {
  return kTypeAwareTable.at(index(priority)).at(index(type)) != kNoCell;
}

UrgencyLevel rtamMap(ChromiumPriority priority, ResourceType type) {
  int cell = kTypeAwareTable.at(index(priority)).at(index(type));
  return cell == kNoCell ? dmMap(priority) : UrgencyLevel(cell);
}

UrgencyLevel samMap(
    ChromiumPriority priority,
    ResourceType type,
    std::uint64_t sizeBytes,
    std::uint64_t thresholdBytes) {
  if (thresholdBytes == 0) {
    throw std::invalid_argument("SAM threshold must be positive");
  }
  UrgencyLevel base = rtamMap(priority, type);
  bool adjustable = priority != ChromiumPriority::VeryHigh &&
      (type == ResourceType::Script || type == ResourceType::Image);
  if (!adjustable) {
    return base;
  }
  int shifted = sizeBytes > thresholdBytes ? base.value() - 1
                                           : base.value() + 1;
  return UrgencyLevel(
      std::clamp(shifted, UrgencyLevel::kMin, UrgencyLevel::kMax));
}

MappingStrategy MappingStrategy::sam(std::uint64_t thresholdBytes) {
  if (thresholdBytes == 0) {
    throw std::invalid_argument("SAM threshold must be positive");
  }
  return MappingStrategy(StrategyKind::Sam, thresholdBytes);
}

UrgencyLevel MappingStrategy::assign(
    ChromiumPriority priority,
    ResourceType type,
    std::uint64_t sizeBytes) const {
  switch (kind_) {
    case StrategyKind::Dm:
      return dmMap(priority);
    case StrategyKind::Rtam:
      return rtamMap(priority, type);
    case StrategyKind::Sam:
      return samMap(priority, type, sizeBytes, *threshold_);
  }
  return dmMap(priority);
}

ResourceType classifyResource(
    std::string_view mimeType,
    std::string_view urlPath) {
  if (auto byMime = classifyMime(mimeType)) {
    return *byMime;
  }
  return classifyExtension(urlPath).value_or(ResourceType::Other);
}

} // namespace epsched

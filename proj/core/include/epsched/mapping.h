#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "epsched/priority.h"

namespace epsched {

/// Chromium's five resource priority levels; codes follow Chromium's
/// VeryHigh(0) .. VeryLow(4) numbering.
enum class ChromiumPriority : std::uint8_t {
  VeryHigh = 0,
  High = 1,
  Medium = 2,
  Low = 3,
  VeryLow = 4,
};

enum class ResourceType : std::uint8_t {
  Document = 0,
  StyleSheet = 1,
  Script = 2,
  Image = 3,
  Other = 4,
};

inline constexpr std::array<ChromiumPriority, 5> kAllPriorities = {
    ChromiumPriority::VeryHigh,
    ChromiumPriority::High,
    ChromiumPriority::Medium,
    ChromiumPriority::Low,
    ChromiumPriority::VeryLow,
};

inline constexpr std::array<ResourceType, 5> kAllResourceTypes = {
    ResourceType::Document,
    ResourceType::StyleSheet,
    ResourceType::Script,
    ResourceType::Image,
    ResourceType::Other,
};

// Stable lowercase names used in manifests, CSV output and the CLI.
std::string_view toString(ChromiumPriority priority);
std::string_view toString(ResourceType type);
std::optional<ChromiumPriority> parseChromiumPriority(std::string_view name);
std::optional<ResourceType> parseResourceType(std::string_view name);

enum class StrategyKind : std::uint8_t { Dm, Rtam, Sam };

class MappingStrategy {
 public:
  static MappingStrategy dm() { return MappingStrategy(StrategyKind::Dm, {}); }
  static MappingStrategy rtam() {
    return MappingStrategy(StrategyKind::Rtam, {});
  }
  /// Throws std::invalid_argument when thresholdBytes is zero.
  static MappingStrategy sam(std::uint64_t thresholdBytes);

  StrategyKind kind() const { return kind_; }
  /// Present iff kind() == Sam.
  std::optional<std::uint64_t> samThresholdBytes() const { return threshold_; }

  UrgencyLevel assign(
      ChromiumPriority priority,
      ResourceType type,
      std::uint64_t sizeBytes) const;

  bool operator==(const MappingStrategy&) const = default;

 private:
  MappingStrategy(StrategyKind kind, std::optional<std::uint64_t> threshold)
      : kind_(kind), threshold_(threshold) {}

  StrategyKind kind_;
  std::optional<std::uint64_t> threshold_;
};

std::string_view toString(StrategyKind kind);

UrgencyLevel dmMap(ChromiumPriority priority);

/// Resource-type-aware table; pairs without a cell fall back to dmMap.
UrgencyLevel rtamMap(ChromiumPriority priority, ResourceType type);

/// True for the nine (priority, type) pairs that carry an RTAM cell.
bool rtamHasCell(ChromiumPriority priority, ResourceType type);

// Size-aware refinement of RTAM for High/Medium/Low scripts and images:
// one level more urgent above the threshold, one level less urgent at or
// below it, clamped to [0, 7]. Everything else is plain RTAM.
UrgencyLevel samMap(
    ChromiumPriority priority,
    ResourceType type,
    std::uint64_t sizeBytes,
    std::uint64_t thresholdBytes);

// Mime type wins over the path extension. Mime parameters (";charset=")
// and URL query/fragment are ignored; matching is case-insensitive.
ResourceType classifyResource(std::string_view mimeType, std::string_view urlPath);

} // namespace epsched

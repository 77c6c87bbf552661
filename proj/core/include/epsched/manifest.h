#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "epsched/mapping.h"

namespace epsched {

inline constexpr int kManifestSchemaVersion = 1;

struct ResourceDescriptor {
  std::string resourceId;
  std::string urlPath;
  ResourceType type = ResourceType::Other;
  std::uint64_t sizeBytes = 0;
  ChromiumPriority chromiumPriority = ChromiumPriority::Medium;
  std::optional<std::string> requestedAfter;

  bool operator==(const ResourceDescriptor&) const = default;
};

/// A validated page: unique ids, an acyclic requested_after graph and a
/// single root document. Resource order is request order.
struct WebsiteManifest {
  std::string siteName;
  std::vector<ResourceDescriptor> resources;

  const ResourceDescriptor& root() const;
  std::uint64_t totalBytes() const;
  /// Index of the resource with this id, if any.
  std::optional<std::size_t> indexOf(std::string_view resourceId) const;

  bool operator==(const WebsiteManifest&) const = default;
};

class ManifestParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestValidationError : public std::runtime_error {
 public:
  ManifestValidationError(std::string invariant, std::string resourceId);

  const std::string& invariant() const { return invariant_; }
  const std::string& resourceId() const { return resourceId_; }

 private:
  std::string invariant_;
  std::string resourceId_;
};

/// Throws ManifestValidationError naming the first violated invariant.
void validateManifest(const WebsiteManifest& manifest);

WebsiteManifest manifestFromJson(const nlohmann::json& doc);
nlohmann::json manifestToJson(const WebsiteManifest& manifest);

WebsiteManifest parseManifest(std::string_view text);
WebsiteManifest loadManifest(const std::filesystem::path& path);
void saveManifest(
    const WebsiteManifest& manifest,
    const std::filesystem::path& path);

struct ByteCount {
  std::uint64_t count = 0;
  std::uint64_t totalBytes = 0;

  bool operator==(const ByteCount&) const = default;
};

/// Only non-empty cells are present.
using PrioritySummary =
    std::map<std::pair<ChromiumPriority, ResourceType>, ByteCount>;

/// Every resource type is present, empty ones as {0, 0}.
using TypeSummary = std::map<ResourceType, ByteCount>;

PrioritySummary summarizeByPriority(const WebsiteManifest& manifest);
TypeSummary summarizeByType(const WebsiteManifest& manifest);

/// Pooled mean size over scripts and images (floor, at least 1 byte).
std::uint64_t meanScriptImageSize(const WebsiteManifest& manifest);

} // namespace epsched

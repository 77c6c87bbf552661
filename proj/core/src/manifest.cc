#include "epsched/manifest.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace epsched {

using nlohmann::json;

ManifestValidationError::ManifestValidationError(
    std::string invariant,
    std::string resourceId)
    : std::runtime_error(
          resourceId.empty()
              ? "manifest invalid: " + invariant
              : "manifest invalid: " + invariant + " (resource_id '" +
                  resourceId + "')"),
      invariant_(std::move(invariant)),
      resourceId_(std::move(resourceId)) {}

const ResourceDescriptor& WebsiteManifest::root() const {
  for (const auto& r : resources) {
    if (r.type == ResourceType::Document && !r.requestedAfter) {
      return r;
    }
  }
  throw ManifestValidationError("manifest has no root document", "");
}

std::uint64_t WebsiteManifest::totalBytes() const {
  std::uint64_t total = 0;
  for (const auto& r : resources) {
    total += r.sizeBytes;
  }
  return total;
}

std::optional<std::size_t> WebsiteManifest::indexOf(
    std::string_view resourceId) const {
  for (std::size_t i = 0; i < resources.size(); ++i) {
    if (resources[i].resourceId == resourceId) {
      return i;
    }
  }
  return std::nullopt;
}

void validateManifest(const WebsiteManifest& manifest) {
  if (manifest.resources.empty()) {
    throw ManifestValidationError("manifest must list at least one resource", "");
  }

  std::unordered_map<std::string_view, std::size_t> byId;
  for (std::size_t i = 0; i < manifest.resources.size(); ++i) {
    const auto& r = manifest.resources[i];
    if (r.resourceId.empty()) {
      throw ManifestValidationError("resource_id must be non-empty", "");
    }
    if (!byId.emplace(r.resourceId, i).second) {
      throw ManifestValidationError("resource_id must be unique", r.resourceId);
    }
    if (r.sizeBytes == 0) {
      throw ManifestValidationError("size_bytes must be positive", r.resourceId);
    }
  }

  std::vector<std::size_t> parent(manifest.resources.size(), SIZE_MAX);
  for (std::size_t i = 0; i < manifest.resources.size(); ++i) {
    const auto& r = manifest.resources[i];
    if (!r.requestedAfter) {
      continue;
    }
    auto it = byId.find(*r.requestedAfter);
    if (it == byId.end()) {
      throw ManifestValidationError(
          "requested_after must name an existing resource", r.resourceId);
    }
    parent[i] = it->second;
  }

  // Each resource has at most one trigger, so a cycle shows up as a
  // parent chain that revisits a node of the current walk.
  enum class Mark : std::uint8_t { Unseen, OnPath, Done };
  std::vector<Mark> mark(manifest.resources.size(), Mark::Unseen);
  for (std::size_t start = 0; start < manifest.resources.size(); ++start) {
    std::vector<std::size_t> path;
    std::size_t node = start;
    while (node != SIZE_MAX && mark[node] == Mark::Unseen) {
      mark[node] = Mark::OnPath;
      path.push_back(node);
      node = parent[node];
    }
    if (node != SIZE_MAX && mark[node] == Mark::OnPath) {
      throw ManifestValidationError(
          "requested_after graph must be acyclic",
          manifest.resources[node].resourceId);
    }
    for (auto n : path) {
      mark[n] = Mark::Done;
    }
  }

  const ResourceDescriptor* root = nullptr;
  for (const auto& r : manifest.resources) {
    if (r.type != ResourceType::Document || r.requestedAfter) {
      continue;
    }
    if (root != nullptr) {
      throw ManifestValidationError(
          "exactly one document may lack requested_after", r.resourceId);
    }
    root = &r;
  }
  if (root == nullptr) {
    throw ManifestValidationError(
        "exactly one document may lack requested_after", "");
  }
}

namespace {

const json& requireField(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ManifestParseError(where + ": missing field '" + key + "'");
  }
  return *it;
}

std::string requireString(const json& obj, const char* key, const std::string& where) {
  const json& v = requireField(obj, key, where);
  if (!v.is_string()) {
    throw ManifestParseError(where + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::string optionalString(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    return {};
  }
  if (!it->is_string()) {
    throw ManifestParseError(where + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

ResourceDescriptor resourceFromJson(const json& obj, std::size_t index) {
  std::string where = "resources[" + std::to_string(index) + "]";
  if (!obj.is_object()) {
    throw ManifestParseError(where + ": expected an object");
  }
  ResourceDescriptor r;
  r.resourceId = requireString(obj, "resource_id", where);
  where += " '" + r.resourceId + "'";
  r.urlPath = optionalString(obj, "url_path", where);

  if (obj.contains("rtype")) {
    std::string name = requireString(obj, "rtype", where);
    auto type = parseResourceType(name);
    if (!type) {
      throw ManifestParseError(where + ": unknown rtype '" + name + "'");
    }
    r.type = *type;
  } else {
    std::string mime = optionalString(obj, "mime_type", where);
    if (mime.empty() && r.urlPath.empty()) {
      throw ManifestParseError(
          where + ": needs rtype, or mime_type/url_path to classify");
    }
    r.type = classifyResource(mime, r.urlPath);
  }

  const json& size = requireField(obj, "size_bytes", where);
  if (!size.is_number_integer() || size.get<std::int64_t>() < 0) {
    throw ManifestParseError(
        where + ": size_bytes must be a non-negative integer");
  }
  r.sizeBytes = size.get<std::uint64_t>();

  std::string priority = requireString(obj, "chromium_priority", where);
  auto parsed = parseChromiumPriority(priority);
  if (!parsed) {
    throw ManifestParseError(
        where + ": unknown chromium_priority '" + priority + "'");
  }
  r.chromiumPriority = *parsed;

  if (auto trigger = optionalString(obj, "requested_after", where);
      !trigger.empty()) {
    r.requestedAfter = std::move(trigger);
  }
  return r;
}

} // namespace

WebsiteManifest manifestFromJson(const json& doc) {
  if (!doc.is_object()) {
    throw ManifestParseError("manifest: top level must be an object");
  }
  const json& version = requireField(doc, "schema_version", "manifest");
  if (!version.is_number_integer() ||
      version.get<std::int64_t>() != kManifestSchemaVersion) {
    throw ManifestParseError(
        "manifest: unsupported schema_version (expected " +
        std::to_string(kManifestSchemaVersion) + ")");
  }
  WebsiteManifest m;
  m.siteName = requireString(doc, "site_name", "manifest");
  const json& list = requireField(doc, "resources", "manifest");
  if (!list.is_array()) {
    throw ManifestParseError("manifest: 'resources' must be an array");
  }
  m.resources.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    m.resources.push_back(resourceFromJson(list[i], i));
  }
  validateManifest(m);
  return m;
}

json manifestToJson(const WebsiteManifest& manifest) {
  json resources = json::array();
  for (const auto& r : manifest.resources) {
    json obj = {
        {"resource_id", r.resourceId},
        {"url_path", r.urlPath},
        {"rtype", toString(r.type)},
        {"size_bytes", r.sizeBytes},
        {"chromium_priority", toString(r.chromiumPriority)},
    };
    if (r.requestedAfter) {
      obj["requested_after"] = *r.requestedAfter;
    }
    resources.push_back(std::move(obj));
  }
  return json{
      {"schema_version", kManifestSchemaVersion},
      {"site_name", manifest.siteName},
      {"resources", std::move(resources)},
  };
}

WebsiteManifest parseManifest(std::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw ManifestParseError("manifest: not valid JSON");
  }
  return manifestFromJson(doc);
}

WebsiteManifest loadManifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ManifestParseError("cannot open manifest " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parseManifest(buf.str());
  } catch (const ManifestParseError& e) {
    throw ManifestParseError(path.string() + ": " + e.what());
  }
}

void saveManifest(
    const WebsiteManifest& manifest,
    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write manifest " + path.string());
  }
  out << manifestToJson(manifest).dump(2) << '\n';
}

PrioritySummary summarizeByPriority(const WebsiteManifest& manifest) {
  PrioritySummary table;
  for (const auto& r : manifest.resources) {
    auto& cell = table[{r.chromiumPriority, r.type}];
    ++cell.count;
    cell.totalBytes += r.sizeBytes;
  }
  return table;
}

TypeSummary summarizeByType(const WebsiteManifest& manifest) {
  TypeSummary table;
  for (auto t : kAllResourceTypes) {
    table[t] = ByteCount{};
  }
  for (const auto& [key, cell] : summarizeByPriority(manifest)) {
    auto& out = table[key.second];
    out.count += cell.count;
    out.totalBytes += cell.totalBytes;
  }
  return table;
}

std::uint64_t meanScriptImageSize(const WebsiteManifest& manifest) {
  std::uint64_t total = 0;
  std::uint64_t count = 0;
  for (const auto& r : manifest.resources) {
    if (r.type == ResourceType::Script || r.type == ResourceType::Image) {
      total += r.sizeBytes;
      ++count;
    }
  }
  if (count == 0) {
    return 1;
  }
  return std::max<std::uint64_t>(1, total / count);
}

} // namespace epsched

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epsched {

/// EPS urgency, 0 (most urgent) through 7 (least urgent).
class UrgencyLevel {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 7;
  static constexpr int kDefault = 3;

  constexpr UrgencyLevel() = default;

  /// Throws std::out_of_range outside [0, 7].
  constexpr explicit UrgencyLevel(int value) : value_(checked(value)) {}

  static constexpr std::optional<UrgencyLevel> tryFrom(std::int64_t value) {
    if (value < kMin || value > kMax) {
      return std::nullopt;
    }
    return UrgencyLevel(static_cast<int>(value));
  }

  constexpr int value() const { return value_; }

  /// True when this level is served strictly before `other`.
  constexpr bool moreUrgentThan(UrgencyLevel other) const {
    return value_ < other.value_;
  }

  constexpr auto operator<=>(const UrgencyLevel&) const = default;

 private:
  static constexpr int checked(int value) {
    if (value < kMin || value > kMax) {
      throw std::out_of_range("urgency must be within [0, 7]");
    }
    return value;
  }

  int value_ = kDefault;
};

struct PriorityParams {
  UrgencyLevel urgency{};
  bool incremental = false;

  constexpr bool operator==(const PriorityParams&) const = default;
};

struct PriorityUpdateMask {
  bool urgencyPresent = false;
  bool incrementalPresent = false;
};

class MalformedField : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses a Priority field value (a structured-field dictionary). Members
// other than `u` and `i` are skipped. An out-of-range `u` is ignored, a
// non-integer `u` is malformed, and a non-boolean `i` is ignored.
// Throws MalformedField on any syntax error.
PriorityParams parsePriorityField(std::string_view text);

// Canonical form: "u=N", followed by ", i" when incremental.
std::string serializePriorityField(const PriorityParams& params);

PriorityParams applyUpdate(
    const PriorityParams& base,
    const PriorityParams& update,
    PriorityUpdateMask mask);

} // namespace epsched

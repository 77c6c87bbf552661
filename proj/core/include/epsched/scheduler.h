#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "epsched/priority.h"

namespace epsched {

struct StreamId {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const StreamId&) const = default;
};

enum class SchedulerMode : std::uint8_t {
  /// Stock server behavior: strict arrival order, urgency ignored.
  SequentialFifo,
  /// Lowest urgency value first, one response at a time within a class.
  UrgencyNonIncremental,
  /// Lowest urgency value first, round-robin within a class.
  UrgencyIncremental,
};

std::string_view toString(SchedulerMode mode);
std::optional<SchedulerMode> parseSchedulerMode(std::string_view name);

struct StreamEntry {
  StreamId id;
  PriorityParams params;
  std::uint64_t bytesTotal = 0;
  std::uint64_t bytesRemaining = 0;
  std::uint64_t arrivalSeq = 0;
};

struct Grant {
  StreamId id;
  std::uint64_t bytes = 0;

  constexpr bool operator==(const Grant&) const = default;
};

struct SendResult {
  bool completed = false;
};

class UnknownStream : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class Overrun : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/**
 * Quantum-by-quantum send scheduler over a set of active response streams.
 *
 * The caller asks selectNext() which stream owns the next quantum, sends
 * the granted bytes, and reports them with onSent(). Selection only ever
 * changes at quantum boundaries, so a newly arrived or reprioritized
 * stream takes effect from the next selectNext() call.
 *
 * In UrgencyNonIncremental mode the stream chosen last keeps the link for
 * as long as it remains in the most urgent class; otherwise the oldest
 * stream of that class wins. A preempted stream therefore resumes ahead
 * of later arrivals of its own urgency.
 *
 * Not thread-safe; one caller at a time.
 */
class Scheduler {
 public:
  static constexpr std::uint64_t kDefaultQuantumBytes = 1200;

  explicit Scheduler(SchedulerMode mode) : mode_(mode) {}

  SchedulerMode mode() const { return mode_; }

  /// Throws std::invalid_argument for a zero size.
  StreamId enqueue(std::uint64_t sizeBytes, PriorityParams params);

  /// std::nullopt means idle: no stream is active. Advances round-robin
  /// state in incremental mode even if the grant is never sent.
  std::optional<Grant> selectNext(
      std::uint64_t quantumBytes = kDefaultQuantumBytes);

  /// Throws UnknownStream for an inactive id, Overrun when bytes exceeds
  /// the stream's remaining bytes.
  SendResult onSent(StreamId id, std::uint64_t bytes);

  void reprioritize(StreamId id, PriorityParams params);

  // Hands lost bytes back to a stream so they are sent again under the
  // stream's own priority. A stream that had already completed is
  // reactivated with its original id and arrival order.
  void restore(StreamId id, std::uint64_t bytes);

  bool idle() const { return active_.empty(); }
  std::size_t activeCount() const { return active_.size(); }
  const StreamEntry* find(StreamId id) const;
  std::vector<StreamId> activeIds() const;

 private:
  using Seq = std::uint64_t;

  StreamEntry& activeEntry(StreamId id);
  std::set<Seq>& urgencyClass(const StreamEntry& entry) {
    return classes_[static_cast<std::size_t>(entry.params.urgency.value())];
  }
  void activate(StreamEntry entry);
  std::optional<std::size_t> mostUrgentClass() const;

  SchedulerMode mode_;
  Seq nextSeq_ = 0;
  std::map<Seq, StreamEntry> active_;
  std::map<Seq, StreamEntry> retired_;
  std::array<std::set<Seq>, 8> classes_;
  std::array<std::optional<Seq>, 8> roundRobinCursor_;
  std::optional<Seq> lastSelected_;
};

} // namespace epsched

#include "epsched/scheduler.h"

#include <algorithm>
#include <string>

namespace epsched {

namespace {

std::uint64_t seqOf(StreamId id) {
  return id.value - 1;
}

StreamId idOf(std::uint64_t seq) {
  return StreamId{seq + 1};
}

std::string describe(StreamId id) {
  return "stream " + std::to_string(id.value);
}

} // namespace

std::string_view toString(SchedulerMode mode) {
  switch (mode) {
    case SchedulerMode::SequentialFifo:
      return "fifo";
    case SchedulerMode::UrgencyNonIncremental:
      return "urgency";
    case SchedulerMode::UrgencyIncremental:
      return "urgency-incremental";
  }
  return "unknown";
}

std::optional<SchedulerMode> parseSchedulerMode(std::string_view name) {
  for (auto mode :
       {SchedulerMode::SequentialFifo,
        SchedulerMode::UrgencyNonIncremental,
        SchedulerMode::UrgencyIncremental}) {
    if (toString(mode) == name) {
      return mode;
    }
  }
  return std::nullopt;
}

StreamId Scheduler::enqueue(std::uint64_t sizeBytes, PriorityParams params) {
  if (sizeBytes == 0) {
    throw std::invalid_argument("cannot enqueue an empty stream");
  }
  Seq seq = nextSeq_++;
  activate(StreamEntry{
      .id = idOf(seq),
      .params = params,
      .bytesTotal = sizeBytes,
      .bytesRemaining = sizeBytes,
      .arrivalSeq = seq,
  });
  return idOf(seq);
}

void Scheduler::activate(StreamEntry entry) {
  Seq seq = entry.arrivalSeq;
  urgencyClass(entry).insert(seq);
  active_.emplace(seq, std::move(entry));
}

std::optional<std::size_t> Scheduler::mostUrgentClass() const {
  for (std::size_t u = 0; u < classes_.size(); ++u) {
    if (!classes_[u].empty()) {
      return u;
    }
  }
  return std::nullopt;
}

std::optional<Grant> Scheduler::selectNext(std::uint64_t quantumBytes) {
  if (quantumBytes == 0) {
    throw std::invalid_argument("quantum must be positive");
  }
  if (active_.empty()) {
    return std::nullopt;
  }

  Seq chosen = 0;
  switch (mode_) {
    case SchedulerMode::SequentialFifo:
      chosen = active_.begin()->first;
      break;
    case SchedulerMode::UrgencyNonIncremental: {
      const auto& cls = classes_[*mostUrgentClass()];
      chosen = (lastSelected_ && cls.contains(*lastSelected_))
          ? *lastSelected_
          : *cls.begin();
      break;
    }
    case SchedulerMode::UrgencyIncremental: {
      std::size_t u = *mostUrgentClass();
      const auto& cls = classes_[u];
      auto it = roundRobinCursor_[u] ? cls.upper_bound(*roundRobinCursor_[u])
                                     : cls.begin();
      if (it == cls.end()) {
        it = cls.begin();
      }
      chosen = *it;
      roundRobinCursor_[u] = chosen;
      break;
    }
  }
  lastSelected_ = chosen;

  const StreamEntry& entry = active_.at(chosen);
  return Grant{entry.id, std::min(quantumBytes, entry.bytesRemaining)};
}

StreamEntry& Scheduler::activeEntry(StreamId id) {
  auto it = id.value == 0 ? active_.end() : active_.find(seqOf(id));
  if (it == active_.end()) {
    throw UnknownStream(describe(id) + " is not active");
  }
  return it->second;
}

SendResult Scheduler::onSent(StreamId id, std::uint64_t bytes) {
  StreamEntry& entry = activeEntry(id);
  if (bytes == 0) {
    throw std::invalid_argument("sent byte count must be positive");
  }
  if (bytes > entry.bytesRemaining) {
    throw Overrun(
        describe(id) + ": sent " + std::to_string(bytes) + " bytes with " +
        std::to_string(entry.bytesRemaining) + " remaining");
  }
  entry.bytesRemaining -= bytes;
  if (entry.bytesRemaining > 0) {
    return SendResult{false};
  }
  Seq seq = entry.arrivalSeq;
  urgencyClass(entry).erase(seq);
  retired_.insert(active_.extract(seq));
  return SendResult{true};
}

void Scheduler::reprioritize(StreamId id, PriorityParams params) {
  StreamEntry& entry = activeEntry(id);
  urgencyClass(entry).erase(entry.arrivalSeq);
  entry.params = params;
  urgencyClass(entry).insert(entry.arrivalSeq);
}

void Scheduler::restore(StreamId id, std::uint64_t bytes) {
  if (bytes == 0) {
    throw std::invalid_argument("restored byte count must be positive");
  }
  Seq seq = seqOf(id);
  if (auto it = active_.find(seq); id.value != 0 && it != active_.end()) {
    StreamEntry& entry = it->second;
    if (entry.bytesRemaining + bytes > entry.bytesTotal) {
      throw Overrun(describe(id) + ": restore exceeds stream size");
    }
    entry.bytesRemaining += bytes;
    return;
  }
  auto node = id.value == 0 ? decltype(retired_)::node_type{}
                            : retired_.extract(seq);
  if (node.empty()) {
    throw UnknownStream(describe(id) + " was never enqueued");
  }
  if (bytes > node.mapped().bytesTotal) {
    throw Overrun(describe(id) + ": restore exceeds stream size");
  }
  node.mapped().bytesRemaining = bytes;
  activate(std::move(node.mapped()));
}

const StreamEntry* Scheduler::find(StreamId id) const {
  if (id.value == 0) {
    return nullptr;
  }
  auto it = active_.find(seqOf(id));
  return it == active_.end() ? nullptr : &it->second;
}

std::vector<StreamId> Scheduler::activeIds() const {
  std::vector<StreamId> ids;
  ids.reserve(active_.size());
  for (const auto& [seq, entry] : active_) {
    ids.push_back(entry.id);
  }
  return ids;
}

} // namespace epsched

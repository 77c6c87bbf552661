#include "epsched/netsim.h"

#include <cmath>
#include <map>
#include <queue>
#include <random>

namespace epsched {

LinkModel LinkModel::challenging() {
  LinkModel link;
  link.oneWayDelayMs = 20.0;
  link.lossRate = 0.001;
  return link;
}

void LinkModel::validate() const {
  if (!(bandwidthBytesPerSec > 0) || !std::isfinite(bandwidthBytesPerSec)) {
    throw std::invalid_argument("bandwidth must be positive");
  }
  if (!(oneWayDelayMs >= 0) || !std::isfinite(oneWayDelayMs)) {
    throw std::invalid_argument("one-way delay must be non-negative");
  }
  if (!(lossRate >= 0) || !(lossRate < 1)) {
    throw std::invalid_argument("loss rate must be within [0, 1)");
  }
}

const ResourceTiming* DeliveryTrace::find(std::string_view resourceId) const {
  for (const auto& r : resources) {
    if (r.resourceId == resourceId) {
      return &r;
    }
  }
  return nullptr;
}

std::vector<UrgencyLevel> assignUrgencies(
    const WebsiteManifest& manifest,
    const DeliveryPolicy& policy) {
  std::vector<UrgencyLevel> out;
  out.reserve(manifest.resources.size());
  for (const auto& r : manifest.resources) {
    out.push_back(
        policy ? policy->assign(r.chromiumPriority, r.type, r.sizeBytes)
               : UrgencyLevel{});
  }
  return out;
}

namespace {

class LinkSimulation {
 public:
  LinkSimulation(
      const WebsiteManifest& manifest,
      const DeliveryPolicy& policy,
      SchedulerMode mode,
      const LinkModel& link,
      std::uint64_t quantumBytes)
      : manifest_(manifest),
        link_(link),
        quantum_(quantumBytes),
        mode_(mode),
        scheduler_(mode),
        rng_(link.seed),
        urgencies_(assignUrgencies(manifest, policy)),
        delivered_(manifest.resources.size(), 0),
        streamOf_(manifest.resources.size()),
        children_(manifest.resources.size()) {
    std::size_t rootIndex = *manifest.indexOf(manifest.root().resourceId);
    for (std::size_t i = 0; i < manifest.resources.size(); ++i) {
      const auto& r = manifest.resources[i];
      trace_.resources.push_back(ResourceTiming{r.resourceId, 0, 0, 0});
      if (i == rootIndex) {
        continue;
      }
      std::size_t trigger =
          r.requestedAfter ? *manifest.indexOf(*r.requestedAfter) : rootIndex;
      children_[trigger].push_back(i);
    }
    rootIndex_ = rootIndex;
  }

  DeliveryTrace run() {
    sendRequest(rootIndex_, 0.0);
    while (!events_.empty()) {
      double now = events_.top().timeMs;
      while (!events_.empty() && events_.top().timeMs == now) {
        Event ev = events_.top();
        events_.pop();
        handle(ev, now);
      }
      if (!linkBusy_ && !scheduler_.idle()) {
        transmit(now);
      }
    }
    return std::move(trace_);
  }

 private:
  enum class Kind : std::uint8_t { RequestArrival, TransmissionDone, Retransmit };

  struct Event {
    double timeMs;
    std::uint64_t order;
    Kind kind;
    std::size_t resource;
    std::uint64_t bytes;
    bool lost;

    // Min-heap on (time, insertion order).
    bool operator>(const Event& o) const {
      return timeMs != o.timeMs ? timeMs > o.timeMs : order > o.order;
    }
  };

  void push(double timeMs, Kind kind, std::size_t resource,
            std::uint64_t bytes = 0, bool lost = false) {
    events_.push(Event{timeMs, nextOrder_++, kind, resource, bytes, lost});
  }

  bool drawLoss() {
    if (link_.lossRate <= 0) {
      return false;
    }
    // 53 random bits mapped onto [0, 1); identical on every platform.
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < link_.lossRate;
  }

  double retransmitTimeoutMs() const { return 2.0 * link_.oneWayDelayMs; }

  void sendRequest(std::size_t resource, double departMs) {
    while (drawLoss()) {
      ++trace_.lostRequests;
      departMs += retransmitTimeoutMs();
    }
    push(departMs + link_.oneWayDelayMs, Kind::RequestArrival, resource);
  }

  void handle(const Event& ev, double now) {
    switch (ev.kind) {
      case Kind::RequestArrival: {
        trace_.resources[ev.resource].requestMs = now;
        PriorityParams params{
            urgencies_[ev.resource],
            mode_ == SchedulerMode::UrgencyIncremental};
        StreamId id = scheduler_.enqueue(
            manifest_.resources[ev.resource].sizeBytes, params);
        streamOf_[ev.resource] = id;
        resourceOf_[id] = ev.resource;
        break;
      }
      case Kind::TransmissionDone:
        linkBusy_ = false;
        if (ev.lost) {
          ++trace_.lostQuanta;
          push(now + retransmitTimeoutMs(), Kind::Retransmit, ev.resource,
               ev.bytes);
        } else {
          deliver(ev.resource, ev.bytes, now + link_.oneWayDelayMs);
        }
        break;
      case Kind::Retransmit:
        scheduler_.restore(streamOf_[ev.resource], ev.bytes);
        break;
    }
  }

  void transmit(double now) {
    auto grant = scheduler_.selectNext(quantum_);
    std::size_t resource = resourceOf_.at(grant->id);
    scheduler_.onSent(grant->id, grant->bytes);
    bool lost = drawLoss();
    double txMs =
        static_cast<double>(grant->bytes) / link_.bandwidthBytesPerSec * 1000.0;
    linkBusy_ = true;
    push(now + txMs, Kind::TransmissionDone, resource, grant->bytes, lost);
  }

  void deliver(std::size_t resource, std::uint64_t bytes, double arrivalMs) {
    auto& timing = trace_.resources[resource];
    if (delivered_[resource] == 0) {
      timing.firstByteMs = arrivalMs;
    }
    delivered_[resource] += bytes;
    trace_.events.push_back(
        SendEvent{arrivalMs, timing.resourceId, bytes});
    if (delivered_[resource] < manifest_.resources[resource].sizeBytes) {
      return;
    }
    timing.completionMs = arrivalMs;
    for (std::size_t child : children_[resource]) {
      sendRequest(child, arrivalMs + link_.oneWayDelayMs);
    }
  }

  const WebsiteManifest& manifest_;
  LinkModel link_;
  std::uint64_t quantum_;
  SchedulerMode mode_;
  Scheduler scheduler_;
  std::mt19937_64 rng_;
  std::vector<UrgencyLevel> urgencies_;
  std::vector<std::uint64_t> delivered_;
  std::vector<StreamId> streamOf_;
  std::map<StreamId, std::size_t> resourceOf_;
  std::vector<std::vector<std::size_t>> children_;
  std::size_t rootIndex_ = 0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t nextOrder_ = 0;
  bool linkBusy_ = false;
  DeliveryTrace trace_;
};

} // namespace

DeliveryTrace simulate(
    const WebsiteManifest& manifest,
    const DeliveryPolicy& policy,
    SchedulerMode mode,
    const LinkModel& link,
    std::uint64_t quantumBytes) {
  link.validate();
  if (quantumBytes == 0) {
    throw std::invalid_argument("quantum must be positive");
  }
  if (!policy && mode != SchedulerMode::SequentialFifo) {
    throw std::invalid_argument(
        "the baseline policy only runs with the fifo scheduler");
  }
  validateManifest(manifest);
  return LinkSimulation(manifest, policy, mode, link, quantumBytes).run();
}

} // namespace epsched

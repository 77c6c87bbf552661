#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "epsched/manifest.h"
#include "epsched/mapping.h"
#include "epsched/scheduler.h"

namespace epsched {

/// A single server-to-client path. Delay and loss apply to each
/// direction independently.
struct LinkModel {
  double bandwidthBytesPerSec = 1'250'000.0;
  double oneWayDelayMs = 10.0;
  double lossRate = 0.0005;
  std::uint64_t seed = 1;

  /// 20 ms one-way delay and 0.1% loss.
  static LinkModel challenging();

  /// Throws std::invalid_argument on a non-positive bandwidth, a negative
  /// delay, or a loss rate outside [0, 1).
  void validate() const;

  bool operator==(const LinkModel&) const = default;
};

struct ResourceTiming {
  std::string resourceId;
  /// When the request reaches the server.
  double requestMs = 0;
  /// Client-side arrival of the first delivered quantum.
  double firstByteMs = 0;
  /// Client-side arrival of the last missing byte.
  double completionMs = 0;
};

struct SendEvent {
  /// Client-side arrival time.
  double timeMs = 0;
  std::string resourceId;
  std::uint64_t bytes = 0;
};

struct DeliveryTrace {
  /// Manifest order.
  std::vector<ResourceTiming> resources;
  /// Successful deliveries in arrival order.
  std::vector<SendEvent> events;
  std::uint64_t lostQuanta = 0;
  std::uint64_t lostRequests = 0;

  const ResourceTiming* find(std::string_view resourceId) const;
};

/// Urgency assignment for a run; std::nullopt is the stock server, which
/// must run with SequentialFifo.
using DeliveryPolicy = std::optional<MappingStrategy>;

/// Per-resource urgency under a policy, in manifest order. The baseline
/// policy assigns the default urgency everywhere.
std::vector<UrgencyLevel> assignUrgencies(
    const WebsiteManifest& manifest,
    const DeliveryPolicy& policy);

/**
 * Replays a manifest over one multiplexed link.
 *
 * The root document is requested at time 0 and reaches the server one
 * one-way delay later. Every other resource is requested one one-way delay
 * after its trigger (requested_after, or the root when absent) has fully
 * arrived at the client, and reaches the server one more delay later.
 *
 * The server sends one scheduler quantum at a time at link bandwidth.
 * Each quantum and each request is lost independently with probability
 * lossRate; a lost quantum goes back to its stream 2 x oneWayDelayMs after
 * its transmission ends, and a lost request is re-sent after the same
 * timeout. No congestion control is modeled.
 *
 * Deterministic for identical inputs.
 */
DeliveryTrace simulate(
    const WebsiteManifest& manifest,
    const DeliveryPolicy& policy,
    SchedulerMode mode,
    const LinkModel& link,
    std::uint64_t quantumBytes = Scheduler::kDefaultQuantumBytes);

} // namespace epsched

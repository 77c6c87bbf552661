#include "epsched/scheduler.h"

#include <ostream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support/reference_scheduler.h"
#include "support/scheduler_harness.h"

namespace epsched {

void PrintTo(SchedulerMode mode, std::ostream* os) {
  *os << toString(mode);
}

namespace {

PriorityParams urgency(int u) {
  return PriorityParams{UrgencyLevel(u), false};
}

TEST(SchedulerTest, EnqueueAssignsIncreasingIds) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  EXPECT_EQ(s.enqueue(1000, urgency(2)), StreamId{1});
  EXPECT_EQ(s.activeIds(), std::vector<StreamId>{StreamId{1}});
  EXPECT_EQ(s.enqueue(500, urgency(0)), StreamId{2});
  EXPECT_EQ(s.activeIds(), (std::vector<StreamId>{StreamId{1}, StreamId{2}}));
  EXPECT_THROW(s.enqueue(0, urgency(1)), std::invalid_argument);
}

TEST(SchedulerTest, IdleWhenEmpty) {
  Scheduler s(SchedulerMode::SequentialFifo);
  EXPECT_FALSE(s.selectNext(1200).has_value());
  EXPECT_THROW(s.selectNext(0), std::invalid_argument);
}

TEST(SchedulerTest, SingleStreamGrantIsBoundedByRemaining) {
  Scheduler s(SchedulerMode::UrgencyIncremental);
  StreamId id = s.enqueue(1500, urgency(3));
  EXPECT_EQ(s.selectNext(1200), (Grant{id, 1200}));
  s.onSent(id, 1200);
  EXPECT_EQ(s.selectNext(1200), (Grant{id, 300}));
}

TEST(SchedulerTest, NonIncrementalServesOneStreamPerClassAtATime) {
  // Hand simulation: two 2500-byte u=2 streams, quantum 1000. id1 gets
  // 1000, 1000, 500, then id2 gets 1000, 1000, 500.
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId a = s.enqueue(2500, urgency(2));
  StreamId b = s.enqueue(2500, urgency(2));
  const std::vector<Grant> expected = {
      {a, 1000}, {a, 1000}, {a, 500}, {b, 1000}, {b, 1000}, {b, 500}};
  for (const auto& want : expected) {
    auto got = s.selectNext(1000);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, want);
    s.onSent(got->id, got->bytes);
  }
  EXPECT_TRUE(s.idle());
}

TEST(SchedulerTest, MoreUrgentArrivalPreemptsAtQuantumBoundary) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId low = s.enqueue(5000, urgency(5));
  auto g = s.selectNext(1000);
  s.onSent(g->id, g->bytes);
  StreamId high = s.enqueue(800, urgency(1));
  EXPECT_EQ(s.selectNext(1000), (Grant{high, 800}));
  s.onSent(high, 800);
  EXPECT_EQ(s.selectNext(1000), (Grant{low, 1000}));
}

TEST(SchedulerTest, PreemptedStreamResumesAheadOfLaterArrivals) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId first = s.enqueue(3000, urgency(4));
  s.onSent(first, s.selectNext(1000)->bytes);
  StreamId urgent = s.enqueue(1000, urgency(0));
  s.enqueue(3000, urgency(4));
  EXPECT_EQ(s.selectNext(1000)->id, urgent);
  s.onSent(urgent, 1000);
  EXPECT_EQ(s.selectNext(1000)->id, first);
}

TEST(SchedulerTest, FifoIgnoresUrgency) {
  Scheduler s(SchedulerMode::SequentialFifo);
  StreamId a = s.enqueue(100, urgency(7));
  s.enqueue(100, urgency(0));
  EXPECT_EQ(s.selectNext(1200)->id, a);
}

TEST(SchedulerTest, IncrementalRotatesWithinClass) {
  Scheduler s(SchedulerMode::UrgencyIncremental);
  StreamId a = s.enqueue(3000, urgency(3));
  StreamId b = s.enqueue(3000, urgency(3));
  StreamId c = s.enqueue(3000, urgency(4));
  std::vector<StreamId> order;
  for (int k = 0; k < 6; ++k) {
    auto g = s.selectNext(1000);
    order.push_back(g->id);
    s.onSent(g->id, g->bytes);
  }
  EXPECT_EQ(order, (std::vector<StreamId>{a, b, a, b, a, b}));
  EXPECT_EQ(s.selectNext(1000)->id, c);
}

TEST(SchedulerTest, IncrementalNewArrivalJoinsRotation) {
  Scheduler s(SchedulerMode::UrgencyIncremental);
  StreamId a = s.enqueue(5000, urgency(3));
  StreamId b = s.enqueue(5000, urgency(3));
  s.onSent(a, s.selectNext(1000)->bytes);
  StreamId c = s.enqueue(5000, urgency(3));
  std::vector<StreamId> order;
  for (int k = 0; k < 3; ++k) {
    auto g = s.selectNext(1000);
    order.push_back(g->id);
    s.onSent(g->id, g->bytes);
  }
  EXPECT_EQ(order, (std::vector<StreamId>{b, c, a}));
}

TEST(SchedulerTest, OnSentCompletesAndErrors) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId a = s.enqueue(100, urgency(3));
  StreamId b = s.enqueue(100, urgency(3));
  EXPECT_FALSE(s.onSent(b, 40).completed);
  EXPECT_EQ(s.find(b)->bytesRemaining, 60U);
  EXPECT_THROW(s.onSent(b, 61), Overrun);
  EXPECT_TRUE(s.onSent(a, 100).completed);
  EXPECT_EQ(s.activeCount(), 1U);
  EXPECT_THROW(s.onSent(a, 1), UnknownStream);
  EXPECT_THROW(s.onSent(StreamId{99}, 1), UnknownStream);
  EXPECT_THROW(s.onSent(StreamId{0}, 1), UnknownStream);
}

TEST(SchedulerTest, ReprioritizeTakesEffectNextSelection) {
  // u=2 stream mid-transfer; a u=5 stream promoted to u=0 goes next.
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId slow = s.enqueue(5000, urgency(5));
  StreamId mid = s.enqueue(5000, urgency(2));
  EXPECT_EQ(s.selectNext(1000)->id, mid);
  s.onSent(mid, 1000);
  s.reprioritize(slow, urgency(0));
  EXPECT_EQ(s.selectNext(1000)->id, slow);
  EXPECT_EQ(s.find(slow)->arrivalSeq, 0U);
}

TEST(SchedulerTest, ReprioritizeToSameParamsIsNoOp) {
  auto run = [](bool touch) {
    Scheduler s(SchedulerMode::UrgencyIncremental);
    StreamId a = s.enqueue(4000, urgency(3));
    s.enqueue(4000, urgency(3));
    std::vector<StreamId> order;
    for (int k = 0; k < 8; ++k) {
      if (touch) {
        if (s.find(a) != nullptr) {
          s.reprioritize(a, urgency(3));
        }
      }
      auto g = s.selectNext(1000);
      order.push_back(g->id);
      s.onSent(g->id, g->bytes);
    }
    return order;
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(SchedulerTest, ReprioritizeUnknownStreamThrows) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  EXPECT_THROW(s.reprioritize(StreamId{1}, urgency(0)), UnknownStream);
  StreamId a = s.enqueue(10, urgency(3));
  s.onSent(a, 10);
  EXPECT_THROW(s.reprioritize(a, urgency(0)), UnknownStream);
}

TEST(SchedulerTest, RestoreReactivatesCompletedStream) {
  Scheduler s(SchedulerMode::UrgencyNonIncremental);
  StreamId a = s.enqueue(1000, urgency(4));
  StreamId b = s.enqueue(1000, urgency(4));
  s.onSent(a, 1000);
  s.restore(a, 400);
  // a keeps its arrival order and reclaims the head of its class.
  EXPECT_EQ(s.selectNext(1200), (Grant{a, 400}));
  EXPECT_THROW(s.restore(b, 1), Overrun);
  EXPECT_THROW(s.restore(StreamId{9}, 1), UnknownStream);
  EXPECT_THROW(s.restore(a, 1001), Overrun);
}

TEST(SchedulerTest, ModeNames) {
  for (auto m : {SchedulerMode::SequentialFifo,
                 SchedulerMode::UrgencyNonIncremental,
                 SchedulerMode::UrgencyIncremental}) {
    EXPECT_EQ(parseSchedulerMode(toString(m)), m);
  }
  EXPECT_FALSE(parseSchedulerMode("rr"));
}

class SchedulerPropertyTest : public ::testing::TestWithParam<SchedulerMode> {};

TEST_P(SchedulerPropertyTest, InvariantsHoldOnRandomScripts) {
  std::mt19937_64 rng(20240601 + static_cast<int>(GetParam()));
  for (int n = 0; n < 500; ++n) {
    auto script = testing::randomScript(rng);
    auto failure = testing::checkSchedulerProperties(GetParam(), script);
    ASSERT_FALSE(failure) << "script " << n << ": " << *failure;
  }
}

TEST_P(SchedulerPropertyTest, MatchesReferenceScheduler) {
  std::mt19937_64 rng(99 + static_cast<int>(GetParam()));
  for (int n = 0; n < 300; ++n) {
    auto script = testing::randomScript(rng);
    Scheduler production(GetParam());
    testing::ReferenceScheduler reference(GetParam());
    ASSERT_EQ(
        testing::runScript(production, script),
        testing::runScript(reference, script))
        << "script " << n;
  }
}

TEST_P(SchedulerPropertyTest, Deterministic) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 100; ++n) {
    auto script = testing::randomScript(rng);
    Scheduler first(GetParam());
    Scheduler second(GetParam());
    ASSERT_EQ(
        testing::runScript(first, script), testing::runScript(second, script));
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllModes,
    SchedulerPropertyTest,
    ::testing::Values(
        SchedulerMode::SequentialFifo,
        SchedulerMode::UrgencyNonIncremental,
        SchedulerMode::UrgencyIncremental),
    [](const auto& info) {
      switch (info.param) {
        case SchedulerMode::SequentialFifo:
          return std::string("Fifo");
        case SchedulerMode::UrgencyNonIncremental:
          return std::string("NonIncremental");
        case SchedulerMode::UrgencyIncremental:
          return std::string("Incremental");
      }
      return std::string("Unknown");
    });

TEST(SchedulerFifoPropertyTest, UrgencyPermutationLeavesSelectionUnchanged) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 300; ++n) {
    auto script = testing::randomScript(rng);
    auto permuted =
        testing::permuteUrgencies(script, testing::randomPermutation(rng));
    Scheduler a(SchedulerMode::SequentialFifo);
    Scheduler b(SchedulerMode::SequentialFifo);
    ASSERT_EQ(testing::runScript(a, script), testing::runScript(b, permuted));
  }
}

} // namespace
} // namespace epsched

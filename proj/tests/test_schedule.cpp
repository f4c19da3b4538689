#include <gtest/gtest.h>

#include <random>

#include "feddig/error.hpp"
#include "feddig/scenario/schedule.hpp"

namespace feddig {
namespace {

using namespace scenario;

int absent_count(const AvailabilitySchedule& s, int t) {
  int n = 0;
  for (int c = 0; c < s.num_clients(); ++c) n += !s.present(t, c);
  return n;
}

TEST(Schedule, TemporaryCanonicalWindow) {
  const auto s = scenario_temporary(4, 300, 0);
  for (int t = 0; t < 300; ++t) {
    EXPECT_EQ(s.present(t, 0), t < 100 || t >= 200) << t;
    for (int c = 1; c < 4; ++c) EXPECT_TRUE(s.present(t, c));
  }
}

TEST(Schedule, TemporaryScalesWithT) {
  const auto s = scenario_temporary(4, 50, 2);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(s.present(t, 2), t < 16 || t >= 33) << t;
}

TEST(Schedule, SingleClientTemporaryLeavesIt) {
  const auto s = scenario_temporary(1, 30, 0);
  EXPECT_FALSE(s.present(10, 0));
  EXPECT_TRUE(s.present(9, 0));
}

TEST(Schedule, PermanentVariants) {
  const auto s = scenario_permanent(4, 300, 1);
  for (int t = 0; t < 300; ++t) EXPECT_EQ(s.present(t, 1), t < 100);
  const auto never = scenario_permanent(4, 300, 1, 0);
  EXPECT_FALSE(never.first_present(1).has_value());
  EXPECT_EQ(scenario_permanent(4, 300, 1, 300), scenario_none(4, 300));
}

TEST(Schedule, SequentialFourClients) {
  const auto times = default_leave_times(4, 300, 0);
  EXPECT_EQ(times, (std::vector<int>{100, 150, 200, 250}));
  const auto s = scenario_sequential(4, 300, times);
  EXPECT_EQ(absent_count(s, 99), 0);
  EXPECT_EQ(absent_count(s, 100), 1);
  EXPECT_EQ(absent_count(s, 150), 2);
  EXPECT_EQ(absent_count(s, 249), 3);
  for (int t = 250; t < 300; ++t) EXPECT_EQ(absent_count(s, t), 4);
}

TEST(Schedule, SequentialEightClientsTwoPerWave) {
  const auto times = default_leave_times(8, 300, 5);
  for (int wave : {100, 150, 200, 250}) EXPECT_EQ(std::count(times.begin(), times.end(), wave), 2);
  EXPECT_NE(times, default_leave_times(8, 300, 6));
}

TEST(Schedule, SequentialAtTIsNoAbsence) {
  EXPECT_EQ(scenario_sequential(4, 60, {60, 60, 60, 60}), scenario_none(4, 60));
}

TEST(Schedule, GroupSwitch) {
  const auto s = scenario_group(4, 300);
  for (int t = 0; t < 300; ++t) {
    EXPECT_EQ(s.present(t, 0), t < 100);
    EXPECT_EQ(s.present(t, 1), t < 100);
    EXPECT_EQ(s.present(t, 2), t >= 100);
    EXPECT_EQ(s.present(t, 3), t >= 100);
  }
  const auto only_second = scenario_group(4, 40, 0);
  for (int t = 0; t < 40; ++t) EXPECT_FALSE(only_second.present(t, 0) || only_second.present(t, 1));
  const auto only_first = scenario_group(4, 40, 40);
  for (int t = 0; t < 40; ++t) EXPECT_FALSE(only_first.present(t, 2) || only_first.present(t, 3));
}

TEST(Schedule, InconsistentEventsRejected) {
  EXPECT_THROW(AvailabilitySchedule(10, 2, {{2, 0, Action::kJoin}}), Error);
  EXPECT_THROW(AvailabilitySchedule(10, 2, {{2, 0, Action::kLeave}, {4, 0, Action::kLeave}}), Error);
  EXPECT_THROW(AvailabilitySchedule(10, 2, {{10, 0, Action::kLeave}}), Error);
  EXPECT_THROW(AvailabilitySchedule(10, 2, {{1, 2, Action::kLeave}}), Error);
}

// Random valid schedules survive a text round trip and match an independent replay.
TEST(Schedule, RandomRoundTripAndReplay) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 80)(rng);
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<Event> events;
    for (int c = 0; c < n; ++c) {
      bool present = true;
      for (int t = 0; t < T; ++t) {
        if (std::bernoulli_distribution(0.05)(rng)) {
          events.push_back({t, c, present ? Action::kLeave : Action::kJoin});
          present = !present;
        }
      }
    }
    std::shuffle(events.begin(), events.end(), rng);
    const AvailabilitySchedule s(T, n, events);
    EXPECT_EQ(AvailabilitySchedule::parse(s.serialize()), s);
    ASSERT_EQ(s.presence().size(), static_cast<std::size_t>(T));
    for (int c = 0; c < n; ++c) {
      bool present = true;
      for (int t = 0; t < T; ++t) {
        for (const auto& e : events) {
          if (e.client == c && e.iteration == t) present = e.action == Action::kJoin;
        }
        ASSERT_EQ(s.present(t, c), present);
      }
    }
  }
}

}  // namespace
}  // namespace feddig

#include "feddig/scenario/schedule.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "feddig/error.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::scenario {

std::vector<std::vector<bool>> replay(int iterations, int num_clients, const std::vector<Event>& events) {
  std::vector<std::vector<bool>> m(static_cast<std::size_t>(iterations));
  std::vector<bool> state(static_cast<std::size_t>(num_clients), true);
  std::size_t e = 0;
  for (int t = 0; t < iterations; ++t) {
    for (; e < events.size() && events[e].iteration == t; ++e) {
      const auto c = static_cast<std::size_t>(events[e].client);
      const bool present = state[c];
      require(present == (events[e].action == Action::kLeave), ErrorCategory::kConfig,
              fmt::format("client {} cannot {} at iteration {} while {}", c,
                          events[e].action == Action::kLeave ? "leave" : "join", t, present ? "present" : "absent"));
      state[c] = !present;
    }
    m[static_cast<std::size_t>(t)] = state;
  }
  return m;
}

AvailabilitySchedule::AvailabilitySchedule(int iterations, int num_clients, std::vector<Event> events)
    : iterations_(iterations), num_clients_(num_clients), events_(std::move(events)) {
  require(iterations >= 1, ErrorCategory::kConfig, "schedule needs T >= 1");
  require(num_clients >= 1, ErrorCategory::kConfig, "schedule needs n >= 1");
  std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
    return a.iteration != b.iteration ? a.iteration < b.iteration : a.client < b.client;
  });
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& ev = events_[i];
    require(ev.iteration >= 0 && ev.iteration < iterations, ErrorCategory::kConfig,
            fmt::format("event iteration {} outside [0, {})", ev.iteration, iterations));
    require(ev.client >= 0 && ev.client < num_clients, ErrorCategory::kConfig,
            fmt::format("event client {} outside [0, {})", ev.client, num_clients));
    require(i == 0 || events_[i - 1].iteration != ev.iteration || events_[i - 1].client != ev.client,
            ErrorCategory::kConfig, fmt::format("two events for client {} at iteration {}", ev.client, ev.iteration));
  }
  presence_ = replay(iterations, num_clients, events_);
}

bool AvailabilitySchedule::present(int t, int client) const {
  require(t >= 0 && t < iterations_ && client >= 0 && client < num_clients_, ErrorCategory::kContract,
          "presence query out of range");
  return presence_[static_cast<std::size_t>(t)][static_cast<std::size_t>(client)];
}

std::vector<bool> AvailabilitySchedule::presence_row(int t) const {
  require(t >= 0 && t < iterations_, ErrorCategory::kContract, "presence query out of range");
  return presence_[static_cast<std::size_t>(t)];
}

std::optional<int> AvailabilitySchedule::first_present(int client) const {
  for (int t = 0; t < iterations_; ++t) {
    if (present(t, client)) return t;
  }
  return std::nullopt;
}

std::string AvailabilitySchedule::serialize() const {
  std::string out = fmt::format("{} {}\n", iterations_, num_clients_);
  for (const auto& ev : events_) {
    out += fmt::format("{} {} {}\n", ev.iteration, ev.client, ev.action == Action::kLeave ? "leave" : "join");
  }
  return out;
}

AvailabilitySchedule AvailabilitySchedule::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  int T = 0;
  int n = 0;
  require(static_cast<bool>(in >> T >> n), ErrorCategory::kConfig, "schedule header must be 'T n'");
  std::vector<Event> events;
  int t = 0;
  int c = 0;
  std::string action;
  while (in >> t >> c >> action) {
    require(action == "leave" || action == "join", ErrorCategory::kConfig, "unknown schedule action '" + action + "'");
    events.push_back({t, c, action == "leave" ? Action::kLeave : Action::kJoin});
  }
  require(in.eof(), ErrorCategory::kConfig, "malformed schedule event line");
  return AvailabilitySchedule(T, n, std::move(events));
}

void AvailabilitySchedule::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  out << serialize();
}

AvailabilitySchedule AvailabilitySchedule::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read schedule " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

AvailabilitySchedule scenario_none(int n, int T) { return AvailabilitySchedule(T, n, {}); }

AvailabilitySchedule scenario_temporary(int n, int T, int client, std::optional<int> leave, std::optional<int> rejoin) {
  const int l = leave.value_or(T / 3);
  const int r = rejoin.value_or(2 * T / 3);
  require(0 <= l && l <= r, ErrorCategory::kConfig, "temporary absence needs 0 <= leave <= rejoin");
  std::vector<Event> events;
  if (l < T && l < r) {
    events.push_back({l, client, Action::kLeave});
    if (r < T) events.push_back({r, client, Action::kJoin});
  }
  return AvailabilitySchedule(T, n, std::move(events));
}

AvailabilitySchedule scenario_permanent(int n, int T, int client, std::optional<int> leave_at) {
  const int l = leave_at.value_or(T / 3);
  require(l >= 0, ErrorCategory::kConfig, "leave iteration must be non-negative");
  std::vector<Event> events;
  if (l < T) events.push_back({l, client, Action::kLeave});
  return AvailabilitySchedule(T, n, std::move(events));
}

AvailabilitySchedule scenario_sequential(int n, int T, const std::vector<int>& leave_times) {
  require(static_cast<int>(leave_times.size()) == n, ErrorCategory::kConfig, "need one leave time per client");
  std::vector<Event> events;
  for (int c = 0; c < n; ++c) {
    const int t = leave_times[static_cast<std::size_t>(c)];
    require(t >= 0, ErrorCategory::kConfig, "leave times must be non-negative");
    if (t < T) events.push_back({t, c, Action::kLeave});
  }
  return AvailabilitySchedule(T, n, std::move(events));
}

std::vector<int> default_leave_times(int n, int T, std::uint64_t seed) {
  const int waves = std::min(n, 4);
  const int first = T / 3;
  const int last = 5 * T / 6;
  std::vector<int> wave_time(static_cast<std::size_t>(waves));
  for (int k = 0; k < waves; ++k) {
    wave_time[static_cast<std::size_t>(k)] = waves == 1 ? last : first + (last - first) * k / (waves - 1);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (n > 4) {
    auto rng = util::make_rng(seed, util::Stream::kSchedule);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<int> times(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    times[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = wave_time[static_cast<std::size_t>(i * waves / n)];
  }
  return times;
}

AvailabilitySchedule scenario_group(int n, int T, std::optional<int> switch_at) {
  require(n >= 2, ErrorCategory::kConfig, "group scenario needs at least two clients");
  const int s = switch_at.value_or(T / 3);
  require(s >= 0, ErrorCategory::kConfig, "switch iteration must be non-negative");
  const int half = n / 2;
  std::vector<Event> events;
  for (int c = 0; c < n; ++c) {
    const bool first_group = c < half;
    if (first_group) {
      if (s < T) events.push_back({s, c, Action::kLeave});
    } else if (s > 0) {
      events.push_back({0, c, Action::kLeave});
      if (s < T) events.push_back({s, c, Action::kJoin});
    }
  }
  return AvailabilitySchedule(T, n, std::move(events));
}

}  // namespace feddig::scenario

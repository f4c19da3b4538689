#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feddig::scenario {

enum class Action { kLeave, kJoin };

struct Event {
  int iteration = 0;
  int client = 0;
  Action action = Action::kLeave;

  bool operator==(const Event&) const = default;
};

// Client availability over T iterations. Every client starts present;
// an event at iteration t takes effect from t onward.
class AvailabilitySchedule {
 public:
  AvailabilitySchedule() = default;
  // Sorts events by (iteration, client) and validates them.
  AvailabilitySchedule(int iterations, int num_clients, std::vector<Event> events);

  int iterations() const { return iterations_; }
  int num_clients() const { return num_clients_; }
  const std::vector<Event>& events() const { return events_; }

  bool present(int t, int client) const;
  std::vector<bool> presence_row(int t) const;
  // presence[t][client], shape (T, n)
  const std::vector<std::vector<bool>>& presence() const { return presence_; }
  // First iteration at which the client is present, or nullopt if never.
  std::optional<int> first_present(int client) const;

  std::string serialize() const;
  static AvailabilitySchedule parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static AvailabilitySchedule load(const std::filesystem::path& path);

  bool operator==(const AvailabilitySchedule& other) const {
    return iterations_ == other.iterations_ && num_clients_ == other.num_clients_ && events_ == other.events_;
  }

 private:
  int iterations_ = 0;
  int num_clients_ = 0;
  std::vector<Event> events_;
  std::vector<std::vector<bool>> presence_;
};

// Presence matrix obtained by replaying events from the all-present state.
std::vector<std::vector<bool>> replay(int iterations, int num_clients, const std::vector<Event>& events);

AvailabilitySchedule scenario_none(int n, int T);

// `client` absent on [leave, rejoin). Defaults: floor(T/3) and floor(2T/3),
// i.e. 100 and 200 for T = 300.
AvailabilitySchedule scenario_temporary(int n, int T, int client, std::optional<int> leave = std::nullopt,
                                        std::optional<int> rejoin = std::nullopt);

// `client` absent for all t >= leave_at. Default floor(T/3).
AvailabilitySchedule scenario_permanent(int n, int T, int client, std::optional<int> leave_at = std::nullopt);

// Client k absent from leave_times[k] on. Times >= T produce no event.
AvailabilitySchedule scenario_sequential(int n, int T, const std::vector<int>& leave_times);

// Default leave times: min(n, 4) waves evenly spaced from floor(T/3) to
// floor(5T/6) (100/150/200/250 for T = 300). With n <= 4 client k takes wave
// k; with more clients a seeded permutation spreads them over the waves.
std::vector<int> default_leave_times(int n, int T, std::uint64_t seed);

// The first half of the clients trains on [0, switch_at), the second half
// from switch_at on. Default switch_at = floor(T/3).
AvailabilitySchedule scenario_group(int n, int T, std::optional<int> switch_at = std::nullopt);

}  // namespace feddig::scenario

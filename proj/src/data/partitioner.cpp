#include "feddig/data/partitioner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "feddig/error.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::data {

void SplitPlan::validate() const {
  require(train_frac > 0 && val_frac >= 0 && monitor_frac >= 0, ErrorCategory::kConfig,
          "split fractions must be non-negative and the train fraction positive");
  require(std::abs(train_frac + val_frac + monitor_frac - 1.0) < 1e-9, ErrorCategory::kConfig,
          "split fractions must sum to 1");
}

Splits make_splits(const Dataset& dataset, const SplitPlan& plan) {
  plan.validate();
  const int available = dataset.train.size();
  const int total = dataset.spec.sample_budget ? std::min(*dataset.spec.sample_budget, available) : available;
  std::vector<int> order(static_cast<std::size_t>(available));
  std::iota(order.begin(), order.end(), 0);
  auto rng = util::make_rng(plan.seed, util::Stream::kSplit);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(total));

  const auto n_train = static_cast<std::size_t>(std::llround(plan.train_frac * total));
  const auto n_val = std::min(static_cast<std::size_t>(std::llround(plan.val_frac * total)), order.size() - n_train);
  Splits s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.monitor.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* v : {&s.train, &s.val, &s.monitor}) std::sort(v->begin(), v->end());
  s.test.resize(static_cast<std::size_t>(dataset.test.size()));
  std::iota(s.test.begin(), s.test.end(), 0);
  return s;
}

std::size_t ClientShards::total() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.size();
  return n;
}

int ClientShards::largest_client() const {
  int best = 0;
  for (int i = 1; i < num_clients(); ++i) {
    if (clients[static_cast<std::size_t>(i)].size() > clients[static_cast<std::size_t>(best)].size()) best = i;
  }
  return best;
}

ClientShards dirichlet_dispatch(std::span<const int> train, std::span<const int> labels, int num_classes,
                                int num_clients, double mu, std::uint64_t seed) {
  require(mu > 0, ErrorCategory::kConfig, "Dirichlet concentration must be positive");
  require(num_clients >= 1, ErrorCategory::kConfig, "need at least one client");
  require(static_cast<std::size_t>(num_clients) <= train.size(), ErrorCategory::kConfig,
          fmt::format("{} clients but only {} training samples", num_clients, train.size()));

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
  for (int idx : train) {
    require(idx >= 0 && static_cast<std::size_t>(idx) < labels.size(), ErrorCategory::kContract,
            "train index out of range");
    by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)])].push_back(idx);
  }

  ClientShards shards;
  shards.mu = mu;
  shards.seed = seed;
  shards.clients.resize(static_cast<std::size_t>(num_clients));
  auto rng = util::make_rng(seed, util::Stream::kDirichlet);
  std::gamma_distribution<double> gamma(mu, 1.0);
  std::vector<double> share(static_cast<std::size_t>(num_clients));

  for (auto& members : by_class) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    double sum = 0.0;
    for (auto& p : share) {
      p = gamma(rng);
      sum += p;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      // Every draw underflowed: the limit of a tiny concentration is a single owner.
      std::fill(share.begin(), share.end(), 0.0);
      share[std::uniform_int_distribution<std::size_t>(0, share.size() - 1)(rng)] = 1.0;
      sum = 1.0;
    }
    const auto size = members.size();
    std::size_t begin = 0;
    double cumulative = 0.0;
    for (int c = 0; c < num_clients; ++c) {
      cumulative += share[static_cast<std::size_t>(c)] / sum;
      const std::size_t end =
          c + 1 == num_clients ? size : std::min(size, static_cast<std::size_t>(std::floor(cumulative * size)));
      auto& dst = shards.clients[static_cast<std::size_t>(c)];
      dst.insert(dst.end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                 members.begin() + static_cast<std::ptrdiff_t>(std::max(begin, end)));
      begin = std::max(begin, end);
    }
  }

  // Repair empty clients by moving one random sample from the largest shard.
  for (auto& shard : shards.clients) {
    if (!shard.empty()) continue;
    auto& donor = shards.clients[static_cast<std::size_t>(shards.largest_client())];
    const auto pick = std::uniform_int_distribution<std::size_t>(0, donor.size() - 1)(rng);
    shard.push_back(donor[pick]);
    donor.erase(donor.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  for (auto& shard : shards.clients) std::sort(shard.begin(), shard.end());
  return shards;
}

std::vector<std::vector<int>> class_histogram(const ClientShards& shards, std::span<const int> labels,
                                              int num_classes) {
  std::vector<std::vector<int>> h(shards.clients.size(), std::vector<int>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t c = 0; c < shards.clients.size(); ++c) {
    for (int idx : shards.clients[c]) ++h[c][static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)])];
  }
  return h;
}

void write_shards(const std::filesystem::path& path, const ClientShards& shards) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  out << "# client mu seed count indices...\n";
  for (int c = 0; c < shards.num_clients(); ++c) {
    const auto& shard = shards.clients[static_cast<std::size_t>(c)];
    out << fmt::format("{} {} {} {}", c, shards.mu, shards.seed, shard.size());
    for (int idx : shard) out << ' ' << idx;
    out << '\n';
  }
}

ClientShards read_shards(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read shard file " + path.string());
  ClientShards shards;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int client = 0;
    std::size_t count = 0;
    ls >> client >> shards.mu >> shards.seed >> count;
    require(static_cast<bool>(ls) && client == shards.num_clients(), ErrorCategory::kIo,
            "malformed shard record in " + path.string());
    std::vector<int> idx(count);
    for (auto& v : idx) ls >> v;
    require(static_cast<bool>(ls), ErrorCategory::kIo, "truncated shard record in " + path.string());
    shards.clients.push_back(std::move(idx));
  }
  return shards;
}

}  // namespace feddig::data

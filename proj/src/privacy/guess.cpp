#include "feddig/privacy/guess.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "feddig/error.hpp"

namespace feddig::privacy {

namespace {

void compose(int remaining, int part, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (part + 1 == static_cast<int>(current.size())) {
    current[static_cast<std::size_t>(part)] = remaining;
    out.push_back(current);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    current[static_cast<std::size_t>(part)] = v;
    compose(remaining - v, part + 1, current, out);
  }
}

}  // namespace

std::vector<std::vector<int>> enumerate_compositions(int total, int parts) {
  require(total >= 0 && parts >= 1, ErrorCategory::kConfig, "compositions need total >= 0 and parts >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> current(static_cast<std::size_t>(parts), 0);
  compose(total, 0, current, out);
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

ExactGuess exact_guess_probability(int spd, int range, std::uint64_t budget) {
  require(spd >= 1, ErrorCategory::kConfig, "SpD must be at least 1");
  require(range >= 1 && range <= 1000, ErrorCategory::kConfig, "exact mode needs 1 <= range <= 1000");
  // Sum over V of C(SpD+V-1, V) = C(SpD+R, R) - 1 tuples in total.
  const double tuples = binomial(spd + range, range) - 1.0;
  if (tuples > static_cast<double>(budget)) {
    throw Error(ErrorCategory::kBudget,
                fmt::format("exact enumeration needs {:.3g} tuples (budget {}); use the closed-form bound instead",
                            tuples, budget));
  }
  ExactGuess g;
  double sum = 0.0;
  for (int v = 1; v <= range; ++v) {
    auto tuples_v = enumerate_compositions(v, spd);
    std::set<std::vector<int>> distinct;
    for (auto t : tuples_v) {
      std::sort(t.begin(), t.end());
      distinct.insert(std::move(t));
    }
    g.ordered.push_back(tuples_v.size());
    g.overcount.push_back(tuples_v.size() - distinct.size());
    sum += 1.0 / static_cast<double>(distinct.size());
  }
  g.probability = sum / range;
  g.log_probability = std::log(g.probability);
  return g;
}

GuessBound guess_bound(int spd, double range, int length) {
  require(spd >= 3, ErrorCategory::kConfig,
          fmt::format("the harmonic bound only holds for SpD >= 3 (got SpD={}); use exact mode", spd));
  require(range >= 1.0, ErrorCategory::kConfig, "range must be at least 1");
  require(length >= 1, ErrorCategory::kConfig, "digest length must be at least 1");
  GuessBound b;
  b.harmonic = std::log(range) + std::numbers::egamma + 1.0 / (2.0 * range);
  b.per_element = b.harmonic / range;
  b.log_bound = length * (std::log(b.harmonic) - std::log(range));
  b.log2_bound = b.log_bound / std::numbers::ln2;
  b.log10_bound = b.log_bound / std::numbers::ln10;
  return b;
}

}  // namespace feddig::privacy

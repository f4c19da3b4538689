#pragma once

#include <cstdint>
#include <vector>

namespace feddig::privacy {

// Ordered non-negative integer compositions of `total` into `parts` parts,
// produced by exhaustive enumeration.
std::vector<std::vector<int>> enumerate_compositions(int total, int parts);

// C(n, k) as a double (exact for the small arguments used here).
double binomial(int n, int k);

struct ExactGuess {
  double probability = 0.0;
  double log_probability = 0.0;      // natural log
  std::vector<std::uint64_t> ordered;  // per V = 1..R_q: ordered compositions, C(SpD+V-1, V)
  std::vector<std::uint64_t> overcount;  // per V: m, tuples that are permutations of an earlier one
};

// Per-element probability that a random guess recovers the mixed integer
// values behind one digest element: (1/R_q) * sum_{V=1..R_q} 1/(C - m),
// where C - m is the number of distinct value multisets. Both counts come
// from enumeration. Throws a budget error when the enumeration would exceed
// `budget` tuples.
ExactGuess exact_guess_probability(int spd, int range, std::uint64_t budget = 20'000'000);

struct GuessBound {
  double harmonic = 0.0;          // H(R_q) = ln R_q + gamma + 1/(2 R_q)
  double per_element = 0.0;       // H / R_q
  double log_bound = 0.0;         // l * ln(H / R_q)
  double log2_bound = 0.0;
  double log10_bound = 0.0;
};

// Closed-form upper bound over l independent elements. Valid for SpD >= 3;
// smaller values raise a configuration error.
GuessBound guess_bound(int spd, double range, int length);

}  // namespace feddig::privacy

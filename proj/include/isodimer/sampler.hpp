#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "isodimer/kasteleyn.hpp"
#include "isodimer/lattice.hpp"

namespace isodimer {

// Sorted edge ids of the double graph.
using Matching = std::vector<int>;

struct WeightedMatching {
  Matching edges;
  // Product of |dbar| over the edges.
  double weight = 0.0;
};

inline constexpr std::size_t kDefaultEnumerationLimit = 1000000;

// All perfect matchings, by recursion on the white vertex with the fewest
// free neighbors. Throws TooLarge once more than `limit` are found.
std::vector<WeightedMatching> enumerate_matchings(const DoubleGraph& gd,
                                                  std::size_t limit = kDefaultEnumerationLimit);

bool validate_matching(const DoubleGraph& gd, const Matching& m);

// Seed of sample `index` under `master`.
std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index);
// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

// One exact sample from the dimer measure. The system must be inverted.
Matching sample_matching(const KasteleynSystem& sys, std::uint64_t seed);

// Samples first_index .. first_index + count - 1 of the master stream. The
// result does not depend on `threads`.
std::vector<Matching> sample_matchings(const KasteleynSystem& sys, std::uint64_t master_seed,
                                       std::size_t count, int threads = 1,
                                       std::size_t first_index = 0);

}  // namespace isodimer

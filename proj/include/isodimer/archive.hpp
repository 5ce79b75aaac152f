#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isodimer/lattice.hpp"
#include "isodimer/sampler.hpp"

namespace isodimer {

// Fixed-format double text: shortest round-trip-safe form via %.17g.
std::string format_double(double x);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);

std::string read_file(const std::string& path);

struct GraphArchive {
  IsoradialGraph graph;
  DomainSpec domain;
  DoubleGraph double_graph;
};

std::string write_graph_archive(const IsoradialGraph& g, const DomainSpec& d,
                                const DoubleGraph& gd);
// Rebuilds the double graph from the primal data and checks it against the
// stored one; throws InvalidArchive on mismatch.
GraphArchive parse_graph_archive(const std::string& text);

// One line per sample: index then sorted edge ids.
std::string write_matching_archive(const std::vector<Matching>& samples);
std::vector<Matching> parse_matching_archive(const std::string& text, const DoubleGraph& gd);

}  // namespace isodimer

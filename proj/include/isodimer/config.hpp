#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isodimer/gff_lab.hpp"
#include "isodimer/lattice.hpp"
#include "isodimer/pipeline.hpp"

namespace isodimer {

// "1/16", "0.0625" or "1e-2".
double parse_fraction(const std::string& text);

struct ExperimentConfig {
  std::string name = "custom";
  // "rectangle", "polygon" or "block".
  std::string domain_kind = "rectangle";
  DomainSpec domain = DomainSpec::rectangle(1.0, 1.0);
  // Set for rectangles with a corner at the origin.
  std::optional<ContinuumDomain> continuum = ContinuumDomain::rectangle(1.0, 1.0);
  // "single-face", "2x2", "3x2" or "perturbed" when domain_kind == "block".
  std::string block;
  LatticeSpec lattice = LatticeSpec::square();
  std::vector<double> deltas;
  std::vector<std::string> delta_labels;

  ReportProbes probes;
  // Probe the single double-graph face nearest each point instead of
  // averaging over the corners of the nearest primal face.
  bool corner_probes = false;

  std::optional<std::uint64_t> seed;
  int samples = 100;
  int k = 2;
  bool exact = true;
  int threads = 1;

  // Throws InvalidConfig.
  void validate() const;
  // Canonical JSON text; its hash identifies the configuration.
  std::string canonical() const;
};

ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Graph for config.deltas.front(), or the block graph.
IsoradialGraph config_graph(const ExperimentConfig& c, double delta);

// Probes resolved against a concrete graph.
std::vector<Probe> resolve_probes(const ExperimentConfig& c, const IsoradialGraph& g,
                                  const DoubleGraph& gd);

}  // namespace isodimer

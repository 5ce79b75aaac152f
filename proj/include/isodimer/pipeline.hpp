#pragma once

#include <string>
#include <vector>

#include "isodimer/kasteleyn.hpp"
#include "isodimer/lattice.hpp"

namespace isodimer {

struct LatticeSpec {
  std::string name;
  std::vector<double> u_angles;
  std::vector<double> v_angles;
  double c0 = kDefaultC0;

  // Axis-aligned square lattice: primal spacing sqrt(2) delta.
  static LatticeSpec square();
  // Two-periodic deformation of the square lattice.
  static LatticeSpec perturbed();
  // "square" or "perturbed"; throws InvalidConfig otherwise.
  static LatticeSpec by_name(const std::string& name);
};

// Lattice covering d, clipped to it. The origin is placed so that the square
// lattice sits centered in the bounding box with a margin of about half a
// primal spacing.
IsoradialGraph build_domain_graph(const DomainSpec& d, const LatticeSpec& lattice, double delta);

// Block of nx x ny unit square faces with the removal mark at the middle of
// the bottom side.
struct Block {
  IsoradialGraph graph;
  DomainSpec domain;
};
Block square_block(int nx, int ny);
// Small patch of the perturbed lattice.
Block perturbed_block();

// A height probe: the double-graph faces (corner quadrilaterals) of the
// primal face nearest to the target, averaged with equal weight.
struct Probe {
  Point target;
  int primal_face = -1;
  Point center;
  std::vector<int> faces;
};
Probe make_probe(const IsoradialGraph& g, const DoubleGraph& gd, Point target);

// E[prod_j hbar_j] where hbar_j is the probe-averaged height (relative to the
// outer face). Each combination of corner faces gets its own edge-disjoint
// paths.
double probe_moment(const KasteleynSystem& sys, const std::vector<Probe>& probes, int threads = 1);

}  // namespace isodimer

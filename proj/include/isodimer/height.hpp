#pragma once

#include <set>
#include <span>
#include <vector>

#include "isodimer/kasteleyn.hpp"
#include "isodimer/lattice.hpp"
#include "isodimer/sampler.hpp"

namespace isodimer {

// omega_0(w -> b) = P(e) per double-graph edge.
using BaseFlow = std::vector<double>;

BaseFlow base_flow(const KasteleynSystem& sys);

struct Divergence {
  std::vector<double> white;  // outflow, expected +1
  std::vector<double> black;  // indexed by black id, expected -1 (0 at the removed one)
};
Divergence flow_divergence(const DoubleGraph& gd, const BaseFlow& flow);

// Heights on faces of the double graph with
// h(left of w -> b) - h(right of w -> b) = I(e) - P(e).
struct HeightField {
  std::vector<double> values;
  int base_face = DoubleGraph::kOuterFace;
};

HeightField height_field(const DoubleGraph& gd, const Matching& m, const BaseFlow& flow,
                         int f0 = DoubleGraph::kOuterFace);

enum class CrossingType { kU1, kU2, kU3, kU4 };

// A dual path: a start face and the ordered double-graph edges it crosses.
struct ProbePath {
  int start_face = DoubleGraph::kOuterFace;
  std::vector<int> crossed;
};

// Face reached by the path; throws InvalidPath if consecutive edges do not
// share a face.
int path_end(const DoubleGraph& gd, const ProbePath& path);
// U1/U2: white on the left of the path (sign +1); U3/U4: black on the left
// (sign -1). U1/U3 cross into primal blacks, U2/U4 into dual blacks.
std::vector<CrossingType> classify_path(const DoubleGraph& gd, const ProbePath& path);
int crossing_sign(CrossingType t);

// h(end) - h(start) from a computed field.
double height_difference(const DoubleGraph& gd, const HeightField& field, const ProbePath& path);
// The same quantity summed directly along the path.
double path_height_sum(const DoubleGraph& gd, const Matching& m, const BaseFlow& flow,
                       const ProbePath& path);

// E[prod_j (h(end_j) - h(start_j))] for pairwise edge-disjoint paths, K <= 4.
double exact_height_moment(const KasteleynSystem& sys, std::span<const ProbePath> paths,
                           int threads = 1);

// Non-outer face whose center is nearest to p (lowest id on ties).
int nearest_interior_face(const DoubleGraph& gd, Point p);

// Shortest dual path from `from` to `to` that avoids the given edges.
ProbePath route_path(const DoubleGraph& gd, int from, int to, const std::set<int>& forbidden = {});

// Paths from the outer face to each target, edge-disjoint, routed greedily in
// order.
std::vector<ProbePath> probe_paths(const DoubleGraph& gd, const std::vector<int>& targets);

}  // namespace isodimer

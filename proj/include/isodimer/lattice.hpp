#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace isodimer {

using Complex = std::complex<double>;
using Point = Complex;

inline constexpr double kDefaultC0 = 0.1;
// Geometry tolerance, relative to delta.
inline constexpr double kGeometryTol = 1e-10;

// Two families of train-track directions. Rhombus (i, j) has sides
// delta * u(i) and delta * v(j); the patterns repeat periodically in i and j.
struct TrackFamilies {
  std::vector<double> u_angles;
  std::vector<double> v_angles;
  double delta = 1.0;
  // Rhombus index ranges, inclusive.
  int i_min = 0;
  int i_max = 0;
  int j_min = 0;
  int j_max = 0;
  // Position of rhombic-lattice point (0, 0).
  Point origin{0.0, 0.0};
  double c0 = kDefaultC0;

  Complex u(int i) const;
  Complex v(int j) const;
};

struct Edge {
  int a = -1;
  int b = -1;
  double theta = 0.0;
  // Faces on the left / right of the directed edge a -> b, or -1.
  int left_face = -1;
  int right_face = -1;

  bool is_interior() const { return left_face >= 0 && right_face >= 0; }
};

struct Face {
  // Counter-clockwise vertex cycle.
  std::vector<int> cycle;
  Point center;
};

// A finite isoradial graph made of faces. Its interior dual has one vertex per
// face (at the circumcenter) and one edge per interior primal edge.
class IsoradialGraph {
 public:
  double delta = 1.0;
  double c0 = kDefaultC0;
  std::vector<Point> vertices;
  std::vector<Edge> edges;
  std::vector<Face> faces;

  // Rebuilds incidence tables; call after mutating the public vectors.
  void finalize();

  const std::vector<int>& incident_edges(int v) const { return incident_[v]; }
  int other_end(int e, int v) const {
    return edges[e].a == v ? edges[e].b : edges[e].a;
  }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  // Edge joining u and v, or -1.
  int find_edge(int u, int v) const;

  // theta_e is the angle between e and a side of its rhombus.
  double primal_length(int e) const { return 2.0 * delta * std::cos(edges[e].theta); }
  double dual_length(int e) const { return 2.0 * delta * std::sin(edges[e].theta); }

 private:
  std::vector<std::vector<int>> incident_;
  std::vector<char> boundary_vertex_;
};

struct DomainSpec {
  // Simple closed polygon, counter-clockwise; the closing side is implicit.
  std::vector<Point> polygon;
  // Straight boundary portion L0 and the marked point z0 on it.
  Point l0_a;
  Point l0_b;
  Point z0;

  static DomainSpec rectangle(double width, double height);
  void validate() const;
  bool contains(Point p, double tol) const;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

// Whole-plane patch of the rhombic lattice: faces are the quadrilaterals around
// odd rhombic points; edges are the primal diagonals of the rhombi.
IsoradialGraph build_lattice(const TrackFamilies& tracks);

ValidationReport validate_rhombic(const IsoradialGraph& g);

// Union of all faces of g lying entirely inside the domain.
IsoradialGraph clip_to_domain(const IsoradialGraph& g, const DomainSpec& d);

// Track families sized and placed to cover the bounding box of d.
TrackFamilies covering_tracks(std::vector<double> u_angles,
                              std::vector<double> v_angles, double delta,
                              const DomainSpec& d, Point origin);

// ---------------------------------------------------------------------------
// Double graph

enum class BlackKind : std::uint8_t { kPrimal, kDual };

struct BlackVertex {
  BlackKind kind;
  // Primal vertex id (kPrimal) or face id (kDual).
  int ref;
  Point pos;
};

struct WhiteVertex {
  int edge;
  Point pos;
};

struct DoubleEdge {
  int white;
  int black;
  // Half-angle of the primal edge behind the white vertex.
  double theta;
  // Modulus of the Kasteleyn entry: 2 sin(theta) or 2 cos(theta).
  double nu;
  // Unit direction from white to black.
  Complex xi;
  // Faces of the double graph left / right of the directed edge w -> b.
  int left_face;
  int right_face;
};

struct DoubleFace {
  // Primal corner (vertex, face) of the corner quadrilateral; -1 for the
  // outer face.
  int vertex = -1;
  int face = -1;
  Point center;
  bool is_outer() const { return vertex < 0; }
};

class DoubleGraph {
 public:
  static constexpr int kOuterFace = 0;

  double delta = 1.0;
  std::vector<BlackVertex> blacks;  // includes the removed vertex
  std::vector<WhiteVertex> whites;
  std::vector<DoubleEdge> edges;    // after removal
  std::vector<DoubleFace> faces;    // after removal; face 0 is the outer face
  int removed = -1;

  int active_black_count() const { return static_cast<int>(blacks.size()) - 1; }
  // Column of a black vertex in the Kasteleyn matrix; -1 for the removed one.
  int black_column(int b) const { return black_column_[b]; }
  int column_black(int col) const { return column_black_[col]; }
  const std::vector<int>& white_edges(int w) const { return white_edges_[w]; }
  const std::vector<int>& black_edges(int b) const { return black_edges_[b]; }
  const std::vector<int>& face_edges(int f) const { return face_edges_[f]; }
  int find_edge(int w, int b) const;
  int black_of_vertex(int v) const { return v; }
  int black_of_face(int f) const { return primal_vertex_count_ + f; }

  void finalize(int primal_vertex_count);

 private:
  int primal_vertex_count_ = 0;
  std::vector<int> black_column_;
  std::vector<int> column_black_;
  std::vector<std::vector<int>> white_edges_;
  std::vector<std::vector<int>> black_edges_;
  std::vector<std::vector<int>> face_edges_;
};

// Superposition of g and its interior dual with the boundary primal vertex
// nearest to d.z0 removed. If removed_vertex >= 0 it is used instead.
DoubleGraph build_double_graph(const IsoradialGraph& g, const DomainSpec& d,
                               int removed_vertex = -1);

// Max deviation of dbar(w, b) from (2/delta) |b' - w| (b - w) / |b - w|, where
// b' is a neighbor of w of the other black kind.
double double_graph_geometry_residual(const DoubleGraph& gd);

}  // namespace isodimer

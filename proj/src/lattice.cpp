#include "isodimer/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <utility>

#include "isodimer/errors.hpp"

namespace isodimer {
namespace {

constexpr double kPi = 3.14159265358979323846;

int positive_mod(int a, int n) { return ((a % n) + n) % n; }

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

// Orientation of c relative to the directed line a -> b, with a dead zone.
int orientation(Point a, Point b, Point c, double tol) {
  double v = cross(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

bool segments_cross_properly(Point p, Point q, Point r, Point s, double tol) {
  int o1 = orientation(p, q, r, tol);
  int o2 = orientation(p, q, s, tol);
  int o3 = orientation(r, s, p, tol);
  int o4 = orientation(r, s, q, tol);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

double point_segment_distance(Point p, Point a, Point b) {
  Complex ab = b - a;
  double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Combinatorial disc test for a face union: connected through interior edges,
// Euler characteristic one, and no pinched boundary vertex.
void require_simply_connected(const IsoradialGraph& g) {
  const int nf = static_cast<int>(g.faces.size());
  std::vector<std::vector<int>> adj(nf);
  for (const Edge& e : g.edges) {
    if (e.is_interior()) {
      adj[e.left_face].push_back(e.right_face);
      adj[e.right_face].push_back(e.left_face);
    }
  }
  std::vector<char> seen(nf, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int f = q.front();
    q.pop();
    for (int h : adj[f]) {
      if (!seen[h]) {
        seen[h] = 1;
        ++reached;
        q.push(h);
      }
    }
  }
  if (reached != nf) {
    throw Error(ErrorKind::kNotSimplyConnected,
                "face union has " + std::to_string(nf - reached) +
                    " faces disconnected from face 0");
  }
  const long euler = static_cast<long>(g.vertices.size()) -
                     static_cast<long>(g.edges.size()) + nf;
  if (euler != 1) {
    throw Error(ErrorKind::kNotSimplyConnected,
                "Euler characteristic " + std::to_string(euler) + " != 1");
  }
  std::vector<int> boundary_degree(g.vertices.size(), 0);
  for (const Edge& e : g.edges) {
    if (!e.is_interior()) {
      ++boundary_degree[e.a];
      ++boundary_degree[e.b];
    }
  }
  for (std::size_t v = 0; v < boundary_degree.size(); ++v) {
    if (boundary_degree[v] != 0 && boundary_degree[v] != 2) {
      throw Error(ErrorKind::kNotSimplyConnected,
                  "boundary pinches at vertex " + std::to_string(v));
    }
  }
}

}  // namespace

Complex TrackFamilies::u(int i) const {
  return std::polar(1.0, u_angles[positive_mod(i, static_cast<int>(u_angles.size()))]);
}

Complex TrackFamilies::v(int j) const {
  return std::polar(1.0, v_angles[positive_mod(j, static_cast<int>(v_angles.size()))]);
}

void IsoradialGraph::finalize() {
  incident_.assign(vertices.size(), {});
  boundary_vertex_.assign(vertices.size(), 0);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    incident_[edges[e].a].push_back(e);
    incident_[edges[e].b].push_back(e);
    if (!edges[e].is_interior()) {
      boundary_vertex_[edges[e].a] = 1;
      boundary_vertex_[edges[e].b] = 1;
    }
  }
}

int IsoradialGraph::find_edge(int u, int v) const {
  for (int e : incident_[u]) {
    if (other_end(e, u) == v) return e;
  }
  return -1;
}

DomainSpec DomainSpec::rectangle(double width, double height) {
  DomainSpec d;
  d.polygon = {{0.0, 0.0}, {width, 0.0}, {width, height}, {0.0, height}};
  d.l0_a = {0.0, 0.0};
  d.l0_b = {width, 0.0};
  d.z0 = {width / 2.0, 0.0};
  return d;
}

void DomainSpec::validate() const {
  const int n = static_cast<int>(polygon.size());
  if (n < 3) throw Error(ErrorKind::kInvalidConfig, "domain polygon needs at least 3 corners");
  double scale = 0.0;
  double area2 = 0.0;
  for (int k = 0; k < n; ++k) {
    scale = std::max(scale, std::abs(polygon[k]));
    area2 += cross(polygon[k], polygon[(k + 1) % n]);
  }
  const double tol = 1e-12 * std::max(scale, 1.0);
  if (area2 <= 0.0) {
    throw Error(ErrorKind::kInvalidConfig, "domain polygon must be counter-clockwise");
  }
  for (int k = 0; k < n; ++k) {
    for (int m = k + 2; m < n; ++m) {
      if (k == 0 && m == n - 1) continue;
      if (segments_cross_properly(polygon[k], polygon[(k + 1) % n], polygon[m],
                                  polygon[(m + 1) % n], tol)) {
        throw Error(ErrorKind::kInvalidConfig, "domain polygon is not simple");
      }
    }
  }
  bool on_side = false;
  for (int k = 0; k < n && !on_side; ++k) {
    Point a = polygon[k];
    Point b = polygon[(k + 1) % n];
    on_side = point_segment_distance(l0_a, a, b) <= tol &&
              point_segment_distance(l0_b, a, b) <= tol;
  }
  if (!on_side) {
    throw Error(ErrorKind::kInvalidConfig, "straight portion L0 is not part of one polygon side");
  }
  if (point_segment_distance(z0, l0_a, l0_b) > tol) {
    throw Error(ErrorKind::kInvalidConfig, "z0 does not lie on L0");
  }
}

bool DomainSpec::contains(Point p, double tol) const {
  const int n = static_cast<int>(polygon.size());
  bool inside = false;
  for (int k = 0, m = n - 1; k < n; m = k++) {
    Point a = polygon[k];
    Point b = polygon[m];
    if (point_segment_distance(p, a, b) <= tol) return true;
    if ((a.imag() > p.imag()) != (b.imag() > p.imag())) {
      double x = a.real() + (p.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
      if (p.real() < x) inside = !inside;
    }
  }
  return inside;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const ValidationCheck& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

IsoradialGraph build_lattice(const TrackFamilies& tracks) {
  if (tracks.u_angles.empty() || tracks.v_angles.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "track families must be non-empty");
  }
  if (!(tracks.delta > 0.0)) throw Error(ErrorKind::kInvalidConfig, "delta must be positive");
  if (tracks.i_max < tracks.i_min || tracks.j_max < tracks.j_min) {
    throw Error(ErrorKind::kInvalidConfig, "empty track extent");
  }
  const double c0 = tracks.c0;
  const double angle_tol = 1e-12;
  for (double ua : tracks.u_angles) {
    for (double va : tracks.v_angles) {
      double gamma = std::arg(std::polar(1.0, va) / std::polar(1.0, ua));
      if (gamma < 2.0 * c0 - angle_tol || gamma > kPi - 2.0 * c0 + angle_tol) {
        std::ostringstream msg;
        msg << "angle " << gamma << " between track directions " << ua << " and " << va
            << " leaves [2c0, pi - 2c0] with c0 = " << c0;
        throw Error(ErrorKind::kAngleBoundViolation, msg.str());
      }
    }
  }

  const int ni = tracks.i_max - tracks.i_min + 2;  // grid points per row
  const int nj = tracks.j_max - tracks.j_min + 2;
  std::vector<Complex> cum_u(ni), cum_v(nj);
  auto cumulative = [](int lo, int count, auto dir) {
    std::vector<Complex> out(count);
    // Position of index k is the signed sum of directions between 0 and k.
    for (int k = 0; k < count; ++k) {
      int idx = lo + k;
      Complex s = 0.0;
      if (idx >= 0) {
        for (int t = 0; t < idx; ++t) s += dir(t);
      } else {
        for (int t = idx; t < 0; ++t) s -= dir(t);
      }
      out[k] = s;
    }
    return out;
  };
  cum_u = cumulative(tracks.i_min, ni, [&](int t) { return tracks.u(t); });
  cum_v = cumulative(tracks.j_min, nj, [&](int t) { return tracks.v(t); });
  auto position = [&](int i, int j) {
    return tracks.origin + tracks.delta * (cum_u[i - tracks.i_min] + cum_v[j - tracks.j_min]);
  };
  auto in_grid = [&](int i, int j) {
    return i >= tracks.i_min && i <= tracks.i_max + 1 && j >= tracks.j_min &&
           j <= tracks.j_max + 1;
  };

  IsoradialGraph g;
  g.delta = tracks.delta;
  g.c0 = c0;
  std::map<std::pair<int, int>, int> vertex_id;
  std::map<std::pair<int, int>, int> edge_id;
  auto vertex_at = [&](int i, int j) {
    auto [it, inserted] = vertex_id.try_emplace({i, j}, static_cast<int>(g.vertices.size()));
    if (inserted) g.vertices.push_back(position(i, j));
    return it->second;
  };

  for (int j = tracks.j_min; j <= tracks.j_max + 1; ++j) {
    for (int i = tracks.i_min; i <= tracks.i_max + 1; ++i) {
      if (positive_mod(i + j, 2) != 1) continue;
      if (!in_grid(i - 1, j) || !in_grid(i + 1, j) || !in_grid(i, j - 1) || !in_grid(i, j + 1)) {
        continue;
      }
      const int f = static_cast<int>(g.faces.size());
      Face face;
      face.center = position(i, j);
      const std::pair<int, int> corners[4] = {{i + 1, j}, {i, j + 1}, {i - 1, j}, {i, j - 1}};
      // Rhombus between consecutive corners k and k+1.
      const std::pair<int, int> rhombi[4] = {{i, j}, {i - 1, j}, {i - 1, j - 1}, {i, j - 1}};
      for (auto [ci, cj] : corners) face.cycle.push_back(vertex_at(ci, cj));
      for (int k = 0; k < 4; ++k) {
        const int p = face.cycle[k];
        const int q = face.cycle[(k + 1) % 4];
        auto [it, inserted] = edge_id.try_emplace(rhombi[k], static_cast<int>(g.edges.size()));
        if (inserted) {
          auto [ri, rj] = rhombi[k];
          double gamma = std::arg(tracks.v(rj) / tracks.u(ri));
          Edge e;
          e.a = p;
          e.b = q;
          // theta is the angle between the edge and a rhombus side, so the
          // u + v diagonal (length 2 delta cos(gamma / 2)) has theta = gamma / 2.
          e.theta = positive_mod(ri + rj, 2) == 0 ? gamma / 2.0 : kPi / 2.0 - gamma / 2.0;
          g.edges.push_back(e);
        }
        Edge& e = g.edges[it->second];
        if (e.a == p) {
          e.left_face = f;
        } else {
          e.right_face = f;
        }
      }
      g.faces.push_back(std::move(face));
    }
  }
  if (g.faces.empty()) throw Error(ErrorKind::kEmptyClip, "track extent contains no face");
  g.finalize();
  return g;
}

ValidationReport validate_rhombic(const IsoradialGraph& g) {
  ValidationReport report;
  const double tol = kGeometryTol * g.delta;
  const int nv = static_cast<int>(g.vertices.size());
  const int ne = static_cast<int>(g.edges.size());

  {
    ValidationCheck c{"face_circle", true, ""};
    for (std::size_t f = 0; f < g.faces.size() && c.passed; ++f) {
      for (int v : g.faces[f].cycle) {
        if (v < 0 || v >= nv) {
          c = {c.name, false, "face " + std::to_string(f) + " references a missing vertex"};
          break;
        }
        double r = std::abs(g.vertices[v] - g.faces[f].center);
        if (std::abs(r - g.delta) > tol) {
          std::ostringstream msg;
          msg << "vertex " << v << " of face " << f << " at distance " << r << " from center";
          c = {c.name, false, msg.str()};
          break;
        }
      }
    }
    report.checks.push_back(c);
  }

  {
    ValidationCheck c{"rhombus_sides", true, ""};
    for (int e = 0; e < ne && c.passed; ++e) {
      const Edge& ed = g.edges[e];
      std::vector<Point> pts = {g.vertices[ed.a], g.vertices[ed.b]};
      std::vector<int> faces;
      if (ed.left_face >= 0) faces.push_back(ed.left_face);
      if (ed.right_face >= 0) faces.push_back(ed.right_face);
      for (int f : faces) {
        Point cf = g.faces[f].center;
        if (std::abs(std::abs(pts[0] - cf) - g.delta) > tol ||
            std::abs(std::abs(pts[1] - cf) - g.delta) > tol) {
          c = {c.name, false, "rhombus of edge " + std::to_string(e) + " has a side != delta"};
        }
        pts.push_back(cf);
      }
      if (c.passed && ed.is_interior()) {
        // Four distinct corners whose diagonals bisect each other at right angles.
        for (std::size_t s = 0; s < pts.size(); ++s) {
          for (std::size_t t = s + 1; t < pts.size(); ++t) {
            if (std::abs(pts[s] - pts[t]) <= tol) {
              c = {c.name, false, "rhombus of edge " + std::to_string(e) + " is degenerate"};
            }
          }
        }
        Complex primal = pts[1] - pts[0];
        Complex dual = pts[3] - pts[2];
        if (std::abs((primal * std::conj(dual)).real()) > tol * g.delta ||
            std::abs((pts[0] + pts[1]) - (pts[2] + pts[3])) > 2.0 * tol) {
          c = {c.name, false, "diagonals of edge " + std::to_string(e) + " do not bisect"};
        }
      }
    }
    report.checks.push_back(c);
  }

  {
    // Train tracks through full rhombi. A rhombus a, fL, b, fR has opposite
    // side pairs {(a,fL),(b,fR)} and {(b,fL),(a,fR)}; node 2e + pair.
    std::map<std::pair<int, int>, std::vector<int>> side_nodes;
    for (int e = 0; e < ne; ++e) {
      const Edge& ed = g.edges[e];
      if (!ed.is_interior()) continue;
      side_nodes[{ed.a, ed.left_face}].push_back(2 * e);
      side_nodes[{ed.b, ed.right_face}].push_back(2 * e);
      side_nodes[{ed.b, ed.left_face}].push_back(2 * e + 1);
      side_nodes[{ed.a, ed.right_face}].push_back(2 * e + 1);
    }
    UnionFind uf(2 * ne);
    std::vector<int> degree(2 * ne, 0);
    bool side_overuse = false;
    for (const auto& [side, nodes] : side_nodes) {
      if (nodes.size() > 2) side_overuse = true;
      if (nodes.size() == 2) {
        uf.unite(nodes[0], nodes[1]);
        ++degree[nodes[0]];
        ++degree[nodes[1]];
      }
    }
    ValidationCheck self{"track_self_crossing", !side_overuse,
                         side_overuse ? "a rhombus side is shared by more than two rhombi" : ""};
    std::map<std::pair<int, int>, int> crossings;
    std::map<int, bool> open_track;
    for (int e = 0; e < ne; ++e) {
      if (!g.edges[e].is_interior()) continue;
      int t0 = uf.find(2 * e);
      int t1 = uf.find(2 * e + 1);
      if (t0 == t1 && self.passed) {
        self = {self.name, false, "track crosses itself at edge " + std::to_string(e)};
      }
      ++crossings[{std::min(t0, t1), std::max(t0, t1)}];
      for (int node : {2 * e, 2 * e + 1}) {
        bool& open = open_track.try_emplace(uf.find(node), false).first->second;
        open = open || degree[node] < 2;
      }
    }
    ValidationCheck pairwise{"track_pairwise_crossing", true, ""};
    for (const auto& [pair, count] : crossings) {
      if (pair.first != pair.second && count > 1) {
        pairwise = {pairwise.name, false,
                    "two tracks cross " + std::to_string(count) + " times"};
        break;
      }
    }
    ValidationCheck periodic{"track_periodic", true, ""};
    for (const auto& [track, open] : open_track) {
      if (!open) {
        periodic = {periodic.name, false, "a train track closes on itself"};
        break;
      }
    }
    report.checks.push_back(self);
    report.checks.push_back(pairwise);
    report.checks.push_back(periodic);
  }

  {
    ValidationCheck c{"theta_bounds", true, ""};
    const double lo = g.c0 - 1e-12;
    const double hi = kPi / 2.0 - g.c0 + 1e-12;
    for (int e = 0; e < ne && c.passed; ++e) {
      const Edge& ed = g.edges[e];
      std::ostringstream msg;
      if (ed.theta < lo || ed.theta > hi) {
        msg << "edge " << e << " has theta " << ed.theta;
        c = {c.name, false, msg.str()};
      } else if (ed.a >= 0 && ed.a < nv && ed.b >= 0 && ed.b < nv &&
                 std::abs(std::abs(g.vertices[ed.b] - g.vertices[ed.a]) - g.primal_length(e)) >
                     tol) {
        msg << "edge " << e << " length differs from 2 delta cos(theta)";
        c = {c.name, false, msg.str()};
      } else if (ed.is_interior() &&
                 std::abs(std::abs(g.faces[ed.left_face].center - g.faces[ed.right_face].center) -
                          g.dual_length(e)) > tol) {
        msg << "dual of edge " << e << " differs from 2 delta sin(theta)";
        c = {c.name, false, msg.str()};
      }
    }
    report.checks.push_back(c);
  }
  return report;
}

IsoradialGraph clip_to_domain(const IsoradialGraph& g, const DomainSpec& d) {
  const double tol = kGeometryTol * g.delta;
  const int n = static_cast<int>(d.polygon.size());
  std::vector<char> inside(g.vertices.size());
  for (std::size_t v = 0; v < g.vertices.size(); ++v) inside[v] = d.contains(g.vertices[v], tol);

  std::vector<char> keep_face(g.faces.size(), 0);
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    const auto& cyc = g.faces[f].cycle;
    bool ok = std::all_of(cyc.begin(), cyc.end(), [&](int v) { return inside[v]; });
    for (std::size_t k = 0; k < cyc.size() && ok; ++k) {
      Point p = g.vertices[cyc[k]];
      Point q = g.vertices[cyc[(k + 1) % cyc.size()]];
      for (int s = 0; s < n && ok; ++s) {
        if (segments_cross_properly(p, q, d.polygon[s], d.polygon[(s + 1) % n], tol * g.delta)) {
          ok = false;
        }
      }
    }
    keep_face[f] = ok;
  }

  IsoradialGraph out;
  out.delta = g.delta;
  out.c0 = g.c0;
  std::vector<int> face_map(g.faces.size(), -1);
  std::vector<int> vertex_map(g.vertices.size(), -1);
  std::vector<char> vertex_used(g.vertices.size(), 0);
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    if (!keep_face[f]) continue;
    face_map[f] = static_cast<int>(out.faces.size());
    out.faces.push_back(g.faces[f]);
    for (int v : g.faces[f].cycle) vertex_used[v] = 1;
  }
  if (out.faces.empty()) {
    throw Error(ErrorKind::kEmptyClip, "no lattice face fits inside the domain");
  }
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    if (vertex_used[v]) {
      vertex_map[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(g.vertices[v]);
    }
  }
  for (Face& face : out.faces) {
    for (int& v : face.cycle) v = vertex_map[v];
  }
  for (const Edge& e : g.edges) {
    int lf = e.left_face >= 0 ? face_map[e.left_face] : -1;
    int rf = e.right_face >= 0 ? face_map[e.right_face] : -1;
    if (lf < 0 && rf < 0) continue;
    Edge ne = e;
    ne.a = vertex_map[e.a];
    ne.b = vertex_map[e.b];
    ne.left_face = lf;
    ne.right_face = rf;
    out.edges.push_back(ne);
  }
  out.finalize();
  require_simply_connected(out);
  return out;
}

TrackFamilies covering_tracks(std::vector<double> u_angles, std::vector<double> v_angles,
                              double delta, const DomainSpec& d, Point origin) {
  TrackFamilies t;
  t.u_angles = std::move(u_angles);
  t.v_angles = std::move(v_angles);
  t.delta = delta;
  t.origin = origin;
  Complex ubar = 0.0, vbar = 0.0;
  for (double a : t.u_angles) ubar += std::polar(1.0, a);
  for (double a : t.v_angles) vbar += std::polar(1.0, a);
  ubar /= static_cast<double>(t.u_angles.size());
  vbar /= static_cast<double>(t.v_angles.size());
  // Solve p - origin = delta (i ubar + j vbar) for the domain corners.
  const double det = cross(ubar, vbar);
  double imin = std::numeric_limits<double>::max(), imax = -imin;
  double jmin = imin, jmax = -imin;
  for (Point p : d.polygon) {
    Complex r = (p - origin) / delta;
    double i = cross(r, vbar) / det;
    double j = cross(ubar, r) / det;
    imin = std::min(imin, i);
    imax = std::max(imax, i);
    jmin = std::min(jmin, j);
    jmax = std::max(jmax, j);
  }
  const int pad = 3 + static_cast<int>(std::max(t.u_angles.size(), t.v_angles.size()));
  t.i_min = static_cast<int>(std::floor(imin)) - pad;
  t.i_max = static_cast<int>(std::ceil(imax)) + pad;
  t.j_min = static_cast<int>(std::floor(jmin)) - pad;
  t.j_max = static_cast<int>(std::ceil(jmax)) + pad;
  return t;
}

// ---------------------------------------------------------------------------

int DoubleGraph::find_edge(int w, int b) const {
  for (int e : white_edges_[w]) {
    if (edges[e].black == b) return e;
  }
  return -1;
}

void DoubleGraph::finalize(int primal_vertex_count) {
  primal_vertex_count_ = primal_vertex_count;
  black_column_.assign(blacks.size(), -1);
  column_black_.clear();
  for (int b = 0; b < static_cast<int>(blacks.size()); ++b) {
    if (b == removed) continue;
    black_column_[b] = static_cast<int>(column_black_.size());
    column_black_.push_back(b);
  }
  white_edges_.assign(whites.size(), {});
  black_edges_.assign(blacks.size(), {});
  face_edges_.assign(faces.size(), {});
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    white_edges_[edges[e].white].push_back(e);
    black_edges_[edges[e].black].push_back(e);
    face_edges_[edges[e].left_face].push_back(e);
    if (edges[e].right_face != edges[e].left_face) face_edges_[edges[e].right_face].push_back(e);
  }
}

DoubleGraph build_double_graph(const IsoradialGraph& g, const DomainSpec& d, int removed_vertex) {
  const int nv = static_cast<int>(g.vertices.size());
  const int nf = static_cast<int>(g.faces.size());
  if (removed_vertex < 0) {
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < nv; ++v) {
      if (!g.is_boundary_vertex(v)) continue;
      double dist = std::abs(g.vertices[v] - d.z0);
      if (dist < best - kGeometryTol * g.delta) {
        best = dist;
        removed_vertex = v;
      }
    }
    if (removed_vertex < 0 || best > 2.0 * g.delta) {
      std::ostringstream msg;
      msg << "nearest boundary vertex is " << best << " from z0, more than 2 delta";
      throw Error(ErrorKind::kNoBoundaryVertexNearZ0, msg.str());
    }
  } else if (removed_vertex >= nv || !g.is_boundary_vertex(removed_vertex)) {
    throw Error(ErrorKind::kInvalidArchive,
                "removed vertex " + std::to_string(removed_vertex) + " is not a boundary vertex");
  }

  DoubleGraph gd;
  gd.delta = g.delta;
  gd.removed = removed_vertex;
  for (int v = 0; v < nv; ++v) gd.blacks.push_back({BlackKind::kPrimal, v, g.vertices[v]});
  for (int f = 0; f < nf; ++f) gd.blacks.push_back({BlackKind::kDual, f, g.faces[f].center});
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    gd.whites.push_back({e, 0.5 * (g.vertices[g.edges[e].a] + g.vertices[g.edges[e].b])});
  }

  // Corner faces (vertex, face); corners at the removed vertex merge into the
  // outer face.
  gd.faces.push_back({-1, -1, Point{}});
  std::map<std::pair<int, int>, int> corner;
  for (int f = 0; f < nf; ++f) {
    for (int v : g.faces[f].cycle) {
      if (v == removed_vertex) continue;
      corner[{v, f}] = static_cast<int>(gd.faces.size());
      gd.faces.push_back({v, f, 0.5 * (g.vertices[v] + g.faces[f].center)});
    }
  }
  auto corner_face = [&](int v, int f) {
    if (f < 0 || v == removed_vertex) return DoubleGraph::kOuterFace;
    return corner.at({v, f});
  };

  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    const Edge& ed = g.edges[e];
    const Point w = gd.whites[e].pos;
    auto add = [&](int black, double nu, int left, int right) {
      Complex dir = gd.blacks[black].pos - w;
      gd.edges.push_back({e, black, ed.theta, nu, dir / std::abs(dir), left, right});
    };
    const double s = 2.0 * std::sin(ed.theta);
    const double c = 2.0 * std::cos(ed.theta);
    // Sides of w -> a are the corners at a; w -> a points against a -> b.
    if (ed.a != removed_vertex) {
      add(ed.a, s, corner_face(ed.a, ed.right_face), corner_face(ed.a, ed.left_face));
    }
    if (ed.b != removed_vertex) {
      add(ed.b, s, corner_face(ed.b, ed.left_face), corner_face(ed.b, ed.right_face));
    }
    if (ed.left_face >= 0) {
      add(nv + ed.left_face, c, corner_face(ed.a, ed.left_face), corner_face(ed.b, ed.left_face));
    }
    if (ed.right_face >= 0) {
      add(nv + ed.right_face, c, corner_face(ed.b, ed.right_face),
          corner_face(ed.a, ed.right_face));
    }
  }
  gd.finalize(nv);
  return gd;
}

double double_graph_geometry_residual(const DoubleGraph& gd) {
  // |dbar(w, b)| is 2/delta times the distance from w to a black neighbor of
  // the other kind; its direction is that of b - w.
  double worst = 0.0;
  for (int w = 0; w < static_cast<int>(gd.whites.size()); ++w) {
    double dist[2] = {-1.0, -1.0};
    for (int e : gd.white_edges(w)) {
      const DoubleEdge& de = gd.edges[e];
      int kind = gd.blacks[de.black].kind == BlackKind::kPrimal ? 0 : 1;
      dist[kind] = std::abs(gd.blacks[de.black].pos - gd.whites[w].pos);
    }
    for (int e : gd.white_edges(w)) {
      const DoubleEdge& de = gd.edges[e];
      int kind = gd.blacks[de.black].kind == BlackKind::kPrimal ? 0 : 1;
      Complex dir = gd.blacks[de.black].pos - gd.whites[w].pos;
      worst = std::max(worst, std::abs(dir / std::abs(dir) - de.xi));
      if (dist[1 - kind] >= 0.0) {
        worst = std::max(worst, std::abs(0.5 * gd.delta * de.nu - dist[1 - kind]));
      }
    }
  }
  return worst;
}

}  // namespace isodimer

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "isodimer/errors.hpp"
#include "isodimer/lattice.hpp"
#include "isodimer/pipeline.hpp"

using namespace isodimer;
namespace {

constexpr double kPi = std::numbers::pi;

TrackFamilies tracks(std::vector<double> u, std::vector<double> v, int n = 6) {
  TrackFamilies t;
  t.u_angles = std::move(u);
  t.v_angles = std::move(v);
  t.delta = 1.0;
  t.i_min = -n;
  t.i_max = n;
  t.j_min = -n;
  t.j_max = n;
  return t;
}

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

double polygon_area(const std::vector<Point>& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += cross(p[k], p[(k + 1) % p.size()]);
  return 0.5 * s;
}

// theta recomputed from the rhombus a, f_left, b, f_right of an interior edge.
double rhombus_theta(const IsoradialGraph& g, int e) {
  const Edge& ed = g.edges[e];
  Complex along = g.vertices[ed.b] - g.vertices[ed.a];
  Complex side = g.faces[ed.left_face].center - g.vertices[ed.a];
  return std::abs(std::arg(side / along));
}

double distance_to_segment(Point p, Point a, Point b) {
  Complex d = b - a;
  double t = std::clamp(((p - a) * std::conj(d)).real() / std::norm(d), 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

}  // namespace

TEST_CASE("square tracks give the square lattice with theta = pi/4") {
  IsoradialGraph g = build_lattice(tracks({0.0}, {kPi / 2}));
  REQUIRE(!g.edges.empty());
  for (const Edge& e : g.edges) CHECK(e.theta == doctest::Approx(kPi / 4).epsilon(1e-14));
  CHECK(validate_rhombic(g).all_passed());
}

TEST_CASE("sixty-degree rhombi: long diagonals have length sqrt 3") {
  IsoradialGraph g = build_lattice(tracks({0.0}, {kPi / 3}));
  int long_edges = 0, short_edges = 0;
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    double len = std::abs(g.vertices[g.edges[e].b] - g.vertices[g.edges[e].a]);
    CHECK(len == doctest::Approx(g.primal_length(e)).epsilon(1e-12));
    if (std::abs(len - std::sqrt(3.0)) < 1e-12) {
      ++long_edges;
      CHECK(g.edges[e].theta == doctest::Approx(kPi / 6).epsilon(1e-12));
    } else {
      CHECK(len == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(g.edges[e].theta == doctest::Approx(kPi / 3).epsilon(1e-12));
      ++short_edges;
    }
  }
  CHECK(long_edges > 0);
  CHECK(short_edges > 0);
  CHECK(validate_rhombic(g).all_passed());
}

TEST_CASE("alternating track angles: mixed theta, each matching its rhombus") {
  IsoradialGraph g = build_lattice(tracks({0.0, 0.2}, {kPi / 2}));
  CHECK(validate_rhombic(g).all_passed());
  double lo = 10.0, hi = -10.0;
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    const double th = g.edges[e].theta;
    lo = std::min(lo, th);
    hi = std::max(hi, th);
    CHECK(th >= g.c0);
    CHECK(th <= kPi / 2 - g.c0);
    if (g.edges[e].is_interior()) CHECK(rhombus_theta(g, e) == doctest::Approx(th).epsilon(1e-12));
  }
  CHECK(hi - lo > 0.15);
}

TEST_CASE("angle bound violation is rejected") {
  CHECK_THROWS_AS(build_lattice(tracks({0.0}, {0.1})), Error);
  try {
    build_lattice(tracks({0.0}, {0.1}));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kAngleBoundViolation);
  }
}

TEST_CASE("moving a vertex breaks the face circle check") {
  IsoradialGraph g = build_lattice(tracks({0.0}, {kPi / 2}, 3));
  g.vertices[g.faces[0].cycle[0]] = g.vertices[g.faces[0].cycle[1]];
  g.finalize();
  ValidationReport r = validate_rhombic(g);
  REQUIRE(r.find("face_circle") != nullptr);
  CHECK_FALSE(r.find("face_circle")->passed);
}

TEST_CASE("clip to the unit square stays within delta of the boundary") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  IsoradialGraph g = build_domain_graph(d, LatticeSpec::square(), 0.25);
  REQUIRE(!g.faces.empty());
  for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
    CHECK(d.contains(g.vertices[v], 1e-12));
    if (!g.is_boundary_vertex(v)) continue;
    double dist = 1e9;
    for (int k = 0; k < 4; ++k) {
      dist = std::min(dist, distance_to_segment(g.vertices[v], d.polygon[k], d.polygon[(k + 1) % 4]));
    }
    CHECK(dist < g.delta);
  }
  // Clipping again changes nothing.
  IsoradialGraph again = clip_to_domain(g, d);
  CHECK(again.vertices == g.vertices);
  CHECK(again.faces.size() == g.faces.size());
  CHECK(again.edges.size() == g.edges.size());
}

TEST_CASE("clip failures") {
  DomainSpec tiny = DomainSpec::rectangle(0.1, 0.1);
  try {
    build_domain_graph(tiny, LatticeSpec::square(), 0.25);
    FAIL("expected EmptyClip");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyClip);
  }
  // Two squares joined by a corridor narrower than a face.
  DomainSpec dumbbell;
  dumbbell.polygon = {{0, 0}, {1, 0},    {1, 0.45}, {2, 0.45}, {2, 0}, {3, 0},
                      {3, 1}, {2, 1},    {2, 0.55}, {1, 0.55}, {1, 1}, {0, 1}};
  dumbbell.l0_a = {0, 0};
  dumbbell.l0_b = {1, 0};
  dumbbell.z0 = {0.5, 0};
  try {
    build_domain_graph(dumbbell, LatticeSpec::square(), 0.125);
    FAIL("expected NotSimplyConnected");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotSimplyConnected);
  }
}

TEST_CASE("domain validation") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  d.z0 = {0.5, 0.5};
  CHECK_THROWS_AS(d.validate(), Error);
  DomainSpec cw = DomainSpec::rectangle(1.0, 1.0);
  std::reverse(cw.polygon.begin(), cw.polygon.end());
  CHECK_THROWS_AS(cw.validate(), Error);
}

TEST_CASE("double graph counts") {
  SUBCASE("single face") {
    Block b = square_block(1, 1);
    DoubleGraph gd = build_double_graph(b.graph, b.domain);
    CHECK(gd.blacks.size() == 5);
    CHECK(gd.whites.size() == 4);
    CHECK(gd.active_black_count() == 4);
  }
  SUBCASE("2x2 block") {
    Block b = square_block(2, 2);
    DoubleGraph gd = build_double_graph(b.graph, b.domain);
    CHECK(gd.blacks.size() == 13);
    CHECK(gd.whites.size() == 12);
    CHECK(gd.active_black_count() == 12);
  }
}

TEST_CASE("removed vertex is the boundary vertex nearest z0") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  IsoradialGraph g = build_domain_graph(d, LatticeSpec::perturbed(), 1.0 / 8);
  DoubleGraph gd = build_double_graph(g, d);
  double best = 1e9;
  for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
    if (g.is_boundary_vertex(v)) best = std::min(best, std::abs(g.vertices[v] - d.z0));
  }
  REQUIRE(gd.blacks[gd.removed].kind == BlackKind::kPrimal);
  CHECK(std::abs(g.vertices[gd.blacks[gd.removed].ref] - d.z0) == doctest::Approx(best));
}

TEST_CASE("double graph geometry on clipped lattices") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  for (const LatticeSpec& lat : {LatticeSpec::square(), LatticeSpec::perturbed()}) {
    CAPTURE(lat.name);
    IsoradialGraph g = build_domain_graph(d, lat, 1.0 / 16);
    CHECK(validate_rhombic(g).all_passed());
    DoubleGraph gd = build_double_graph(g, d);
    CHECK(double_graph_geometry_residual(gd) < 1e-10);

    // Corner quadrilaterals: vertex, two edge midpoints and the face center
    // lie on a circle of radius delta / 2.
    for (const DoubleFace& f : gd.faces) {
      if (f.is_outer()) continue;
      const auto& cyc = g.faces[f.face].cycle;
      const int n = static_cast<int>(cyc.size());
      int at = static_cast<int>(std::find(cyc.begin(), cyc.end(), f.vertex) - cyc.begin());
      REQUIRE(at < n);
      Point v = g.vertices[f.vertex];
      Point mid = 0.5 * (v + g.faces[f.face].center);
      for (Point p : {v, 0.5 * (v + g.vertices[cyc[(at + 1) % n]]),
                      0.5 * (v + g.vertices[cyc[(at + n - 1) % n]]), g.faces[f.face].center}) {
        CHECK(std::abs(std::abs(p - mid) - g.delta / 2) < 1e-10 * g.delta);
      }
    }

    // Bipartite structure and the direction pattern around each white.
    for (int w = 0; w < static_cast<int>(gd.whites.size()); ++w) {
      std::vector<Complex> primal, dual;
      for (int e : gd.white_edges(w)) {
        CHECK(gd.edges[e].white == w);
        (gd.blacks[gd.edges[e].black].kind == BlackKind::kPrimal ? primal : dual)
            .push_back(gd.edges[e].xi);
      }
      CHECK(gd.white_edges(w).size() <= 4);
      CHECK(primal.size() <= 2);
      CHECK(dual.size() <= 2);
      if (primal.size() == 2) CHECK(std::abs(primal[0] + primal[1]) < 1e-10);
      if (dual.size() == 2) CHECK(std::abs(dual[0] + dual[1]) < 1e-10);
      for (Complex a : primal) {
        for (Complex b : dual) CHECK(std::abs((b / a).real()) < 1e-10);
      }
    }
  }
}

TEST_CASE("rhombus areas add up to the area of the face union") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  IsoradialGraph g = build_domain_graph(d, LatticeSpec::perturbed(), 1.0 / 16);
  double faces = 0.0;
  for (const Face& f : g.faces) {
    std::vector<Point> p;
    for (int v : f.cycle) p.push_back(g.vertices[v]);
    faces += polygon_area(p);
  }
  double rhombi = 0.0;
  for (const Edge& e : g.edges) {
    double area = g.delta * g.delta * std::sin(2.0 * e.theta);
    rhombi += e.is_interior() ? area : 0.5 * area;
  }
  CHECK(std::abs(faces - rhombi) < 1e-9);
}

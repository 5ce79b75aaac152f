#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "isodimer/errors.hpp"
#include "isodimer/height.hpp"
#include "isodimer/pipeline.hpp"
#include "oracles.hpp"

using namespace isodimer;
namespace {

DoubleGraph block_graph(int nx, int ny) {
  Block b = square_block(nx, ny);
  return build_double_graph(b.graph, b.domain);
}

int other_face(const DoubleGraph& gd, int e, int f) {
  return gd.edges[e].left_face == f ? gd.edges[e].right_face : gd.edges[e].left_face;
}

// Random walk over faces, closed by a shortest route home.
ProbePath random_cycle(const DoubleGraph& gd, std::mt19937_64& rng, int steps) {
  ProbePath p;
  std::uniform_int_distribution<int> pick_face(1, static_cast<int>(gd.faces.size()) - 1);
  p.start_face = pick_face(rng);
  int f = p.start_face;
  for (int s = 0; s < steps; ++s) {
    const auto& fe = gd.face_edges(f);
    int e = fe[std::uniform_int_distribution<int>(0, static_cast<int>(fe.size()) - 1)(rng)];
    p.crossed.push_back(e);
    f = other_face(gd, e, f);
  }
  ProbePath back = route_path(gd, f, p.start_face);
  p.crossed.insert(p.crossed.end(), back.crossed.begin(), back.crossed.end());
  return p;
}

std::vector<double> enumerated_probabilities(const DoubleGraph& gd,
                                             const std::vector<oracle::Weighted>& ms) {
  std::vector<double> p(gd.edges.size());
  for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) p[e] = oracle::edge_probability(ms, e);
  return p;
}

// E[prod (h(end) - h(start))] by enumeration.
double enumerated_moment(const DoubleGraph& gd, const std::vector<oracle::Weighted>& ms,
                         const std::vector<ProbePath>& paths) {
  std::vector<double> p = enumerated_probabilities(gd, ms);
  return oracle::expectation(ms, [&](const Matching& m) {
    std::vector<double> h = oracle::heights(gd, m, p);
    double prod = 1.0;
    for (const auto& path : paths) prod *= h[path_end(gd, path)] - h[path.start_face];
    return prod;
  });
}

}  // namespace

TEST_CASE("base flow") {
  for (const DoubleGraph& gd : {block_graph(2, 2), block_graph(3, 2)}) {
    KasteleynSystem sys(gd);
    sys.invert();
    BaseFlow flow = base_flow(sys);
    Divergence div = flow_divergence(gd, flow);
    for (double d : div.white) CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
    for (int b = 0; b < static_cast<int>(gd.blacks.size()); ++b) {
      CHECK(div.black[b] == doctest::Approx(b == gd.removed ? 0.0 : -1.0).epsilon(1e-12));
    }
    std::vector<double> p = enumerated_probabilities(gd, oracle::matchings(gd));
    for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) CHECK(std::abs(flow[e] - p[e]) < 1e-12);
  }
}

TEST_CASE("height field") {
  DoubleGraph gd = block_graph(3, 2);
  KasteleynSystem sys(gd);
  sys.invert();
  BaseFlow flow = base_flow(sys);
  auto ms = sample_matchings(sys, 3, 8);
  std::vector<HeightField> fields;
  for (const auto& m : ms) {
    HeightField h = height_field(gd, m, flow);
    CHECK(h.values[DoubleGraph::kOuterFace] == 0.0);
    // Agrees with the breadth-first oracle.
    std::vector<double> ref = oracle::heights(gd, m, flow);
    for (std::size_t f = 0; f < ref.size(); ++f) CHECK(std::abs(h.values[f] - ref[f]) < 1e-12);
    // Each edge step is I - P.
    for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) {
      const DoubleEdge& de = gd.edges[e];
      double step = (oracle::contains(m, e) ? 1.0 : 0.0) - flow[e];
      CHECK(std::abs(h.values[de.left_face] - h.values[de.right_face] - step) < 1e-12);
    }
    fields.push_back(h);
  }
  // Two matchings differ by integers everywhere.
  for (std::size_t f = 0; f < gd.faces.size(); ++f) {
    double d = fields[0].values[f] - fields[1].values[f];
    CHECK(std::abs(d - std::round(d)) < 1e-12);
  }
  // Moving the base face shifts the field by a constant.
  HeightField moved = height_field(gd, ms[0], flow, 3);
  CHECK(moved.values[3] == 0.0);
  for (std::size_t f = 0; f < gd.faces.size(); ++f) {
    CHECK(std::abs(moved.values[f] - fields[0].values[f] + fields[0].values[3]) < 1e-12);
  }
}

TEST_CASE("dual paths") {
  Block pb = perturbed_block();
  DoubleGraph gd = build_double_graph(pb.graph, pb.domain);
  KasteleynSystem sys(gd);
  sys.invert();
  BaseFlow flow = base_flow(sys);
  auto ms = sample_matchings(sys, 5, 10);
  std::mt19937_64 rng(17);

  SUBCASE("closed paths have zero height change") {
    for (int t = 0; t < 20; ++t) {
      ProbePath p = random_cycle(gd, rng, 12);
      CHECK(path_end(gd, p) == p.start_face);
      for (const auto& m : ms) {
        CHECK(std::abs(path_height_sum(gd, m, flow, p)) < 1e-12);
        CHECK(std::abs(height_difference(gd, height_field(gd, m, flow), p)) < 1e-12);
      }
    }
  }
  SUBCASE("path sum matches the field") {
    for (int t = 0; t < 20; ++t) {
      ProbePath p = random_cycle(gd, rng, 9);
      p.crossed.resize(9);
      for (const auto& m : ms) {
        double direct = path_height_sum(gd, m, flow, p);
        double field = height_difference(gd, height_field(gd, m, flow), p);
        CHECK(std::abs(direct - field) < 1e-12);
      }
    }
  }
  SUBCASE("crossing types and signs") {
    ProbePath p = random_cycle(gd, rng, 15);
    std::vector<CrossingType> types = classify_path(gd, p);
    REQUIRE(types.size() == p.crossed.size());
    int f = p.start_face;
    for (std::size_t t = 0; t < types.size(); ++t) {
      const DoubleEdge& de = gd.edges[p.crossed[t]];
      // Crossing from the right face to the left face has the white on the
      // left of the path.
      bool white_left = de.right_face == f;
      CHECK((crossing_sign(types[t]) == 1) == white_left);
      bool primal = gd.blacks[de.black].kind == BlackKind::kPrimal;
      bool odd = types[t] == CrossingType::kU1 || types[t] == CrossingType::kU3;
      CHECK(primal == odd);
      f = other_face(gd, p.crossed[t], f);
    }
    CHECK(crossing_sign(CrossingType::kU1) == 1);
    CHECK(crossing_sign(CrossingType::kU2) == 1);
    CHECK(crossing_sign(CrossingType::kU3) == -1);
    CHECK(crossing_sign(CrossingType::kU4) == -1);
  }
  SUBCASE("invalid paths") {
    ProbePath p;
    p.start_face = DoubleGraph::kOuterFace;
    int e = gd.face_edges(DoubleGraph::kOuterFace).front();
    p.crossed = {e, e, e};
    CHECK_NOTHROW(path_end(gd, p));
    ProbePath bad = p;
    for (int x = 0; x < static_cast<int>(gd.edges.size()); ++x) {
      const DoubleEdge& de = gd.edges[x];
      int f1 = other_face(gd, e, DoubleGraph::kOuterFace);
      if (de.left_face != f1 && de.right_face != f1) {
        bad.crossed = {e, x};
        break;
      }
    }
    try {
      path_end(gd, bad);
      FAIL("expected InvalidPath");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::kInvalidPath);
    }
    ProbePath nowhere;
    nowhere.start_face = static_cast<int>(gd.faces.size());
    CHECK_THROWS_AS(path_end(gd, nowhere), Error);
  }
}

TEST_CASE("exact height moments against enumeration") {
  Block pb = perturbed_block();
  std::vector<DoubleGraph> graphs = {block_graph(2, 2), block_graph(3, 2),
                                     build_double_graph(pb.graph, pb.domain)};
  for (const DoubleGraph& gd : graphs) {
    KasteleynSystem sys(gd);
    sys.invert();
    auto ms = oracle::matchings(gd);
    const int nf = static_cast<int>(gd.faces.size());
    std::vector<int> targets{1, nf / 2, nf - 1};
    std::vector<ProbePath> paths = probe_paths(gd, targets);

    CHECK(exact_height_moment(sys, std::span(paths.data(), 1)) == 0.0);
    for (int k = 2; k <= 3; ++k) {
      std::vector<ProbePath> sub(paths.begin(), paths.begin() + k);
      double mine = exact_height_moment(sys, sub);
      double ref = enumerated_moment(gd, ms, sub);
      CAPTURE(k);
      CHECK(std::abs(mine - ref) < 1e-10);
    }
    std::vector<ProbePath> swapped{paths[2], paths[0], paths[1]};
    CHECK(std::abs(exact_height_moment(sys, swapped) - exact_height_moment(sys, paths)) < 1e-12);
    CHECK(exact_height_moment(sys, paths, 1) == exact_height_moment(sys, paths, 3));
  }
}

TEST_CASE("moments do not depend on the route") {
  DomainSpec d = DomainSpec::rectangle(1.0, 1.0);
  IsoradialGraph g = build_domain_graph(d, LatticeSpec::perturbed(), 1.0 / 8);
  DoubleGraph gd = build_double_graph(g, d);
  KasteleynSystem sys(gd);
  sys.invert();
  int a = nearest_interior_face(gd, {0.3, 0.4});
  int b = nearest_interior_face(gd, {0.7, 0.6});
  std::vector<ProbePath> first = probe_paths(gd, {a, b});
  double base = exact_height_moment(sys, first);

  // Reroute the second path around the first one's neighbourhood.
  std::set<int> avoid(first[0].crossed.begin(), first[0].crossed.end());
  for (int e : first[1].crossed) {
    if (gd.edges[e].left_face != DoubleGraph::kOuterFace && gd.edges[e].right_face != DoubleGraph::kOuterFace) {
      avoid.insert(e);
    }
  }
  ProbePath alt = route_path(gd, DoubleGraph::kOuterFace, b, avoid);
  CHECK(alt.crossed != first[1].crossed);
  CHECK(path_end(gd, alt) == b);
  std::vector<ProbePath> second{first[0], alt};
  CHECK(exact_height_moment(sys, second) == doctest::Approx(base).epsilon(1e-10));
  CHECK(base > 0.0);
}

TEST_CASE("moment errors") {
  DoubleGraph gd = block_graph(3, 2);
  KasteleynSystem sys(gd);
  sys.invert();
  ProbePath p = route_path(gd, DoubleGraph::kOuterFace, 3);
  std::vector<ProbePath> same{p, p};
  try {
    exact_height_moment(sys, same);
    FAIL("expected PathsIntersect");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPathsIntersect);
  }
  std::vector<ProbePath> five(5, ProbePath{});
  try {
    exact_height_moment(sys, five);
    FAIL("expected TooManyPaths");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooManyPaths);
  }
}

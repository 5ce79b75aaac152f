#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "isodimer/errors.hpp"
#include "isodimer/pipeline.hpp"
#include "isodimer/sampler.hpp"
#include "oracles.hpp"

using namespace isodimer;
namespace {

DoubleGraph block_graph(int nx, int ny) {
  Block b = square_block(nx, ny);
  return build_double_graph(b.graph, b.domain);
}

}  // namespace

TEST_CASE("enumeration agrees with the backtracking oracle") {
  Block pb = perturbed_block();
  std::vector<DoubleGraph> graphs = {block_graph(1, 1), block_graph(2, 2), block_graph(3, 2),
                                     build_double_graph(pb.graph, pb.domain)};
  for (const DoubleGraph& gd : graphs) {
    auto mine = enumerate_matchings(gd);
    auto ref = oracle::matchings(gd);
    REQUIRE(mine.size() == ref.size());
    MESSAGE(ref.size() << " matchings");
    std::map<Matching, double> by_edges;
    for (const auto& m : ref) by_edges[m.edges] = m.weight;
    for (const auto& m : mine) {
      CHECK(validate_matching(gd, m.edges));
      REQUIRE(by_edges.count(m.edges) == 1);
      CHECK(m.weight == doctest::Approx(by_edges[m.edges]).epsilon(1e-12));
    }
  }
}

TEST_CASE("enumeration edge cases") {
  DoubleGraph gd = block_graph(2, 2);
  std::vector<DoubleEdge> kept;
  for (const DoubleEdge& e : gd.edges) {
    if (e.white != 3) kept.push_back(e);
  }
  gd.edges = kept;
  gd.finalize(static_cast<int>(square_block(2, 2).graph.vertices.size()));
  CHECK(enumerate_matchings(gd).empty());

  try {
    enumerate_matchings(block_graph(3, 2), 10);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooLarge);
  }
}

TEST_CASE("validate_matching") {
  DoubleGraph gd = block_graph(2, 2);
  auto ms = enumerate_matchings(gd);
  Matching good = ms.front().edges;
  CHECK(validate_matching(gd, good));
  Matching short_one(good.begin(), good.end() - 1);
  CHECK_FALSE(validate_matching(gd, short_one));
  Matching dup = good;
  dup.back() = dup.front();
  CHECK_FALSE(validate_matching(gd, dup));
  Matching bad = good;
  bad.back() = static_cast<int>(gd.edges.size());
  CHECK_FALSE(validate_matching(gd, bad));
  // An edge at the removed vertex is never part of a matching.
  for (int e : gd.black_edges(gd.removed)) {
    Matching m = good;
    m.back() = e;
    CHECK_FALSE(validate_matching(gd, m));
  }
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
  KasteleynSystem sys(block_graph(3, 2));
  sys.invert();
  auto a = sample_matchings(sys, 42, 64, 1);
  auto b = sample_matchings(sys, 42, 64, 1);
  auto c = sample_matchings(sys, 42, 64, 4);
  CHECK(a == b);
  CHECK(a == c);
  auto tail = sample_matchings(sys, 42, 16, 1, 48);
  CHECK(std::equal(tail.begin(), tail.end(), a.begin() + 48));
  auto other = sample_matchings(sys, 43, 64, 1);
  CHECK(other != a);
  for (const auto& m : a) CHECK(validate_matching(sys.graph(), m));
  CHECK(sample_seed(1, 2) != sample_seed(2, 1));
}

TEST_CASE("single face: chi squared against the exact law") {
  DoubleGraph gd = block_graph(1, 1);
  KasteleynSystem sys(gd);
  sys.invert();
  auto ref = oracle::matchings(gd);
  const double z = oracle::total_weight(ref);
  std::map<Matching, int> index;
  for (std::size_t i = 0; i < ref.size(); ++i) index[ref[i].edges] = static_cast<int>(i);
  const std::size_t n = 20000;
  std::vector<int> counts(ref.size(), 0);
  for (const auto& m : sample_matchings(sys, 7, n)) {
    REQUIRE(index.count(m) == 1);
    ++counts[index[m]];
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double expect = n * ref[i].weight / z;
    chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
  }
  boost::math::chi_squared dist(static_cast<double>(ref.size() - 1));
  double p = boost::math::cdf(boost::math::complement(dist, chi2));
  MESSAGE("chi2 = " << chi2 << ", p = " << p);
  CHECK(p > 1e-3);
}

TEST_CASE("edge frequencies and pair correlations on the perturbed block") {
  Block pb = perturbed_block();
  DoubleGraph gd = build_double_graph(pb.graph, pb.domain);
  KasteleynSystem sys(gd);
  sys.invert();
  const std::size_t n = 20000;
  auto ms = sample_matchings(sys, 11, n);
  for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) {
    double p = sys.edge_probability(e);
    double freq = 0.0;
    for (const auto& m : ms) freq += oracle::contains(m, e);
    freq /= n;
    double sd = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
    CHECK(std::abs(freq - p) < 4 * sd + 1e-12);
  }
  // Two disjoint edges far apart in the edge list.
  int e1 = 0, e2 = -1;
  for (int e = static_cast<int>(gd.edges.size()) - 1; e > 0; --e) {
    if (gd.edges[e].white != gd.edges[e1].white && gd.edges[e].black != gd.edges[e1].black) {
      e2 = e;
      break;
    }
  }
  REQUIRE(e2 > 0);
  std::vector<int> pair{e1, e2};
  double joint = sys.local_statistics(pair);
  double freq = 0.0;
  for (const auto& m : ms) freq += oracle::contains(m, e1) && oracle::contains(m, e2);
  freq /= n;
  CHECK(std::abs(freq - joint) < 4 * std::sqrt(joint * (1 - joint) / n) + 1e-12);
}

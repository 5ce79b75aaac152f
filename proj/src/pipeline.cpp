#include "isodimer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "isodimer/errors.hpp"
#include "isodimer/height.hpp"

namespace isodimer {

namespace {
constexpr double kQuarter = std::numbers::pi / 4.0;
}

LatticeSpec LatticeSpec::square() { return {"square", {-kQuarter}, {kQuarter}, kDefaultC0}; }

LatticeSpec LatticeSpec::perturbed() {
  return {"perturbed", {-kQuarter, -kQuarter + 0.2}, {kQuarter, kQuarter - 0.15}, kDefaultC0};
}

LatticeSpec LatticeSpec::by_name(const std::string& name) {
  if (name == "square") return square();
  if (name == "perturbed") return perturbed();
  throw Error(ErrorKind::kInvalidConfig, "unknown lattice '" + name + "'");
}

IsoradialGraph build_domain_graph(const DomainSpec& d, const LatticeSpec& lattice, double delta) {
  d.validate();
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (Point p : d.polygon) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  const double h = std::sqrt(2.0) * delta;
  auto margin = [h](double extent) {
    double n = std::max(0.0, std::round(extent / h - 1.0));
    return (extent - n * h) / 2.0;
  };
  Point origin{xmin + margin(xmax - xmin), ymin + margin(ymax - ymin)};
  TrackFamilies t = covering_tracks(lattice.u_angles, lattice.v_angles, delta, d, origin);
  t.c0 = lattice.c0;
  return clip_to_domain(build_lattice(t), d);
}

Block square_block(int nx, int ny) {
  Block b;
  b.domain = DomainSpec::rectangle(nx, ny);
  const double delta = 1.0 / std::sqrt(2.0);
  TrackFamilies t = covering_tracks({-kQuarter}, {kQuarter}, delta, b.domain, Point{0.0, 0.0});
  b.graph = clip_to_domain(build_lattice(t), b.domain);
  return b;
}

Block perturbed_block() {
  LatticeSpec p = LatticeSpec::perturbed();
  TrackFamilies t;
  t.u_angles = p.u_angles;
  t.v_angles = p.v_angles;
  t.delta = 1.0;
  t.i_min = 0;
  t.i_max = 3;
  t.j_min = 0;
  t.j_max = 3;
  Block b;
  b.graph = build_lattice(t);
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  int low = 0;
  for (int v = 0; v < static_cast<int>(b.graph.vertices.size()); ++v) {
    Point q = b.graph.vertices[v];
    xmin = std::min(xmin, q.real());
    xmax = std::max(xmax, q.real());
    ymin = std::min(ymin, q.imag());
    ymax = std::max(ymax, q.imag());
    if (q.imag() < b.graph.vertices[low].imag()) low = v;
  }
  b.domain.polygon = {{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}};
  b.domain.l0_a = {xmin, ymin};
  b.domain.l0_b = {xmax, ymin};
  b.domain.z0 = {b.graph.vertices[low].real(), ymin};
  return b;
}

Probe make_probe(const IsoradialGraph& g, const DoubleGraph& gd, Point target) {
  Probe p;
  p.target = target;
  double best = std::numeric_limits<double>::infinity();
  for (int f = 0; f < static_cast<int>(g.faces.size()); ++f) {
    double d = std::abs(g.faces[f].center - target);
    if (d < best - 1e-12 * g.delta) {
      best = d;
      p.primal_face = f;
    }
  }
  p.center = g.faces[p.primal_face].center;
  for (int f = 0; f < static_cast<int>(gd.faces.size()); ++f) {
    if (gd.faces[f].face == p.primal_face) p.faces.push_back(f);
  }
  return p;
}

double probe_moment(const KasteleynSystem& sys, const std::vector<Probe>& probes, int threads) {
  const int k = static_cast<int>(probes.size());
  std::vector<std::size_t> pick(k, 0);
  double weight = 1.0;
  for (const Probe& p : probes) weight /= static_cast<double>(p.faces.size());
  double total = 0.0;
  while (true) {
    std::vector<int> targets(k);
    for (int j = 0; j < k; ++j) targets[j] = probes[j].faces[pick[j]];
    std::vector<ProbePath> paths = probe_paths(sys.graph(), targets);
    total += weight * exact_height_moment(sys, paths, threads);
    int j = k - 1;
    while (j >= 0 && ++pick[j] == probes[j].faces.size()) pick[j--] = 0;
    if (j < 0) break;
  }
  return total;
}

}  // namespace isodimer

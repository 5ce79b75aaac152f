#include "isodimer/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "isodimer/archive.hpp"
#include "isodimer/errors.hpp"
#include "isodimer/height.hpp"

namespace isodimer {

using nlohmann::json;

double parse_fraction(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw Error(ErrorKind::kInvalidConfig, "cannot parse number '" + text + "'");
    }
    return v;
  };
  auto slash = text.find('/');
  if (slash == std::string::npos) return number(text);
  double den = number(text.substr(slash + 1));
  if (den == 0.0) throw Error(ErrorKind::kInvalidConfig, "zero denominator in '" + text + "'");
  return number(text.substr(0, slash)) / den;
}

namespace {

ReportProbes unit_square_probes() {
  ReportProbes p;
  p.points = {{0.3, 0.4}, {0.7, 0.4}, {0.4, 0.7}, {0.65, 0.65}};
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) p.pairs.push_back({i, j});
  }
  p.quads.push_back({0, 1, 2, 3});
  return p;
}

void set_deltas(ExperimentConfig& c, const std::vector<std::string>& labels) {
  c.delta_labels = labels;
  c.deltas.clear();
  for (const std::string& s : labels) c.deltas.push_back(parse_fraction(s));
}

void set_block(ExperimentConfig& c, const std::string& block) {
  c.domain_kind = "block";
  c.block = block;
  c.continuum.reset();
  Block b = block == "single-face" ? square_block(1, 1)
            : block == "2x2"       ? square_block(2, 2)
            : block == "3x2"       ? square_block(3, 2)
            : block == "perturbed" ? perturbed_block()
                                   : throw Error(ErrorKind::kInvalidConfig,
                                                 "unknown block '" + block + "'");
  c.domain = b.domain;
  c.lattice = block == "perturbed" ? LatticeSpec::perturbed() : LatticeSpec::square();
  c.deltas = {b.graph.delta};
  c.delta_labels = {format_double(b.graph.delta)};
}

void set_rectangle(ExperimentConfig& c, double width, double height, double z0x) {
  c.domain_kind = "rectangle";
  c.domain = DomainSpec::rectangle(width, height);
  c.domain.z0 = {z0x, 0.0};
  c.continuum = ContinuumDomain{width, height, {z0x, 0.0}};
}

Point to_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
json from_point(Point p) { return json::array({p.real(), p.imag()}); }

}  // namespace

std::vector<std::string> preset_names() {
  return {"unit-square", "unit-square-perturbed", "rect-2x1", "single-face", "block-2x2",
          "block-3x2"};
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "unit-square" || name == "unit-square-perturbed") {
    set_rectangle(c, 1.0, 1.0, 0.5);
    if (name == "unit-square-perturbed") c.lattice = LatticeSpec::perturbed();
    set_deltas(c, {"1/8", "1/16", "1/32"});
    c.probes = unit_square_probes();
  } else if (name == "rect-2x1") {
    set_rectangle(c, 2.0, 1.0, 1.0);
    set_deltas(c, {"1/8", "1/16", "1/32"});
    // Images of the unit-square probes under the conformal map fixing z0.
    ReportProbes p = unit_square_probes();
    const ContinuumDomain from = ContinuumDomain::rectangle(1.0, 1.0);
    for (Point& z : p.points) z = conformal_transfer(from, *c.continuum, z);
    c.probes = p;
  } else if (name == "single-face") {
    set_block(c, "single-face");
    c.probes.points = {{0.25, 0.75}, {0.75, 0.75}};
    c.probes.pairs = {{0, 1}};
    c.corner_probes = true;
  } else if (name == "block-2x2" || name == "block-3x2") {
    bool wide = name == "block-3x2";
    set_block(c, wide ? "3x2" : "2x2");
    c.probes.points = {{0.5, 1.5}, {wide ? 2.5 : 1.5, 1.5}, {1.5, 0.5}};
    c.probes.pairs = {{0, 1}, {0, 2}, {1, 2}};
  } else {
    throw Error(ErrorKind::kInvalidConfig, "unknown preset '" + name + "'");
  }
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig c;
  try {
    json in = json::parse(json_text);
    if (in.contains("preset")) c = preset_config(in.at("preset").get<std::string>());
    c.name = in.value("name", c.name);
    if (in.contains("domain")) {
      const json& d = in.at("domain");
      std::string kind = d.at("kind");
      if (kind == "rectangle") {
        double w = d.at("width"), h = d.at("height");
        double z0x = d.contains("z0") ? to_point(d.at("z0")).real() : w / 2.0;
        if (d.contains("z0") && to_point(d.at("z0")).imag() != 0.0) {
          throw Error(ErrorKind::kInvalidConfig, "rectangle z0 must lie on the bottom side");
        }
        set_rectangle(c, w, h, z0x);
      } else if (kind == "polygon") {
        c.domain_kind = "polygon";
        c.continuum.reset();
        c.domain.polygon.clear();
        for (const json& p : d.at("points")) c.domain.polygon.push_back(to_point(p));
        c.domain.l0_a = to_point(d.at("l0").at(0));
        c.domain.l0_b = to_point(d.at("l0").at(1));
        c.domain.z0 = to_point(d.at("z0"));
      } else if (kind == "block") {
        set_block(c, d.at("block").get<std::string>());
      } else {
        throw Error(ErrorKind::kInvalidConfig, "unknown domain kind '" + kind + "'");
      }
    }
    if (in.contains("lattice")) {
      const json& l = in.at("lattice");
      if (l.contains("preset")) {
        c.lattice = LatticeSpec::by_name(l.at("preset"));
      } else {
        c.lattice.name = l.value("name", std::string("custom"));
        c.lattice.u_angles = l.at("u_angles").get<std::vector<double>>();
        c.lattice.v_angles = l.at("v_angles").get<std::vector<double>>();
      }
      c.lattice.c0 = l.value("c0", c.lattice.c0);
    }
    if (in.contains("deltas")) {
      std::vector<std::string> labels;
      for (const json& d : in.at("deltas")) {
        labels.push_back(d.is_string() ? d.get<std::string>() : format_double(d.get<double>()));
      }
      set_deltas(c, labels);
    }
    if (in.contains("probes")) {
      const json& p = in.at("probes");
      c.probes = {};
      for (const json& z : p.at("points")) c.probes.points.push_back(to_point(z));
      for (const json& pr : p.value("pairs", json::array())) {
        c.probes.pairs.push_back({pr.at(0), pr.at(1)});
      }
      for (const json& q : p.value("quads", json::array())) {
        c.probes.quads.push_back({q.at(0), q.at(1), q.at(2), q.at(3)});
      }
      c.corner_probes = p.value("corners", c.corner_probes);
    }
    if (in.contains("sampler")) {
      const json& s = in.at("sampler");
      if (s.contains("seed")) c.seed = s.at("seed").get<std::uint64_t>();
      c.samples = s.value("count", c.samples);
    }
    if (in.contains("moments")) {
      const json& m = in.at("moments");
      c.k = m.value("k", c.k);
      std::string mode = m.value("mode", std::string(c.exact ? "exact" : "mc"));
      if (mode != "exact" && mode != "mc") {
        throw Error(ErrorKind::kInvalidConfig, "moments.mode must be exact or mc");
      }
      c.exact = mode == "exact";
    }
    c.threads = in.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidConfig, m); };
  domain.validate();
  if (deltas.empty()) fail("no delta values");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) fail("delta values must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) fail("delta values must be decreasing");
  }
  const int np = static_cast<int>(probes.points.size());
  for (Point p : probes.points) {
    if (!domain.contains(p, -1.0)) {
      fail("probe (" + format_double(p.real()) + ", " + format_double(p.imag()) +
           ") is outside the domain");
    }
  }
  auto check_tuple = [&](std::vector<int> t) {
    for (int i : t) {
      if (i < 0 || i >= np) fail("probe index " + std::to_string(i) + " out of range");
    }
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) != t.end()) fail("repeated probe in a tuple");
  };
  for (auto [i, j] : probes.pairs) check_tuple({i, j});
  for (const auto& q : probes.quads) check_tuple({q[0], q[1], q[2], q[3]});
  if (k < 1 || k > 4) fail("k must be in 1..4");
  if (samples < 0) fail("sample count must be non-negative");
  if (threads < 1) fail("threads must be positive");
  for (double a : lattice.u_angles) {
    if (!std::isfinite(a)) fail("non-finite track angle");
  }
  if (lattice.u_angles.empty() || lattice.v_angles.empty()) fail("empty track family");
}

std::string ExperimentConfig::canonical() const {
  json out;
  out["name"] = name;
  json poly = json::array();
  for (Point p : domain.polygon) poly.push_back(from_point(p));
  out["domain"] = {{"kind", domain_kind}, {"block", block}, {"polygon", poly},
                   {"l0", {from_point(domain.l0_a), from_point(domain.l0_b)}},
                   {"z0", from_point(domain.z0)}};
  out["lattice"] = {{"name", lattice.name}, {"u_angles", lattice.u_angles},
                    {"v_angles", lattice.v_angles}, {"c0", lattice.c0}};
  out["deltas"] = delta_labels;
  json pts = json::array();
  for (Point p : probes.points) pts.push_back(from_point(p));
  json pairs = json::array();
  for (auto [i, j] : probes.pairs) pairs.push_back({i, j});
  out["probes"] = {{"points", pts}, {"pairs", pairs}, {"quads", probes.quads},
                   {"corners", corner_probes}};
  out["sampler"] = {{"count", samples}};
  if (seed) out["sampler"]["seed"] = *seed;
  out["moments"] = {{"k", k}, {"mode", exact ? "exact" : "mc"}};
  return out.dump();
}

IsoradialGraph config_graph(const ExperimentConfig& c, double delta) {
  if (c.domain_kind == "block") {
    if (c.block == "single-face") return square_block(1, 1).graph;
    if (c.block == "2x2") return square_block(2, 2).graph;
    if (c.block == "3x2") return square_block(3, 2).graph;
    return perturbed_block().graph;
  }
  return build_domain_graph(c.domain, c.lattice, delta);
}

std::vector<Probe> resolve_probes(const ExperimentConfig& c, const IsoradialGraph& g,
                                  const DoubleGraph& gd) {
  std::vector<Probe> out;
  for (Point p : c.probes.points) {
    if (!c.corner_probes) {
      out.push_back(make_probe(g, gd, p));
      continue;
    }
    Probe pr;
    pr.target = p;
    int f = nearest_interior_face(gd, p);
    if (f < 0) throw Error(ErrorKind::kInvalidConfig, "graph has no interior double face");
    pr.primal_face = gd.faces[f].face;
    pr.center = gd.faces[f].center;
    pr.faces = {f};
    out.push_back(pr);
  }
  return out;
}

}  // namespace isodimer

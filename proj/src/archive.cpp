#include "isodimer/archive.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "isodimer/errors.hpp"

namespace isodimer {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingInput, "expected file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

json point(Point p) { return json::array({p.real(), p.imag()}); }
Point to_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string write_graph_archive(const IsoradialGraph& g, const DomainSpec& d,
                                const DoubleGraph& gd) {
  json out;
  out["delta"] = g.delta;
  out["c0"] = g.c0;
  json verts = json::array();
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    verts.push_back({{"id", v}, {"x", g.vertices[v].real()}, {"y", g.vertices[v].imag()}});
  }
  out["vertices"] = verts;
  json edges = json::array();
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& ed = g.edges[e];
    edges.push_back({{"id", e}, {"a", ed.a}, {"b", ed.b}, {"theta", ed.theta},
                     {"dual_a", ed.left_face}, {"dual_b", ed.right_face}});
  }
  out["edges"] = edges;
  json faces = json::array();
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    faces.push_back({{"id", f}, {"vertex_cycle", g.faces[f].cycle},
                     {"cx", g.faces[f].center.real()}, {"cy", g.faces[f].center.imag()}});
  }
  out["faces"] = faces;
  json poly = json::array();
  for (Point p : d.polygon) poly.push_back(point(p));
  out["domain"] = {{"polygon", poly}, {"l0", {point(d.l0_a), point(d.l0_b)}}, {"z0", point(d.z0)}};

  json blacks = json::array();
  for (std::size_t b = 0; b < gd.blacks.size(); ++b) {
    const BlackVertex& bv = gd.blacks[b];
    blacks.push_back({{"id", b},
                      {"kind", bv.kind == BlackKind::kPrimal ? "primal" : "dual"},
                      {"ref", bv.ref},
                      {"x", bv.pos.real()},
                      {"y", bv.pos.imag()}});
  }
  json whites = json::array();
  for (std::size_t w = 0; w < gd.whites.size(); ++w) {
    whites.push_back({{"id", w}, {"edge", gd.whites[w].edge}, {"x", gd.whites[w].pos.real()},
                      {"y", gd.whites[w].pos.imag()}});
  }
  json dedges = json::array();
  for (std::size_t e = 0; e < gd.edges.size(); ++e) {
    const DoubleEdge& de = gd.edges[e];
    dedges.push_back({{"id", e}, {"white", de.white}, {"black", de.black}, {"theta", de.theta},
                      {"left_face", de.left_face}, {"right_face", de.right_face}});
  }
  json dfaces = json::array();
  for (std::size_t f = 0; f < gd.faces.size(); ++f) {
    dfaces.push_back({{"id", f}, {"vertex", gd.faces[f].vertex}, {"face", gd.faces[f].face}});
  }
  out["double"] = {{"blacks", blacks}, {"whites", whites}, {"edges", dedges},
                   {"faces", dfaces}, {"removed", gd.removed}};
  return out.dump(1) + "\n";
}

GraphArchive parse_graph_archive(const std::string& text) {
  GraphArchive a;
  try {
    json in = json::parse(text);
    IsoradialGraph& g = a.graph;
    g.delta = in.at("delta").get<double>();
    g.c0 = in.value("c0", kDefaultC0);
    for (const json& v : in.at("vertices")) g.vertices.push_back({v.at("x"), v.at("y")});
    for (const json& e : in.at("edges")) {
      Edge ed;
      ed.a = e.at("a");
      ed.b = e.at("b");
      ed.theta = e.at("theta");
      ed.left_face = e.at("dual_a");
      ed.right_face = e.at("dual_b");
      g.edges.push_back(ed);
    }
    for (const json& f : in.at("faces")) {
      g.faces.push_back({f.at("vertex_cycle").get<std::vector<int>>(), {f.at("cx"), f.at("cy")}});
    }
    const int nv = static_cast<int>(g.vertices.size());
    const int nf = static_cast<int>(g.faces.size());
    for (const Edge& ed : g.edges) {
      if (ed.a < 0 || ed.a >= nv || ed.b < 0 || ed.b >= nv || ed.left_face >= nf ||
          ed.right_face >= nf) {
        throw Error(ErrorKind::kInvalidArchive, "edge endpoint out of range");
      }
    }
    for (const Face& f : g.faces) {
      for (int v : f.cycle) {
        if (v < 0 || v >= nv) throw Error(ErrorKind::kInvalidArchive, "face vertex out of range");
      }
    }
    g.finalize();
    const json& dom = in.at("domain");
    for (const json& p : dom.at("polygon")) a.domain.polygon.push_back(to_point(p));
    a.domain.l0_a = to_point(dom.at("l0").at(0));
    a.domain.l0_b = to_point(dom.at("l0").at(1));
    a.domain.z0 = to_point(dom.at("z0"));

    const json& dbl = in.at("double");
    int removed = dbl.at("removed");
    if (removed < 0 || removed >= nv) throw Error(ErrorKind::kInvalidArchive, "bad removed vertex");
    a.double_graph = build_double_graph(g, a.domain, removed);
    const DoubleGraph& gd = a.double_graph;
    const json& de = dbl.at("edges");
    bool same = dbl.at("blacks").size() == gd.blacks.size() &&
                dbl.at("whites").size() == gd.whites.size() && de.size() == gd.edges.size();
    for (std::size_t e = 0; same && e < gd.edges.size(); ++e) {
      same = de[e].at("white").get<int>() == gd.edges[e].white &&
             de[e].at("black").get<int>() == gd.edges[e].black;
    }
    if (!same) {
      throw Error(ErrorKind::kInvalidArchive, "stored double graph disagrees with the primal data");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArchive, std::string("graph archive: ") + e.what());
  }
  return a;
}

std::string write_matching_archive(const std::vector<Matching>& samples) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(i);
    for (int e : samples[i]) out += ' ' + std::to_string(e);
    out += '\n';
  }
  return out;
}

std::vector<Matching> parse_matching_archive(const std::string& text, const DoubleGraph& gd) {
  std::vector<Matching> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t index;
    if (!(ls >> index) || index != out.size()) {
      throw Error(ErrorKind::kInvalidArchive, "matching archive: bad index on line " +
                                                  std::to_string(out.size() + 1));
    }
    Matching m;
    int e;
    while (ls >> e) m.push_back(e);
    if (!validate_matching(gd, m)) {
      throw Error(ErrorKind::kInvalidArchive,
                  "matching archive: sample " + std::to_string(index) + " is not a perfect matching");
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace isodimer

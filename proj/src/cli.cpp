#include "isodimer/cli.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isodimer/archive.hpp"
#include "isodimer/config.hpp"
#include "isodimer/errors.hpp"
#include "isodimer/gff_lab.hpp"
#include "isodimer/height.hpp"
#include "isodimer/kasteleyn.hpp"
#include "isodimer/potential.hpp"
#include "isodimer/sampler.hpp"

namespace fs = std::filesystem;

namespace isodimer {
namespace {

using nlohmann::json;

constexpr const char* kGraphFile = "graph.json";
constexpr const char* kInverseFile = "kasteleyn.idk";
constexpr const char* kMatchingFile = "matchings.txt";
constexpr const char* kHeightFile = "heights.csv";

struct Options {
  std::string config_path;
  std::string preset;
  std::string deltas;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::string out = ".";
  bool exact = false;
  bool mc = false;
  std::optional<int> k;
  std::optional<int> threads;
};

// Collects every output of a command and writes them only once the command
// has succeeded, so failures leave no partial artifacts.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  Outputs(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, name] : staged_) fs::remove(tmp, ec);
  }

  void add(const std::string& name, std::string content) { text_[name] = std::move(content); }
  // Path of a temporary file that becomes `name` on commit.
  std::string stage(const std::string& name) {
    fs::path tmp = dir_ / ("." + name + ".partial");
    staged_.emplace_back(tmp, name);
    return tmp.string();
  }
  const fs::path& dir() const { return dir_; }

  std::map<std::string, std::string> commit() {
    std::map<std::string, std::string> hashes;
    fs::create_directories(dir_);
    for (const auto& [name, content] : text_) {
      fs::path tmp = dir_ / ("." + name + ".partial");
      {
        std::ofstream f(tmp, std::ios::binary);
        f << content;
        if (!f) throw Error(ErrorKind::kMissingInput, "cannot write " + tmp.string());
      }
      fs::rename(tmp, dir_ / name);
      hashes[name] = hex64(fnv1a(content));
    }
    for (const auto& [tmp, name] : staged_) {
      fs::rename(tmp, dir_ / name);
      hashes[name] = hex64(fnv1a(read_file((dir_ / name).string())));
    }
    committed_ = true;
    return hashes;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> text_;
  std::vector<std::pair<fs::path, std::string>> staged_;
  bool committed_ = false;
};

struct Context {
  ExperimentConfig config;
  fs::path dir;
  std::map<std::string, std::string> inputs;  // name -> content hash

  std::string input(const std::string& name) {
    fs::path p = dir / name;
    if (!fs::exists(p)) {
      throw Error(ErrorKind::kMissingInput,
                  "expected " + p.string() + " (run the earlier stage first)");
    }
    std::string text = read_file(p.string());
    inputs[name] = hex64(fnv1a(text));
    return text;
  }
};

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) {
      throw Error(ErrorKind::kMissingInput, "expected config file " + o.config_path);
    }
    c = load_config(o.config_path);
  } else {
    c = preset_config(o.preset.empty() ? "unit-square" : o.preset);
  }
  if (!o.deltas.empty()) {
    if (c.domain_kind == "block") {
      throw Error(ErrorKind::kInvalidConfig, "block graphs have a fixed delta");
    }
    std::vector<std::string> labels;
    std::stringstream s(o.deltas);
    std::string item;
    while (std::getline(s, item, ',')) labels.push_back(item);
    c.delta_labels = labels;
    c.deltas.clear();
    for (const auto& l : labels) c.deltas.push_back(parse_fraction(l));
  }
  if (o.seed) c.seed = o.seed;
  if (o.n) c.samples = *o.n;
  if (o.k) c.k = *o.k;
  if (o.exact) c.exact = true;
  if (o.mc) c.exact = false;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

GraphArchive load_graph(Context& ctx) { return parse_graph_archive(ctx.input(kGraphFile)); }

void load_inverse(Context& ctx, KasteleynSystem& sys) {
  ctx.input(kInverseFile);
  sys.adopt_inverse(load_inverse_dump((ctx.dir / kInverseFile).string()));
}

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string out;
  for (const std::string& c : cells) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + '\n';
}

// ---------------------------------------------------------------------------
// Stages

void cmd_gen(Context& ctx, Outputs& out) {
  const ExperimentConfig& c = ctx.config;
  IsoradialGraph g = config_graph(c, c.deltas.front());
  DoubleGraph gd = build_double_graph(g, c.domain);
  out.add(kGraphFile, write_graph_archive(g, c.domain, gd));
  std::cout << "graph: " << g.vertices.size() << " vertices, " << g.edges.size() << " edges, "
            << g.faces.size() << " faces, " << gd.whites.size() << " whites\n";
}

void cmd_check(Context& ctx, Outputs& out) {
  GraphArchive a = load_graph(ctx);
  ValidationReport rep = validate_rhombic(a.graph);
  double residual = double_graph_geometry_residual(a.double_graph);
  rep.checks.push_back({"double_graph_geometry", residual < 1e-10,
                        "max residual " + format_double(residual)});
  bool square = a.double_graph.whites.size() ==
                static_cast<std::size_t>(a.double_graph.active_black_count());
  rep.checks.push_back({"double_graph_balanced", square,
                        std::to_string(a.double_graph.whites.size()) + " whites, " +
                            std::to_string(a.double_graph.active_black_count()) + " blacks"});
  std::string csv = csv_line({"check", "passed", "detail"});
  for (const ValidationCheck& ch : rep.checks) {
    std::cout << (ch.passed ? "ok   " : "FAIL ") << ch.name << "  " << ch.detail << "\n";
    csv += csv_line({ch.name, ch.passed ? "1" : "0", "\"" + ch.detail + "\""});
  }
  if (!rep.all_passed()) throw Error(ErrorKind::kInvalidArchive, "graph validation failed");
  out.add("check.csv", csv);
}

void cmd_assemble(Context& ctx, Outputs& out) {
  GraphArchive a = load_graph(ctx);
  KasteleynSystem sys(a.double_graph);
  double log_z = sys.log_partition_function();
  sys.invert();
  DnReport dn = verify_dn(sys, a.graph);
  sys.dump_inverse(out.stage(kInverseFile));
  std::string csv = csv_line({"quantity", "value"});
  csv += csv_line({"whites", std::to_string(sys.size())});
  csv += csv_line({"log_partition_function", format_double(log_z)});
  csv += csv_line({"dn_residual", format_double(dn.max_residual())});
  csv += csv_line({"gauge_path_residual", format_double(sys.gauge_path_residual())});
  out.add("assemble.csv", csv);
  std::cout << "whites " << sys.size() << ", log Z " << format_double(log_z) << ", dn residual "
            << format_double(dn.max_residual()) << "\n";
}

void cmd_probs(Context& ctx, Outputs& out) {
  GraphArchive a = load_graph(ctx);
  KasteleynSystem sys(a.double_graph);
  load_inverse(ctx, sys);
  const DoubleGraph& gd = sys.graph();
  std::string csv = csv_line({"edge", "white", "black", "black_kind", "probability"});
  for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) {
    const DoubleEdge& de = gd.edges[e];
    csv += csv_line({std::to_string(e), std::to_string(de.white), std::to_string(de.black),
                     gd.blacks[de.black].kind == BlackKind::kPrimal ? "primal" : "dual",
                     format_double(sys.edge_probability(e))});
  }
  out.add("probs.csv", csv);
}

void cmd_sample(Context& ctx, Outputs& out) {
  const ExperimentConfig& c = ctx.config;
  if (!c.seed) throw Error(ErrorKind::kInvalidConfig, "sampling needs a seed (--seed)");
  std::string graph_text = ctx.input(kGraphFile);
  GraphArchive a = parse_graph_archive(graph_text);
  KasteleynSystem sys(a.double_graph);
  load_inverse(ctx, sys);
  std::vector<Matching> samples = sample_matchings(sys, *c.seed, c.samples, c.threads);
  out.add(kMatchingFile, write_matching_archive(samples));
  json manifest = {{"seed", *c.seed},
                   {"graph_hash", hex64(fnv1a(graph_text))},
                   {"count", samples.size()}};
  out.add("matchings.manifest.json", manifest.dump(1) + "\n");
  std::cout << samples.size() << " samples\n";
}

// Probe-averaged heights of each sample.
std::vector<std::vector<double>> sample_heights(const DoubleGraph& gd, const BaseFlow& flow,
                                                const std::vector<Matching>& samples,
                                                const std::vector<Probe>& probes) {
  std::vector<std::vector<double>> out;
  for (const Matching& m : samples) {
    HeightField h = height_field(gd, m, flow, DoubleGraph::kOuterFace);
    std::vector<double> row;
    for (const Probe& p : probes) {
      double s = 0.0;
      for (int f : p.faces) s += h.values[f];
      row.push_back(s / static_cast<double>(p.faces.size()));
    }
    out.push_back(row);
  }
  return out;
}

void cmd_height(Context& ctx, Outputs& out) {
  GraphArchive a = load_graph(ctx);
  KasteleynSystem sys(a.double_graph);
  load_inverse(ctx, sys);
  const DoubleGraph& gd = sys.graph();
  std::vector<Matching> samples = parse_matching_archive(ctx.input(kMatchingFile), gd);
  std::vector<Probe> probes = resolve_probes(ctx.config, a.graph, gd);
  BaseFlow flow = base_flow(sys);

  std::string pcsv =
      csv_line({"probe_id", "target_x", "target_y", "face", "center_x", "center_y", "faces"});
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Probe& p = probes[i];
    std::string faces;
    for (int f : p.faces) faces += (faces.empty() ? "" : ";") + std::to_string(f);
    pcsv += csv_line({std::to_string(i), format_double(p.target.real()),
                      format_double(p.target.imag()), std::to_string(p.primal_face),
                      format_double(p.center.real()), format_double(p.center.imag()), faces});
  }
  auto heights = sample_heights(gd, flow, samples, probes);
  std::string hcsv = csv_line({"sample_index", "probe_id", "height"});
  for (std::size_t s = 0; s < heights.size(); ++s) {
    for (std::size_t i = 0; i < probes.size(); ++i) {
      hcsv += csv_line({std::to_string(s), std::to_string(i), format_double(heights[s][i])});
    }
  }
  out.add("probes.csv", pcsv);
  out.add(kHeightFile, hcsv);
}

std::vector<std::vector<int>> moment_tuples(const ExperimentConfig& c) {
  std::vector<std::vector<int>> out;
  const int n = static_cast<int>(c.probes.points.size());
  switch (c.k) {
    case 1:
      for (int i = 0; i < n; ++i) out.push_back({i});
      break;
    case 2:
      for (auto [i, j] : c.probes.pairs) out.push_back({i, j});
      break;
    case 3:
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          for (int l = j + 1; l < n; ++l) out.push_back({i, j, l});
        }
      }
      break;
    default:
      for (const auto& q : c.probes.quads) out.push_back({q[0], q[1], q[2], q[3]});
  }
  if (out.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "no probe tuples of size " + std::to_string(c.k));
  }
  return out;
}

std::vector<std::vector<double>> parse_heights(const std::string& text, int probes) {
  std::vector<std::vector<double>> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string a, b, h;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, h, ',');
    std::size_t s = std::stoul(a);
    int p = std::stoi(b);
    if (p < 0 || p >= probes) {
      throw Error(ErrorKind::kInvalidArchive, "heights.csv: probe id " + b + " out of range");
    }
    if (s >= out.size()) out.resize(s + 1, std::vector<double>(probes, NAN));
    out[s][p] = std::stod(h);
  }
  return out;
}

void cmd_moments(Context& ctx, Outputs& out) {
  const ExperimentConfig& c = ctx.config;
  auto tuples = moment_tuples(c);
  std::string csv = csv_line({"tuple", "k", "mode", "value", "stderr", "samples"});
  auto label = [](const std::vector<int>& t) {
    std::string s;
    for (int i : t) s += (s.empty() ? "" : "-") + std::to_string(i);
    return s;
  };
  if (c.exact) {
    GraphArchive a = load_graph(ctx);
    KasteleynSystem sys(a.double_graph);
    load_inverse(ctx, sys);
    std::vector<Probe> probes = resolve_probes(c, a.graph, sys.graph());
    for (const auto& t : tuples) {
      std::vector<Probe> sel;
      for (int i : t) sel.push_back(probes[i]);
      double v = probe_moment(sys, sel, c.threads);
      csv += csv_line({label(t), std::to_string(c.k), "exact", format_double(v), "0", "0"});
    }
  } else {
    try {
      auto heights = parse_heights(ctx.input(kHeightFile),
                                   static_cast<int>(c.probes.points.size()));
      const double n = static_cast<double>(heights.size());
      if (heights.size() < 2) throw Error(ErrorKind::kInvalidArchive, "heights.csv: too few samples");
      for (const auto& t : tuples) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& row : heights) {
          double prod = 1.0;
          for (int i : t) prod *= row[i];
          if (std::isnan(prod)) throw Error(ErrorKind::kInvalidArchive, "heights.csv: missing rows");
          sum += prod;
          sum2 += prod * prod;
        }
        double mean = sum / n;
        double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
        csv += csv_line({label(t), std::to_string(c.k), "mc", format_double(mean),
                         format_double(std::sqrt(var / n)), std::to_string(heights.size())});
      }
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::kInvalidArchive, "heights.csv is malformed");
    } catch (const std::out_of_range&) {
      throw Error(ErrorKind::kInvalidArchive, "heights.csv is malformed");
    }
  }
  out.add("moments.csv", csv);
}

bool cmd_verify(Context& ctx, Outputs& out) {
  const ExperimentConfig& c = ctx.config;
  if (!c.continuum) {
    throw Error(ErrorKind::kInvalidConfig, "verify compares against rectangles only");
  }
  ReportOptions opt;
  opt.threads = c.threads;
  opt.derivative_shape = false;
  MomentReport rep = convergence_report(*c.continuum, c.lattice, c.deltas, c.probes, opt);

  std::string csv = csv_line({"delta", "lattice", "probe_i", "probe_j", "exact_moment", "predicted",
                              "fitted_c", "residual"});
  for (std::size_t d = 0; d < rep.per_delta.size(); ++d) {
    const DeltaReport& r = rep.per_delta[d];
    for (const PairRow& row : r.pairs) {
      csv += csv_line({c.delta_labels[d], r.lattice, std::to_string(row.i), std::to_string(row.j),
                       format_double(row.exact), format_double(row.predicted),
                       format_double(r.fitted_c), format_double(row.residual)});
    }
  }
  out.add("report.csv", csv);

  struct Check {
    std::string name;
    double value;
    double threshold;
    bool passed;
  };
  std::vector<Check> checks;
  const DeltaReport& fine = rep.per_delta.back();
  if (rep.per_delta.size() > 1) {
    checks.push_back({"residual_decreasing", fine.relative_residual, 0.0,
                      rep.residual_decreasing()});
  }
  checks.push_back({"ratio_spread_finest", fine.ratio_spread, 0.10, fine.ratio_spread < 0.10});
  checks.push_back({"fitted_c_finest", fine.fitted_c, 0.3, std::abs(fine.fitted_c - 1.0) <= 0.3});
  for (const QuadRow& q : fine.quads) {
    checks.push_back({"wick_finest", q.relative_error, 0.15, q.relative_error < 0.15});
  }
  std::string vcsv = csv_line({"check", "value", "threshold", "passed"});
  bool all = true;
  for (const Check& ch : checks) {
    all = all && ch.passed;
    vcsv += csv_line({ch.name, format_double(ch.value), format_double(ch.threshold),
                      ch.passed ? "1" : "0"});
    std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << " = " << format_double(ch.value)
              << "\n";
  }
  out.add("verify.csv", vcsv);
  return all;
}

// Heat map of the first sampled height field over the corner faces.
void cmd_report(Context& ctx, Outputs& out) {
  GraphArchive a = load_graph(ctx);
  KasteleynSystem sys(a.double_graph);
  load_inverse(ctx, sys);
  const DoubleGraph& gd = sys.graph();
  const IsoradialGraph& g = a.graph;
  std::vector<Matching> samples = parse_matching_archive(ctx.input(kMatchingFile), gd);
  if (samples.empty()) throw Error(ErrorKind::kInvalidArchive, "matching archive is empty");
  HeightField h = height_field(gd, samples.front(), base_flow(sys), DoubleGraph::kOuterFace);

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (Point p : g.vertices) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  double hmax = 1e-12;
  for (double v : h.values) hmax = std::max(hmax, std::abs(v));
  const double size = 600.0;
  const double scale = size / std::max(xmax - xmin, ymax - ymin);
  auto coord = [&](Point p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", (p.real() - xmin) * scale + 10.0,
                  (ymax - p.imag()) * scale + 10.0);
    return std::string(buf);
  };
  std::string svg;
  char head[200];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                (xmax - xmin) * scale + 20.0, (ymax - ymin) * scale + 20.0);
  svg += head;
  for (int f = 0; f < static_cast<int>(gd.faces.size()); ++f) {
    const DoubleFace& df = gd.faces[f];
    if (df.is_outer()) continue;
    const std::vector<int>& cyc = g.faces[df.face].cycle;
    const int n = static_cast<int>(cyc.size());
    int at = static_cast<int>(std::find(cyc.begin(), cyc.end(), df.vertex) - cyc.begin());
    Point v = g.vertices[df.vertex];
    Point next = g.vertices[cyc[(at + 1) % n]];
    Point prev = g.vertices[cyc[(at + n - 1) % n]];
    double t = h.values[f] / hmax;
    int r = t > 0 ? 255 : static_cast<int>(255 * (1 + t));
    int b = t < 0 ? 255 : static_cast<int>(255 * (1 - t));
    int gr = static_cast<int>(255 * (1 - std::abs(t)));
    char fill[16];
    std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, gr, b);
    svg += "<polygon points=\"" + coord(v) + " " + coord(0.5 * (v + next)) + " " +
           coord(g.faces[df.face].center) + " " + coord(0.5 * (v + prev)) + "\" fill=\"" + fill +
           "\" stroke=\"#888\" stroke-width=\"0.3\"/>\n";
  }
  svg += "</svg>\n";
  out.add("report.svg", svg);
}

std::string timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_manifest(const Context& ctx, const std::string& command,
                    const std::map<std::string, std::string>& outputs) {
  fs::path path = ctx.dir / "manifest.json";
  json m = json::object();
  if (fs::exists(path)) {
    try {
      m = json::parse(read_file(path.string()));
    } catch (const json::exception&) {
      m = json::object();
    }
  }
  m["version"] = kVersion;
  m["runs"][command] = {{"config_hash", hex64(fnv1a(ctx.config.canonical()))},
                        {"config", json::parse(ctx.config.canonical())},
                        {"inputs", ctx.inputs},
                        {"outputs", outputs},
                        {"timestamp", timestamp()}};
  std::ofstream(path) << m.dump(1) << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Dimers on isoradial graphs and their height fluctuations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"gen", "build the graph archive"},
      {"check", "validate the graph archive"},
      {"assemble", "assemble and invert the Kasteleyn matrix"},
      {"probs", "edge probabilities"},
      {"sample", "exact dimer samples"},
      {"height", "probe heights of the samples"},
      {"moments", "height moments, exact or Monte Carlo"},
      {"verify", "covariance convergence sweep with acceptance checks"},
      {"report", "SVG heat map of a sampled height field"},
  };
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", o.config_path, "experiment config (JSON)");
    sub->add_option("--preset", o.preset, "named experiment")
        ->check(CLI::IsMember(preset_names()));
    sub->add_option("--deltas", o.deltas, "comma-separated mesh sizes, e.g. 1/8,1/16");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--n", o.n, "sample count");
    sub->add_option("--out", o.out, "artifact directory");
    auto* ex = sub->add_flag("--exact", o.exact, "exact moments");
    auto* mc = sub->add_flag("--mc", o.mc, "Monte Carlo moments from heights.csv");
    ex->excludes(mc);
    sub->add_option("--k", o.k, "moment order (1..4)");
    sub->add_option("--threads", o.threads, "worker threads");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Context ctx;
    ctx.config = resolve_config(o);
    ctx.dir = o.out;
    Outputs out(ctx.dir);
    bool passed = true;
    if (command == "gen") cmd_gen(ctx, out);
    else if (command == "check") cmd_check(ctx, out);
    else if (command == "assemble") cmd_assemble(ctx, out);
    else if (command == "probs") cmd_probs(ctx, out);
    else if (command == "sample") cmd_sample(ctx, out);
    else if (command == "height") cmd_height(ctx, out);
    else if (command == "moments") cmd_moments(ctx, out);
    else if (command == "verify") passed = cmd_verify(ctx, out);
    else if (command == "report") cmd_report(ctx, out);
    auto hashes = out.commit();
    write_manifest(ctx, command, hashes);
    return passed ? 0 : 4;
  } catch (const Error& e) {
    std::cerr << "isodimer " << command << ": " << e.what() << "\n";
    return is_numerical(e.kind()) ? 3 : 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "isodimer " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "isodimer " << command << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace isodimer

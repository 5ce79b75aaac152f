#include "isodimer/height.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <thread>

#include "isodimer/errors.hpp"

namespace isodimer {
namespace {

class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Face on the other side of edge e from f, with the sign of the crossing
// (+1 when moving from the right of w -> b to its left); 0 if f is not a side.
std::pair<int, int> cross(const DoubleGraph& gd, int e, int f) {
  const DoubleEdge& de = gd.edges[e];
  if (f == de.right_face) return {de.left_face, +1};
  if (f == de.left_face) return {de.right_face, -1};
  return {-1, 0};
}

std::vector<int> path_signs(const DoubleGraph& gd, const ProbePath& path) {
  std::vector<int> signs;
  int f = path.start_face;
  if (f < 0 || f >= static_cast<int>(gd.faces.size())) {
    throw Error(ErrorKind::kInvalidPath, "start face " + std::to_string(f) + " does not exist");
  }
  for (int e : path.crossed) {
    if (e < 0 || e >= static_cast<int>(gd.edges.size())) {
      throw Error(ErrorKind::kInvalidPath, "edge " + std::to_string(e) + " does not exist");
    }
    auto [next, sign] = cross(gd, e, f);
    if (sign == 0) {
      throw Error(ErrorKind::kInvalidPath,
                  "edge " + std::to_string(e) + " does not bound face " + std::to_string(f));
    }
    signs.push_back(sign);
    f = next;
  }
  return signs;
}

struct PathTerm {
  int white;
  int column;
  Complex k;
  double sign;
};

Complex zero_diag_det(const Complex m[4][4], int k) {
  switch (k) {
    case 1:
      return 0.0;
    case 2:
      return -m[0][1] * m[1][0];
    case 3:
      return m[0][1] * m[1][2] * m[2][0] + m[0][2] * m[1][0] * m[2][1];
    default: {
      Complex pairs = m[0][1] * m[1][0] * m[2][3] * m[3][2] +
                      m[0][2] * m[2][0] * m[1][3] * m[3][1] +
                      m[0][3] * m[3][0] * m[1][2] * m[2][1];
      Complex cycles = m[0][1] * m[1][2] * m[2][3] * m[3][0] +
                       m[0][1] * m[1][3] * m[3][2] * m[2][0] +
                       m[0][2] * m[2][1] * m[1][3] * m[3][0] +
                       m[0][2] * m[2][3] * m[3][1] * m[1][0] +
                       m[0][3] * m[3][1] * m[1][2] * m[2][0] +
                       m[0][3] * m[3][2] * m[2][1] * m[1][0];
      return pairs - cycles;
    }
  }
}

}  // namespace

BaseFlow base_flow(const KasteleynSystem& sys) {
  BaseFlow flow(sys.graph().edges.size());
  for (std::size_t e = 0; e < flow.size(); ++e) flow[e] = sys.edge_probability(static_cast<int>(e));
  return flow;
}

Divergence flow_divergence(const DoubleGraph& gd, const BaseFlow& flow) {
  Divergence d;
  d.white.assign(gd.whites.size(), 0.0);
  d.black.assign(gd.blacks.size(), 0.0);
  for (std::size_t e = 0; e < gd.edges.size(); ++e) {
    d.white[gd.edges[e].white] += flow[e];
    d.black[gd.edges[e].black] -= flow[e];
  }
  return d;
}

HeightField height_field(const DoubleGraph& gd, const Matching& m, const BaseFlow& flow, int f0) {
  std::vector<double> in_matching(gd.edges.size(), 0.0);
  for (int e : m) in_matching[e] = 1.0;
  const int nf = static_cast<int>(gd.faces.size());
  HeightField field;
  field.base_face = f0;
  field.values.assign(nf, std::numeric_limits<double>::quiet_NaN());
  field.values[f0] = 0.0;
  std::queue<int> q;
  q.push(f0);
  int reached = 1;
  while (!q.empty()) {
    int f = q.front();
    q.pop();
    for (int e : gd.face_edges(f)) {
      auto [next, sign] = cross(gd, e, f);
      if (!std::isnan(field.values[next])) continue;
      field.values[next] = field.values[f] + sign * (in_matching[e] - flow[e]);
      ++reached;
      q.push(next);
    }
  }
  if (reached != nf) {
    throw Error(ErrorKind::kDisconnectedDual,
                std::to_string(nf - reached) + " faces unreachable from the base face");
  }
  return field;
}

int path_end(const DoubleGraph& gd, const ProbePath& path) {
  int f = path.start_face;
  path_signs(gd, path);
  for (int e : path.crossed) f = cross(gd, e, f).first;
  return f;
}

std::vector<CrossingType> classify_path(const DoubleGraph& gd, const ProbePath& path) {
  std::vector<int> signs = path_signs(gd, path);
  std::vector<CrossingType> out;
  for (std::size_t k = 0; k < signs.size(); ++k) {
    bool primal = gd.blacks[gd.edges[path.crossed[k]].black].kind == BlackKind::kPrimal;
    if (signs[k] > 0) {
      out.push_back(primal ? CrossingType::kU1 : CrossingType::kU2);
    } else {
      out.push_back(primal ? CrossingType::kU3 : CrossingType::kU4);
    }
  }
  return out;
}

int crossing_sign(CrossingType t) {
  return t == CrossingType::kU1 || t == CrossingType::kU2 ? 1 : -1;
}

double height_difference(const DoubleGraph& gd, const HeightField& field, const ProbePath& path) {
  return field.values[path_end(gd, path)] - field.values[path.start_face];
}

double path_height_sum(const DoubleGraph& gd, const Matching& m, const BaseFlow& flow,
                       const ProbePath& path) {
  std::vector<int> signs = path_signs(gd, path);
  std::vector<char> in_matching(gd.edges.size(), 0);
  for (int e : m) in_matching[e] = 1;
  NeumaierSum s;
  for (std::size_t k = 0; k < signs.size(); ++k) {
    int e = path.crossed[k];
    s.add(signs[k] * ((in_matching[e] ? 1.0 : 0.0) - flow[e]));
  }
  return s.value();
}

double exact_height_moment(const KasteleynSystem& sys, std::span<const ProbePath> paths,
                           int threads) {
  const int k = static_cast<int>(paths.size());
  if (k > 4) throw Error(ErrorKind::kTooManyPaths, std::to_string(k) + " paths; at most 4");
  if (k == 0) return 1.0;
  const DoubleGraph& gd = sys.graph();
  std::vector<std::vector<PathTerm>> terms(k);
  std::vector<int> owner(gd.edges.size(), -1);
  for (int j = 0; j < k; ++j) {
    std::vector<int> signs = path_signs(gd, paths[j]);
    for (std::size_t t = 0; t < signs.size(); ++t) {
      int e = paths[j].crossed[t];
      if (owner[e] >= 0 && owner[e] != j) {
        throw Error(ErrorKind::kPathsIntersect, "paths " + std::to_string(owner[e]) + " and " +
                                                    std::to_string(j) + " share edge " +
                                                    std::to_string(e));
      }
      owner[e] = j;
      const DoubleEdge& de = gd.edges[e];
      terms[j].push_back({de.white, gd.black_column(de.black), sys.dbar_entry(e),
                          static_cast<double>(signs[t])});
    }
  }
  if (k == 1) return 0.0;
  const Eigen::MatrixXcd& a = sys.inverse();

  // Each first-path index is summed serially, then the partial sums are
  // combined in index order, so the result does not depend on `threads`.
  const int n0 = static_cast<int>(terms[0].size());
  std::vector<double> partial(n0, 0.0);
  auto work = [&](int i0) {
    NeumaierSum s;
    const PathTerm* sel[4];
    sel[0] = &terms[0][i0];
    Complex m[4][4];
    auto eval = [&]() {
      for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) {
          m[r][c] = r == c ? Complex(0.0) : sel[r]->k * a(sel[c]->column, sel[r]->white);
        }
      }
      double sign = 1.0;
      for (int r = 0; r < k; ++r) sign *= sel[r]->sign;
      s.add(sign * zero_diag_det(m, k).real());
    };
    for (const PathTerm& t1 : terms[1]) {
      sel[1] = &t1;
      if (k == 2) {
        eval();
        continue;
      }
      for (const PathTerm& t2 : terms[2]) {
        sel[2] = &t2;
        if (k == 3) {
          eval();
          continue;
        }
        for (const PathTerm& t3 : terms[3]) {
          sel[3] = &t3;
          eval();
        }
      }
    }
    partial[i0] = s.value();
  };
  const int workers = std::max(1, std::min(threads, n0));
  if (workers == 1) {
    for (int i0 = 0; i0 < n0; ++i0) work(i0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (int i0 = t; i0 < n0; i0 += workers) work(i0);
      });
    }
    for (auto& th : pool) th.join();
  }
  NeumaierSum total;
  for (double p : partial) total.add(p);
  return total.value();
}

int nearest_interior_face(const DoubleGraph& gd, Point p) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int f = 0; f < static_cast<int>(gd.faces.size()); ++f) {
    if (gd.faces[f].is_outer()) continue;
    double d = std::abs(gd.faces[f].center - p);
    if (d < best_d - 1e-12 * gd.delta) {
      best_d = d;
      best = f;
    }
  }
  return best;
}

ProbePath route_path(const DoubleGraph& gd, int from, int to, const std::set<int>& forbidden) {
  const int nf = static_cast<int>(gd.faces.size());
  std::vector<int> via(nf, -2);
  via[from] = -1;
  std::queue<int> q;
  q.push(from);
  while (!q.empty() && via[to] == -2) {
    int f = q.front();
    q.pop();
    for (int e : gd.face_edges(f)) {
      if (forbidden.count(e)) continue;
      int next = cross(gd, e, f).first;
      if (via[next] != -2) continue;
      via[next] = e;
      q.push(next);
    }
  }
  if (via[to] == -2) {
    throw Error(ErrorKind::kInvalidPath,
                "no dual path from face " + std::to_string(from) + " to " + std::to_string(to));
  }
  ProbePath path;
  path.start_face = from;
  for (int f = to; f != from;) {
    int e = via[f];
    path.crossed.push_back(e);
    f = cross(gd, e, f).first;
  }
  std::reverse(path.crossed.begin(), path.crossed.end());
  return path;
}

std::vector<ProbePath> probe_paths(const DoubleGraph& gd, const std::vector<int>& targets) {
  std::vector<ProbePath> out;
  std::set<int> used;
  for (int t : targets) {
    ProbePath p = route_path(gd, DoubleGraph::kOuterFace, t, used);
    used.insert(p.crossed.begin(), p.crossed.end());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace isodimer

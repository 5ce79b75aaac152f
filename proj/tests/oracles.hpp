#pragma once

// Independent reference computations shared by the tests and the acceptance
// runner. Nothing here calls the determinantal code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "isodimer/height.hpp"
#include "isodimer/lattice.hpp"
#include "isodimer/sampler.hpp"

namespace oracle {

using isodimer::DoubleGraph;
using isodimer::Matching;

struct Weighted {
  Matching edges;
  double weight;
};

// Plain backtracking in white-id order; weights are products of nu.
inline std::vector<Weighted> matchings(const DoubleGraph& gd) {
  std::vector<Weighted> out;
  const int nw = static_cast<int>(gd.whites.size());
  if (nw != gd.active_black_count()) return out;
  std::vector<char> used(gd.blacks.size(), 0);
  used[gd.removed] = 1;
  std::vector<int> chosen;
  std::function<void(int, double)> rec = [&](int w, double weight) {
    if (w == nw) {
      Matching m = chosen;
      std::sort(m.begin(), m.end());
      out.push_back({m, weight});
      return;
    }
    for (int e = 0; e < static_cast<int>(gd.edges.size()); ++e) {
      if (gd.edges[e].white != w || used[gd.edges[e].black]) continue;
      used[gd.edges[e].black] = 1;
      chosen.push_back(e);
      rec(w + 1, weight * gd.edges[e].nu);
      chosen.pop_back();
      used[gd.edges[e].black] = 0;
    }
  };
  rec(0, 1.0);
  return out;
}

inline double total_weight(const std::vector<Weighted>& ms) {
  double z = 0.0;
  for (const auto& m : ms) z += m.weight;
  return z;
}

// Weighted expectation of f over the enumerated law.
template <typename F>
double expectation(const std::vector<Weighted>& ms, F f) {
  double z = total_weight(ms), s = 0.0;
  for (const auto& m : ms) s += m.weight * f(m.edges);
  return s / z;
}

inline bool contains(const Matching& m, int e) { return std::binary_search(m.begin(), m.end(), e); }

inline double edge_probability(const std::vector<Weighted>& ms, int e) {
  return expectation(ms, [&](const Matching& m) { return contains(m, e) ? 1.0 : 0.0; });
}

// Naive Leibniz determinant (small matrices only).
template <typename Mat>
auto leibniz_det(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  using T = std::decay_t<decltype(a(0, 0))>;
  T det = T(0.0);
  do {
    int inv = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) inv += p[i] > p[j];
    }
    T prod = T(inv % 2 ? -1.0 : 1.0);
    for (int i = 0; i < n; ++i) prod *= a(i, p[i]);
    det += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return det;
}

// Height of every double-graph face, from one matching, summing I(e) - P(e)
// with the enumeration frequencies as P. Built by plain BFS over faces.
inline std::vector<double> heights(const DoubleGraph& gd, const Matching& m,
                                   const std::vector<double>& p) {
  std::vector<double> h(gd.faces.size(), NAN);
  h[DoubleGraph::kOuterFace] = 0.0;
  std::vector<int> queue{DoubleGraph::kOuterFace};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    int f = queue[q];
    for (int e : gd.face_edges(f)) {
      const auto& de = gd.edges[e];
      int next = de.left_face == f ? de.right_face : de.left_face;
      if (!std::isnan(h[next])) continue;
      double step = (contains(m, e) ? 1.0 : 0.0) - p[e];
      h[next] = h[f] + (de.left_face == next ? step : -step);
      queue.push_back(next);
    }
  }
  return h;
}

}  // namespace oracle

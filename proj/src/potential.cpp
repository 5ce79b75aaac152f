#include "isodimer/potential.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "isodimer/errors.hpp"

namespace isodimer {
namespace {

void require_interior(const IsoradialGraph& g, int v) {
  if (g.is_boundary_vertex(v)) {
    throw Error(ErrorKind::kBoundaryVertex, "vertex " + std::to_string(v) + " is on the boundary");
  }
}

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> from_triplets(int n, const Triplets& t) {
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::vector<double> conductances(const IsoradialGraph& g) {
  std::vector<double> c(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) c[e] = std::tan(g.edges[e].theta);
  return c;
}

double laplacian_apply(const IsoradialGraph& g, const std::vector<double>& h, int v) {
  require_interior(g, v);
  double weight = 0.0;
  double mean = 0.0;
  for (int e : g.incident_edges(v)) {
    double c = std::tan(g.edges[e].theta);
    weight += c;
    mean += c * h[g.other_end(e, v)];
  }
  return h[v] - mean / weight;
}

double laplacian_apply_unnormalized(const IsoradialGraph& g, const std::vector<double>& h, int v) {
  require_interior(g, v);
  double sum = 0.0;
  for (int e : g.incident_edges(v)) {
    sum += std::tan(g.edges[e].theta) * (h[v] - h[g.other_end(e, v)]);
  }
  return sum;
}

std::vector<std::pair<int, double>> transition_kernel(const IsoradialGraph& g, int v) {
  require_interior(g, v);
  const auto& inc = g.incident_edges(v);
  double total = 0.0;
  for (int e : inc) total += std::tan(g.edges[e].theta);
  std::vector<std::pair<int, double>> out;
  double partial = 0.0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    double p = k + 1 == inc.size() ? 1.0 - partial : std::tan(g.edges[inc[k]].theta) / total;
    partial += p;
    out.emplace_back(g.other_end(inc[k], v), p);
  }
  return out;
}

HarmonicField harmonic_extension(const IsoradialGraph& g, const std::vector<double>& boundary_values) {
  const int nv = static_cast<int>(g.vertices.size());
  HarmonicField field;
  field.values.assign(nv, 0.0);
  std::vector<int> index(nv, -1);
  int ni = 0;
  for (int v = 0; v < nv; ++v) {
    if (g.is_boundary_vertex(v)) {
      field.values[v] = boundary_values[v];
    } else {
      index[v] = ni++;
    }
  }
  if (ni == 0) return field;

  Triplets t;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
  for (int v = 0; v < nv; ++v) {
    if (index[v] < 0) continue;
    double diag = 0.0;
    for (int e : g.incident_edges(v)) {
      double c = std::tan(g.edges[e].theta);
      int u = g.other_end(e, v);
      diag += c;
      if (index[u] >= 0) {
        t.emplace_back(index[v], index[u], -c);
      } else {
        rhs(index[v]) += c * boundary_values[u];
      }
    }
    t.emplace_back(index[v], index[v], diag);
  }
  Eigen::SparseMatrix<double> m = from_triplets(ni, t);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kSolveFailure, "Cholesky factorization of the Dirichlet system failed");
  }
  Eigen::VectorXd x = llt.solve(rhs);
  for (int v = 0; v < nv; ++v) {
    if (index[v] >= 0) field.values[v] = x(index[v]);
  }
  for (int v = 0; v < nv; ++v) {
    if (index[v] < 0) continue;
    double scale = 1.0;
    for (int e : g.incident_edges(v)) scale = std::max(scale, std::abs(field.values[g.other_end(e, v)]));
    if (!(std::abs(laplacian_apply(g, field.values, v)) <= 1e-10 * scale)) {
      throw Error(ErrorKind::kSolveFailure,
                  "harmonic residual too large at vertex " + std::to_string(v));
    }
  }
  return field;
}

double harmonic_measure(const IsoradialGraph& g, int u, const std::vector<int>& targets) {
  require_interior(g, u);
  std::vector<double> data(g.vertices.size(), 0.0);
  for (int v : targets) {
    if (!g.is_boundary_vertex(v)) {
      throw Error(ErrorKind::kBoundaryVertex,
                  "target " + std::to_string(v) + " is not a boundary vertex");
    }
    data[v] = 1.0;
  }
  return harmonic_extension(g, data).values[u];
}

Eigen::SparseMatrix<double> primal_laplacian(const IsoradialGraph& g) {
  Triplets t;
  for (const Edge& e : g.edges) {
    double c = std::tan(e.theta);
    t.emplace_back(e.a, e.a, c);
    t.emplace_back(e.b, e.b, c);
    t.emplace_back(e.a, e.b, -c);
    t.emplace_back(e.b, e.a, -c);
  }
  return from_triplets(static_cast<int>(g.vertices.size()), t);
}

Eigen::SparseMatrix<double> neumann_pinned_laplacian(const IsoradialGraph& g, int pinned) {
  auto idx = [pinned](int v) { return v < pinned ? v : v - 1; };
  Triplets t;
  for (const Edge& e : g.edges) {
    double c = std::tan(e.theta);
    if (e.a != pinned) t.emplace_back(idx(e.a), idx(e.a), c);
    if (e.b != pinned) t.emplace_back(idx(e.b), idx(e.b), c);
    if (e.a != pinned && e.b != pinned) {
      t.emplace_back(idx(e.a), idx(e.b), -c);
      t.emplace_back(idx(e.b), idx(e.a), -c);
    }
  }
  return from_triplets(static_cast<int>(g.vertices.size()) - 1, t);
}

Eigen::SparseMatrix<double> dual_dirichlet_laplacian(const IsoradialGraph& g) {
  Triplets t;
  for (const Edge& e : g.edges) {
    double c = 1.0 / std::tan(e.theta);
    if (e.left_face >= 0) t.emplace_back(e.left_face, e.left_face, c);
    if (e.right_face >= 0) t.emplace_back(e.right_face, e.right_face, c);
    if (e.is_interior()) {
      t.emplace_back(e.left_face, e.right_face, -c);
      t.emplace_back(e.right_face, e.left_face, -c);
    }
  }
  return from_triplets(static_cast<int>(g.faces.size()), t);
}

LaplacianInverse::LaplacianInverse(Eigen::SparseMatrix<double> m) : matrix_(std::move(m)) {
  llt_.compute(matrix_);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorKind::kSolveFailure, "Laplacian is not positive definite");
  }
}

Eigen::VectorXd LaplacianInverse::column(int i) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(matrix_.rows());
  rhs(i) = 1.0;
  Eigen::VectorXd x = llt_.solve(rhs);
  double residual = (matrix_ * x - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff() * matrix_.diagonal().maxCoeff()))) {
    throw Error(ErrorKind::kSolveFailure, "Green's function solve residual " + std::to_string(residual));
  }
  return x;
}

NeumannGreen::NeumannGreen(const IsoradialGraph& g, int pinned)
    : pinned_(pinned), inv_(neumann_pinned_laplacian(g, pinned)) {}

int NeumannGreen::index(int v) const {
  if (v == pinned_) {
    throw Error(ErrorKind::kBoundaryVertex, "vertex " + std::to_string(v) + " is the pinned vertex");
  }
  return v < pinned_ ? v : v - 1;
}

double NeumannGreen::operator()(int v1, int v2) const { return inv_(index(v1), index(v2)); }

double green_dirichlet(const IsoradialGraph& g, int f1, int f2) { return DirichletGreen(g)(f1, f2); }

double green_neumann_pinned(const IsoradialGraph& g, int pinned, int v1, int v2) {
  return NeumannGreen(g, pinned)(v1, v2);
}

double whole_plane_green_asymptotic(Point v1, Point v2, double delta) {
  double r = std::abs(v2 - v1);
  if (r == 0.0) throw Error(ErrorKind::kCoincidentPoints, "v1 == v2");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  return -std::log(r / delta) / kTwoPi - (std::numbers::egamma + std::numbers::ln2) / kTwoPi;
}

}  // namespace isodimer

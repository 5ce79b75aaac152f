#pragma once

#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "isodimer/lattice.hpp"

namespace isodimer {

// tan(theta_e) per primal edge.
std::vector<double> conductances(const IsoradialGraph& g);

enum class FieldDomain { kPrimal, kDual };
enum class BoundaryCondition { kDirichlet, kNeumannPinned };

struct HarmonicField {
  std::vector<double> values;
  FieldDomain domain = FieldDomain::kPrimal;
  BoundaryCondition bc = BoundaryCondition::kDirichlet;
};

// H(v) - sum tan(theta) H(v') / sum tan(theta), over the neighbors of an
// interior vertex v.
double laplacian_apply(const IsoradialGraph& g, const std::vector<double>& h, int v);
// sum tan(theta) (H(v) - H(v')).
double laplacian_apply_unnormalized(const IsoradialGraph& g, const std::vector<double>& h, int v);

// Random-walk step probabilities (neighbor, probability) from an interior
// vertex, in incidence order.
std::vector<std::pair<int, double>> transition_kernel(const IsoradialGraph& g, int v);

// Harmonic interpolation of boundary data. boundary_values is indexed by
// vertex id; entries at interior vertices are ignored.
HarmonicField harmonic_extension(const IsoradialGraph& g, const std::vector<double>& boundary_values);

// Probability that the walk from u first hits the boundary inside `targets`.
double harmonic_measure(const IsoradialGraph& g, int u, const std::vector<int>& targets);

// Unnormalized conductance Laplacian on all primal vertices.
Eigen::SparseMatrix<double> primal_laplacian(const IsoradialGraph& g);
// primal_laplacian with the row and column of `pinned` deleted; vertex order
// is preserved.
Eigen::SparseMatrix<double> neumann_pinned_laplacian(const IsoradialGraph& g, int pinned);
// Laplacian of the interior dual with conductance 1/tan(theta). Boundary edges
// lead to exterior dual vertices held at zero, so their conductance stays on
// the diagonal.
Eigen::SparseMatrix<double> dual_dirichlet_laplacian(const IsoradialGraph& g);

// Inverse of an SPD Laplacian, evaluated by sparse Cholesky solves.
class LaplacianInverse {
 public:
  explicit LaplacianInverse(Eigen::SparseMatrix<double> m);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  // Column i of the inverse.
  Eigen::VectorXd column(int i) const;
  double operator()(int i, int j) const { return column(i)(j); }

 private:
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

// Dirichlet Green's function on faces (interior dual vertices).
class DirichletGreen {
 public:
  explicit DirichletGreen(const IsoradialGraph& g) : inv_(dual_dirichlet_laplacian(g)) {}

  double operator()(int f1, int f2) const { return inv_(f1, f2); }
  Eigen::VectorXd column(int f) const { return inv_.column(f); }
  const Eigen::SparseMatrix<double>& matrix() const { return inv_.matrix(); }

 private:
  LaplacianInverse inv_;
};

// Green's function of the primal Laplacian pinned to zero at one vertex.
class NeumannGreen {
 public:
  NeumannGreen(const IsoradialGraph& g, int pinned);

  double operator()(int v1, int v2) const;
  const Eigen::SparseMatrix<double>& matrix() const { return inv_.matrix(); }
  int pinned() const { return pinned_; }

 private:
  int index(int v) const;

  int pinned_;
  LaplacianInverse inv_;
};

double green_dirichlet(const IsoradialGraph& g, int f1, int f2);
double green_neumann_pinned(const IsoradialGraph& g, int pinned, int v1, int v2);

// -(1/2pi) log(|v2 - v1| / delta) - (gamma + log 2) / (2 pi).
double whole_plane_green_asymptotic(Point v1, Point v2, double delta);

}  // namespace isodimer

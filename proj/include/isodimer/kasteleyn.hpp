#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "isodimer/lattice.hpp"

namespace isodimer {

// Kasteleyn operator dbar(w, b) = nu * xi on the double graph, stored as a
// white x active-black matrix, with its LU factorization and inverse.
class KasteleynSystem {
 public:
  explicit KasteleynSystem(DoubleGraph gd);

  const DoubleGraph& graph() const { return gd_; }
  int size() const { return static_cast<int>(dbar_.rows()); }

  const Eigen::MatrixXcd& dbar() const { return dbar_; }
  Complex dbar_entry(int edge) const;
  Eigen::SparseMatrix<Complex> dbar_sparse() const;
  // D = S dbar with S(w, w) = 1 / (2 sqrt(sin(theta) cos(theta))).
  Eigen::SparseMatrix<Complex> dmat() const;
  const Eigen::VectorXd& gauge_s() const { return s_; }

  // Gauge: dbar(w, b) = alpha(w, b) H(w) H(b) with |H| = 1 and alpha real.
  const std::vector<Complex>& gauge_h_white() const { return h_white_; }
  const std::vector<Complex>& gauge_h_black() const { return h_black_; }
  const std::vector<double>& alpha() const { return alpha_; }
  // alpha(w1,b1) alpha(w2,b2) / (alpha(w1,b2) alpha(w2,b1)) around a bounded
  // face of the double graph, starting at the lowest edge id.
  double alpha_face_product(int face) const;
  // Largest |arg(H(b)) mismatch| when H is recomputed across non-tree edges.
  double gauge_path_residual() const;

  // Throws GraphNotMatchable when the determinant vanishes.
  void factorize();
  void invert();
  bool inverted() const { return inverse_.has_value(); }
  // Installs a previously computed inverse (e.g. from load_inverse_dump)
  // after checking it against dbar; throws InvalidArchive on mismatch.
  void adopt_inverse(Eigen::MatrixXcd inv);

  double log_partition_function();
  double partition_function();

  // Black x white inverse.
  const Eigen::MatrixXcd& inverse() const;
  Complex inverse_entry(int black, int white) const;

  double edge_probability(int edge) const;
  // Probability that all edges occur; edges must be vertex-disjoint.
  double local_statistics(std::span<const int> edges) const;
  // E[prod (I(e) - P(e))]; edges must be vertex-disjoint.
  double centered_moment(std::span<const int> edges) const;
  // Same without the disjointness check. Overlapping edges contribute
  // structurally zero minors; a repeated edge is not supported.
  double centered_moment_general(std::span<const int> edges) const;

  // Row-major (re, im) doubles after the "IDK1" header.
  void dump_inverse(const std::string& path) const;

 private:
  void build_gauge();
  double inverse_residual() const;
  Eigen::MatrixXcd edge_matrix(std::span<const int> edges) const;
  void require_disjoint(std::span<const int> edges) const;

  DoubleGraph gd_;
  Eigen::MatrixXcd dbar_;
  Eigen::VectorXd s_;
  std::vector<Complex> h_white_;
  std::vector<Complex> h_black_;
  std::vector<double> alpha_;
  std::vector<char> tree_edge_;
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
  std::optional<double> log_z_;
  std::optional<Eigen::MatrixXcd> inverse_;
};

struct DnReport {
  double cross_block = 0.0;
  double primal_block = 0.0;
  double dual_block = 0.0;
  double max_residual() const;
};

// Compares D* D with the pinned primal Laplacian (primal black block), the
// dual Dirichlet Laplacian (dual black block) and zero (cross block).
DnReport verify_dn(const KasteleynSystem& sys, const IsoradialGraph& g);

// Loads a matrix written by dump_inverse.
Eigen::MatrixXcd load_inverse_dump(const std::string& path);

}  // namespace isodimer

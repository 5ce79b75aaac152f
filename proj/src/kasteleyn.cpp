#include "isodimer/kasteleyn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <set>

#include "isodimer/errors.hpp"
#include "isodimer/potential.hpp"

namespace isodimer {
namespace {

// Closed forms for the tiny sizes, LU otherwise.
Complex small_det(Eigen::MatrixXcd m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return m.partialPivLu().determinant();
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

std::uint64_t read_u64(std::ifstream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw Error(ErrorKind::kInvalidArchive, "truncated inverse dump");
  }
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | buf[k];
  return v;
}

double read_f64(std::ifstream& in) {
  std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

KasteleynSystem::KasteleynSystem(DoubleGraph gd) : gd_(std::move(gd)) {
  const int nw = static_cast<int>(gd_.whites.size());
  const int nb = gd_.active_black_count();
  dbar_ = Eigen::MatrixXcd::Zero(nw, nb);
  s_ = Eigen::VectorXd::Ones(nw);
  for (const DoubleEdge& e : gd_.edges) {
    dbar_(e.white, gd_.black_column(e.black)) = e.nu * e.xi;
    s_(e.white) = 1.0 / (2.0 * std::sqrt(std::sin(e.theta) * std::cos(e.theta)));
  }
  build_gauge();
}

Complex KasteleynSystem::dbar_entry(int edge) const {
  if (edge < 0 || edge >= static_cast<int>(gd_.edges.size())) {
    throw Error(ErrorKind::kNotAnEdge, "edge " + std::to_string(edge));
  }
  const DoubleEdge& e = gd_.edges[edge];
  return dbar_(e.white, gd_.black_column(e.black));
}

Eigen::SparseMatrix<Complex> KasteleynSystem::dbar_sparse() const {
  std::vector<Eigen::Triplet<Complex>> t;
  for (const DoubleEdge& e : gd_.edges) {
    t.emplace_back(e.white, gd_.black_column(e.black), e.nu * e.xi);
  }
  Eigen::SparseMatrix<Complex> m(dbar_.rows(), dbar_.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::SparseMatrix<Complex> KasteleynSystem::dmat() const {
  Eigen::SparseMatrix<Complex> m = dbar_sparse();
  Eigen::VectorXcd s = s_.cast<Complex>();
  return s.asDiagonal() * m;
}

void KasteleynSystem::build_gauge() {
  const int nw = static_cast<int>(gd_.whites.size());
  const int nb = static_cast<int>(gd_.blacks.size());
  h_white_.assign(nw, Complex(1.0, 0.0));
  h_black_.assign(nb, Complex(1.0, 0.0));
  alpha_.assign(gd_.edges.size(), 0.0);
  tree_edge_.assign(gd_.edges.size(), 0);
  std::vector<char> seen_white(nw, 0), seen_black(nb, 0);

  // Breadth-first spanning forest rooted at the lowest-id active blacks.
  // Nodes are encoded as black ids >= 0 and whites as -(w + 1).
  for (int col = 0; col < gd_.active_black_count(); ++col) {
    int root = gd_.column_black(col);
    if (seen_black[root]) continue;
    seen_black[root] = 1;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      if (node >= 0) {
        for (int e : gd_.black_edges(node)) {
          const DoubleEdge& de = gd_.edges[e];
          if (seen_white[de.white]) continue;
          seen_white[de.white] = 1;
          tree_edge_[e] = 1;
          alpha_[e] = de.nu;
          h_white_[de.white] = de.nu * de.xi / (alpha_[e] * h_black_[node]);
          q.push(-(de.white + 1));
        }
      } else {
        int w = -node - 1;
        for (int e : gd_.white_edges(w)) {
          const DoubleEdge& de = gd_.edges[e];
          if (seen_black[de.black]) continue;
          seen_black[de.black] = 1;
          tree_edge_[e] = 1;
          alpha_[e] = de.nu;
          h_black_[de.black] = de.nu * de.xi / (alpha_[e] * h_white_[w]);
          q.push(de.black);
        }
      }
    }
  }
  for (std::size_t e = 0; e < gd_.edges.size(); ++e) {
    if (tree_edge_[e]) continue;
    const DoubleEdge& de = gd_.edges[e];
    alpha_[e] = (de.nu * de.xi / (h_white_[de.white] * h_black_[de.black])).real();
  }
}

double KasteleynSystem::gauge_path_residual() const {
  double worst = 0.0;
  for (std::size_t e = 0; e < gd_.edges.size(); ++e) {
    const DoubleEdge& de = gd_.edges[e];
    Complex recomputed = de.nu * de.xi / (alpha_[e] * h_white_[de.white]);
    worst = std::max(worst, std::abs(recomputed - h_black_[de.black]));
  }
  return worst;
}

double KasteleynSystem::alpha_face_product(int face) const {
  const auto& fe = gd_.face_edges(face);
  if (gd_.faces[face].is_outer() || fe.size() != 4) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const DoubleEdge& first = gd_.edges[fe[0]];
  int w1 = first.white;
  int b1 = first.black;
  int w2 = -1, b2 = -1;
  for (int e : fe) {
    if (gd_.edges[e].white != w1) w2 = gd_.edges[e].white;
    if (gd_.edges[e].black != b1) b2 = gd_.edges[e].black;
  }
  auto a = [&](int w, int b) {
    for (int e : fe) {
      if (gd_.edges[e].white == w && gd_.edges[e].black == b) return alpha_[e];
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  return a(w1, b1) * a(w2, b2) / (a(w1, b2) * a(w2, b1));
}

void KasteleynSystem::factorize() {
  if (lu_) return;
  if (dbar_.rows() != dbar_.cols()) {
    throw Error(ErrorKind::kGraphNotMatchable,
                std::to_string(dbar_.rows()) + " white vs " + std::to_string(dbar_.cols()) +
                    " black vertices");
  }
  const int n = size();
  if (n == 0) {
    log_z_ = 0.0;
    return;
  }
  for (int i = 0; i < n; ++i) {
    if (dbar_.row(i).squaredNorm() == 0.0 || dbar_.col(i).squaredNorm() == 0.0) {
      throw Error(ErrorKind::kGraphNotMatchable,
                  "vertex with no edges (row/column " + std::to_string(i) + ")");
    }
  }
  lu_.emplace(dbar_);
  double log_scale = 0.0;
  for (int i = 0; i < n; ++i) log_scale += std::log(dbar_.row(i).norm());
  const double scale = std::exp(log_scale / n);
  const auto& lu = lu_->matrixLU();
  double log_det = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double p = std::abs(lu(i, i));
    min_pivot = std::min(min_pivot, p);
    log_det += std::log(p);
  }
  if (!(min_pivot >= 1e-12 * scale)) {
    lu_.reset();
    throw Error(ErrorKind::kGraphNotMatchable,
                "Kasteleyn matrix is singular (min pivot " + std::to_string(min_pivot) + ")");
  }
  log_z_ = log_det;
}

double KasteleynSystem::log_partition_function() {
  factorize();
  return *log_z_;
}

double KasteleynSystem::partition_function() { return std::exp(log_partition_function()); }

void KasteleynSystem::invert() {
  if (inverse_) return;
  factorize();
  if (size() == 0) {
    inverse_.emplace(0, 0);
    return;
  }
  inverse_.emplace(lu_->inverse());
  double worst = inverse_residual();
  if (!(worst < 1e-8)) {
    inverse_.reset();
    throw Error(ErrorKind::kGraphNotMatchable,
                "inverse residual " + std::to_string(worst) + " too large");
  }
}

void KasteleynSystem::adopt_inverse(Eigen::MatrixXcd inv) {
  if (inv.rows() != size() || inv.cols() != size()) {
    throw Error(ErrorKind::kInvalidArchive, "inverse dump is " + std::to_string(inv.rows()) + "x" +
                                                std::to_string(inv.cols()) + ", graph needs " +
                                                std::to_string(size()));
  }
  inverse_.emplace(std::move(inv));
  double worst = inverse_residual();
  if (!(worst < 1e-8)) {
    inverse_.reset();
    throw Error(ErrorKind::kInvalidArchive,
                "inverse dump does not match the graph (residual " + std::to_string(worst) + ")");
  }
}

double KasteleynSystem::inverse_residual() const {
  // Spot-check the identity on a spread of rows.
  const int n = size();
  const int step = std::max(1, n / 16);
  double worst = 0.0;
  for (int i = 0; i < n; i += step) {
    Eigen::RowVectorXcd r = dbar_.row(i) * (*inverse_);
    r(i) -= 1.0;
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

const Eigen::MatrixXcd& KasteleynSystem::inverse() const {
  if (!inverse_) throw Error(ErrorKind::kSolveFailure, "Kasteleyn system not inverted");
  return *inverse_;
}

Complex KasteleynSystem::inverse_entry(int black, int white) const {
  int col = gd_.black_column(black);
  if (col < 0) throw Error(ErrorKind::kNotAnEdge, "black vertex " + std::to_string(black) + " is removed");
  return inverse()(col, white);
}

double KasteleynSystem::edge_probability(int edge) const {
  Complex k = dbar_entry(edge);
  const DoubleEdge& e = gd_.edges[edge];
  Complex p = k * inverse()(gd_.black_column(e.black), e.white);
  if (std::abs(p.imag()) > 1e-10 || p.real() < -1e-10 || p.real() > 1.0 + 1e-10) {
    throw Error(ErrorKind::kNumericalBreakdown,
                "edge " + std::to_string(edge) + " probability " + std::to_string(p.real()) + "+" +
                    std::to_string(p.imag()) + "i");
  }
  return std::clamp(p.real(), 0.0, 1.0);
}

Eigen::MatrixXcd KasteleynSystem::edge_matrix(std::span<const int> edges) const {
  const int k = static_cast<int>(edges.size());
  const Eigen::MatrixXcd& a = inverse();
  Eigen::MatrixXcd m(k, k);
  for (int i = 0; i < k; ++i) {
    Complex kw = dbar_entry(edges[i]);
    int w = gd_.edges[edges[i]].white;
    for (int j = 0; j < k; ++j) {
      m(i, j) = kw * a(gd_.black_column(gd_.edges[edges[j]].black), w);
    }
  }
  return m;
}

void KasteleynSystem::require_disjoint(std::span<const int> edges) const {
  std::set<int> whites, blacks;
  for (int e : edges) {
    dbar_entry(e);
    if (!whites.insert(gd_.edges[e].white).second || !blacks.insert(gd_.edges[e].black).second) {
      throw Error(ErrorKind::kSharedVertex, "edge " + std::to_string(e) + " shares a vertex");
    }
  }
}

double KasteleynSystem::local_statistics(std::span<const int> edges) const {
  require_disjoint(edges);
  Complex d = small_det(edge_matrix(edges));
  return d.real();
}

double KasteleynSystem::centered_moment(std::span<const int> edges) const {
  require_disjoint(edges);
  return centered_moment_general(edges);
}

double KasteleynSystem::centered_moment_general(std::span<const int> edges) const {
  Eigen::MatrixXcd m = edge_matrix(edges);
  m.diagonal().setZero();
  return small_det(std::move(m)).real();
}

void KasteleynSystem::dump_inverse(const std::string& path) const {
  const Eigen::MatrixXcd& a = inverse();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kMissingInput, "cannot write " + path);
  out.write("IDK1", 4);
  write_u64(out, static_cast<std::uint64_t>(a.rows()));
  write_u64(out, static_cast<std::uint64_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      write_f64(out, a(i, j).real());
      write_f64(out, a(i, j).imag());
    }
  }
}

Eigen::MatrixXcd load_inverse_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingInput, "expected inverse dump " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "IDK1", 4) != 0) {
    throw Error(ErrorKind::kInvalidArchive, path + " lacks the IDK1 header");
  }
  auto rows = static_cast<Eigen::Index>(read_u64(in));
  auto cols = static_cast<Eigen::Index>(read_u64(in));
  Eigen::MatrixXcd a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re = read_f64(in);
      a(i, j) = Complex(re, read_f64(in));
    }
  }
  return a;
}

double DnReport::max_residual() const {
  return std::max({cross_block, primal_block, dual_block});
}

DnReport verify_dn(const KasteleynSystem& sys, const IsoradialGraph& g) {
  const DoubleGraph& gd = sys.graph();
  Eigen::SparseMatrix<Complex> d = sys.dmat();
  Eigen::SparseMatrix<Complex> dd = Eigen::SparseMatrix<Complex>(d.adjoint()) * d;
  const int n0 = static_cast<int>(g.vertices.size()) - 1;
  Eigen::SparseMatrix<double> lp = neumann_pinned_laplacian(g, gd.removed);
  Eigen::SparseMatrix<double> ld = dual_dirichlet_laplacian(g);

  std::vector<Eigen::Triplet<Complex>> t;
  for (int k = 0; k < lp.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(lp, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int k = 0; k < ld.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(ld, k); it; ++it) {
      t.emplace_back(n0 + it.row(), n0 + it.col(), it.value());
    }
  }
  Eigen::SparseMatrix<Complex> expected(dd.rows(), dd.cols());
  expected.setFromTriplets(t.begin(), t.end());
  Eigen::SparseMatrix<Complex> diff = dd - expected;

  DnReport r;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(diff, k); it; ++it) {
      double v = std::abs(it.value());
      bool row_primal = it.row() < n0;
      bool col_primal = it.col() < n0;
      double& slot = row_primal != col_primal ? r.cross_block
                     : row_primal             ? r.primal_block
                                              : r.dual_block;
      slot = std::max(slot, v);
    }
  }
  return r;
}

}  // namespace isodimer

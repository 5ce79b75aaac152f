#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isodimer/lattice.hpp"
#include "isodimer/pipeline.hpp"

namespace isodimer {

inline constexpr int kDefaultSeriesTerms = 400;

// Dirichlet Green's function of [0,a] x [0,b] with Delta g = delta_{z1} and
// g <= 0. One sine series in the direction of larger separation, with the
// transverse sum in closed form.
double rect_green(double a, double b, Point z1, Point z2, int terms = kDefaultSeriesTerms);

struct SeriesValue {
  double value;
  // |g(M) - g(2M)|.
  double truncation;
};
SeriesValue rect_green_checked(double a, double b, Point z1, Point z2,
                               int terms = kDefaultSeriesTerms);

// Conformal map of [0,a] x [0,b] onto the upper half plane through the
// Jacobi sn function; the bottom side goes to [-1, 1].
Complex rect_to_halfplane(double a, double b, Point z);
// Green's function from the half-plane formula composed with
// rect_to_halfplane; an oracle independent of rect_green.
double rect_green_conformal(double a, double b, Point z1, Point z2);

// Rectangle [0,a] x [0,b] with the marked point z0 on its bottom side.
struct ContinuumDomain {
  double a = 1.0;
  double b = 1.0;
  Point z0{0.5, 0.0};

  static ContinuumDomain rectangle(double a, double b);
  DomainSpec discrete() const;
  double green(Point z1, Point z2) const { return rect_green(a, b, z1, z2); }
  // Conformal map onto the upper half plane sending z0 to infinity.
  Complex phi(Point z) const;
  // Preimage of a half-plane point under phi, by Newton iteration.
  Point phi_inverse(Complex w) const;
};

// phi_to^{-1}(phi_from(z)).
Point conformal_transfer(const ContinuumDomain& from, const ContinuumDomain& to, Point z);

// f1(z1, z2, xi) and f0(z1, z2, i xi) in the upper half plane: both closed
// forms evaluated with the same xi.
std::pair<Complex, Complex> halfplane_kernels(Complex z1, Complex z2, Complex xi);

// -(1/pi) g(z1, z2) >= 0.
double predicted_covariance(const ContinuumDomain& d, Point z1, Point z2);

// Sum over pairings of products of covariances of the first k indices.
double pairing_moment(const Eigen::MatrixXd& c, int k);

struct PairingCheck {
  Complex det;
  Complex pairing_sum;
};
// det[1/(x_i - x_j)] (zero diagonal) against the sum over pairings of
// prod 1/(x_a - x_b)^2.
PairingCheck pairing_det_check(const std::vector<Complex>& x);

// ---------------------------------------------------------------------------
// Convergence harness

struct ReportProbes {
  std::vector<Point> points;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::array<int, 4>> quads;
};

struct ReportOptions {
  int threads = 1;
  // Compare the discrete Kasteleyn inverse with the directional-derivative
  // target around the white vertex nearest to points[0].
  bool derivative_shape = true;
};

struct PairRow {
  int i = 0;
  int j = 0;
  double exact = 0.0;
  double predicted = 0.0;
  double residual = 0.0;  // exact - fitted_c * predicted
  // exact * predicted(targets) / predicted(face centers): the exact value
  // moved from the probe face centers to the nominal probe points.
  double at_targets = 0.0;
};

struct QuadRow {
  std::array<int, 4> probes{};
  double exact = 0.0;
  double wick = 0.0;
  double relative_error = 0.0;
};

struct DeltaReport {
  double delta = 0.0;
  std::string lattice;
  int whites = 0;
  std::vector<Probe> probes;
  std::vector<PairRow> pairs;
  // Least-squares c in exact ~ c * predicted.
  double fitted_c = 0.0;
  // Largest |exact / predicted / c - 1| over pairs.
  double ratio_spread = 0.0;
  // sqrt(sum residual^2 / sum exact^2).
  double relative_residual = 0.0;
  std::vector<QuadRow> quads;
  double shape_correlation = 0.0;
  double shape_scale = 0.0;
};

struct MomentReport {
  std::vector<DeltaReport> per_delta;
  bool residual_decreasing() const;
};

MomentReport convergence_report(const ContinuumDomain& domain, const LatticeSpec& lattice,
                                const std::vector<double>& deltas, const ReportProbes& probes,
                                const ReportOptions& options = {});

// Directional derivative test of the discrete Dirichlet Green's function: the
// difference of G' across the dual edge at the white vertex nearest `source`,
// divided by the dual edge length, against the derivative of -g at that
// white in the same direction, with the field point at the face nearest
// `field`.
struct GreenDerivative {
  double delta = 0.0;
  double discrete = 0.0;
  double continuum = 0.0;
  double relative_error = 0.0;
};
GreenDerivative green_derivative_check(const ContinuumDomain& domain, const LatticeSpec& lattice,
                                       double delta, Point source, Point field);

}  // namespace isodimer

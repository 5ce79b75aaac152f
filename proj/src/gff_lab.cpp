#include "isodimer/gff_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/jacobi_elliptic.hpp>

#include "isodimer/errors.hpp"
#include "isodimer/height.hpp"
#include "isodimer/kasteleyn.hpp"
#include "isodimer/potential.hpp"

namespace isodimer {
namespace {

constexpr double kPi = std::numbers::pi;

// sinh(k lo) sinh(k (len - hi)) / sinh(k len) for 0 <= lo <= hi <= len,
// without overflow.
double sinh_ratio(double k, double lo, double hi, double len) {
  double lead = std::exp(k * (lo - hi));
  return 0.5 * lead * (-std::expm1(-2.0 * k * lo)) * (-std::expm1(-2.0 * k * (len - hi))) /
         (-std::expm1(-2.0 * k * len));
}

// Sine series in the first coordinate of a (len_s x len_t) rectangle.
double green_series(double len_s, double len_t, double s1, double t1, double s2, double t2,
                    int terms) {
  const double lo = std::min(t1, t2);
  const double hi = std::max(t1, t2);
  double sum = 0.0;
  for (int m = 1; m <= terms; ++m) {
    double k = m * kPi / len_s;
    sum -= std::sin(k * s1) * std::sin(k * s2) * sinh_ratio(k, lo, hi, len_t) / k;
  }
  return 2.0 / len_s * sum;
}

struct EllipticParams {
  double k;
  double kp;
  double big_k;
  double big_kp;
};

EllipticParams elliptic_params(double a, double b) {
  // Nome of the period ratio K'/K = 2b/a, then moduli from theta constants.
  const double q = std::exp(-2.0 * kPi * b / a);
  double t2 = 0.0, t3 = 1.0, t4 = 1.0;
  for (int n = 0; n < 40; ++n) {
    double half = (n + 0.5) * (n + 0.5);
    t2 += 2.0 * std::pow(q, half);
    if (n > 0) {
      double p = std::pow(q, static_cast<double>(n) * n);
      t3 += 2.0 * p;
      t4 += (n % 2 ? -2.0 : 2.0) * p;
    }
  }
  EllipticParams e;
  e.k = t2 * t2 / (t3 * t3);
  e.kp = t4 * t4 / (t3 * t3);
  e.big_k = 0.5 * kPi * t3 * t3;
  e.big_kp = e.big_k * 2.0 * b / a;
  return e;
}

// sn(x + i y, k) from real-argument values at moduli k and k'.
Complex complex_sn(double x, double y, double k, double kp) {
  double c, d, c1, d1;
  double s = boost::math::jacobi_elliptic(k, x, &c, &d);
  double s1 = boost::math::jacobi_elliptic(kp, y, &c1, &d1);
  double den = c1 * c1 + k * k * s * s * s1 * s1;
  return Complex(s * d1, c * d * s1 * c1) / den;
}

void require_distinct(Point z1, Point z2) {
  if (z1 == z2) throw Error(ErrorKind::kCoincidentPoints, "z1 == z2");
}

template <typename T>
T pairing_recursion(std::vector<int>& left, const std::function<T(int, int)>& weight) {
  if (left.empty()) return T(1.0);
  if (left.size() % 2) return T(0.0);
  int first = left.front();
  T sum(0.0);
  for (std::size_t j = 1; j < left.size(); ++j) {
    int partner = left[j];
    std::vector<int> rest;
    for (std::size_t t = 1; t < left.size(); ++t) {
      if (t != j) rest.push_back(left[t]);
    }
    sum += weight(first, partner) * pairing_recursion<T>(rest, weight);
  }
  return sum;
}

}  // namespace

double rect_green(double a, double b, Point z1, Point z2, int terms) {
  require_distinct(z1, z2);
  const double dx = std::abs(z1.real() - z2.real());
  const double dy = std::abs(z1.imag() - z2.imag());
  // Terms decay like exp(-m pi dy / a) for the x series and exp(-n pi dx / b)
  // for the y series.
  if (dy / a >= dx / b) {
    return green_series(a, b, z1.real(), z1.imag(), z2.real(), z2.imag(), terms);
  }
  return green_series(b, a, z1.imag(), z1.real(), z2.imag(), z2.real(), terms);
}

SeriesValue rect_green_checked(double a, double b, Point z1, Point z2, int terms) {
  double v = rect_green(a, b, z1, z2, terms);
  double v2 = rect_green(a, b, z1, z2, 2 * terms);
  return {v, std::abs(v - v2)};
}

Complex rect_to_halfplane(double a, double b, Point z) {
  EllipticParams e = elliptic_params(a, b);
  double x = e.big_k * (2.0 * z.real() / a - 1.0);
  double y = e.big_kp * z.imag() / b;
  return complex_sn(x, y, e.k, e.kp);
}

double rect_green_conformal(double a, double b, Point z1, Point z2) {
  require_distinct(z1, z2);
  Complex p1 = rect_to_halfplane(a, b, z1);
  Complex p2 = rect_to_halfplane(a, b, z2);
  return std::log(std::abs((p2 - p1) / (p2 - std::conj(p1)))) / (2.0 * kPi);
}

ContinuumDomain ContinuumDomain::rectangle(double a, double b) {
  return ContinuumDomain{a, b, Point{a / 2.0, 0.0}};
}

DomainSpec ContinuumDomain::discrete() const {
  DomainSpec d = DomainSpec::rectangle(a, b);
  d.z0 = z0;
  return d;
}

Complex ContinuumDomain::phi(Point z) const {
  double s0 = rect_to_halfplane(a, b, z0).real();
  return -1.0 / (rect_to_halfplane(a, b, z) - s0);
}

Point ContinuumDomain::phi_inverse(Complex w) const {
  auto residual = [&](Point z) { return phi(z) - w; };
  // Coarse grid start, then Newton with a central-difference derivative.
  Point z{a / 2.0, b / 2.0};
  double best = std::numeric_limits<double>::infinity();
  const int grid = 48;
  for (int i = 1; i < grid; ++i) {
    for (int j = 1; j < grid; ++j) {
      Point c{a * i / grid, b * j / grid};
      double r = std::abs(residual(c)) / (1.0 + std::abs(w));
      if (r < best) {
        best = r;
        z = c;
      }
    }
  }
  const double h = 1e-6 * std::max(a, b);
  for (int it = 0; it < 60; ++it) {
    Complex f = residual(z);
    Complex df = (phi(z + h) - phi(z - h)) / (2.0 * h);
    Complex step = f / df;
    z -= step;
    z = Point{std::clamp(z.real(), 1e-12, a - 1e-12), std::clamp(z.imag(), 1e-12, b - 1e-12)};
    if (std::abs(step) < 1e-14 * std::max(a, b)) break;
  }
  return z;
}

Point conformal_transfer(const ContinuumDomain& from, const ContinuumDomain& to, Point z) {
  return to.phi_inverse(from.phi(z));
}

std::pair<Complex, Complex> halfplane_kernels(Complex z1, Complex z2, Complex xi) {
  if (!(z1.imag() > 0.0) || !(z2.imag() > 0.0)) {
    throw Error(ErrorKind::kNotUpperHalfPlane, "arguments must satisfy Im z > 0");
  }
  require_distinct(z1, z2);
  const Complex inv_xi2 = 1.0 / (xi * xi);
  const Complex c1 = std::conj(z1);
  const Complex c2 = std::conj(z2);
  const double pre = 1.0 / (4.0 * kPi);
  Complex f1 = pre * ((1.0 / (z1 - z2) - 1.0 / (z1 - c2)) - inv_xi2 * (1.0 / (c1 - z2) - 1.0 / (c1 - c2)));
  Complex f0 = pre * ((1.0 / (z1 - z2) + 1.0 / (z1 - c2)) - inv_xi2 * (1.0 / (c1 - z2) + 1.0 / (c1 - c2)));
  return {f0, f1};
}

double predicted_covariance(const ContinuumDomain& d, Point z1, Point z2) {
  double v = -d.green(z1, z2) / kPi;
  return std::max(v, 0.0);
}

double pairing_moment(const Eigen::MatrixXd& c, int k) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  return pairing_recursion<double>(idx, [&](int i, int j) { return c(i, j); });
}

PairingCheck pairing_det_check(const std::vector<Complex>& x) {
  const int k = static_cast<int>(x.size());
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (x[i] == x[j]) {
        throw Error(ErrorKind::kCoincidentArguments,
                    "x" + std::to_string(i) + " == x" + std::to_string(j));
      }
    }
  }
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i != j) m(i, j) = 1.0 / (x[i] - x[j]);
    }
  }
  PairingCheck out;
  out.det = k == 0 ? Complex(1.0) : m.partialPivLu().determinant();
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  out.pairing_sum = pairing_recursion<Complex>(idx, [&](int i, int j) {
    Complex d = x[i] - x[j];
    return 1.0 / (d * d);
  });
  return out;
}

bool MomentReport::residual_decreasing() const {
  for (std::size_t i = 1; i < per_delta.size(); ++i) {
    if (!(per_delta[i].relative_residual < per_delta[i - 1].relative_residual)) return false;
  }
  return true;
}

namespace {

// Shape of (1/delta) dbar^{-1}(b', w) xi3 over dual blacks b' against the
// derivative of -g in the first argument along xi3 at w.
void derivative_shape(const ContinuumDomain& domain, const KasteleynSystem& sys, Point source,
                      DeltaReport& out) {
  const DoubleGraph& gd = sys.graph();
  int w = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(gd.whites.size()); ++i) {
    double d = std::abs(gd.whites[i].pos - source);
    if (d < best) {
      best = d;
      w = i;
    }
  }
  Complex xi3 = 0.0;
  for (int e : gd.white_edges(w)) {
    if (gd.blacks[gd.edges[e].black].kind == BlackKind::kDual) {
      xi3 = gd.edges[e].xi;
      break;
    }
  }
  const Point zw = gd.whites[w].pos;
  const double h = 1e-5;
  double sxx = 0.0, syy = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  int n = 0;
  for (int b = 0; b < static_cast<int>(gd.blacks.size()); ++b) {
    if (gd.blacks[b].kind != BlackKind::kDual) continue;
    Point zb = gd.blacks[b].pos;
    if (std::abs(zb - zw) < 0.15 * std::max(domain.a, domain.b)) continue;
    double disc = (sys.inverse_entry(b, w) * xi3).real() / gd.delta;
    double cont = -(domain.green(zw + h * xi3, zb) - domain.green(zw - h * xi3, zb)) / (2.0 * h);
    sxx += disc * disc;
    syy += cont * cont;
    sxy += disc * cont;
    sx += disc;
    sy += cont;
    ++n;
  }
  if (n < 2) return;
  double cov = sxy - sx * sy / n;
  double vx = sxx - sx * sx / n;
  double vy = syy - sy * sy / n;
  out.shape_correlation = cov / std::sqrt(vx * vy);
  out.shape_scale = sxy / syy;
}

}  // namespace

MomentReport convergence_report(const ContinuumDomain& domain, const LatticeSpec& lattice,
                                const std::vector<double>& deltas, const ReportProbes& probes,
                                const ReportOptions& options) {
  MomentReport report;
  const DomainSpec ds = domain.discrete();
  for (double delta : deltas) {
    DeltaReport r;
    r.delta = delta;
    r.lattice = lattice.name;
    IsoradialGraph g = build_domain_graph(ds, lattice, delta);
    KasteleynSystem sys(build_double_graph(g, ds));
    sys.invert();
    r.whites = sys.size();
    for (Point p : probes.points) r.probes.push_back(make_probe(g, sys.graph(), p));

    auto pair_moment = [&](int i, int j) {
      return probe_moment(sys, {r.probes[i], r.probes[j]}, options.threads);
    };
    double num = 0.0, den = 0.0;
    for (auto [i, j] : probes.pairs) {
      PairRow row;
      row.i = i;
      row.j = j;
      row.exact = pair_moment(i, j);
      row.predicted = predicted_covariance(domain, r.probes[i].center, r.probes[j].center);
      double nominal = predicted_covariance(domain, r.probes[i].target, r.probes[j].target);
      row.at_targets = row.predicted > 0.0 ? row.exact * nominal / row.predicted : row.exact;
      num += row.exact * row.predicted;
      den += row.predicted * row.predicted;
      r.pairs.push_back(row);
    }
    r.fitted_c = den > 0.0 ? num / den : 0.0;
    double res2 = 0.0, ex2 = 0.0;
    for (PairRow& row : r.pairs) {
      row.residual = row.exact - r.fitted_c * row.predicted;
      res2 += row.residual * row.residual;
      ex2 += row.exact * row.exact;
      if (row.predicted > 0.0) {
        r.ratio_spread =
            std::max(r.ratio_spread, std::abs(row.exact / (r.fitted_c * row.predicted) - 1.0));
      }
    }
    r.relative_residual = ex2 > 0.0 ? std::sqrt(res2 / ex2) : 0.0;

    for (const auto& quad : probes.quads) {
      QuadRow q;
      q.probes = quad;
      std::vector<Probe> four;
      for (int i : quad) four.push_back(r.probes[i]);
      q.exact = probe_moment(sys, four, options.threads);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
      for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) c(i, j) = c(j, i) = pair_moment(quad[i], quad[j]);
      }
      q.wick = pairing_moment(c, 4);
      q.relative_error = std::abs(q.exact - q.wick) / std::abs(q.wick);
      r.quads.push_back(q);
    }
    if (options.derivative_shape && !probes.points.empty()) {
      derivative_shape(domain, sys, probes.points[0], r);
    }
    report.per_delta.push_back(std::move(r));
  }
  return report;
}

GreenDerivative green_derivative_check(const ContinuumDomain& domain, const LatticeSpec& lattice,
                                       double delta, Point source, Point field) {
  const DomainSpec ds = domain.discrete();
  IsoradialGraph g = build_domain_graph(ds, lattice, delta);
  DirichletGreen green(g);
  int target = 0;
  for (int f = 0; f < static_cast<int>(g.faces.size()); ++f) {
    if (std::abs(g.faces[f].center - field) < std::abs(g.faces[target].center - field)) target = f;
  }
  const Point zt = g.faces[target].center;
  const double h = 1e-5;
  auto minus_g = [&](Point z) { return -domain.green(z, zt); };
  Complex grad((minus_g(source + h) - minus_g(source - h)) / (2.0 * h),
               (minus_g(source + Complex(0, h)) - minus_g(source - Complex(0, h))) / (2.0 * h));
  grad /= std::abs(grad);

  // Nearest interior edge whose dual edge is well aligned with the gradient.
  int chosen = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    const Edge& ed = g.edges[e];
    if (!ed.is_interior()) continue;
    Complex dual = g.faces[ed.left_face].center - g.faces[ed.right_face].center;
    double align = std::abs((dual * std::conj(grad)).real()) / std::abs(dual);
    if (align < 0.65) continue;
    double d = std::abs(0.5 * (g.vertices[ed.a] + g.vertices[ed.b]) - source);
    if (d < best) {
      best = d;
      chosen = e;
    }
  }
  if (chosen < 0) throw Error(ErrorKind::kInvalidConfig, "no dual edge aligned with the gradient");
  const Edge& ed = g.edges[chosen];
  const Point w = 0.5 * (g.vertices[ed.a] + g.vertices[ed.b]);
  const Point b3 = g.faces[ed.left_face].center;
  const Point b4 = g.faces[ed.right_face].center;
  const Complex xi3 = (b3 - w) / std::abs(b3 - w);

  Eigen::VectorXd col = green.column(target);
  GreenDerivative out;
  out.delta = delta;
  out.discrete = (col(ed.left_face) - col(ed.right_face)) / std::abs(b3 - b4);
  out.continuum = (minus_g(w + h * xi3) - minus_g(w - h * xi3)) / (2.0 * h);
  out.relative_error = std::abs(out.discrete - out.continuum) / std::abs(out.continuum);
  return out;
}

}  // namespace isodimer

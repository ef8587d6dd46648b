#include "asepkpz/robin_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "asepkpz/errors.hpp"

namespace asepkpz {

namespace {

// T(m) = sum_{j >= 0} p(m + j) mu^j for m = m0..m1, from a free row long enough for the tail.
std::vector<double> geometric_tails(const std::vector<double>& p, long m0, long m1, double mu) {
  const long cap = static_cast<long>(p.size()) - 1;
  std::vector<double> out(static_cast<std::size_t>(m1 - m0 + 1));
  double acc = 0.0;
  for (long m = cap; m >= m0; --m) {
    acc = p[m] + mu * acc;
    if (m <= m1) out[m - m0] = acc;
  }
  return out;
}

long tail_length(double t, double mu) {
  const double by_kernel = 10.0 * std::sqrt(t) + 40.0;
  if (mu >= 1.0) return 0;
  const double by_weight = 40.0 / (1.0 - mu);
  return static_cast<long>(std::ceil(std::min(by_kernel, by_weight)));
}

}  // namespace

std::vector<double> halfline_robin_row(double t, long x, long y_max, double mu) {
  require(x >= -1 && y_max >= 0, "half-line kernel needs x >= -1, y >= 0");
  require(mu > 0.0 && mu <= 1.0, "mu_A outside (0, 1]");
  const long reach = x + y_max + 2 + tail_length(t, mu);
  const std::vector<double> p = free_walk_kernel_row(t, std::max(reach, std::abs(x) + y_max + 2));
  auto pk = [&](long m) { return p[static_cast<std::size_t>(m < 0 ? -m : m)]; };
  std::vector<double> row(static_cast<std::size_t>(y_max) + 1);
  std::vector<double> tails;
  if (mu < 1.0) tails = geometric_tails(p, x + 2, x + y_max + 2, mu);
  for (long y = 0; y <= y_max; ++y) {
    double v = pk(x - y) + mu * pk(x + y + 1);
    if (mu < 1.0) v += (mu * mu - 1.0) * tails[static_cast<std::size_t>(y)];
    row[static_cast<std::size_t>(y)] = v;
  }
  return row;
}

double halfline_robin_kernel(double t, long x, long y, double mu) {
  require(y >= 0, "half-line kernel needs y >= 0");
  if (x >= 0 && y < x) std::swap(x, y);  // symmetric; shorter row
  return halfline_robin_row(t, x, y, mu)[static_cast<std::size_t>(y)];
}

// ---------------------------------------------------------------- spectrum

Eigen::MatrixXd robin_laplacian(int n, double mu_a, double mu_b) {
  require(n >= 1, "interval needs N >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int x = 0; x <= n; ++x) {
    m(x, x) = 1.0;
    if (x > 0) m(x, x - 1) = -0.5;
    if (x < n) m(x, x + 1) = -0.5;
  }
  m(0, 0) -= 0.5 * mu_a;
  m(n, n) -= 0.5 * mu_b;
  return m;
}

namespace {

// f(omega) / sin(omega) as a Chebyshev-U polynomial in cos(omega)
double secular(double omega, int n, double sa, double pa) {
  const double c = std::cos(omega);
  double um1 = 0.0, u = 1.0;  // U_{-1}, U_0
  double u_nm1 = 0.0, u_n = 0.0, u_np1 = 0.0;
  for (int k = 0; k <= n + 1; ++k) {
    if (k == n - 1) u_nm1 = u;
    if (k == n) u_n = u;
    if (k == n + 1) u_np1 = u;
    const double next = 2.0 * c * u - um1;
    um1 = u;
    u = next;
  }
  if (n == 0) u_nm1 = 0.0;
  return u_np1 - sa * u_n + pa * u_nm1;
}

}  // namespace

SpectralData solve_interval_spectrum(int n, double mu_a, double mu_b) {
  require(n >= 1, "interval needs N >= 1");
  require(mu_a >= 0.0 && mu_a <= 1.0 && mu_b >= 0.0 && mu_b <= 1.0, "mu outside [0, 1]");
  SpectralData s;
  s.n = n;
  s.mu_a = mu_a;
  s.mu_b = mu_b;
  s.omegas.resize(n + 1);
  s.lambdas.resize(n + 1);
  s.eigvecs.resize(n + 1, n + 1);
  const double h = std::numbers::pi / (n + 1);
  const bool neumann = mu_a == 1.0 && mu_b == 1.0;
  const double sa = mu_a + mu_b, pa = mu_a * mu_b;
  for (int k = 0; k <= n; ++k) {
    double w;
    if (neumann) {
      w = k * h;
    } else {
      double lo = k * h, hi = (k + 1) * h;
      double flo = secular(lo, n, sa, pa), fhi = secular(hi, n, sa, pa);
      if (flo * fhi > 0.0) {
        std::ostringstream msg;
        msg << "spectrum bracket " << k << " has no sign change (N=" << n << ", mu_A=" << mu_a
            << ", mu_B=" << mu_b << ", f=" << flo << ", " << fhi << ")";
        throw NumericalError(msg.str());
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = secular(mid, n, sa, pa);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      w = 0.5 * (lo + hi);
    }
    s.omegas[k] = w;
    const double sh = std::sin(0.5 * w);
    s.lambdas[k] = 2.0 * sh * sh;
    Eigen::VectorXd psi(n + 1);
    if (neumann) {
      for (int x = 0; x <= n; ++x) psi(x) = std::cos(w * (x + 0.5));
    } else {
      const double c1 = std::sin(w);
      const double c2 = (1.0 - mu_a) - 2.0 * sh * sh;  // cos(w) - mu_A
      for (int x = 0; x <= n; ++x) psi(x) = c1 * std::cos(w * x) + c2 * std::sin(w * x);
    }
    psi /= psi.norm();
    if (psi(0) < 0) psi = -psi;
    s.eigvecs.col(k) = psi;
  }
  // symmetric (Loewdin) re-orthonormalization: removes the O(N eps_mach) drift of the
  // closed-form vectors so long products of kernels stay consistent
  const Eigen::MatrixXd gram = s.eigvecs.transpose() * s.eigvecs;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  s.eigvecs = s.eigvecs * es.operatorInverseSqrt();
  return s;
}

double spectrum_residual(const SpectralData& s) {
  const Eigen::MatrixXd m = robin_laplacian(s.n, s.mu_a, s.mu_b);
  double worst = 0.0;
  for (int k = 0; k <= s.n; ++k) {
    const Eigen::VectorXd r = m * s.eigvecs.col(k) - s.lambdas[k] * s.eigvecs.col(k);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

double spectrum_orthonormality_error(const SpectralData& s) {
  const Eigen::MatrixXd g = s.eigvecs.transpose() * s.eigvecs;
  return (g - Eigen::MatrixXd::Identity(s.n + 1, s.n + 1)).cwiseAbs().maxCoeff();
}

double eigenfunction_sup_scaled(const SpectralData& s) {
  return std::sqrt(static_cast<double>(s.n)) * s.eigvecs.cwiseAbs().maxCoeff();
}

KernelMatrix interval_kernel_spectral(const SpectralData& s, double t) {
  require(t >= 0.0, "kernel time must be >= 0");
  Eigen::VectorXd decay(s.n + 1);
  for (int k = 0; k <= s.n; ++k) decay(k) = std::exp(-t * s.lambdas[k]);
  KernelMatrix km;
  km.t = t;
  km.values = s.eigvecs * decay.asDiagonal() * s.eigvecs.transpose();
  return km;
}

// ---------------------------------------------------------------- images

long reflect_star(long x, int n) {
  const long nb = n + 1;
  const int k = image_block(x, n);
  return (k % 2 == 0) ? x - k * nb : (k + 1) * nb - x - 1;
}

long image_iota(long y, int k, int n) {
  const long nb = n + 1;
  return (k % 2 == 0) ? y + k * nb : (k + 1) * nb - y - 1;
}

int image_block(long x, int n) {
  const long nb = n + 1;
  return static_cast<int>(x >= 0 ? x / nb : -((-x - 1) / nb) - 1);
}

double ImageExpansion::E(int k, int j, int y) const {
  const long site = block_start(k) + j;
  const double c = coeff((k + depth) * (n + 1) + j, y);
  const double lead = (reflect_star(site, n) == y) ? I(k) : 0.0;
  return (c - lead) / epsilon;
}

ImageExpansion build_image_expansion(int n, double mu_a, double mu_b, int depth) {
  require(n >= 1 && depth >= 1, "image expansion needs N >= 1 and depth >= 1");
  const int nb = n + 1;
  ImageExpansion ex;
  ex.n = n;
  ex.mu_a = mu_a;
  ex.mu_b = mu_b;
  ex.epsilon = 1.0 / n;
  ex.depth = depth;
  ex.coeff = Eigen::MatrixXd::Zero((2 * depth + 1) * nb, nb);
  ex.coeff_i.assign(2 * depth + 1, 0.0);
  auto row = [&](long site) { return ex.coeff.row((image_block(site, n) + depth) * nb +
                                                  (site - ex.block_start(image_block(site, n)))); };
  for (int j = 0; j < nb; ++j) ex.coeff(depth * nb + j, j) = 1.0;
  ex.coeff_i[depth] = 1.0;

  // left: phi(x) = mu_A phi(-x-1) + (mu_A^2 - 1) S(x),  S(x-1) = mu_A S(x) + phi(-x-1)
  // right: phi(x) = mu_B phi(2nb-x-1) + (mu_B^2 - 1) R(x), R(x+1) = mu_B R(x) + phi(2nb-x-1)
  Eigen::RowVectorXd s_left = Eigen::RowVectorXd::Zero(nb);
  Eigen::RowVectorXd s_right = Eigen::RowVectorXd::Zero(nb);
  long next_left = -1, next_right = nb;
  for (int m = 0; m < depth; ++m) {
    for (int j = 0; j < nb; ++j, --next_left) {
      const long x = next_left;
      const Eigen::RowVectorXd mirror = row(-x - 1);
      row(x) = mu_a * mirror + (mu_a * mu_a - 1.0) * s_left;
      s_left = mu_a * s_left + mirror;
    }
    ex.coeff_i[depth - (m + 1)] = mu_a * ex.coeff_i[depth + m];
    for (int j = 0; j < nb; ++j, ++next_right) {
      const long x = next_right;
      const Eigen::RowVectorXd mirror = row(2L * nb - x - 1);
      row(x) = mu_b * mirror + (mu_b * mu_b - 1.0) * s_right;
      s_right = mu_b * s_right + mirror;
    }
    ex.coeff_i[depth + m + 1] = mu_b * ex.coeff_i[depth - m];
  }

  ex.c0 = 0.0;
  for (int k = -depth; k <= depth; ++k) {
    if (k == 0) continue;
    double emax = 0.0;
    for (int j = 0; j < nb; ++j) {
      for (int y = 0; y < nb; ++y) emax = std::max(emax, std::abs(ex.E(k, j, y)));
    }
    ex.c0 = std::max(ex.c0, std::pow(emax, 1.0 / std::abs(k)));
  }
  return ex;
}

double image_kernel_value(const ImageExpansion& ex, double t, long x, int y) {
  const int nb = ex.n + 1;
  const long lo = ex.block_start(-ex.depth), hi = ex.block_start(ex.depth + 1) - 1;
  const std::vector<double> p = free_walk_kernel_row(t, std::max(std::abs(x - lo), std::abs(x - hi)));
  double v = 0.0;
  for (long z = lo; z <= hi; ++z) {
    const int k = image_block(z, ex.n);
    const double c = ex.coeff((k + ex.depth) * nb + (z - ex.block_start(k)), y);
    v += p[static_cast<std::size_t>(std::abs(x - z))] * c;
  }
  return v;
}

ImageKernel interval_kernel_image(int n, double mu_a, double mu_b, double t, int depth) {
  require(t >= 0.0, "kernel time must be >= 0");
  const ImageExpansion ex = build_image_expansion(n, mu_a, mu_b, depth);
  const int nb = n + 1;
  const long lo = ex.block_start(-depth), hi = ex.block_start(depth + 1) - 1;
  const long span = hi - lo + 1;
  const long tail_to = span + static_cast<long>(std::ceil(20.0 * std::sqrt(t) + 60.0));
  const std::vector<double> p = free_walk_kernel_row(t, tail_to);

  ImageKernel out;
  out.kernel.t = t;
  out.kernel.values = Eigen::MatrixXd::Zero(nb, nb);
  for (int x = 0; x < nb; ++x) {
    for (long z = lo; z <= hi; ++z) {
      const int k = image_block(z, n);
      const auto r = ex.coeff.row((k + depth) * nb + (z - ex.block_start(k)));
      out.kernel.values.row(x) += p[static_cast<std::size_t>(std::abs(x - z))] * r;
    }
  }
  // free mass left outside the truncated image range, weighted by the outermost coefficients
  double outer = 0.0;
  for (int k : {-depth, depth}) {
    for (int j = 0; j < nb; ++j) {
      outer = std::max(outer, ex.coeff.row((k + depth) * nb + j).cwiseAbs().sum());
    }
  }
  double tail = 0.0;
  for (long m = depth * static_cast<long>(nb) - n; m <= tail_to; ++m) tail += p[m];
  out.tail_estimate = 2.0 * tail * std::max(1.0, outer) * std::max(1.0, ex.c0);
  out.truncation_ok = out.tail_estimate < 1e-14;
  return out;
}

// ---------------------------------------------------------------- continuous half line

namespace {

double erfcx(double u) {
  if (u < 26.0) return std::exp(u * u) * std::erfc(u);
  const double v = 1.0 / (u * u);
  return (1.0 - 0.5 * v * (1.0 - 1.5 * v * (1.0 - 2.5 * v * (1.0 - 3.5 * v)))) /
         (u * std::sqrt(std::numbers::pi));
}

double gauss(double T, double x) {
  return std::exp(-x * x / (2.0 * T)) / std::sqrt(2.0 * std::numbers::pi * T);
}

}  // namespace

double continuous_halfline_kernel(double T, double X, double Y, double A) {
  require(T > 0 && X >= 0 && Y >= 0 && A >= 0, "continuous kernel needs T > 0, X, Y, A >= 0");
  const double s = X + Y;
  double v = gauss(T, X - Y) + gauss(T, s);
  if (A > 0) {
    const double u = (s + A * T) / std::sqrt(2.0 * T);
    v -= A * erfcx(u) * std::exp(-s * s / (2.0 * T));
  }
  return v;
}

double continuous_halfline_kernel_quadrature(double T, double X, double Y, double A) {
  require(T > 0 && X >= 0 && Y >= 0 && A >= 0, "continuous kernel needs T > 0, X, Y, A >= 0");
  const double s = X + Y;
  double v = gauss(T, X - Y) + gauss(T, s);
  if (A > 0) {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double integral =
        integrator.integrate([&](double w) { return gauss(T, s + w) * std::exp(-A * w); });
    v -= 2.0 * A * integral;
  }
  return v;
}

// ---------------------------------------------------------------- elastic walk

void elastic_walk_propagate(Eigen::MatrixXd& u, double h, double mu_a, double mu_b) {
  require(h >= 0.0, "propagation time must be >= 0");
  const Eigen::Index n = u.rows() - 1;
  Eigen::MatrixXd v(u.rows(), u.cols()), w(u.rows(), u.cols());
  auto apply_p = [&](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
    if (n == 0) {
      out = 0.5 * (mu_a + mu_b) * in;
      return;
    }
    out.row(0) = 0.5 * mu_a * in.row(0) + 0.5 * in.row(1);
    out.middleRows(1, n - 1) = 0.5 * (in.topRows(n - 1) + in.bottomRows(n - 1));
    out.row(n) = 0.5 * in.row(n - 1) + 0.5 * mu_b * in.row(n);
  };
  while (h > 0.0) {
    const double step = std::min(h, 50.0);
    h -= step;
    double weight = std::exp(-step);
    v = u;
    Eigen::MatrixXd acc = weight * v;
    for (int k = 1;; ++k) {
      apply_p(v, w);
      v.swap(w);
      weight *= step / k;
      acc += weight * v;
      if (k > step && weight < 1e-18) break;
    }
    u = acc;
  }
}

}  // namespace asepkpz

#include "asepkpz/she_mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "asepkpz/errors.hpp"
#include "asepkpz/rng.hpp"

namespace asepkpz {

SheGrid SheGrid::interval(int m, double slope_a, double slope_b, double t_bar, double dt) {
  SheGrid g;
  g.geometry = Geometry::Interval;
  g.length = 1.0;
  g.m = m;
  g.slope_a = slope_a;
  g.slope_b = slope_b;
  g.t_bar = t_bar;
  g.dt = dt > 0.0 ? dt : 0.5 * g.dx() * g.dx();
  g.validate();
  return g;
}

SheGrid SheGrid::half_line(int m, double x_max, double slope_a, double t_bar, double dt) {
  SheGrid g;
  g.geometry = Geometry::HalfLine;
  g.length = x_max;
  g.m = m;
  g.slope_a = slope_a;
  g.slope_b = 0.0;
  g.t_bar = t_bar;
  g.dt = dt > 0.0 ? dt : 0.5 * g.dx() * g.dx();
  g.validate();
  return g;
}

std::vector<double> SheGrid::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(points()));
  for (int j = 0; j <= m; ++j) x[j] = j * dx();
  return x;
}

long SheGrid::steps_for(double T) const {
  require(T >= 0.0, "output time must be >= 0");
  const double r = T / dt;
  const long n = std::lround(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    std::ostringstream msg;
    msg << "output time " << T << " is not a multiple of dt = " << dt;
    throw PreconditionError(msg.str());
  }
  return n;
}

void SheGrid::validate() const {
  std::vector<std::string> bad;
  if (m < 8) bad.push_back("M >= 8");
  if (!(length > 0.0)) bad.push_back("length > 0");
  if (!(dt > 0.0) || dt > 0.5 * dx() * dx() * (1.0 + 1e-12)) bad.push_back("0 < dt <= dX^2/2");
  if (slope_a < 0.0 || slope_b < 0.0) bad.push_back("A, B >= 0");
  if (mu_a() <= 0.0 || mu_b() <= 0.0) bad.push_back("A dX < 1 and B dX < 1");
  if (!(t_bar > 0.0)) bad.push_back("T > 0");
  if (!bad.empty()) {
    std::string msg = "invalid SHE grid:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw PreconditionError(msg);
  }
}

ShePropagator::ShePropagator(const SheGrid& grid)
    : grid_(grid), spec_(solve_interval_spectrum(grid.m, grid.mu_a(), grid.mu_b())) {
  grid_.validate();
  step_ = interval_kernel_spectral(spec_, grid_.dt / (grid_.dx() * grid_.dx())).values;
}

Eigen::MatrixXd ShePropagator::at(double T) const {
  return interval_kernel_spectral(spec_, T / (grid_.dx() * grid_.dx())).values;
}

FieldPath sample_she(const Eigen::VectorXd& z0, const ShePropagator& prop, std::uint64_t seed,
                     const std::vector<double>& output_times, bool noise) {
  const SheGrid& g = prop.grid();
  require(z0.size() == g.points(), "initial profile does not match the grid");
  require((z0.array() > 0.0).all(), "initial profile must be positive");
  std::vector<long> stops;
  for (double T : output_times) stops.push_back(g.steps_for(T));
  require(std::is_sorted(stops.begin(), stops.end()), "output times must be ascending");

  FieldPath path;
  path.seed = seed;
  Rng rng(seed);
  const double sd = std::sqrt(g.noise_variance());
  Eigen::VectorXd z = z0, work(z0.size());
  long n = 0;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    for (; n < stops[i]; ++n) {
      if (noise) {
        for (Eigen::Index j = 0; j < z.size(); ++j) {
          const double xi = sd * rng.normal();
          if (1.0 + xi < 0.0) path.positivity_fault = true;
          work(j) = z(j) * (1.0 + xi);
        }
        if (path.positivity_fault) return path;
        z.noalias() = prop.step() * work;
      } else {
        work = z;
        z.noalias() = prop.step() * work;
      }
    }
    path.times.push_back(output_times[i]);
    path.values.push_back(z);
  }
  return path;
}

Eigen::VectorXd mean_field(const Eigen::VectorXd& z0, const ShePropagator& prop, double T) {
  require(T >= 0.0, "time must be >= 0");
  require(z0.size() == prop.grid().points(), "initial profile does not match the grid");
  if (T == 0.0) return z0;
  return prop.at(T) * z0;
}

SecondMoment second_moment(const Eigen::MatrixXd& m0, const ShePropagator& prop, double T,
                           int max_sweeps, double tol) {
  const SheGrid& g = prop.grid();
  const Eigen::Index p = g.points();
  require(m0.rows() == p && m0.cols() == p, "second moment matrix does not match the grid");
  require(g.m <= 128, "second moment limited to M <= 128");
  const long n = g.steps_for(T);
  const double s2 = g.noise_variance();

  SecondMoment out;
  if (n == 0) {
    out.m2 = m0;
    out.converged = true;
    return out;
  }
  // powers P^k and K_k = P^k o P^k (entrywise square), k = 1..n
  std::vector<Eigen::MatrixXd> pw(static_cast<std::size_t>(n) + 1);
  pw[0] = Eigen::MatrixXd::Identity(p, p);
  for (long k = 1; k <= n; ++k) pw[k] = prop.step() * pw[k - 1];

  // free diagonal f_k = diag(P^k m0 P^k), k = 0..n-1
  Eigen::MatrixXd free_diag(p, n);
  for (long k = 0; k < n; ++k) {
    free_diag.col(k) = (pw[k] * m0).cwiseProduct(pw[k]).rowwise().sum();
  }
  // d_k = f_k + s2 sum_{j<k} K_{k-j} d_j, solved by Picard sweeps
  Eigen::MatrixXd d = free_diag, next(p, n);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    next = free_diag;
    for (long lag = 1; lag < n; ++lag) {
      const Eigen::MatrixXd kk = pw[lag].cwiseAbs2();
      next.rightCols(n - lag).noalias() += s2 * kk * d.leftCols(n - lag);
    }
    out.last_change = (next - d).cwiseAbs().maxCoeff() / std::max(1.0, next.cwiseAbs().maxCoeff());
    d.swap(next);
    out.sweeps = sweep;
    if (out.last_change < tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    std::ostringstream msg;
    msg << "second moment did not converge in " << max_sweeps << " sweeps (change "
        << out.last_change << ")";
    throw NumericalError(msg.str());
  }
  out.m2 = pw[n] * m0 * pw[n].transpose();
  for (long j = 0; j < n; ++j) {
    const Eigen::MatrixXd& q = pw[n - j];
    out.m2.noalias() += s2 * q * d.col(j).asDiagonal() * q.transpose();
  }
  out.m2 = 0.5 * (out.m2 + out.m2.transpose()).eval();
  return out;
}

// ---------------------------------------------------------------- initial data

Eigen::VectorXd brownian_exponential(const SheGrid& g, Rng& rng) {
  Eigen::VectorXd z(g.points());
  const double sd = std::sqrt(g.dx());
  double b = 0.0;
  z(0) = 1.0;
  for (int j = 1; j <= g.m; ++j) {
    b += sd * rng.normal();
    z(j) = std::exp(b);
  }
  return z;
}

Eigen::VectorXd brownian_exponential_mean(const SheGrid& g) {
  Eigen::VectorXd z(g.points());
  for (int j = 0; j <= g.m; ++j) z(j) = std::exp(0.5 * j * g.dx());
  return z;
}

Eigen::MatrixXd brownian_exponential_second_moment(const SheGrid& g) {
  Eigen::MatrixXd m(g.points(), g.points());
  for (int i = 0; i <= g.m; ++i) {
    for (int j = 0; j <= g.m; ++j) {
      const double x = i * g.dx(), y = j * g.dx();
      m(i, j) = std::exp(0.5 * (x + y + 2.0 * std::min(x, y)));
    }
  }
  return m;
}

// ---------------------------------------------------------------- test functions

double robin_root(int k, double a, double b) {
  require(k >= 0, "root index must be >= 0");
  require(a >= 0.0 && b >= 0.0, "slopes must be >= 0");
  if (a == 0.0 && b == 0.0) return k * std::numbers::pi;
  // g(w) = f(w) / w, positive at 0+
  auto g = [&](double w) { return (a * b - w * w) * std::sin(w) / w + (a + b) * std::cos(w); };
  const double h = std::numbers::pi / 256.0;
  int found = -1;
  double lo = 1e-9, glo = g(lo);
  for (double w = h;; w += h) {
    const double gw = g(w);
    if ((gw > 0) != (glo > 0)) {
      if (++found == k) {
        double l = lo, r = w, gl = glo;
        for (int it = 0; it < 200 && r - l > 1e-15 * r; ++it) {
          const double mid = 0.5 * (l + r);
          const double gm = g(mid);
          if ((gm > 0) == (gl > 0)) {
            l = mid;
            gl = gm;
          } else {
            r = mid;
          }
        }
        return 0.5 * (l + r);
      }
    }
    lo = w;
    glo = gw;
    if (w > (k + 4) * std::numbers::pi) throw NumericalError("Robin root search failed");
  }
}

TestFunction interval_test_function(int k, double a, double b) {
  TestFunction t;
  std::ostringstream name;
  name << "robin_k" << k;
  t.name = name.str();
  if (a == 0.0 && b == 0.0) {
    const double w = k * std::numbers::pi;
    t.f = [w](double x) { return std::cos(w * x); };
    return t;
  }
  const double w = robin_root(k, a, b);
  const double scale = 1.0 / std::hypot(w, a);
  t.f = [w, a, scale](double x) { return scale * (w * std::cos(w * x) + a * std::sin(w * x)); };
  return t;
}

TestFunction halfline_test_function(double a, double r1, double r2) {
  require(a >= 0.0 && r1 > 0.0 && r2 > r1, "half-line test function needs 0 < r1 < r2");
  auto s = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  TestFunction t;
  t.name = "halfline_cutoff";
  t.f = [=](double x) {
    double cut;
    if (x <= r1) cut = 1.0;
    else if (x >= r2) cut = 0.0;
    else {
      const double u = (r2 - x) / (r2 - r1);
      cut = s(u) / (s(u) + s(1.0 - u));
    }
    return (1.0 + a * x) * cut;
  };
  return t;
}

}  // namespace asepkpz

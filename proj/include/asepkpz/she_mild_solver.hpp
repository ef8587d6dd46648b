#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asepkpz/model_params.hpp"
#include "asepkpz/robin_kernel.hpp"

namespace asepkpz {

class Rng;

// Nodes X_j = j dX, j = 0..M, on [0, length]. Robin slope A at 0; B at the right end on the
// interval, Neumann at the artificial right edge of the half line.
struct SheGrid {
  Geometry geometry = Geometry::Interval;
  double length = 1.0;
  int m = 64;
  double dt = 0.0;
  double slope_a = 0.0, slope_b = 0.0;
  double t_bar = 1.0;

  // dt <= 0 picks dX^2 / 2
  static SheGrid interval(int m, double slope_a, double slope_b, double t_bar, double dt = 0.0);
  static SheGrid half_line(int m, double x_max, double slope_a, double t_bar, double dt = 0.0);

  double dx() const { return length / m; }
  int points() const { return m + 1; }
  double mu_a() const { return 1.0 - slope_a * dx(); }
  double mu_b() const { return geometry == Geometry::Interval ? 1.0 - slope_b * dx() : 1.0; }
  double noise_variance() const { return dt / dx(); }
  std::vector<double> nodes() const;
  // Step count for time T; throws unless T is a multiple of dt.
  long steps_for(double T) const;
  void validate() const;
};

// Discrete Robin propagator on the grid: the lattice kernel at time T / dX^2.
class ShePropagator {
 public:
  explicit ShePropagator(const SheGrid& grid);
  const SheGrid& grid() const { return grid_; }
  const SpectralData& spectrum() const { return spec_; }
  const Eigen::MatrixXd& step() const { return step_; }
  Eigen::MatrixXd at(double T) const;

 private:
  SheGrid grid_;
  SpectralData spec_;
  Eigen::MatrixXd step_;
};

struct FieldPath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  std::uint64_t seed = 0;
  bool positivity_fault = false;  // some 1 + xi < 0; the path stops there
};

// Z_{n+1} = P_dt (Z_n + Z_n xi_n), xi_n ~ N(0, dt / dX) per node. noise = false gives the mean.
FieldPath sample_she(const Eigen::VectorXd& z0, const ShePropagator& prop, std::uint64_t seed,
                     const std::vector<double>& output_times, bool noise = true);

Eigen::VectorXd mean_field(const Eigen::VectorXd& z0, const ShePropagator& prop, double T);

struct SecondMoment {
  Eigen::MatrixXd m2;
  int sweeps = 0;
  double last_change = 0.0;
  bool converged = false;
};

// Duhamel fixed point for E[Z_T Z_T^T] given E[Z_0 Z_0^T], Picard sweeps on the diagonal.
SecondMoment second_moment(const Eigen::MatrixXd& m0, const ShePropagator& prop, double T,
                           int max_sweeps = 50, double tol = 1e-8);

// ---- initial data ----

// exp(B(X_j)) for a Brownian path with B(0) = 0.
Eigen::VectorXd brownian_exponential(const SheGrid& grid, Rng& rng);
// Moments of exp(B): E = exp(X/2), E[ZZ^T] = exp((X + X' + 2 min(X, X'))/2).
Eigen::VectorXd brownian_exponential_mean(const SheGrid& grid);
Eigen::MatrixXd brownian_exponential_second_moment(const SheGrid& grid);

// ---- test functions ----

struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  double operator()(double x) const { return f(x); }
};

// k-th positive root (k = 0, 1, ...) of (AB - w^2) sin w + (A + B) w cos w on the interval,
// phi = w cos(wX) + A sin(wX). A = B = 0 gives cos(k pi X).
TestFunction interval_test_function(int k, double slope_a, double slope_b);
// (1 + A X) times a smooth cutoff equal to 1 on [0, r1] and 0 beyond r2.
TestFunction halfline_test_function(double slope_a, double r1, double r2);
double robin_root(int k, double slope_a, double slope_b);

}  // namespace asepkpz

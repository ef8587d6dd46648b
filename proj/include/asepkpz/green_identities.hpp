#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "asepkpz/robin_kernel.hpp"

namespace asepkpz {

struct GreenMatrix {
  int n = 0;
  double mu_a = 1.0, mu_b = 1.0;
  Eigen::MatrixXd values;  // G(x, y), x, y = 0..N
};

// Dense solve of (-1/2 Delta) G = I. Throws NumericalError when mu_A = mu_B = 1.
GreenMatrix green_matrix(int n, double mu_a, double mu_b);
// max |(-1/2 Delta) G - I|
double green_residual(const GreenMatrix& g);

// G(0,0) in closed form; the half-line corner is 2 / (1 - mu_A).
double green_corner_closed_form(int n, double mu_a, double mu_b);
double green_corner_halfline(double mu_a);

struct FMatrix {
  Eigen::MatrixXd values;      // spectral sum, x, xbar = 0..N-1
  Eigen::MatrixXd from_green;  // second difference of G
  double route_gap = 0.0;      // max |values - from_green|
  double c = 0.0;              // minus the off-diagonal value
  double diag_spread = 0.0;    // max |F(x,x) - F(0,0)|
  double offdiag_spread = 0.0;
  double diag_minus_off = 0.0;
};

FMatrix f_matrix(const SpectralData& spec);

// max |nabla+_x F(x, y) - (1{x+1=y} - 1{x=y})|
double f_gradient_structure_error(const FMatrix& f);

// c = ab / (a + b + N ab), a = 1 - mu_A, b = 1 - mu_B
double key_identity_c_closed_form(int n, double mu_a, double mu_b);

struct KeyIdentityResult {
  std::string route;
  long x = 0, xbar = 0;
  double value = 0.0;
  double expected = 0.0;
  double abs_err = 0.0;
  double t_cut = 0.0;
  double tail_bound = 0.0;
  double quad_error = 0.0;  // |GL20 - GL30| over the panels
};

// Spectral closed form; Neumann-Neumann drops the constant mode.
KeyIdentityResult key_identity_spectral(const SpectralData& spec, int x, int xbar);

// Time quadrature on [0, t_cut] of the elastic-walk kernel plus a spectral tail bound.
// t_cut <= 0 picks the smallest dyadic cutoff with tail bound < 1e-11.
std::vector<KeyIdentityResult> key_identity_quadrature(int n, double mu_a, double mu_b,
                                                       const std::vector<std::pair<int, int>>& pairs,
                                                       double t_cut = 0.0);

// Half line: panels on [0, t_cut], the tail by t = t_cut / u^2. Expected 1{x = xbar}.
KeyIdentityResult key_identity_halfline(double mu_a, long x, long xbar, double t_cut = 2000.0);

struct CStarReport {
  std::vector<long> xs;
  std::vector<double> values;
  double max_value = 0.0;
  long argmax = 0;
};

// sum_y int_0^{T / eps^2} |grad+ p grad- p| e^{a eps |x-y|} dt over bulk x, y in 1..N-1.
CStarReport c_star_interval(int n, double mu_a, double mu_b, double t_bar, double a,
                            const std::vector<long>& xs);
// Weighted form with (s - t)^{-1/2}, s = S / eps^2.
CStarReport c_star_weighted_interval(int n, double mu_a, double mu_b, double s_bar, double a,
                                     const std::vector<long>& xs);
// Half line with eps from mu_A = 1 - eps A; y >= 1.
CStarReport c_star_halfline(double epsilon, double mu_a, double t_bar, double a,
                            const std::vector<long>& xs);

struct SummationByPartsReport {
  double max_residual_0 = 0.0;
  double max_residual_1 = 0.0;
  double max_residual_2 = 0.0;
  int trials = 0;
  bool pass(double tol = 1e-12) const {
    return max_residual_0 <= tol && max_residual_1 <= tol && max_residual_2 <= tol;
  }
};

// Random pairs (u, v) on {-1..N+1}; relative residuals of the three identities.
SummationByPartsReport summation_by_parts_audit(int n, std::uint64_t seed = 7, int trials = 100);

}  // namespace asepkpz

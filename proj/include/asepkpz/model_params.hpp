#pragma once

#include <string>
#include <vector>

namespace asepkpz {

enum class Geometry { Interval, HalfLine };

struct ScalingParams {
  Geometry geometry = Geometry::Interval;
  double epsilon = 0.0;
  int n_sites = 0;
  double slope_a = 0.0;
  double slope_b = 0.0;  // ignored on the half line

  // epsilon = 1/n exactly
  static ScalingParams interval(int n, double a, double b);
  static ScalingParams half_line(double epsilon, double a);

  double mu_a() const { return 1.0 - epsilon * slope_a; }
  double mu_b() const { return geometry == Geometry::Interval ? 1.0 - epsilon * slope_b : 1.0; }
};

struct ModelParams {
  double p = 0.5, q = 0.5;
  double alpha = 0.25, beta = 0.25, gamma = 0.25, delta = 0.25;
  double mu_a = 1.0, mu_b = 1.0;
  double lambda = 0.0;  // 1/2 log(q/p)
  double nu = 0.0;      // p + q - 2 sqrt(pq)
  double epsilon = 0.0; // 0 when built from raw rates
  bool in_scaling_class = true;  // mu_a, mu_b <= 1
};

// Four boundary rates from (p, q, mu_A, mu_B). mu may exceed 1 up to sqrt(p/q).
ModelParams make_params(double p, double q, double mu_a, double mu_b);

ModelParams build_params(const ScalingParams& scaling);

// Weak scaling at free epsilon with both reservoirs (audits and small-system oracles).
ModelParams build_params_free(double epsilon, double slope_a, double slope_b);

enum class Phase { LowDensity, HighDensity, MaximalCurrent, Boundary };
std::string to_string(Phase phase);

struct PhaseDiagnostics {
  double a_par = 0.0, b_par = 0.0;
  double rho_a = 0.0, rho_b = 0.0;
  double current = 0.0;
  Phase phase = Phase::Boundary;
};

PhaseDiagnostics phase_point(const ModelParams& params);

// mu_A placing (p, q, mu_B) on the line rho_A = rho_B.
double equal_density_mu_a(double p, double q, double mu_b);

struct ExpansionRow {
  std::string quantity;
  double epsilon = 0.0;
  double exact = 0.0;
  double expansion = 0.0;
  double residual = 0.0;
  double order = 0.0;  // remainder claimed O(epsilon^order)
  double ratio = 0.0;  // residual / epsilon^order
};

std::vector<ExpansionRow> expansion_audit(const std::vector<double>& eps_grid, double slope_a,
                                          double slope_b);

// Max ratio per quantity; the acceptance constant is twice this.
struct ExpansionBound {
  std::string quantity;
  double max_ratio = 0.0;
};
std::vector<ExpansionBound> expansion_bounds(const std::vector<ExpansionRow>& rows);

}  // namespace asepkpz

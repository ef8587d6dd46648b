#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace asepkpz {

// ---- free walk on Z (rate 1/2 to each side) ----

// p_t(x) = e^{-t} I_|x|(t)
double free_walk_kernel(double t, long x);

// p_t(0..max_abs_x), one backward-recurrence sweep (or asymptotics for large t).
std::vector<double> free_walk_kernel_row(double t, long max_abs_x);

// ---- half line {0, 1, ...}, ghost Z(-1) = mu Z(0) ----

// Image formula; x may be -1 (ghost row).
double halfline_robin_kernel(double t, long x, long y, double mu_a);

// Row x of the kernel over y = 0..y_max.
std::vector<double> halfline_robin_row(double t, long x, long y_max, double mu_a);

// ---- interval {0..N} ----

struct SpectralData {
  int n = 0;
  double mu_a = 1.0, mu_b = 1.0;
  std::vector<double> omegas;
  std::vector<double> lambdas;  // 1 - cos(omega_k)
  Eigen::MatrixXd eigvecs;      // column k is psi_k on x = 0..N

  double lambda_min() const { return lambdas.front(); }
};

SpectralData solve_interval_spectrum(int n, double mu_a, double mu_b);

// -1/2 Delta with Robin ghost rows, as an (N+1) x (N+1) matrix.
Eigen::MatrixXd robin_laplacian(int n, double mu_a, double mu_b);

// max_k ||(-1/2 Delta) psi_k - lambda_k psi_k||_inf
double spectrum_residual(const SpectralData& spec);
double spectrum_orthonormality_error(const SpectralData& spec);
// sup_{k,x} sqrt(N) |psi_k(x)|
double eigenfunction_sup_scaled(const SpectralData& spec);

struct KernelMatrix {
  double t = 0.0;
  Eigen::MatrixXd values;
};

KernelMatrix interval_kernel_spectral(const SpectralData& spec, double t);

// Generalized images: the Robin-extended initial datum as a linear map of the base values.
struct ImageExpansion {
  int n = 0;
  double mu_a = 1.0, mu_b = 1.0;
  double epsilon = 0.0;  // 1/N
  int depth = 0;
  std::vector<double> coeff_i;  // I_k at index k + depth
  // coefficient rows: coeff[(k + depth) * (N+1) + j] is the row for site k(N+1) + j
  Eigen::MatrixXd coeff;
  double c0 = 0.0;              // max_k (max |E_k|)^{1/|k|}

  long block_start(int k) const { return static_cast<long>(k) * (n + 1); }
  double I(int k) const { return coeff_i[static_cast<std::size_t>(k + depth)]; }
  // E_k(site, y) from the coefficient row
  double E(int k, int j, int y) const;
};

long reflect_star(long x, int n);            // x -> x* in {0..N}
long image_iota(long y, int k, int n);       // iota(y; k)
int image_block(long x, int n);              // block index k of a site

ImageExpansion build_image_expansion(int n, double mu_a, double mu_b, int depth);

struct ImageKernel {
  KernelMatrix kernel;
  double tail_estimate = 0.0;
  bool truncation_ok = true;
};

ImageKernel interval_kernel_image(int n, double mu_a, double mu_b, double t, int depth = 6);

// Kernel value at an arbitrary lattice point x (ghost rows included) from the image sum.
double image_kernel_value(const ImageExpansion& ex, double t, long x, int y);

// ---- continuous half line ----

double continuous_halfline_kernel(double T, double X, double Y, double A);
double continuous_halfline_kernel_quadrature(double T, double X, double Y, double A);

// ---- elastic-walk propagation (Poisson mixture of the elastic walk) ----

// u <- p_h u on {0..N} with the Robin walk, h >= 0.
void elastic_walk_propagate(Eigen::MatrixXd& u, double h, double mu_a, double mu_b);

// ---- bound audits ----

struct BoundAuditEntry {
  std::string name;
  std::string geometry;
  double constant = 0.0;          // max ratio on the base grid
  double constant_refined = 0.0;  // max ratio on the doubled grid
  bool stable = false;            // finite and refined <= 2 * base
};

struct BoundAuditReport {
  std::vector<BoundAuditEntry> entries;
  bool all_stable() const;
};

BoundAuditReport kernel_bound_audit(double epsilon, double slope_a, double slope_b, double t_bar);

}  // namespace asepkpz

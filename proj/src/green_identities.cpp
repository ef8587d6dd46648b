#include "asepkpz/green_identities.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "asepkpz/errors.hpp"
#include "asepkpz/rng.hpp"
#include "quadrature.hpp"

namespace asepkpz {

// ---------------------------------------------------------------- Green's function

GreenMatrix green_matrix(int n, double mu_a, double mu_b) {
  require(n >= 1, "interval needs N >= 1");
  if (mu_a == 1.0 && mu_b == 1.0) {
    throw NumericalError("Robin Laplacian is singular for mu_A = mu_B = 1 (Neumann-Neumann)");
  }
  GreenMatrix g;
  g.n = n;
  g.mu_a = mu_a;
  g.mu_b = mu_b;
  const Eigen::MatrixXd m = robin_laplacian(n, mu_a, mu_b);
  g.values = m.partialPivLu().solve(Eigen::MatrixXd::Identity(n + 1, n + 1));
  g.values = 0.5 * (g.values + g.values.transpose()).eval();
  return g;
}

double green_residual(const GreenMatrix& g) {
  const Eigen::MatrixXd m = robin_laplacian(g.n, g.mu_a, g.mu_b);
  return (m * g.values - Eigen::MatrixXd::Identity(g.n + 1, g.n + 1)).cwiseAbs().maxCoeff();
}

double green_corner_closed_form(int n, double mu_a, double mu_b) {
  require(n >= 1, "interval needs N >= 1");
  const double nn = n;
  const double den = nn + 2.0 - (nn + 1.0) * (mu_a + mu_b) + nn * mu_a * mu_b;
  if (den == 0.0) throw NumericalError("Green corner: zero denominator (Neumann-Neumann)");
  return 2.0 * (nn + 1.0 - nn * mu_b) / den;
}

double green_corner_halfline(double mu_a) {
  if (mu_a >= 1.0) throw NumericalError("half-line Green corner needs mu_A < 1");
  return 2.0 / (1.0 - mu_a);
}

// ---------------------------------------------------------------- F matrix

namespace {

bool is_neumann(const SpectralData& s) { return s.mu_a == 1.0 && s.mu_b == 1.0; }

// gradient of each eigenvector: row x = psi(x+1) - psi(x), x = 0..N-1
Eigen::MatrixXd eig_gradients(const SpectralData& s) {
  return s.eigvecs.bottomRows(s.n) - s.eigvecs.topRows(s.n);
}

}  // namespace

FMatrix f_matrix(const SpectralData& s) {
  require(!is_neumann(s) && s.lambdas.front() > 1e-14,
          "F matrix needs lambda_0 > 0 (Neumann-Neumann rejected)");
  FMatrix f;
  const Eigen::MatrixXd grad = eig_gradients(s);
  Eigen::VectorXd inv(s.n + 1);
  for (int k = 0; k <= s.n; ++k) inv(k) = 0.5 / s.lambdas[k];
  f.values = grad * inv.asDiagonal() * grad.transpose();

  const GreenMatrix g = green_matrix(s.n, s.mu_a, s.mu_b);
  const Eigen::MatrixXd& G = g.values;
  const int n = s.n;
  f.from_green = 0.5 * (G.topLeftCorner(n, n) + G.bottomRightCorner(n, n) - G.bottomLeftCorner(n, n) -
                        G.topRightCorner(n, n));
  f.route_gap = (f.values - f.from_green).cwiseAbs().maxCoeff();

  const double d0 = f.values(0, 0);
  const double o0 = n > 1 ? f.values(0, 1) : 0.0;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) f.diag_spread = std::max(f.diag_spread, std::abs(f.values(x, y) - d0));
      else f.offdiag_spread = std::max(f.offdiag_spread, std::abs(f.values(x, y) - o0));
    }
  }
  // N = 1 has no off-diagonal entry; c = 1 - F(0,0) there
  f.c = n > 1 ? -o0 : 1.0 - d0;
  f.diag_minus_off = n > 1 ? d0 - o0 : 1.0;
  return f;
}

double f_gradient_structure_error(const FMatrix& f) {
  const Eigen::Index n = f.values.rows();
  double worst = 0.0;
  for (Eigen::Index x = 0; x + 1 < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      const double expect = (x + 1 == y ? 1.0 : 0.0) - (x == y ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(f.values(x + 1, y) - f.values(x, y) - expect));
    }
  }
  return worst;
}

double key_identity_c_closed_form(int n, double mu_a, double mu_b) {
  const double a = 1.0 - mu_a, b = 1.0 - mu_b;
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b / (a + b + n * a * b);
}

// ---------------------------------------------------------------- key identity

KeyIdentityResult key_identity_spectral(const SpectralData& s, int x, int xbar) {
  require(x >= 0 && x < s.n && xbar >= 0 && xbar < s.n, "key identity needs 0 <= x, xbar <= N-1");
  const Eigen::MatrixXd grad = eig_gradients(s);
  KeyIdentityResult r;
  r.route = "spectral";
  r.x = x;
  r.xbar = xbar;
  const bool neumann = is_neumann(s);
  for (int k = 0; k <= s.n; ++k) {
    if (neumann && k == 0) continue;  // constant mode, zero gradient
    r.value += grad(x, k) * grad(xbar, k) / (2.0 * s.lambdas[k]);
  }
  const double c = key_identity_c_closed_form(s.n, s.mu_a, s.mu_b);
  r.expected = (x == xbar ? 1.0 : 0.0) - c;
  r.abs_err = std::abs(r.value - r.expected);
  return r;
}

std::vector<KeyIdentityResult> key_identity_quadrature(int n, double mu_a, double mu_b,
                                                       const std::vector<std::pair<int, int>>& pairs,
                                                       double t_cut) {
  require(!pairs.empty(), "no (x, xbar) pairs");
  for (auto [x, xb] : pairs) {
    require(x >= 0 && x < n && xb >= 0 && xb < n, "key identity needs 0 <= x, xbar <= N-1");
  }
  // tail bound from the spectrum
  const SpectralData s = solve_interval_spectrum(n, mu_a, mu_b);
  const Eigen::MatrixXd grad = eig_gradients(s);
  const int k0 = is_neumann(s) ? 1 : 0;
  const double lam_min = s.lambdas[k0];
  require(lam_min > 0.0, "key identity quadrature needs a positive spectral gap");
  auto tail_for = [&](int x, int xb, double T) {
    double acc = 0.0;
    for (int k = k0; k <= n; ++k) acc += std::abs(grad(x, k) * grad(xb, k));
    return acc * std::exp(-2.0 * lam_min * T) / (2.0 * lam_min);
  };
  if (t_cut <= 0.0) {
    t_cut = 1.0;
    for (;;) {
      double worst = 0.0;
      for (auto [x, xb] : pairs) worst = std::max(worst, tail_for(x, xb, t_cut));
      if (worst < 1e-11) break;
      t_cut *= 2.0;
    }
  }

  const std::vector<double> edges = detail::dyadic_edges(1.0, t_cut);
  const auto lo = detail::panel_nodes(detail::gauss_legendre<20>(), edges);
  const auto hi = detail::panel_nodes(detail::gauss_legendre<30>(), edges);
  struct Tagged {
    double t, w;
    int panel;
    bool high;
  };
  std::vector<Tagged> nodes;
  for (const auto& nd : lo) nodes.push_back({nd.t, nd.w, nd.panel, false});
  for (const auto& nd : hi) nodes.push_back({nd.t, nd.w, nd.panel, true});
  std::sort(nodes.begin(), nodes.end(), [](const Tagged& a, const Tagged& b) { return a.t < b.t; });

  const Eigen::Index m = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n + 1, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    u(pairs[j].second + 1, j) = 1.0;
    u(pairs[j].second, j) = -1.0;
  }
  const std::size_t panels = edges.size() - 1;
  std::vector<std::vector<double>> sum_lo(m, std::vector<double>(panels, 0.0)), sum_hi = sum_lo;
  double now = 0.0;  // kernel time of u (= 2t)
  for (const Tagged& nd : nodes) {
    elastic_walk_propagate(u, 2.0 * nd.t - now, mu_a, mu_b);
    now = 2.0 * nd.t;
    for (Eigen::Index j = 0; j < m; ++j) {
      const int x = pairs[j].first;
      const double f = u(x + 1, j) - u(x, j);
      (nd.high ? sum_hi : sum_lo)[j][nd.panel] += nd.w * f;
    }
  }

  const double c = key_identity_c_closed_form(n, mu_a, mu_b);
  std::vector<KeyIdentityResult> out;
  for (Eigen::Index j = 0; j < m; ++j) {
    KeyIdentityResult r;
    r.route = "quadrature";
    r.x = pairs[j].first;
    r.xbar = pairs[j].second;
    for (std::size_t p = 0; p < panels; ++p) {
      r.value += sum_hi[j][p];
      r.quad_error += std::abs(sum_hi[j][p] - sum_lo[j][p]);
    }
    r.t_cut = t_cut;
    r.tail_bound = tail_for(r.x, r.xbar, t_cut);
    r.expected = (r.x == r.xbar ? 1.0 : 0.0) - c;
    r.abs_err = std::abs(r.value - r.expected);
    out.push_back(r);
  }
  return out;
}

KeyIdentityResult key_identity_halfline(double mu_a, long x, long xbar, double t_cut) {
  require(x >= 0 && xbar >= 0, "half-line key identity needs x, xbar >= 0");
  require(mu_a > 0.0 && mu_a <= 1.0, "mu_A outside (0, 1]");
  require(t_cut > 1.0, "t_cut must exceed 1");
  // sum_y grad p_t(x, y) grad p_t(xbar, y) = second difference of p_{2t}
  auto integrand = [&](double t) {
    const auto r0 = halfline_robin_row(2.0 * t, x, xbar + 1, mu_a);
    const auto r1 = halfline_robin_row(2.0 * t, x + 1, xbar + 1, mu_a);
    return r1[xbar + 1] - r1[xbar] - r0[xbar + 1] + r0[xbar];
  };
  KeyIdentityResult r;
  r.route = "halfline_quadrature";
  r.x = x;
  r.xbar = xbar;
  r.t_cut = t_cut;
  const auto g20 = detail::gauss_legendre<20>();
  const auto g30 = detail::gauss_legendre<30>();
  auto run = [&](const detail::Rule& rule) {
    double head = 0.0;
    for (const auto& nd : detail::panel_nodes(rule, detail::dyadic_edges(1.0, t_cut))) {
      head += nd.w * integrand(nd.t);
    }
    // int_{t_cut}^inf f dt = int_0^1 f(t_cut / u^2) 2 t_cut / u^3 du
    double tail = 0.0;
    for (const auto& nd : detail::panel_nodes(rule, {0.0, 0.25, 0.5, 0.75, 1.0})) {
      const double u = nd.t;
      tail += nd.w * integrand(t_cut / (u * u)) * 2.0 * t_cut / (u * u * u);
    }
    return std::pair{head, tail};
  };
  const auto [h20, t20] = run(g20);
  const auto [h30, t30] = run(g30);
  r.value = h30 + t30;
  r.quad_error = std::abs(h30 - h20) + std::abs(t30 - t20);
  r.tail_bound = std::abs(t30);
  r.expected = x == xbar ? 1.0 : 0.0;
  r.abs_err = std::abs(r.value - r.expected);
  return r;
}

// ---------------------------------------------------------------- c-star

namespace {

// |grad+ p grad- p| summed over y in [y_lo, y_hi] with weight e^{a eps |x - y|}
double cstar_sum(const double* pm, const double* p0, const double* pp, long x, long y_lo, long y_hi,
                 double a_eps) {
  double acc = 0.0;
  for (long y = y_lo; y <= y_hi; ++y) {
    const double gp = pp[y] - p0[y];
    const double gm = pm[y] - p0[y];
    acc += std::abs(gp * gm) * std::exp(a_eps * std::abs(x - y));
  }
  return acc;
}

// f(t) for every requested x at time t from the interval spectral kernel
std::vector<double> cstar_interval_at(const SpectralData& s, double t, const std::vector<long>& xs,
                                      double a_eps) {
  const Eigen::MatrixXd k = interval_kernel_spectral(s, t).values;  // symmetric: row x = column x
  std::vector<double> out;
  for (long x : xs) {
    out.push_back(cstar_sum(k.col(x - 1).data(), k.col(x).data(), k.col(x + 1).data(), x, 1, s.n - 1,
                            a_eps));
  }
  return out;
}

CStarReport finish(const std::vector<long>& xs, std::vector<double> vals) {
  CStarReport r;
  r.xs = xs;
  r.values = std::move(vals);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (r.values[i] > r.max_value) {
      r.max_value = r.values[i];
      r.argmax = xs[i];
    }
  }
  return r;
}

}  // namespace

// |grad p grad p| has kinks where a factor changes sign; finer panels keep GL accurate there
constexpr int kCStarSplit = 8;

CStarReport c_star_interval(int n, double mu_a, double mu_b, double t_bar, double a,
                            const std::vector<long>& xs) {
  require(n >= 2 && t_bar > 0.0, "c-star needs N >= 2 and T > 0");
  for (long x : xs) require(x >= 1 && x <= n - 1, "c-star x must be in the bulk 1..N-1");
  const SpectralData s = solve_interval_spectrum(n, mu_a, mu_b);
  const double eps = 1.0 / n;
  const double t_end = t_bar / (eps * eps);
  std::vector<double> acc(xs.size(), 0.0);
  for (const auto& nd : detail::panel_nodes(detail::gauss_legendre<20>(), detail::subdivide(detail::dyadic_edges(0.25, t_end), kCStarSplit))) {
    const auto f = cstar_interval_at(s, nd.t, xs, a * eps);
    for (std::size_t i = 0; i < xs.size(); ++i) acc[i] += nd.w * f[i];
  }
  return finish(xs, acc);
}

CStarReport c_star_weighted_interval(int n, double mu_a, double mu_b, double s_bar, double a,
                                     const std::vector<long>& xs) {
  require(n >= 2 && s_bar > 0.0, "weighted c-star needs N >= 2 and S > 0");
  for (long x : xs) require(x >= 1 && x <= n - 1, "c-star x must be in the bulk 1..N-1");
  const SpectralData s = solve_interval_spectrum(n, mu_a, mu_b);
  const double eps = 1.0 / n;
  const double big_s = s_bar / (eps * eps);
  const auto rule = detail::gauss_legendre<20>();
  std::vector<double> acc(xs.size(), 0.0);
  // [0, s/2]: weight (s - t)^{-1/2} is smooth
  for (const auto& nd : detail::panel_nodes(rule, detail::subdivide(detail::dyadic_edges(0.25, 0.5 * big_s), kCStarSplit))) {
    const auto f = cstar_interval_at(s, nd.t, xs, a * eps);
    for (std::size_t i = 0; i < xs.size(); ++i) acc[i] += nd.w * f[i] / std::sqrt(big_s - nd.t);
  }
  // [s/2, s]: t = s - w^2, dt (s - t)^{-1/2} = 2 dw
  const double w_end = std::sqrt(0.5 * big_s);
  std::vector<double> w_edges;
  for (int k = 0; k <= 8; ++k) w_edges.push_back(w_end * k / 8.0);
  for (const auto& nd : detail::panel_nodes(rule, w_edges)) {
    const auto f = cstar_interval_at(s, big_s - nd.t * nd.t, xs, a * eps);
    for (std::size_t i = 0; i < xs.size(); ++i) acc[i] += nd.w * 2.0 * f[i];
  }
  return finish(xs, acc);
}

CStarReport c_star_halfline(double epsilon, double mu_a, double t_bar, double a,
                            const std::vector<long>& xs) {
  require(epsilon > 0.0 && t_bar > 0.0, "c-star needs eps > 0 and T > 0");
  for (long x : xs) require(x >= 1, "half-line c-star needs x >= 1");
  const double t_end = t_bar / (epsilon * epsilon);
  std::vector<double> acc(xs.size(), 0.0);
  for (const auto& nd : detail::panel_nodes(detail::gauss_legendre<20>(), detail::subdivide(detail::dyadic_edges(0.25, t_end), kCStarSplit))) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const long x = xs[i];
      const long y_hi = x + static_cast<long>(std::ceil(12.0 * std::sqrt(nd.t) + 40.0));
      const auto pm = halfline_robin_row(nd.t, x - 1, y_hi + 1, mu_a);
      const auto p0 = halfline_robin_row(nd.t, x, y_hi + 1, mu_a);
      const auto pp = halfline_robin_row(nd.t, x + 1, y_hi + 1, mu_a);
      acc[i] += nd.w * cstar_sum(pm.data(), p0.data(), pp.data(), x, 1, y_hi, a * epsilon);
    }
  }
  return finish(xs, acc);
}

// ---------------------------------------------------------------- summation by parts

SummationByPartsReport summation_by_parts_audit(int n, std::uint64_t seed, int trials) {
  require(n >= 1 && trials >= 1, "summation by parts needs N >= 1");
  Rng rng(seed);
  SummationByPartsReport rep;
  rep.trials = trials;
  // index i holds site i - 1
  auto at = [](const std::vector<double>& f, long x) { return f[static_cast<std::size_t>(x + 1)]; };
  auto lap = [&](const std::vector<double>& f, long x) { return at(f, x - 1) - 2.0 * at(f, x) + at(f, x + 1); };
  auto gp = [&](const std::vector<double>& f, long x) { return at(f, x + 1) - at(f, x); };
  auto gm = [&](const std::vector<double>& f, long x) { return at(f, x - 1) - at(f, x); };
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> u(n + 3), v(n + 3);
    for (auto& e : u) e = rng.normal();
    for (auto& e : v) e = rng.normal();
    double lhs = 0.0, rhs_sym = 0.0, scale = 1.0, grads = 0.0;
    for (long x = 0; x <= n; ++x) {
      lhs += at(u, x) * lap(v, x);
      rhs_sym += at(v, x) * lap(u, x);
      scale += std::abs(at(u, x) * lap(v, x)) + std::abs(at(v, x) * lap(u, x));
    }
    for (long x = -1; x <= n; ++x) {
      grads += gp(u, x) * gp(v, x);
      scale += std::abs(gp(u, x) * gp(v, x));
    }
    const double r0 = lhs - (at(u, n + 1) * gp(v, n) + at(u, -1) * gm(v, 0) - grads);
    const double r1 = lhs - (rhs_sym + at(u, n + 1) * gp(v, n) + at(u, -1) * gm(v, 0) -
                             at(v, n + 1) * gp(u, n) - at(v, -1) * gm(u, 0));
    rep.max_residual_0 = std::max(rep.max_residual_0, std::abs(r0) / scale);
    rep.max_residual_1 = std::max(rep.max_residual_1, std::abs(r1) / scale);

    // half line: compactly supported on {-1..L}, zero beyond
    const long len = n + 10;
    std::vector<double> uh(len + 3, 0.0), vh(len + 3, 0.0);
    for (long x = -1; x <= n; ++x) {
      uh[x + 1] = rng.normal();
      vh[x + 1] = rng.normal();
    }
    double l2 = 0.0, r2 = 0.0, scale2 = 1.0;
    for (long x = 0; x <= len; ++x) {
      l2 += at(uh, x) * lap(vh, x);
      r2 += at(vh, x) * lap(uh, x);
      scale2 += std::abs(at(uh, x) * lap(vh, x)) + std::abs(at(vh, x) * lap(uh, x));
    }
    const double res2 = l2 - (r2 + at(uh, -1) * gm(vh, 0) - at(vh, -1) * gm(uh, 0));
    rep.max_residual_2 = std::max(rep.max_residual_2, std::abs(res2) / scale2);
  }
  return rep;
}

}  // namespace asepkpz

#include "asepkpz/model_params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asepkpz/errors.hpp"

namespace asepkpz {

namespace {

constexpr double kPhaseTol = 1e-12;

double clamp_rate(double r, const char* name) {
  if (r < -1e-15) {
    throw PreconditionError(std::string("negative boundary rate ") + name +
                            " (epsilon too large for the slopes)");
  }
  return std::max(r, 0.0);
}

}  // namespace

ScalingParams ScalingParams::interval(int n, double a, double b) {
  require(n >= 1, "interval needs n_sites >= 1");
  ScalingParams s;
  s.geometry = Geometry::Interval;
  s.n_sites = n;
  s.epsilon = 1.0 / n;
  s.slope_a = a;
  s.slope_b = b;
  return s;
}

ScalingParams ScalingParams::half_line(double epsilon, double a) {
  ScalingParams s;
  s.geometry = Geometry::HalfLine;
  s.epsilon = epsilon;
  s.slope_a = a;
  s.slope_b = 0.0;
  return s;
}

ModelParams make_params(double p, double q, double mu_a, double mu_b) {
  require(p > q && q > 0.0, "make_params needs p > q > 0");
  const double sp = std::sqrt(p), sq = std::sqrt(q);
  const double lo = sq / sp, hi = sp / sq;
  for (double mu : {mu_a, mu_b}) {
    require(mu >= lo * (1 - 1e-14) && mu <= hi * (1 + 1e-14),
            "boundary parameter outside [sqrt(q/p), sqrt(p/q)]");
  }
  const double d = p - q;
  ModelParams m;
  m.p = p;
  m.q = q;
  m.mu_a = mu_a;
  m.mu_b = mu_b;
  m.alpha = clamp_rate(p * sp * (sp - mu_a * sq) / d, "alpha");
  m.gamma = clamp_rate(q * sq * (mu_a * sp - sq) / d, "gamma");
  m.beta = clamp_rate(p * sp * (sp - mu_b * sq) / d, "beta");
  m.delta = clamp_rate(q * sq * (mu_b * sp - sq) / d, "delta");
  m.lambda = 0.5 * (std::log(q) - std::log(p));
  m.nu = (sp - sq) * (sp - sq);
  m.epsilon = 0.0;
  m.in_scaling_class = mu_a <= 1.0 && mu_b <= 1.0;
  return m;
}

ModelParams build_params(const ScalingParams& sc) {
  require(sc.epsilon > 0.0 && std::isfinite(sc.epsilon), "epsilon must be positive");
  if (sc.geometry == Geometry::Interval) {
    require(sc.n_sites >= 1, "interval needs n_sites >= 1");
    require(sc.epsilon == 1.0 / sc.n_sites, "interval requires epsilon = 1/n_sites");
    return build_params_free(sc.epsilon, sc.slope_a, sc.slope_b);
  }
  return build_params_free(sc.epsilon, sc.slope_a, 0.0);
}

ModelParams build_params_free(double eps, double A, double B) {
  require(eps > 0.0 && std::isfinite(eps), "epsilon must be positive");
  require(A >= 0.0 && B >= 0.0, "slopes A, B must be >= 0");
  const double mu_a = 1.0 - eps * A, mu_b = 1.0 - eps * B;
  require(mu_a > 0.0 && mu_a <= 1.0, "mu_A outside (0, 1]");
  require(mu_b > 0.0 && mu_b <= 1.0, "mu_B outside (0, 1]");

  // sinh forms avoid the p - q and sqrt(p) - sqrt(q) cancellations
  const double s = std::sqrt(eps);
  const double r2 = std::sqrt(2.0);
  ModelParams m;
  m.p = 0.5 * std::exp(s);
  m.q = 0.5 * std::exp(-s);
  const double sp = std::exp(0.5 * s) / r2, sq = std::exp(-0.5 * s) / r2;
  const double d = std::sinh(s);
  const double sh = 2.0 * std::sinh(0.5 * s);
  const double ea = eps * A, eb = eps * B;
  m.alpha = clamp_rate(m.p * sp * (sh + ea * std::exp(-0.5 * s)) / r2 / d, "alpha");
  m.gamma = clamp_rate(m.q * sq * (sh - ea * std::exp(0.5 * s)) / r2 / d, "gamma");
  m.beta = clamp_rate(m.p * sp * (sh + eb * std::exp(-0.5 * s)) / r2 / d, "beta");
  m.delta = clamp_rate(m.q * sq * (sh - eb * std::exp(0.5 * s)) / r2 / d, "delta");
  m.mu_a = mu_a;
  m.mu_b = mu_b;
  m.lambda = -s;
  m.nu = 0.5 * sh * sh;
  m.epsilon = eps;
  m.in_scaling_class = true;
  return m;
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::LowDensity: return "LowDensity";
    case Phase::HighDensity: return "HighDensity";
    case Phase::MaximalCurrent: return "MaximalCurrent";
    case Phase::Boundary: return "Boundary";
  }
  return "?";
}

PhaseDiagnostics phase_point(const ModelParams& m) {
  require(m.q < m.p, "phase_point needs q < p");
  const double spq = std::sqrt(m.p * m.q);
  const double den_a = m.p - m.mu_a * spq, den_b = m.p - m.mu_b * spq;
  if (std::abs(den_a) <= 1e-15 * m.p || std::abs(den_b) <= 1e-15 * m.p) {
    throw PreconditionError("p = mu sqrt(pq): boundary parameter at the edge of its range");
  }
  PhaseDiagnostics d;
  d.a_par = (m.mu_a * spq - m.q) / den_a;
  d.b_par = (m.mu_b * spq - m.q) / den_b;
  d.rho_a = 1.0 / (1.0 + d.a_par);
  d.rho_b = d.b_par / (1.0 + d.b_par);

  const double inf = std::numeric_limits<double>::infinity();
  const double ia = d.a_par > 0 ? 1.0 / d.a_par : inf;
  const double ib = d.b_par > 0 ? 1.0 / d.b_par : inf;
  const double ja = d.rho_a * (1 - d.rho_a), jb = d.rho_b * (1 - d.rho_b);
  if (ia < ib - kPhaseTol && ia < 1 - kPhaseTol) {
    d.phase = Phase::LowDensity;
    d.current = ja;
  } else if (ib < ia - kPhaseTol && ib < 1 - kPhaseTol) {
    d.phase = Phase::HighDensity;
    d.current = jb;
  } else if (ia > 1 + kPhaseTol && ib > 1 + kPhaseTol) {
    d.phase = Phase::MaximalCurrent;
    d.current = 0.25;
  } else {
    d.phase = Phase::Boundary;
    d.current = (ia <= ib && ia <= 1) ? ja : (ib <= 1 ? jb : 0.25);
  }
  return d;
}

double equal_density_mu_a(double p, double q, double mu_b) {
  const double spq = std::sqrt(p * q);
  return (p + q - mu_b * spq) / spq;
}

std::vector<ExpansionRow> expansion_audit(const std::vector<double>& eps_grid, double A, double B) {
  std::vector<ExpansionRow> rows;
  for (double eps : eps_grid) {
    const ModelParams m = build_params_free(eps, A, B);
    const PhaseDiagnostics ph = phase_point(m);
    const double s = std::sqrt(eps);
    auto add = [&](const char* name, double exact, double expansion, double order) {
      ExpansionRow r;
      r.quantity = name;
      r.epsilon = eps;
      r.exact = exact;
      r.expansion = expansion;
      r.residual = std::abs(exact - expansion);
      r.order = order;
      r.ratio = r.residual / std::pow(eps, order);
      rows.push_back(r);
    };
    add("p", m.p, 0.5 + 0.5 * s, 1.0);
    add("q", m.q, 0.5 - 0.5 * s, 1.0);
    add("alpha", m.alpha, 0.25 + (0.375 + 0.25 * A) * s, 1.0);
    add("beta", m.beta, 0.25 + (0.375 + 0.25 * B) * s, 1.0);
    add("gamma", m.gamma, 0.25 - (0.375 + 0.25 * A) * s, 1.0);
    add("delta", m.delta, 0.25 - (0.375 + 0.25 * B) * s, 1.0);
    add("a", ph.a_par, 1.0 - (1.0 + 2.0 * A) * s, 1.0);
    add("b", ph.b_par, 1.0 - (1.0 + 2.0 * B) * s, 1.0);
    add("rho_a", ph.rho_a, 0.5 + (0.25 + 0.5 * A) * s, 1.5);
    add("rho_b", ph.rho_b, 0.5 - (0.25 + 0.5 * B) * s, 1.5);
  }
  return rows;
}

std::vector<ExpansionBound> expansion_bounds(const std::vector<ExpansionRow>& rows) {
  std::vector<ExpansionBound> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ExpansionBound& b) { return b.quantity == r.quantity; });
    if (it == out.end()) {
      out.push_back({r.quantity, r.ratio});
    } else {
      it->max_ratio = std::max(it->max_ratio, r.ratio);
    }
  }
  return out;
}

}  // namespace asepkpz

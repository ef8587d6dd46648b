#include "asepkpz/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "asepkpz/asep_engine.hpp"
#include "asepkpz/compare.hpp"
#include "asepkpz/csv.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/gartner_transform.hpp"
#include "asepkpz/green_identities.hpp"
#include "asepkpz/martingale.hpp"
#include "asepkpz/model_params.hpp"
#include "asepkpz/parallel.hpp"
#include "asepkpz/rng.hpp"
#include "asepkpz/robin_kernel.hpp"
#include "asepkpz/she_mild_solver.hpp"

#ifndef ASEPKPZ_VERSION
#define ASEPKPZ_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace asepkpz {

namespace {

// seed streams for the experiment kinds
constexpr std::uint64_t kSimEnsemble = 10, kSimTrajectory = 11, kDriftConfigs = 12, kShe = 20;

std::string hex(const unsigned char* d, unsigned n) {
  std::ostringstream o;
  for (unsigned i = 0; i < n; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(d[i]);
  return o.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const char* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string hex_digest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    return hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sci(double v) {
  std::ostringstream o;
  o << std::setprecision(4) << v;
  return o.str();
}

struct Ctx {
  const RunConfig& cfg;
  fs::path dir;
  int threads;
  std::vector<CheckResult>& checks;
  json& derived;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void check(const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  }
};

// ---------------------------------------------------------------- params

void run_params(Ctx& c) {
  const auto& m = c.cfg.model;
  const ModelParams p = build_params(ScalingParams::interval(m.n_sites, m.slope_a, m.slope_b));
  const PhaseDiagnostics ph = phase_point(p);
  c.derived["params"] = {{"epsilon", p.epsilon}, {"p", p.p}, {"q", p.q}, {"alpha", p.alpha},
                         {"beta", p.beta}, {"gamma", p.gamma}, {"delta", p.delta}, {"mu_a", p.mu_a},
                         {"mu_b", p.mu_b}, {"lambda", p.lambda}, {"nu", p.nu},
                         {"a_par", ph.a_par}, {"b_par", ph.b_par}, {"rho_a", ph.rho_a},
                         {"rho_b", ph.rho_b}, {"current", ph.current}, {"phase", to_string(ph.phase)}};
  {
    std::ofstream out(c.path("params.json"));
    out << c.derived["params"].dump(2) << '\n';
  }

  const double rel = std::max(std::abs(p.alpha / p.p + p.gamma / p.q - 1.0),
                              std::abs(p.beta / p.p + p.delta / p.q - 1.0));
  c.check("params.rate_relations", rel <= 1e-14, "max residual " + sci(rel));
  const double pq = std::max(std::abs(p.p * p.q - 0.25), std::abs(p.nu - (p.p + p.q - 1.0)));
  c.check("params.pq_quarter", pq <= 1e-15, "max residual " + sci(pq));
  const Phase neumann = phase_point(make_params(p.p, p.q, 1.0, 1.0)).phase;
  c.check("params.neumann_maximal_current", neumann == Phase::MaximalCurrent, to_string(neumann));

  const std::vector<double> grid{1.0 / 16, 1.0 / 64, 1.0 / 256};
  const auto rows = expansion_audit(grid, m.slope_a, m.slope_b);
  {
    CsvWriter w(c.path("expansion.csv"), {"quantity", "epsilon", "exact", "expansion", "residual", "order", "ratio"});
    for (const auto& r : rows) {
      w << r.quantity << r.epsilon << r.exact << r.expansion << r.residual << r.order << r.ratio;
      w.end_row();
    }
  }
  // bounded: the finest-grid ratio stays within twice the grid maximum of the coarser points
  bool bounded = true;
  std::string worst;
  for (const auto& b : expansion_bounds(rows)) {
    double coarse = 0.0, fine = 0.0;
    for (const auto& r : rows) {
      if (r.quantity != b.quantity) continue;
      if (r.epsilon == grid.back()) fine = r.ratio;
      else coarse = std::max(coarse, r.ratio);
    }
    if (!(std::isfinite(fine) && fine <= 2.0 * coarse + 1e-12)) {
      bounded = false;
      worst += b.quantity + " ";
    }
  }
  c.check("params.expansion_bounded", bounded, bounded ? "all ratios bounded" : "growing: " + worst);

  // phase diagram sweep over mu in (sqrt(q/p), sqrt(p/q)) at this epsilon
  std::vector<double> ia, ib, code;
  const double lo = std::sqrt(p.q / p.p), hi = std::sqrt(p.p / p.q);
  const int k = 41;
  for (int i = 1; i < k; ++i) {
    for (int j = 1; j < k; ++j) {
      const double mu_a = lo + (hi - lo) * i / k, mu_b = lo + (hi - lo) * j / k;
      const PhaseDiagnostics d = phase_point(make_params(p.p, p.q, mu_a, mu_b));
      ia.push_back(1.0 / d.a_par);
      ib.push_back(1.0 / d.b_par);
      code.push_back(static_cast<double>(d.phase));
    }
  }
  write_columns(c.path("phase_diagram.dat"), {"inv_a", "inv_b", "phase"}, {ia, ib, code});
}

// ---------------------------------------------------------------- simulate

EnsembleSetup simulate_setup(const RunConfig& cfg) {
  const auto& m = cfg.model;
  const auto& s = cfg.simulate;
  EnsembleSetup setup;
  setup.params = build_params(ScalingParams::interval(m.n_sites, m.slope_a, m.slope_b));
  setup.lattice = Lattice::interval(m.n_sites);
  setup.epsilon = 1.0 / m.n_sites;
  setup.rho = s.rho;
  setup.T_grid = s.T_grid;
  setup.X_grid = s.X_grid;
  for (int k = 0; k < s.test_functions; ++k) {
    setup.phis.push_back(interval_test_function(k, m.slope_a, m.slope_b));
  }
  return setup;
}

void run_simulate(Ctx& c) {
  const EnsembleSetup setup = simulate_setup(c.cfg);
  const int n = setup.lattice.size;

  // drift identity over random configurations
  double drift = 0.0;
  Rng cr(derive_seed(c.cfg.seed, kDriftConfigs, 0));
  for (int i = 0; i < 200; ++i) {
    const auto r = drift_identity_residual(bernoulli_configuration(n, setup.rho, cr), setup.params, setup.lattice);
    for (double v : r) drift = std::max(drift, std::abs(v));
  }
  c.check("simulate.drift_identity", drift <= 1e-12, "max relative residual " + sci(drift));

  // one sampled trajectory and its scaled field
  {
    Rng init(derive_seed(c.cfg.seed, kSimTrajectory, 0));
    const Configuration c0 = bernoulli_configuration(n, setup.rho, init);
    std::vector<double> times{0.0};
    for (double T : setup.T_grid) {
      const double t = T / (setup.epsilon * setup.epsilon);
      if (t > times.back()) times.push_back(t);
    }
    const Trajectory tr = simulate(c0, setup.params, setup.lattice, times.back(), times,
                                   derive_seed(c.cfg.seed, kSimTrajectory, 1));
    bool ok = true;
    for (const auto& snap : tr.snapshots) ok = ok && heights_consistent(snap.config, snap.heights);
    c.check("simulate.height_consistency", ok, std::to_string(tr.snapshots.size()) + " snapshots");
    write_trajectory_csv(tr, c.path("trajectory"));
    // T recovered from t must map back onto the sample times exactly
    std::vector<double> Tq;
    for (double t : tr.sample_times) Tq.push_back(t * setup.epsilon * setup.epsilon);
    write_scaled_csv(rescale(tr, setup.params, Tq, setup.X_grid), c.path("scaled_field.csv"));
  }

  const auto recs = run_ensemble(setup, c.cfg.simulate.replicas,
                                 derive_seed(c.cfg.seed, kSimEnsemble, 0), c.threads);
  const auto mean_rows = mean_channel(setup, recs);
  {
    CsvWriter w(c.path("mean_channel.csv"), {"T", "X", "asep_mean", "asep_se", "target", "pass"});
    for (const auto& r : mean_rows) {
      w << r.T << r.X << r.asep.mean << r.asep.se << r.target << (r.pass ? 1 : 0);
      w.end_row();
    }
  }
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& r : mean_rows) {
    if (!r.pass) ++bad;
    if (r.asep.se > 0.0) worst = std::max(worst, std::abs(r.asep.mean - r.target) / r.asep.se);
  }
  c.check("simulate.mean_channel", bad == 0,
          std::to_string(mean_rows.size() - bad) + "/" + std::to_string(mean_rows.size()) +
              " rows within 3 se; worst " + sci(worst) + " se");

  // plot data at the last T
  {
    std::vector<double> X, mean, se, target, zero;
    for (const auto& r : mean_rows) {
      if (r.T != setup.T_grid.back()) continue;
      X.push_back(r.X);
      mean.push_back(r.asep.mean);
      se.push_back(r.asep.se);
      target.push_back(r.target);
      zero.push_back(0.0);
    }
    write_columns(c.path("mean_asep.dat"), {"X", "mean", "se"}, {X, mean, se});
    write_columns(c.path("mean_target.dat"), {"X", "target", "err"}, {X, target, zero});
  }

  const MartingaleReport rep = martingale_diagnostics(setup, recs);
  json rows = json::array();
  {
    CsvWriter w(c.path("martingale.csv"), {"phi", "T", "n_mean", "n_se", "q_exact_mean", "q_exact_se",
                                           "q_leading_mean", "q_leading_se", "pass"});
    for (const auto& r : rep.rows) {
      w << r.phi << r.T << r.n.mean << r.n.se << r.q_exact.mean << r.q_exact.se << r.q_leading.mean
        << r.q_leading.se << (r.pass ? 1 : 0);
      w.end_row();
      rows.push_back({{"phi", r.phi}, {"T", r.T}, {"n_mean", r.n.mean}, {"n_se", r.n.se},
                      {"q_leading_mean", r.q_leading.mean}, {"q_leading_se", r.q_leading.se},
                      {"q_exact_mean", r.q_exact.mean}, {"q_exact_se", r.q_exact.se}, {"pass", r.pass}});
    }
  }
  {
    std::ofstream out(c.path("martingale.json"));
    out << json{{"diagnostic", "martingale"}, {"replicas", recs.size()}, {"rows", rows}}.dump(2) << '\n';
  }
  std::size_t mbad = 0;
  for (const auto& r : rep.rows) mbad += r.pass ? 0 : 1;
  c.check("simulate.martingale", rep.pass(),
          std::to_string(rep.rows.size() - mbad) + "/" + std::to_string(rep.rows.size()) +
              " rows with N and the quadratic gap within 3 se");
}

// ---------------------------------------------------------------- kernel

void run_kernel(Ctx& c) {
  const auto& k = c.cfg.kernel;
  const int n = k.n_sites;
  const double eps = 1.0 / n;
  const double mu_a = 1.0 - eps * k.slope_a, mu_b = 1.0 - eps * k.slope_b;
  const SpectralData s = solve_interval_spectrum(n, mu_a, mu_b);

  bool bracketed = true;
  std::vector<double> kk, om, lo, hi;
  {
    CsvWriter w(c.path("spectrum.csv"), {"k", "omega", "lambda"});
    for (int i = 0; i <= n; ++i) {
      const double a = i * std::numbers::pi / (n + 1), b = (i + 1) * std::numbers::pi / (n + 1);
      bracketed = bracketed && s.omegas[i] >= a - 1e-14 && s.omegas[i] <= b + 1e-14;
      w << i << s.omegas[i] << s.lambdas[i];
      w.end_row();
      kk.push_back(i);
      om.push_back(s.omegas[i]);
      lo.push_back(a);
      hi.push_back(b);
    }
  }
  write_columns(c.path("eigen_brackets.dat"), {"k", "omega", "k_pi_over_N1", "k1_pi_over_N1"}, {kk, om, lo, hi});
  {
    std::vector<std::string> head{"x"};
    for (int i = 0; i <= n; ++i) head.push_back("psi_" + std::to_string(i));
    CsvWriter w(c.path("eigenvectors.csv"), head);
    for (int x = 0; x <= n; ++x) {
      w << x;
      for (int i = 0; i <= n; ++i) w << s.eigvecs(x, i);
      w.end_row();
    }
  }
  c.check("kernel.eigen_brackets", bracketed, "every omega_k in [k pi/(N+1), (k+1) pi/(N+1)]");
  const double res = spectrum_residual(s), orth = spectrum_orthonormality_error(s);
  c.check("kernel.eigen_residual", res <= 1e-10, sci(res));
  c.check("kernel.orthonormality", orth <= 1e-10, sci(orth));
  const SpectralData neu = solve_interval_spectrum(n, 1.0, 1.0);
  double nerr = 0.0;
  for (int i = 0; i <= n; ++i) nerr = std::max(nerr, std::abs(neu.omegas[i] - i * std::numbers::pi / (n + 1)));
  c.check("kernel.neumann_roots", nerr <= 1e-13, sci(nerr));

  double gap = 0.0, sym = 0.0, neg = 0.0, semi = 0.0, mass_dev = 0.0, mass_max = 0.0;
  bool trunc = true;
  {
    CsvWriter w(c.path("kernel.csv"), {"t", "x", "y", "value"});
    for (double t : k.times) {
      const KernelMatrix sp = interval_kernel_spectral(s, t);
      const ImageKernel im = interval_kernel_image(n, mu_a, mu_b, t, k.depth);
      trunc = trunc && im.truncation_ok;
      gap = std::max(gap, (sp.values - im.kernel.values).cwiseAbs().maxCoeff());
      sym = std::max(sym, (sp.values - sp.values.transpose()).cwiseAbs().maxCoeff());
      neg = std::max(neg, -sp.values.minCoeff());
      const Eigen::MatrixXd half = interval_kernel_spectral(s, 0.5 * t).values;
      semi = std::max(semi, (half * half - sp.values).cwiseAbs().maxCoeff());
      const Eigen::VectorXd rows = sp.values.rowwise().sum();
      mass_dev = std::max(mass_dev, (rows.array() - 1.0).abs().maxCoeff());
      mass_max = std::max(mass_max, rows.maxCoeff());
      for (int x = 0; x <= n; ++x) {
        for (int y = 0; y <= n; ++y) {
          w << t << x << y << sp.values(x, y);
          w.end_row();
        }
      }
    }
  }
  c.check("kernel.image_vs_spectral", gap <= 1e-8 && trunc, "sup gap " + sci(gap));
  c.check("kernel.symmetry", sym <= 1e-10, sci(sym));
  c.check("kernel.nonnegative", neg <= 1e-14, "most negative entry " + sci(-neg));
  c.check("kernel.semigroup", semi <= 1e-10, sci(semi));
  if (k.slope_a == 0.0 && k.slope_b == 0.0) {
    c.check("kernel.row_sums", mass_dev <= 1e-10, "max |row sum - 1| " + sci(mass_dev));
  } else {
    c.check("kernel.row_sums", mass_max < 1.0 - 1e-12, "min leak 1 - max row sum = " + sci(1.0 - mass_max));
  }

  double ghost = 0.0;
  const double mu_h = mu_a;
  for (double t : {0.5, 5.0, 50.0}) {
    for (long y = 0; y <= 30; ++y) {
      ghost = std::max(ghost, std::abs(halfline_robin_kernel(t, -1, y, mu_h) - mu_h * halfline_robin_kernel(t, 0, y, mu_h)));
    }
  }
  c.check("kernel.halfline_ghost", ghost <= 1e-12, sci(ghost));

  const BoundAuditReport audit = kernel_bound_audit(k.audit_epsilon, k.slope_a, k.slope_b, k.audit_t_bar);
  {
    CsvWriter w(c.path("bound_audit.csv"), {"bound", "geometry", "constant", "constant_refined", "stable"});
    for (const auto& e : audit.entries) {
      w << e.name << e.geometry << e.constant << e.constant_refined << (e.stable ? 1 : 0);
      w.end_row();
    }
  }
  c.check("kernel.bound_audit", audit.all_stable(), std::to_string(audit.entries.size()) + " bounds audited");
}

// ---------------------------------------------------------------- identities

json identity_json(const std::string& name, json params, double value, double expected, double route_gap,
                   double tail_bound) {
  return {{"identity", name}, {"params", std::move(params)}, {"value", value}, {"expected", expected},
          {"abs_err", std::abs(value - expected)}, {"route_gap", route_gap}, {"tail_bound", tail_bound}};
}

void run_identities(Ctx& c) {
  const auto& id = c.cfg.identities;
  const int n = id.n_sites;
  const double eps = 1.0 / n;
  const double mu_a = 1.0 - eps * id.slope_a, mu_b = 1.0 - eps * id.slope_b;
  const json par{{"N", n}, {"A", id.slope_a}, {"B", id.slope_b}, {"mu_a", mu_a}, {"mu_b", mu_b}};
  json report = json::array();

  const GreenMatrix g = green_matrix(n, mu_a, mu_b);
  const double corner = green_corner_closed_form(n, mu_a, mu_b);
  const double gerr = std::abs(corner - g.values(0, 0));
  c.check("identities.green_corner", gerr <= 1e-10 * std::max(1.0, std::abs(corner)), sci(gerr));
  c.check("identities.green_residual", green_residual(g) <= 1e-10, sci(green_residual(g)));
  report.push_back(identity_json("green_corner", par, g.values(0, 0), corner, 0.0, 0.0));

  const SpectralData s = solve_interval_spectrum(n, mu_a, mu_b);
  const FMatrix f = f_matrix(s);
  const double c_closed = key_identity_c_closed_form(n, mu_a, mu_b);
  c.check("identities.f_constant_structure", std::max(f.diag_spread, f.offdiag_spread) <= 1e-9,
          "diag spread " + sci(f.diag_spread) + ", off-diagonal spread " + sci(f.offdiag_spread));
  c.check("identities.f_diag_minus_off", std::abs(f.diag_minus_off - 1.0) <= 1e-9, sci(f.diag_minus_off - 1.0));
  c.check("identities.f_route_gap", f.route_gap <= 1e-9, sci(f.route_gap));
  const double grad = f_gradient_structure_error(f);
  c.check("identities.f_gradient_structure", grad <= 1e-9, sci(grad));
  c.check("identities.c_closed_form", std::abs(f.c - c_closed) <= 1e-8, "c = " + sci(f.c));
  report.push_back(identity_json("F_diagonal", par, f.values(0, 0), 1.0 - c_closed, f.route_gap, 0.0));

  std::vector<std::pair<int, int>> pairs{{0, 0}, {n / 2, n / 2}, {0, 1}, {n / 10, (7 * n) / 10}, {n - 1, n - 1}};
  const auto quad = key_identity_quadrature(n, mu_a, mu_b, pairs);
  double spec_err = 0.0, quad_err = 0.0;
  {
    CsvWriter w(c.path("key_identity.csv"), {"route", "x", "xbar", "value", "expected", "abs_err", "t_cut", "tail_bound"});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const KeyIdentityResult sp = key_identity_spectral(s, pairs[i].first, pairs[i].second);
      const KeyIdentityResult& q = quad[i];
      spec_err = std::max(spec_err, sp.abs_err);
      quad_err = std::max(quad_err, q.abs_err);
      for (const auto* r : {&sp, &q}) {
        w << r->route << static_cast<long long>(r->x) << static_cast<long long>(r->xbar) << r->value << r->expected
          << r->abs_err << r->t_cut << r->tail_bound;
        w.end_row();
      }
      json pp = par;
      pp["x"] = pairs[i].first;
      pp["xbar"] = pairs[i].second;
      report.push_back(identity_json("key_identity_quadrature", pp, q.value, q.expected,
                                     std::abs(q.value - sp.value), q.tail_bound));
    }
  }
  c.check("identities.key_spectral", spec_err <= 1e-9, "max abs err " + sci(spec_err));
  c.check("identities.key_quadrature", quad_err <= 1e-7, "max abs err " + sci(quad_err));

  const double mu_h = 1.0 - id.halfline_epsilon * id.halfline_slope;
  double h_err = 0.0;
  for (auto [x, xb] : std::vector<std::pair<long, long>>{{0, 0}, {3, 3}, {0, 1}, {2, 7}}) {
    const KeyIdentityResult r = key_identity_halfline(mu_h, x, xb);
    h_err = std::max(h_err, r.abs_err);
    report.push_back(identity_json("key_identity_halfline",
                                   {{"mu_a", mu_h}, {"x", x}, {"xbar", xb}}, r.value, r.expected, 0.0, r.tail_bound));
  }
  c.check("identities.key_halfline", h_err <= 1e-7, "max abs err " + sci(h_err));

  const int cn = id.cstar_n;
  const double ce = 1.0 / cn;
  std::vector<long> xs;
  for (long x = 1; x <= cn - 1; ++x) xs.push_back(x);
  const CStarReport cs = c_star_interval(cn, 1.0 - ce * id.slope_a, 1.0 - ce * id.slope_b, id.cstar_t_bar, 0.0, xs);
  {
    CsvWriter w(c.path("c_star.csv"), {"x", "value"});
    for (std::size_t i = 0; i < cs.xs.size(); ++i) {
      w << static_cast<long long>(cs.xs[i]) << cs.values[i];
      w.end_row();
    }
  }
  c.check("identities.c_star_below_one", cs.max_value < 1.0,
          "max " + sci(cs.max_value) + " at x = " + std::to_string(cs.argmax));
  report.push_back(identity_json("c_star_max", {{"N", cn}, {"T", id.cstar_t_bar}}, cs.max_value, 1.0, 0.0, 0.0));

  std::vector<double> ratio, epsv, zero;
  for (int m : {16, 32, 64}) {
    const double e = 1.0 / m;
    const std::vector<long> bulk{m / 4, m / 2, (3 * m) / 4};
    const CStarReport wr = c_star_weighted_interval(m, 1.0 - e * id.slope_a, 1.0 - e * id.slope_b, id.cstar_t_bar, 0.0, bulk);
    ratio.push_back(wr.max_value / e);
    epsv.push_back(e);
    zero.push_back(0.0);
  }
  const double spread = *std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end());
  c.check("identities.c_star_weighted_linear", spread < 2.0, "value/eps spread " + sci(spread));
  write_columns(c.path("c_star_weighted.dat"), {"epsilon", "value_over_eps", "err"}, {epsv, ratio, zero});

  const SummationByPartsReport sbp = summation_by_parts_audit(n, c.cfg.seed);
  c.check("identities.summation_by_parts", sbp.pass(),
          sci(std::max({sbp.max_residual_0, sbp.max_residual_1, sbp.max_residual_2})));

  std::ofstream out(c.path("identities.json"));
  out << report.dump(2) << '\n';
}

// ---------------------------------------------------------------- she

void run_she(Ctx& c) {
  const auto& h = c.cfg.she;
  const double dx = 1.0 / h.m;
  const long steps = static_cast<long>(std::ceil(h.T / (0.5 * dx * dx) - 1e-9));
  const SheGrid grid = SheGrid::interval(h.m, h.slope_a, h.slope_b, h.T, h.T / steps);
  const ShePropagator prop(grid);

  const double semi = (prop.step() * prop.step() - prop.at(2.0 * grid.dt)).cwiseAbs().maxCoeff();
  c.check("she.propagator_semigroup", semi <= 1e-10, sci(semi));

  const Eigen::VectorXd z0 = Eigen::VectorXd::Ones(grid.points());
  const Eigen::VectorXd mean = mean_field(z0, prop, h.T);
  const FieldPath quiet = sample_she(z0, prop, 0, {h.T}, false);
  const double zn = (quiet.values.back() - mean).cwiseAbs().maxCoeff();
  c.check("she.zero_noise", zn <= 1e-12, sci(zn));

  const SecondMoment sm = second_moment(z0 * z0.transpose(), prop, h.T);
  const double asym = (sm.m2 - sm.m2.transpose()).cwiseAbs().maxCoeff();
  c.check("she.second_moment_converged", sm.converged,
          std::to_string(sm.sweeps) + " sweeps, last change " + sci(sm.last_change) + ", asymmetry " + sci(asym));

  const std::uint64_t master = derive_seed(c.cfg.seed, kShe, 0);
  std::vector<Eigen::VectorXd> out(h.replicas);
  std::vector<char> fault(h.replicas, 0);
  parallel_for(h.replicas, c.threads, [&](std::size_t i) {
    FieldPath p = sample_she(z0, prop, derive_seed(master, 2, i), {h.T});
    if (p.positivity_fault) fault[i] = 1;
    else out[i] = p.values.back();
  });
  std::size_t faults = 0;
  std::vector<Eigen::VectorXd> kept;
  for (std::size_t i = 0; i < h.replicas; ++i) {
    if (fault[i]) ++faults;
    else kept.push_back(out[i]);
  }
  const double fault_rate = double(faults) / double(h.replicas);
  c.check("she.positivity_faults", fault_rate < 1e-3, std::to_string(faults) + " faults");

  // report nodes: the k/8 sites when M is a multiple of 8, else every node
  const int stride = h.m % 8 == 0 ? h.m / 8 : 1;
  std::size_t bad1 = 0, bad2 = 0, rows = 0;
  CsvWriter w(c.path("she_moments.csv"), {"T", "X", "sample_mean", "mean_se", "mean_field", "sample_m2",
                                          "m2_se", "second_moment"});
  std::vector<double> X, sm1, se1;
  for (int j = 0; j <= h.m; j += stride) {
    std::vector<double> v, v2;
    for (const auto& z : kept) {
      v.push_back(z(j));
      v2.push_back(z(j) * z(j));
    }
    const Stat a = summarize(v), b = summarize(v2);
    const double m2 = sm.m2(j, j);
    ++rows;
    if (std::abs(a.mean - mean(j)) > 3.0 * a.se) ++bad1;
    if (std::abs(b.mean - m2) > 3.0 * b.se) ++bad2;
    w << h.T << j * dx << a.mean << a.se << mean(j) << b.mean << b.se << m2;
    w.end_row();
    X.push_back(j * dx);
    sm1.push_back(a.mean);
    se1.push_back(a.se);
  }
  write_columns(c.path("she_mean.dat"), {"X", "mean", "se"}, {X, sm1, se1});
  c.check("she.ito_zero_mean", bad1 == 0, std::to_string(rows - bad1) + "/" + std::to_string(rows) + " nodes within 3 se");
  c.check("she.second_moment_mc", bad2 == 0, std::to_string(rows - bad2) + "/" + std::to_string(rows) + " nodes within 3 se");
}

// ---------------------------------------------------------------- compare

void run_compare(Ctx& c) {
  const auto& s = c.cfg.compare;
  CompareConfig cc;
  cc.epsilons = s.epsilons;
  cc.slope_a = s.slope_a;
  cc.slope_b = s.slope_b;
  cc.T = s.T;
  cc.X_grid = s.X_grid;
  cc.replicas = s.replicas;
  cc.she_m = s.she_m;
  cc.she_replicas = s.she_replicas;
  cc.seed = c.cfg.seed;
  cc.threads = c.threads;
  const CompareResult r = asep_she_compare(cc);
  write_compare_csv(r, c.path("compare.csv"));
  {
    CsvWriter w(c.path("compare_mean_channel.csv"), {"epsilon", "T", "X", "asep_mean", "asep_se", "target", "pass"});
    const std::size_t nx = s.X_grid.size();
    for (std::size_t i = 0; i < r.mean_rows.size(); ++i) {
      const auto& m = r.mean_rows[i];
      w << s.epsilons[i / nx] << m.T << m.X << m.asep.mean << m.asep.se << m.target << (m.pass ? 1 : 0);
      w.end_row();
    }
  }
  std::vector<double> e, g, sg;
  std::string gaps;
  for (const auto& x : r.gaps) {
    e.push_back(x.epsilon);
    g.push_back(x.var_gap);
    sg.push_back(x.mc_sigma);
    gaps += "eps " + sci(x.epsilon) + ": gap " + sci(x.var_gap) + " +- " + sci(x.mc_sigma) + "; ";
  }
  write_columns(c.path("convergence_trend.dat"), {"epsilon", "var_gap", "mc_sigma"}, {e, g, sg});
  c.check("compare.variance_trend", r.trend_ok, gaps);
  std::size_t bad = 0;
  for (const auto& m : r.mean_rows) bad += m.pass ? 0 : 1;
  c.check("compare.mean_channel", bad == 0,
          std::to_string(r.mean_rows.size() - bad) + "/" + std::to_string(r.mean_rows.size()) + " rows within 3 se");
  const double rate = double(r.she_faults) / double(s.she_replicas);
  c.check("compare.she_positivity_faults", rate < 1e-3, std::to_string(r.she_faults) + " faults");
}

const std::vector<std::pair<std::string, std::function<void(Ctx&)>>>& runners() {
  static const std::vector<std::pair<std::string, std::function<void(Ctx&)>>> r{
      {"params", run_params},   {"simulate", run_simulate}, {"kernel", run_kernel},
      {"identities", run_identities}, {"she", run_she}, {"compare", run_compare}};
  return r;
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [key, value] : cfg.entries()) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<FileEntry> inventory(const fs::path& dir) {
  std::vector<FileEntry> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json" || rel.ends_with(".tmp")) continue;
    files.push_back({rel, sha256_file(e.path().string()), e.file_size()});
  }
  std::sort(files.begin(), files.end(), [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });
  return files;
}

}  // namespace

const std::vector<std::string>& run_kinds() {
  static const std::vector<std::string> k{"params", "simulate", "kernel", "identities", "she", "compare", "audit-all"};
  return k;
}

bool RunResult::pass() const {
  return complete && error.empty() && !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex_digest();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

std::string config_hash(const std::string& kind, const RunConfig& cfg) {
  return sha256_hex("kind=" + kind + "\n" + canonical_config(cfg));
}

std::string tool_version() { return ASEPKPZ_VERSION; }

RunResult run_experiment(const RunConfig& cfg, const RunOptions& opt) {
  const auto& kinds = run_kinds();
  if (std::find(kinds.begin(), kinds.end(), opt.kind) == kinds.end()) {
    throw ConfigError({"unknown experiment kind '" + opt.kind + "'"});
  }
  cfg.validate();

  RunResult res;
  res.config_hash = config_hash(opt.kind, cfg);
  const fs::path dir = fs::path(opt.out_dir) / (opt.kind + "-" + res.config_hash.substr(0, 16));
  res.run_dir = dir.string();
  if (fs::exists(dir)) {
    if (!opt.force) {
      throw ConfigError({"run directory " + dir.string() + " exists; pass --force to rerun"});
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);

  json derived = json::object();
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Ctx ctx{cfg, dir, opt.threads, res.checks, derived};

  auto manifest = [&](bool complete) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.files = inventory(dir);
    json checks = json::array();
    for (const auto& c : res.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    json files = json::array();
    for (const auto& f : res.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    json m{{"tool", "asepkpz"},
           {"version", tool_version()},
           {"kind", opt.kind},
           {"config_hash", res.config_hash},
           {"config", config_json(cfg)},
           {"threads", opt.threads},
           {"started_utc", started},
           {"wall_seconds", wall},
           {"complete", complete},
           {"pass", complete && res.error.empty() && res.pass()},
           {"checks", checks},
           {"files", files}};
    if (!res.error.empty()) m["error"] = res.error;
    if (!derived.empty()) m["derived"] = derived;
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
  };

  manifest(false);
  try {
    for (const auto& [name, fn] : runners()) {
      if (opt.kind == name || opt.kind == "audit-all") fn(ctx);
    }
    res.complete = true;
  } catch (const std::exception& e) {
    res.error = e.what();
    res.checks.push_back({opt.kind + ".aborted", false, e.what()});
  }
  manifest(res.complete);
  return res;
}

}  // namespace asepkpz

#include "asepkpz/compare.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "asepkpz/csv.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/parallel.hpp"
#include "asepkpz/rng.hpp"

namespace asepkpz {

std::vector<double> discrete_mean_profile(const ModelParams& m, int n, double rho, double t,
                                          const std::vector<int>& sites) {
  require(n >= 1 && rho > 0.0 && rho < 1.0 && t >= 0.0, "bad discrete mean arguments");
  const double step = rho * std::exp(-m.lambda) + (1.0 - rho) * std::exp(m.lambda);
  Eigen::VectorXd z0(n + 1);
  for (int x = 0; x <= n; ++x) z0(x) = std::pow(step, x);
  const SpectralData s = solve_interval_spectrum(n, m.mu_a, m.mu_b);
  const Eigen::VectorXd zt = interval_kernel_spectral(s, t).values * z0;
  std::vector<double> out;
  for (int x : sites) out.push_back(zt(x));
  return out;
}

std::vector<MeanChannelRow> mean_channel(const EnsembleSetup& s,
                                         const std::vector<ReplicaRecord>& records) {
  require(s.lattice.right_reservoir(), "mean channel oracle is implemented on the interval");
  require(!records.empty(), "no replicas");
  const std::vector<int> sites = s.sites();
  const std::size_t nx = sites.size();
  std::vector<MeanChannelRow> out;
  for (std::size_t i = 0; i < s.T_grid.size(); ++i) {
    const double t = s.T_grid[i] / (s.epsilon * s.epsilon);
    const auto target = discrete_mean_profile(s.params, s.lattice.size, s.rho, t, sites);
    for (std::size_t j = 0; j < nx; ++j) {
      std::vector<double> v;
      v.reserve(records.size());
      for (const auto& r : records) v.push_back(r.z[i * nx + j]);
      MeanChannelRow row;
      row.T = s.T_grid[i];
      row.X = s.X_grid[j];
      row.asep = summarize(v);
      row.target = target[j];
      // a deterministic start has se = 0; allow rounding there
      row.pass = std::abs(row.asep.mean - row.target) <= 3.0 * row.asep.se + 1e-12 * std::abs(row.target);
      out.push_back(row);
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> she_ensemble(const ShePropagator& prop, double T, std::size_t replicas,
                                          std::uint64_t master, int threads, std::size_t* faults) {
  std::vector<Eigen::VectorXd> out(replicas);
  std::vector<char> bad(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t i) {
    Rng init(derive_seed(master, 1, i));
    const Eigen::VectorXd z0 = brownian_exponential(prop.grid(), init);
    FieldPath path = sample_she(z0, prop, derive_seed(master, 2, i), {T});
    if (path.positivity_fault) bad[i] = 1;
    else out[i] = path.values.back();
  });
  std::vector<Eigen::VectorXd> kept;
  std::size_t count = 0;
  for (std::size_t i = 0; i < replicas; ++i) {
    if (bad[i]) ++count;
    else kept.push_back(std::move(out[i]));
  }
  if (faults) *faults = count;
  return kept;
}

std::pair<double, double> variance_with_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  require(n >= 4, "variance needs at least 4 samples");
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double v : xs) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  const double var = m2 / static_cast<double>(n - 1);
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(n));
  return {var, se};
}

void CompareConfig::validate() const {
  std::vector<std::string> bad;
  if (epsilons.size() < 2) bad.push_back("at least two epsilon values");
  for (double e : epsilons) {
    const double n = 1.0 / e;
    if (!(e > 0.0) || std::abs(n - std::round(n)) > 1e-9) bad.push_back("each 1/epsilon an integer");
  }
  if (slope_a < 0.0 || slope_b < 0.0) bad.push_back("A, B >= 0");
  if (!(T > 0.0)) bad.push_back("T > 0");
  if (X_grid.empty()) bad.push_back("non-empty X grid");
  if (replicas < 4 || she_replicas < 4) bad.push_back("replica counts >= 4");
  if (she_m < 8) bad.push_back("SHE grid M >= 8");
  if (!bad.empty()) {
    std::string msg = "invalid comparison config:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw PreconditionError(msg);
  }
}

CompareResult asep_she_compare(const CompareConfig& cfg) {
  cfg.validate();
  CompareResult res;

  // SHE side: dt divides T
  const double dx = 1.0 / cfg.she_m;
  const long steps = static_cast<long>(std::ceil(cfg.T / (0.5 * dx * dx) - 1e-9));
  const SheGrid grid = SheGrid::interval(cfg.she_m, cfg.slope_a, cfg.slope_b, cfg.T, cfg.T / steps);
  const ShePropagator prop(grid);
  std::vector<int> she_idx;
  for (double X : cfg.X_grid) {
    const double j = X / dx;
    require(std::abs(j - std::round(j)) < 1e-9 && j >= 0 && j <= cfg.she_m, "X not on the SHE grid");
    she_idx.push_back(static_cast<int>(std::lround(j)));
  }
  const auto she = she_ensemble(prop, cfg.T, cfg.she_replicas, derive_seed(cfg.seed, 200, 0),
                                cfg.threads, &res.she_faults);
  require(she.size() >= 4, "too many SHE positivity faults");
  const Eigen::VectorXd she_mean = mean_field(brownian_exponential_mean(grid), prop, cfg.T);
  const SecondMoment sm = second_moment(brownian_exponential_second_moment(grid), prop, cfg.T);

  std::vector<double> she_var(cfg.X_grid.size()), she_se(cfg.X_grid.size()), she_oracle(cfg.X_grid.size());
  for (std::size_t j = 0; j < cfg.X_grid.size(); ++j) {
    std::vector<double> v;
    for (const auto& z : she) v.push_back(z(she_idx[j]));
    std::tie(she_var[j], she_se[j]) = variance_with_se(v);
    she_oracle[j] = sm.m2(she_idx[j], she_idx[j]) - she_mean(she_idx[j]) * she_mean(she_idx[j]);
  }

  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    const double eps = cfg.epsilons[e];
    const int n = static_cast<int>(std::lround(1.0 / eps));
    EnsembleSetup setup;
    setup.params = build_params(ScalingParams::interval(n, cfg.slope_a, cfg.slope_b));
    setup.lattice = Lattice::interval(n);
    setup.epsilon = eps;
    setup.rho = 0.5;
    setup.T_grid = {cfg.T};
    setup.X_grid = cfg.X_grid;
    const auto recs = run_ensemble(setup, cfg.replicas, derive_seed(cfg.seed, 100 + e, 0), cfg.threads);
    const auto mrows = mean_channel(setup, recs);
    res.mean_rows.insert(res.mean_rows.end(), mrows.begin(), mrows.end());

    GapSummary gs;
    gs.epsilon = eps;
    const std::size_t nx = cfg.X_grid.size();
    for (std::size_t j = 0; j < nx; ++j) {
      std::vector<double> v;
      for (const auto& r : recs) v.push_back(r.z[j]);
      CompareRow row;
      row.epsilon = eps;
      row.T = cfg.T;
      row.X = cfg.X_grid[j];
      const Stat st = summarize(v);
      row.asep_mean = st.mean;
      row.asep_mean_se = st.se;
      row.discrete_mean = mrows[j].target;
      row.she_mean = she_mean(she_idx[j]);
      row.mean_gap = std::abs(row.asep_mean - row.she_mean);
      std::tie(row.asep_var, row.asep_var_se) = variance_with_se(v);
      row.she_var = she_var[j];
      row.she_var_se = she_se[j];
      row.she_var_oracle = she_oracle[j];
      row.var_gap = std::abs(row.asep_var - row.she_var);
      row.mc_sigma = std::hypot(row.asep_var_se, row.she_var_se);
      gs.var_gap += row.var_gap / static_cast<double>(nx);
      gs.mc_sigma += row.mc_sigma / static_cast<double>(nx);
      res.rows.push_back(row);
    }
    res.gaps.push_back(gs);
  }
  const GapSummary& first = res.gaps.front();
  const GapSummary& last = res.gaps.back();
  res.trend_ok = last.var_gap <= first.var_gap + 3.0 * std::hypot(first.mc_sigma, last.mc_sigma);
  return res;
}

void write_compare_csv(const CompareResult& r, const std::string& path) {
  CsvWriter w(path, {"epsilon", "T", "X", "asep_mean", "she_mean", "mean_gap", "asep_var", "she_var",
                     "var_gap", "mc_sigma", "asep_mean_se", "discrete_mean", "she_var_oracle"});
  for (const auto& row : r.rows) {
    w << row.epsilon << row.T << row.X << row.asep_mean << row.she_mean << row.mean_gap << row.asep_var
      << row.she_var << row.var_gap << row.mc_sigma << row.asep_mean_se << row.discrete_mean
      << row.she_var_oracle;
    w.end_row();
  }
}

}  // namespace asepkpz

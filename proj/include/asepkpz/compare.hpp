#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asepkpz/martingale.hpp"
#include "asepkpz/she_mild_solver.hpp"

namespace asepkpz {

// E[Z_t(x)] = sum_x' p^R_t(x, x') E[Z_0(x')] for a Bernoulli(rho) start on the interval.
std::vector<double> discrete_mean_profile(const ModelParams& params, int n, double rho, double t,
                                          const std::vector<int>& sites);

struct MeanChannelRow {
  double T = 0.0, X = 0.0;
  Stat asep;
  double target = 0.0;
  bool pass = false;  // |mean - target| <= 3 se
};

std::vector<MeanChannelRow> mean_channel(const EnsembleSetup& setup,
                                         const std::vector<ReplicaRecord>& records);

// Z_T on the grid for replicas with exp(Brownian) initial data.
std::vector<Eigen::VectorXd> she_ensemble(const ShePropagator& prop, double T, std::size_t replicas,
                                          std::uint64_t master, int threads, std::size_t* faults);

struct CompareConfig {
  std::vector<double> epsilons{1.0 / 32, 1.0 / 64};
  double slope_a = 0.0, slope_b = 0.0;
  double T = 0.1;
  std::vector<double> X_grid;
  std::size_t replicas = 4000;
  int she_m = 64;
  std::size_t she_replicas = 4000;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct CompareRow {
  double epsilon = 0.0, T = 0.0, X = 0.0;
  double asep_mean = 0.0, asep_mean_se = 0.0;
  double discrete_mean = 0.0;
  double she_mean = 0.0;
  double mean_gap = 0.0;  // |asep_mean - she_mean|
  double asep_var = 0.0, asep_var_se = 0.0;
  double she_var = 0.0, she_var_se = 0.0;
  double she_var_oracle = 0.0;
  double var_gap = 0.0;
  double mc_sigma = 0.0;
};

struct GapSummary {
  double epsilon = 0.0;
  double var_gap = 0.0;   // mean over X of |asep_var - she_var|
  double mc_sigma = 0.0;  // mean over X of the combined standard error
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<GapSummary> gaps;
  std::vector<MeanChannelRow> mean_rows;
  std::size_t she_faults = 0;
  // last gap <= first gap + 3 combined sigma
  bool trend_ok = false;
};

// Sample variance and its delta-method standard error.
std::pair<double, double> variance_with_se(const std::vector<double>& xs);

CompareResult asep_she_compare(const CompareConfig& cfg);

void write_compare_csv(const CompareResult& result, const std::string& path);

}  // namespace asepkpz

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asepkpz/asep_engine.hpp"
#include "asepkpz/model_params.hpp"
#include "asepkpz/she_mild_solver.hpp"

namespace asepkpz {

// One ASEP ensemble: Bernoulli(rho) start, observed at macroscopic times T (t = T / eps^2)
// and sites X / eps.
struct EnsembleSetup {
  ModelParams params;
  Lattice lattice;
  double epsilon = 0.0;
  double rho = 0.5;
  std::vector<double> T_grid;
  std::vector<double> X_grid;
  std::vector<TestFunction> phis;

  void validate() const;
  std::vector<int> sites() const;  // X / eps, checked to be integers
};

struct ReplicaRecord {
  std::vector<double> z;        // Z at (T_i, X_j): index i * nX + j
  std::vector<double> n;        // N_T(phi): index k * nT + i
  std::vector<double> bracket;  // exact predictable bracket <N>_T
  std::vector<double> leading;  // eps^2 int (Z^2, phi^2)_eps ds
  std::uint64_t events = 0;
};

// Replica `index` draws its initial state and dynamics from seeds derived from `master`.
ReplicaRecord run_replica(const EnsembleSetup& setup, std::uint64_t master, std::size_t index);
std::vector<ReplicaRecord> run_ensemble(const EnsembleSetup& setup, std::size_t replicas,
                                        std::uint64_t master, int threads);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;  // sd / sqrt(n)
  std::size_t n = 0;
  bool within(double k) const { return std::abs(mean) <= k * se; }
};
Stat summarize(const std::vector<double>& xs);

struct MartingaleRow {
  std::string phi;
  double T = 0.0;
  Stat n;             // N_T(phi)
  Stat q_exact;       // N^2 - <N>
  Stat q_leading;     // N^2 - eps^2 int (Z^2, phi^2)_eps
  bool pass = false;  // |mean| <= 3 se for n and q_leading
};

struct MartingaleReport {
  std::vector<MartingaleRow> rows;
  bool pass() const;
};

MartingaleReport martingale_diagnostics(const EnsembleSetup& setup,
                                        const std::vector<ReplicaRecord>& records);

// N_T(phi) from sampled snapshots with a trapezoid time integral.
struct SampledMartingale {
  std::vector<double> times;
  std::vector<double> n;
  bool resolved = false;  // max sample gap <= 1e-3 / eps^2
};
SampledMartingale martingale_from_trajectory(const Trajectory& traj, const ModelParams& params,
                                             const Lattice& lattice, const TestFunction& phi);

}  // namespace asepkpz

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "asepkpz/model_params.hpp"

namespace asepkpz {

class Rng;

enum class LatticeKind { Interval, HalfLineTruncated };

struct Lattice {
  LatticeKind kind = LatticeKind::Interval;
  int size = 0;  // N or L

  static Lattice interval(int n);
  static Lattice half_line(int l);
  bool right_reservoir() const { return kind == LatticeKind::Interval; }
};

// Truncation length for a half-line run observed on {0..x_max} up to time t.
int half_line_truncation(int x_max, double horizon, double delta = 1e-6);

struct Configuration {
  std::vector<std::int8_t> eta;  // eta[i] is site i + 1

  int size() const { return static_cast<int>(eta.size()); }
  int at(int site) const { return eta[static_cast<std::size_t>(site - 1)]; }
  bool operator==(const Configuration&) const = default;
};

struct HeightField {
  std::vector<std::int64_t> h;  // h[x], x = 0..N; h[0] is the net-removal counter

  int size() const { return static_cast<int>(h.size()) - 1; }
  bool operator==(const HeightField&) const = default;
};

HeightField heights_from(const Configuration& config, std::int64_t h0 = 0);
Configuration config_from(const HeightField& heights);
bool heights_consistent(const Configuration& config, const HeightField& heights);

enum class EventKind : std::uint8_t {
  RightJump,        // site -> site + 1
  LeftJump,         // site + 1 -> site
  CreateLeft,       // at site 1
  AnnihilateLeft,
  CreateRight,      // at site N
  AnnihilateRight,
};

struct Event {
  EventKind kind;
  int site;  // bond left end for jumps, boundary site otherwise
  double rate;
};

std::vector<Event> event_rates(const Configuration& config, const ModelParams& params,
                               const Lattice& lattice);

struct Snapshot {
  double time = 0.0;
  Configuration config;
  HeightField heights;
  bool operator==(const Snapshot&) const = default;
};

struct Trajectory {
  std::vector<double> sample_times;
  std::vector<Snapshot> snapshots;
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;
  bool operator==(const Trajectory&) const = default;
};

// Event-level hooks. on_advance covers [t0, t1) with the current state; on_event sees the
// state after the jump at time t.
class SimulationObserver {
 public:
  virtual ~SimulationObserver() = default;
  virtual void on_start(const Configuration&, const HeightField&) {}
  virtual void on_advance(double /*t0*/, double /*t1*/) {}
  virtual void on_event(const Event&, double /*t*/, const Configuration&, const HeightField&) {}
};

Trajectory simulate(const Configuration& initial, const ModelParams& params, const Lattice& lattice,
                    double horizon, std::span<const double> sample_times, std::uint64_t seed,
                    SimulationObserver* observer = nullptr);

// Same law, written directly on heights.
Trajectory sos_simulate(const HeightField& initial, const ModelParams& params,
                        const Lattice& lattice, double horizon,
                        std::span<const double> sample_times, std::uint64_t seed);

// State index: bit i set <=> eta(i + 1) = +1.
Eigen::SparseMatrix<double, Eigen::RowMajor> exact_generator(const ModelParams& params, int n);
Eigen::VectorXd stationary_measure(const Eigen::SparseMatrix<double, Eigen::RowMajor>& generator);
double mean_current(const Eigen::VectorXd& pi, const ModelParams& params, int n);
Eigen::VectorXd product_bernoulli(int n, double rho);
double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Initial data
Configuration flat_configuration(int n);
Configuration bernoulli_configuration(int n, double rho, Rng& rng);
HeightField read_height_file(const std::string& path);

// CSV export: <prefix>_eta.csv (time,site,eta) and <prefix>_heights.csv (time,site,h)
void write_trajectory_csv(const Trajectory& traj, const std::string& prefix);

}  // namespace asepkpz

#pragma once

#include <span>
#include <string>
#include <vector>

#include "asepkpz/asep_engine.hpp"
#include "asepkpz/model_params.hpp"

namespace asepkpz {

// Z(x) = exp(-lambda h(x) + nu t), stored as logarithms.
class ZField {
 public:
  ZField() = default;
  ZField(std::vector<double> log_z, double time) : log_z_(std::move(log_z)), time_(time) {}

  int size() const { return static_cast<int>(log_z_.size()) - 1; }
  double time() const { return time_; }
  double log_value(int x) const { return log_z_[static_cast<std::size_t>(x)]; }
  double value(int x) const;
  double ratio(int x, int y) const;  // Z(x) / Z(y)
  double interpolate(double x) const;

 private:
  std::vector<double> log_z_;
  double time_ = 0.0;
};

ZField z_field(const HeightField& h, double t, const ModelParams& params);

// Omega(x) - 1/2 (Delta Z)(x) / Z(x) with Robin ghost sites. Interval: x = 0..N;
// truncated half line: x = 0..L-1.
std::vector<double> drift_identity_residual(const Configuration& config, const ModelParams& params,
                                            const Lattice& lattice);

// d<M(x)>/dt split as leading + remainder, all divided by Z(x)^2.
struct BracketRate {
  double rate = 0.0;
  double leading = 0.0;
  double remainder = 0.0;
};

BracketRate bracket_rate(const Configuration& config, const ModelParams& params,
                         const Lattice& lattice, int x);

// Max over local patterns of |remainder| / epsilon at the given epsilon (bulk and boundary).
double bracket_remainder_sup(double epsilon, double slope_a, double slope_b);

struct ScaledField {
  double T = 0.0;
  std::vector<double> X;
  std::vector<double> values;
};

// Z^eps_T(X) = Z_{T / eps^2}(X / eps); each T / eps^2 must be a sample time.
std::vector<ScaledField> rescale(const Trajectory& traj, const ModelParams& params,
                                 std::span<const double> T_grid, std::span<const double> X_grid);

void write_scaled_csv(const std::vector<ScaledField>& fields, const std::string& path);

}  // namespace asepkpz

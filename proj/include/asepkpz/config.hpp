#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace asepkpz {

// Bad config file: every problem found, one per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ModelSection {
  int n_sites = 32;
  double slope_a = 0.0, slope_b = 0.0;
};

struct SimulateSection {
  std::size_t replicas = 2000;
  double rho = 0.5;
  std::vector<double> T_grid{0.05, 0.1};
  std::vector<double> X_grid;  // default k/8, k = 0..8
  int test_functions = 3;
};

struct KernelSection {
  int n_sites = 16;
  double slope_a = 1.0, slope_b = 1.0;
  std::vector<double> times{1.0, 10.0, 100.0};
  int depth = 6;
  double audit_epsilon = 1.0 / 16;
  double audit_t_bar = 1.0;
};

struct IdentitiesSection {
  int n_sites = 100;
  double slope_a = 1.0, slope_b = 1.0;
  double halfline_epsilon = 1.0 / 16;
  double halfline_slope = 1.0;
  int cstar_n = 32;
  double cstar_t_bar = 1.0;
};

struct SheSection {
  int m = 32;
  double slope_a = 1.0, slope_b = 2.0;
  double T = 0.05;
  std::size_t replicas = 10000;
};

struct CompareSection {
  std::vector<double> epsilons{1.0 / 32, 1.0 / 64};
  double slope_a = 0.0, slope_b = 0.0;
  double T = 0.1;
  std::vector<double> X_grid;  // default k/8
  std::size_t replicas = 4000;
  int she_m = 64;
  std::size_t she_replicas = 4000;
};

struct RunConfig {
  std::uint64_t seed = 1;
  ModelSection model;
  SimulateSection simulate;
  KernelSection kernel;
  IdentitiesSection identities;
  SheSection she;
  CompareSection compare;

  RunConfig();
  // Checks every module precondition; throws ConfigError listing all violations.
  void validate() const;
  // Flat "section.key" -> value text, in schema order; the config hash is taken over this.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Annotated INI with every key at its default.
std::string default_config_text();

// Canonical "section.key=value" lines.
std::string canonical_config(const RunConfig& cfg);

}  // namespace asepkpz

#include "asepkpz/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "asepkpz/errors.hpp"
#include "asepkpz/model_params.hpp"

namespace asepkpz {

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid configuration:";
  for (const auto& x : p) s += "\n  - " + x;
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string show(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string show(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + show(v[i]);
  return s;
}

std::optional<double> read_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

template <class I>
std::optional<I> read_integer(const std::string& text) {
  const std::string t = trim(text);
  I v = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<std::vector<double>> read_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = read_double(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::vector<double> eighths() {
  std::vector<double> x;
  for (int k = 0; k <= 8; ++k) x.push_back(k / 8.0);
  return x;
}

struct Key {
  std::string section, name, doc;
  std::function<std::string(const RunConfig&)> get;
  // empty string on success, else the expected form
  std::function<std::string(RunConfig&, const std::string&)> set;
};

template <class S>
Key real_key(std::string sec, std::string name, std::string doc, S RunConfig::*part, double S::*field) {
  return {sec, name, doc, [=](const RunConfig& c) { return show(c.*part.*field); },
          [=](RunConfig& c, const std::string& t) -> std::string {
            auto v = read_double(t);
            if (!v) return "a real number";
            c.*part.*field = *v;
            return "";
          }};
}

template <class S>
Key int_key(std::string sec, std::string name, std::string doc, S RunConfig::*part, int S::*field) {
  return {sec, name, doc, [=](const RunConfig& c) { return std::to_string(c.*part.*field); },
          [=](RunConfig& c, const std::string& t) -> std::string {
            auto v = read_integer<int>(t);
            if (!v) return "an integer";
            c.*part.*field = *v;
            return "";
          }};
}

template <class S>
Key count_key(std::string sec, std::string name, std::string doc, S RunConfig::*part,
              std::size_t S::*field) {
  return {sec, name, doc, [=](const RunConfig& c) { return std::to_string(c.*part.*field); },
          [=](RunConfig& c, const std::string& t) -> std::string {
            auto v = read_integer<std::size_t>(t);
            if (!v) return "a non-negative integer";
            c.*part.*field = *v;
            return "";
          }};
}

template <class S>
Key list_key(std::string sec, std::string name, std::string doc, S RunConfig::*part,
             std::vector<double> S::*field) {
  return {sec, name, doc, [=](const RunConfig& c) { return show(c.*part.*field); },
          [=](RunConfig& c, const std::string& t) -> std::string {
            auto v = read_list(t);
            if (!v) return "a comma-separated list of reals";
            c.*part.*field = *v;
            return "";
          }};
}

const std::vector<Key>& schema() {
  using R = RunConfig;
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"run", "seed", "master seed; every replica stream is derived from it",
                 [](const R& c) { return std::to_string(c.seed); },
                 [](R& c, const std::string& t) -> std::string {
                   auto v = read_integer<std::uint64_t>(t);
                   if (!v) return "an unsigned 64-bit integer";
                   c.seed = *v;
                   return "";
                 }});
    k.push_back(int_key("model", "n_sites", "interval size N; epsilon = 1/N (params kind)", &R::model,
                        &ModelSection::n_sites));
    k.push_back(real_key("model", "slope_a", "Robin slope A >= 0 at the left reservoir", &R::model,
                         &ModelSection::slope_a));
    k.push_back(real_key("model", "slope_b", "Robin slope B >= 0 at the right reservoir", &R::model,
                         &ModelSection::slope_b));

    k.push_back(count_key("simulate", "replicas", "ASEP replicas (>= 4)", &R::simulate,
                          &SimulateSection::replicas));
    k.push_back(real_key("simulate", "rho", "Bernoulli density of the initial configuration",
                         &R::simulate, &SimulateSection::rho));
    k.push_back(list_key("simulate", "T_grid", "macroscopic observation times, t = T N^2",
                         &R::simulate, &SimulateSection::T_grid));
    k.push_back(list_key("simulate", "X_grid", "macroscopic sites in [0, 1]; each X N an integer",
                         &R::simulate, &SimulateSection::X_grid));
    k.push_back(int_key("simulate", "test_functions",
                        "number of Robin test functions k = 0.. for the martingale check",
                        &R::simulate, &SimulateSection::test_functions));

    k.push_back(int_key("kernel", "n_sites", "interval size for spectrum and image kernels",
                        &R::kernel, &KernelSection::n_sites));
    k.push_back(real_key("kernel", "slope_a", "A for the kernel checks", &R::kernel,
                         &KernelSection::slope_a));
    k.push_back(real_key("kernel", "slope_b", "B for the kernel checks", &R::kernel,
                         &KernelSection::slope_b));
    k.push_back(list_key("kernel", "times", "microscopic times for image vs spectral", &R::kernel,
                         &KernelSection::times));
    k.push_back(int_key("kernel", "depth", "image expansion depth K", &R::kernel,
                        &KernelSection::depth));
    k.push_back(real_key("kernel", "audit_epsilon", "epsilon for the kernel bound audit",
                         &R::kernel, &KernelSection::audit_epsilon));
    k.push_back(real_key("kernel", "audit_t_bar", "macroscopic horizon of the bound audit",
                         &R::kernel, &KernelSection::audit_t_bar));

    k.push_back(int_key("identities", "n_sites", "interval size for the key identity",
                        &R::identities, &IdentitiesSection::n_sites));
    k.push_back(real_key("identities", "slope_a", "A (A and B not both 0)", &R::identities,
                         &IdentitiesSection::slope_a));
    k.push_back(real_key("identities", "slope_b", "B", &R::identities, &IdentitiesSection::slope_b));
    k.push_back(real_key("identities", "halfline_epsilon", "epsilon for the half-line identity",
                         &R::identities, &IdentitiesSection::halfline_epsilon));
    k.push_back(real_key("identities", "halfline_slope", "A on the half line", &R::identities,
                         &IdentitiesSection::halfline_slope));
    k.push_back(int_key("identities", "cstar_n", "interval size for the c-star sum", &R::identities,
                        &IdentitiesSection::cstar_n));
    k.push_back(real_key("identities", "cstar_t_bar", "macroscopic horizon of the c-star sum",
                         &R::identities, &IdentitiesSection::cstar_t_bar));

    k.push_back(int_key("she", "m", "grid intervals M on [0, 1] (8..128)", &R::she, &SheSection::m));
    k.push_back(real_key("she", "slope_a", "A", &R::she, &SheSection::slope_a));
    k.push_back(real_key("she", "slope_b", "B", &R::she, &SheSection::slope_b));
    k.push_back(real_key("she", "T", "output time; dt is the largest step <= dX^2 / 2 dividing it", &R::she,
                         &SheSection::T));
    k.push_back(count_key("she", "replicas", "SHE replicas (>= 4)", &R::she, &SheSection::replicas));

    k.push_back(list_key("compare", "epsilons", "ASEP epsilons, coarse to fine; 1/eps integers",
                         &R::compare, &CompareSection::epsilons));
    k.push_back(real_key("compare", "slope_a", "A", &R::compare, &CompareSection::slope_a));
    k.push_back(real_key("compare", "slope_b", "B", &R::compare, &CompareSection::slope_b));
    k.push_back(real_key("compare", "T", "comparison time", &R::compare, &CompareSection::T));
    k.push_back(list_key("compare", "X_grid", "comparison sites in [0, 1]", &R::compare,
                         &CompareSection::X_grid));
    k.push_back(count_key("compare", "replicas", "ASEP replicas per epsilon (>= 4)", &R::compare,
                          &CompareSection::replicas));
    k.push_back(int_key("compare", "she_m", "SHE grid intervals (8..128)", &R::compare,
                        &CompareSection::she_m));
    k.push_back(count_key("compare", "she_replicas", "SHE replicas (>= 4)", &R::compare,
                          &CompareSection::she_replicas));
    return k;
  }();
  return keys;
}

bool on_lattice(double X, double n) {
  const double x = X * n;
  return X >= 0.0 && X <= 1.0 && std::abs(x - std::round(x)) <= 1e-9;
}

void check_slopes(std::vector<std::string>& bad, const std::string& where, double a, double b, double n) {
  if (a < 0.0 || b < 0.0) bad.push_back(where + ": slopes must be >= 0");
  else if (a >= n || b >= n) bad.push_back(where + ": need A < N and B < N so that mu in (0, 1]");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

RunConfig::RunConfig() {
  simulate.X_grid = eighths();
  compare.X_grid = eighths();
}

void RunConfig::validate() const {
  std::vector<std::string> bad;

  if (model.n_sites < 2) bad.push_back("model.n_sites must be >= 2");
  else {
    check_slopes(bad, "model", model.slope_a, model.slope_b, model.n_sites);
    try {
      (void)build_params(ScalingParams::interval(model.n_sites, model.slope_a, model.slope_b));
    } catch (const PreconditionError& e) {
      bad.push_back(std::string("model: ") + e.what());
    }
  }

  const auto& s = simulate;
  if (s.replicas < 4) bad.push_back("simulate.replicas must be >= 4");
  if (!(s.rho > 0.0 && s.rho < 1.0)) bad.push_back("simulate.rho must lie in (0, 1)");
  if (s.T_grid.empty() || !std::is_sorted(s.T_grid.begin(), s.T_grid.end()) || s.T_grid.front() < 0.0 ||
      !(s.T_grid.back() > 0.0)) {
    bad.push_back("simulate.T_grid must be ascending, >= 0, with a positive last entry");
  }
  if (model.n_sites >= 2) {
    for (double X : s.X_grid) {
      if (!on_lattice(X, model.n_sites)) {
        bad.push_back("simulate.X_grid entry " + show(X) + " is not a site k/N in [0, 1]");
      }
    }
  }
  if (s.X_grid.empty()) bad.push_back("simulate.X_grid must not be empty");
  if (s.test_functions < 1 || s.test_functions > 8) bad.push_back("simulate.test_functions must be 1..8");

  const auto& k = kernel;
  if (k.n_sites < 1 || k.n_sites > 512) bad.push_back("kernel.n_sites must be 1..512");
  else check_slopes(bad, "kernel", k.slope_a, k.slope_b, k.n_sites);
  if (k.times.empty() || std::any_of(k.times.begin(), k.times.end(), [](double t) { return !(t > 0.0); })) {
    bad.push_back("kernel.times must be positive");
  }
  if (k.depth < 1 || k.depth > 20) bad.push_back("kernel.depth must be 1..20");
  if (!(k.audit_epsilon > 0.0 && k.audit_epsilon <= 0.25)) bad.push_back("kernel.audit_epsilon must lie in (0, 1/4]");
  else if (k.slope_a * k.audit_epsilon >= 1.0 || k.slope_b * k.audit_epsilon >= 1.0) {
    bad.push_back("kernel: A eps and B eps must be < 1 for the audit");
  }
  if (!(k.audit_t_bar > 0.0 && k.audit_t_bar <= 4.0)) bad.push_back("kernel.audit_t_bar must lie in (0, 4]");

  const auto& id = identities;
  if (id.n_sites < 2 || id.n_sites > 400) bad.push_back("identities.n_sites must be 2..400");
  else check_slopes(bad, "identities", id.slope_a, id.slope_b, id.n_sites);
  if (id.slope_a == 0.0 && id.slope_b == 0.0) {
    bad.push_back("identities: A = B = 0 makes the Green operator singular");
  }
  if (!(id.halfline_epsilon > 0.0) || id.halfline_slope < 0.0 ||
      !(id.halfline_slope * id.halfline_epsilon < 1.0)) {
    bad.push_back("identities: half line needs epsilon > 0 and 0 <= A eps < 1");
  }
  if (id.cstar_n < 4 || id.cstar_n > 256) bad.push_back("identities.cstar_n must be 4..256");
  if (!(id.cstar_t_bar > 0.0 && id.cstar_t_bar <= 4.0)) bad.push_back("identities.cstar_t_bar must lie in (0, 4]");

  const auto& h = she;
  if (h.m < 8 || h.m > 128) bad.push_back("she.m must be 8..128");
  else check_slopes(bad, "she", h.slope_a, h.slope_b, h.m);
  if (!(h.T > 0.0)) bad.push_back("she.T must be > 0");
  if (h.replicas < 4) bad.push_back("she.replicas must be >= 4");

  const auto& c = compare;
  if (c.epsilons.size() < 2) bad.push_back("compare.epsilons needs at least two values");
  for (double e : c.epsilons) {
    if (!(e > 0.0 && e <= 0.5) || std::abs(1.0 / e - std::round(1.0 / e)) > 1e-9) {
      bad.push_back("compare.epsilons entry " + show(e) + " must be 1/N for an integer N >= 2");
      continue;
    }
    for (double X : c.X_grid) {
      if (!on_lattice(X, std::round(1.0 / e))) {
        bad.push_back("compare.X_grid entry " + show(X) + " is not a site for epsilon " + show(e));
      }
    }
    check_slopes(bad, "compare", c.slope_a, c.slope_b, std::round(1.0 / e));
  }
  if (c.X_grid.empty()) bad.push_back("compare.X_grid must not be empty");
  if (!(c.T > 0.0)) bad.push_back("compare.T must be > 0");
  if (c.replicas < 4) bad.push_back("compare.replicas must be >= 4");
  if (c.she_replicas < 4) bad.push_back("compare.she_replicas must be >= 4");
  if (c.she_m < 8 || c.she_m > 128) bad.push_back("compare.she_m must be 8..128");
  else {
    for (double X : c.X_grid) {
      if (!on_lattice(X, c.she_m)) bad.push_back("compare.X_grid entry " + show(X) + " is not an SHE node");
    }
  }

  if (!bad.empty()) throw ConfigError(bad);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : schema()) out.emplace_back(k.section + "." + k.name, k.get(*this));
  return out;
}

RunConfig parse_config_text(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  RunConfig cfg;
  std::vector<std::string> bad;
  std::set<std::string> known;
  for (const auto& k : schema()) known.insert(k.section + "." + k.name);

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      bad.push_back("key '" + section + "' outside any section");
      continue;
    }
    for (const auto& [name, leaf] : body) {
      if (!known.count(section + "." + name)) bad.push_back("unknown key " + section + "." + name);
      (void)leaf;
    }
  }
  for (const auto& k : schema()) {
    auto node = tree.get_child_optional(pt::ptree::path_type(k.section + "." + k.name, '.'));
    if (!node) continue;
    const std::string err = k.set(cfg, node->data());
    if (!err.empty()) {
      bad.push_back(k.section + "." + k.name + " = '" + node->data() + "' is not " + err);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    bad.insert(bad.end(), e.problems().begin(), e.problems().end());
  }
  if (!bad.empty()) throw ConfigError(bad);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string default_config_text() {
  const RunConfig def;
  std::ostringstream out;
  out << "; asepkpz run configuration. Every key is optional; shown values are the defaults.\n";
  std::string section;
  for (const auto& k : schema()) {
    if (k.section != section) {
      section = k.section;
      out << "\n[" << section << "]\n";
    }
    out << "; " << k.doc << "\n" << k.name << " = " << k.get(def) << "\n";
  }
  return out.str();
}

std::string canonical_config(const RunConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg.entries()) s += k + "=" + v + "\n";
  return s;
}

}  // namespace asepkpz

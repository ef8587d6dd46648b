#include "asepkpz/asep_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "asepkpz/csv.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/rng.hpp"

namespace asepkpz {

Lattice Lattice::interval(int n) {
  require(n >= 1, "interval lattice needs N >= 1");
  return {LatticeKind::Interval, n};
}

Lattice Lattice::half_line(int l) {
  require(l >= 1, "half-line truncation needs L >= 1");
  return {LatticeKind::HalfLineTruncated, l};
}

int half_line_truncation(int x_max, double horizon, double delta) {
  require(x_max >= 0 && horizon >= 0 && delta > 0 && delta < 1, "bad truncation inputs");
  return x_max + static_cast<int>(std::ceil(4.0 * std::sqrt(horizon) * std::log(1.0 / delta))) + 1;
}

HeightField heights_from(const Configuration& c, std::int64_t h0) {
  HeightField hf;
  hf.h.resize(c.eta.size() + 1);
  hf.h[0] = h0;
  for (std::size_t i = 0; i < c.eta.size(); ++i) hf.h[i + 1] = hf.h[i] + c.eta[i];
  return hf;
}

Configuration config_from(const HeightField& hf) {
  Configuration c;
  c.eta.resize(hf.h.size() - 1);
  for (std::size_t i = 0; i + 1 < hf.h.size(); ++i) {
    const auto d = hf.h[i + 1] - hf.h[i];
    require(d == 1 || d == -1, "height field violates |grad h| = 1");
    c.eta[i] = static_cast<std::int8_t>(d);
  }
  return c;
}

bool heights_consistent(const Configuration& c, const HeightField& hf) {
  if (hf.h.size() != c.eta.size() + 1) return false;
  for (std::size_t i = 0; i < c.eta.size(); ++i) {
    if (hf.h[i + 1] - hf.h[i] != c.eta[i]) return false;
  }
  return true;
}

std::vector<Event> event_rates(const Configuration& c, const ModelParams& m, const Lattice& lat) {
  const int n = c.size();
  require(n == lat.size && n >= 1, "configuration does not match lattice");
  std::vector<Event> ev;
  ev.reserve(2 * static_cast<std::size_t>(n) + 2);
  for (int x = 1; x < n; ++x) {
    const double a = c.at(x), b = c.at(x + 1);
    ev.push_back({EventKind::RightJump, x, 0.25 * m.p * (1 + a) * (1 - b)});
    ev.push_back({EventKind::LeftJump, x, 0.25 * m.q * (1 - a) * (1 + b)});
  }
  const double e1 = c.at(1);
  ev.push_back({EventKind::CreateLeft, 1, 0.5 * m.alpha * (1 - e1)});
  ev.push_back({EventKind::AnnihilateLeft, 1, 0.5 * m.gamma * (1 + e1)});
  if (lat.right_reservoir()) {
    const double en = c.at(n);
    ev.push_back({EventKind::CreateRight, n, 0.5 * m.delta * (1 - en)});
    ev.push_back({EventKind::AnnihilateRight, n, 0.5 * m.beta * (1 + en)});
  }
  return ev;
}

namespace {

class IndexSet {
 public:
  explicit IndexSet(int capacity) : pos_(static_cast<std::size_t>(capacity), -1) {}
  void set(int k, bool on) {
    const int p = pos_[k];
    if (on && p < 0) {
      pos_[k] = static_cast<int>(items_.size());
      items_.push_back(k);
    } else if (!on && p >= 0) {
      const int last = items_.back();
      items_[p] = last;
      pos_[last] = p;
      items_.pop_back();
      pos_[k] = -1;
    }
  }
  std::size_t size() const { return items_.size(); }
  int at(std::size_t i) const { return items_[i]; }

 private:
  std::vector<int> items_;
  std::vector<int> pos_;
};

// Particle state with per-class event sets; every bulk event of a class has the same rate,
// so the total rate is exact and selection is O(1).
class ExclusionState {
 public:
  ExclusionState(const Configuration& init, const ModelParams& m, const Lattice& lat)
      : m_(m), right_(lat.right_reservoir()), n_(init.size()), cfg_(init),
        hf_(heights_from(init)), rset_(n_ + 1), lset_(n_ + 1) {
    for (int x = 1; x < n_; ++x) refresh_bond(x);
  }

  double left_rate() const { return cfg_.at(1) < 0 ? m_.alpha : m_.gamma; }
  double right_rate() const {
    if (!right_) return 0.0;
    return cfg_.at(n_) < 0 ? m_.delta : m_.beta;
  }
  double total() const {
    return m_.p * static_cast<double>(rset_.size()) + m_.q * static_cast<double>(lset_.size()) +
           left_rate() + right_rate();
  }

  Event pick(double u) const {
    const double wr = m_.p * static_cast<double>(rset_.size());
    if (u < wr) {
      const auto i = std::min(static_cast<std::size_t>(u / m_.p), rset_.size() - 1);
      return {EventKind::RightJump, rset_.at(i), m_.p};
    }
    u -= wr;
    const double wl = m_.q * static_cast<double>(lset_.size());
    if (u < wl) {
      const auto i = std::min(static_cast<std::size_t>(u / m_.q), lset_.size() - 1);
      return {EventKind::LeftJump, lset_.at(i), m_.q};
    }
    u -= wl;
    const double lr = left_rate();
    if (u < lr || right_rate() <= 0.0) {
      return {cfg_.at(1) < 0 ? EventKind::CreateLeft : EventKind::AnnihilateLeft, 1, lr};
    }
    return {cfg_.at(n_) < 0 ? EventKind::CreateRight : EventKind::AnnihilateRight, n_,
            right_rate()};
  }

  void apply(const Event& e) {
    auto& eta = cfg_.eta;
    auto& h = hf_.h;
    switch (e.kind) {
      case EventKind::RightJump:
        eta[e.site - 1] = -1;
        eta[e.site] = 1;
        h[e.site] -= 2;
        break;
      case EventKind::LeftJump:
        eta[e.site - 1] = 1;
        eta[e.site] = -1;
        h[e.site] += 2;
        break;
      case EventKind::CreateLeft:
        eta[0] = 1;
        h[0] -= 2;
        break;
      case EventKind::AnnihilateLeft:
        eta[0] = -1;
        h[0] += 2;
        break;
      case EventKind::CreateRight:
        eta[n_ - 1] = 1;
        h[n_] += 2;
        break;
      case EventKind::AnnihilateRight:
        eta[n_ - 1] = -1;
        h[n_] -= 2;
        break;
    }
    for (int x = std::max(1, e.site - 1); x <= std::min(n_ - 1, e.site + 1); ++x) refresh_bond(x);
  }

  const Configuration& config() const { return cfg_; }
  const HeightField& heights() const { return hf_; }

 private:
  void refresh_bond(int x) {
    const int a = cfg_.at(x), b = cfg_.at(x + 1);
    rset_.set(x, a > 0 && b < 0);
    lset_.set(x, a < 0 && b > 0);
  }

  ModelParams m_;
  bool right_;
  int n_;
  Configuration cfg_;
  HeightField hf_;
  IndexSet rset_, lset_;
};

void check_samples(std::span<const double> samples, double horizon) {
  require(horizon >= 0.0, "horizon must be >= 0");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i] >= 0.0 && samples[i] <= horizon, "sample time outside [0, horizon]");
    require(i == 0 || samples[i] >= samples[i - 1], "sample times must be non-decreasing");
  }
}

}  // namespace

Trajectory simulate(const Configuration& initial, const ModelParams& params, const Lattice& lattice,
                    double horizon, std::span<const double> sample_times, std::uint64_t seed,
                    SimulationObserver* obs) {
  require(lattice.size >= 1 && initial.size() == lattice.size, "empty or mismatched lattice");
  check_samples(sample_times, horizon);
  Trajectory tr;
  tr.seed = seed;
  tr.sample_times.assign(sample_times.begin(), sample_times.end());
  tr.snapshots.reserve(sample_times.size());

  Rng rng(seed);
  ExclusionState st(initial, params, lattice);
  if (obs) obs->on_start(st.config(), st.heights());
  std::size_t next = 0;
  double t = 0.0;
  while (true) {
    const double total = st.total();
    const double t_next =
        total > 0.0 ? t + rng.exponential(total) : std::numeric_limits<double>::infinity();
    while (next < sample_times.size() && sample_times[next] < t_next) {
      tr.snapshots.push_back({sample_times[next], st.config(), st.heights()});
      ++next;
    }
    if (t_next > horizon) {
      while (next < sample_times.size()) {
        tr.snapshots.push_back({sample_times[next], st.config(), st.heights()});
        ++next;
      }
      if (obs) obs->on_advance(t, horizon);
      break;
    }
    if (obs) obs->on_advance(t, t_next);
    const Event e = st.pick(rng.uniform() * total);
    st.apply(e);
    ++tr.event_count;
    t = t_next;
    if (obs) obs->on_event(e, t, st.config(), st.heights());
  }
  return tr;
}

Trajectory sos_simulate(const HeightField& initial, const ModelParams& m, const Lattice& lattice,
                        double horizon, std::span<const double> sample_times, std::uint64_t seed) {
  const int n = initial.size();
  require(n >= 1 && n == lattice.size, "empty or mismatched lattice");
  for (int x = 0; x < n; ++x) {
    const auto d = initial.h[x + 1] - initial.h[x];
    require(d == 1 || d == -1, "initial height violates |grad h| = 1");
  }
  check_samples(sample_times, horizon);

  struct Move {
    int x;
    int dh;
    double rate;
  };
  Trajectory tr;
  tr.seed = seed;
  tr.sample_times.assign(sample_times.begin(), sample_times.end());
  Rng rng(seed);
  HeightField hf = initial;
  auto& h = hf.h;
  std::vector<Move> moves;
  std::size_t next = 0;
  double t = 0.0;
  while (true) {
    moves.clear();
    double total = 0.0;
    auto add = [&](int x, int dh, double r) {
      if (r > 0) {
        moves.push_back({x, dh, r});
        total += r;
      }
    };
    for (int x = 1; x < n; ++x) {
      const auto lap = h[x - 1] - 2 * h[x] + h[x + 1];
      if (lap == 2) add(x, 2, m.q);
      if (lap == -2) add(x, -2, m.p);
    }
    const auto g0 = h[1] - h[0];
    add(0, g0 == 1 ? 2 : -2, g0 == 1 ? m.gamma : m.alpha);
    if (lattice.right_reservoir()) {
      const auto gn = h[n - 1] - h[n];
      add(n, gn == 1 ? 2 : -2, gn == 1 ? m.delta : m.beta);
    }
    const double t_next =
        total > 0 ? t + rng.exponential(total) : std::numeric_limits<double>::infinity();
    while (next < sample_times.size() && (sample_times[next] < t_next || t_next > horizon)) {
      tr.snapshots.push_back({sample_times[next], config_from(hf), hf});
      ++next;
    }
    if (t_next > horizon) break;
    double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < moves.size() && u >= moves[k].rate) {
      u -= moves[k].rate;
      ++k;
    }
    h[moves[k].x] += moves[k].dh;
    ++tr.event_count;
    t = t_next;
  }
  return tr;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> exact_generator(const ModelParams& params, int n) {
  require(n >= 1 && n <= 12, "exact_generator supports 1 <= N <= 12");
  const int states = 1 << n;
  const Lattice lat = Lattice::interval(n);
  std::vector<Eigen::Triplet<double>> trip;
  Configuration c;
  c.eta.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) c.eta[i] = (s >> i) & 1 ? 1 : -1;
    double out = 0.0;
    for (const Event& e : event_rates(c, params, lat)) {
      if (e.rate <= 0.0) continue;
      int target = s;
      switch (e.kind) {
        case EventKind::RightJump:
        case EventKind::LeftJump:
          target ^= (1 << (e.site - 1)) | (1 << e.site);
          break;
        default:
          target ^= 1 << (e.site - 1);
      }
      trip.emplace_back(s, target, e.rate);
      out += e.rate;
    }
    trip.emplace_back(s, s, -out);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> q(states, states);
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

Eigen::VectorXd stationary_measure(const Eigen::SparseMatrix<double, Eigen::RowMajor>& gen) {
  const Eigen::Index n = gen.rows();
  require(n == gen.cols() && n >= 1, "generator must be square");
  Eigen::MatrixXd a = Eigen::MatrixXd(gen).transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = a.partialPivLu().solve(rhs);
  if (!pi.allFinite()) throw NumericalError("stationary solve singular (reducible generator?)");
  const double resid = (gen.transpose() * pi).cwiseAbs().maxCoeff();
  if (resid > 1e-10 || pi.minCoeff() < -1e-12) {
    throw NumericalError("stationary solve failed (reducible generator?)");
  }
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

double mean_current(const Eigen::VectorXd& pi, const ModelParams& m, int n) {
  require(pi.size() == (Eigen::Index{1} << n), "measure size does not match N");
  double flux = 0.0;
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    flux += pi(s) * ((s & 1) ? -m.gamma : m.alpha);
  }
  return flux / (m.p - m.q);
}

Eigen::VectorXd product_bernoulli(int n, double rho) {
  Eigen::VectorXd pi(Eigen::Index{1} << n);
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) w *= (s >> i) & 1 ? rho : 1.0 - rho;
    pi(s) = w;
  }
  return pi;
}

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

Configuration flat_configuration(int n) {
  require(n >= 1, "n >= 1");
  Configuration c;
  c.eta.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c.eta[i] = (i % 2 == 0) ? -1 : 1;
  return c;
}

Configuration bernoulli_configuration(int n, double rho, Rng& rng) {
  require(n >= 1 && rho >= 0 && rho <= 1, "bad Bernoulli inputs");
  Configuration c;
  c.eta.resize(static_cast<std::size_t>(n));
  for (auto& e : c.eta) e = static_cast<std::int8_t>(rng.spin(rho));
  return c;
}

HeightField read_height_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open height file " + path);
  HeightField hf;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long v;
    require(static_cast<bool>(ls >> v), "height file: non-integer line '" + line + "'");
    hf.h.push_back(v);
  }
  require(hf.h.size() >= 2, "height file needs h(0) and at least one site");
  config_from(hf);  // validates slopes
  return hf;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& prefix) {
  CsvWriter eta(prefix + "_eta.csv", {"time", "site", "eta"});
  CsvWriter hts(prefix + "_heights.csv", {"time", "site", "h"});
  for (const auto& s : tr.snapshots) {
    for (int x = 1; x <= s.config.size(); ++x) {
      eta << s.time << x << s.config.at(x);
      eta.end_row();
    }
    for (int x = 0; x <= s.heights.size(); ++x) {
      hts << s.time << x << static_cast<long long>(s.heights.h[x]);
      hts.end_row();
    }
  }
}

}  // namespace asepkpz

#include "asepkpz/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asepkpz/errors.hpp"
#include "asepkpz/gartner_transform.hpp"
#include "asepkpz/parallel.hpp"
#include "asepkpz/rng.hpp"

namespace asepkpz {

namespace {

constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamDynamics = 2;

// last site where the drift identity holds
int last_site(const Lattice& lat) { return lat.right_reservoir() ? lat.size : lat.size - 1; }

// phi sampled on x = 0..N and w = eps * (Robin Laplacian of phi)
struct PhiData {
  std::vector<double> phi;
  std::vector<double> w;
};

PhiData phi_data(const TestFunction& tf, const ModelParams& m, const Lattice& lat, double eps) {
  const int n = lat.size;
  PhiData d;
  d.phi.resize(n + 1);
  for (int x = 0; x <= n; ++x) d.phi[x] = tf(eps * x);
  d.w.assign(n + 1, 0.0);
  if (lat.right_reservoir()) {
    for (int x = 0; x <= n; ++x) {
      const double left = x == 0 ? m.mu_a * d.phi[0] : d.phi[x - 1];
      const double right = x == n ? m.mu_b * d.phi[n] : d.phi[x + 1];
      d.w[x] = eps * (left + right - 2.0 * d.phi[x]);
    }
  } else {
    // sum over x = 0..L-1 only; phi must vanish near the truncation
    require(d.phi[n] == 0.0 && d.phi[n - 1] == 0.0,
            "test function support reaches the half-line truncation");
    for (int x = 0; x < n; ++x) {
      const double left = x == 0 ? m.mu_a * d.phi[0] : d.phi[x - 1];
      d.w[x] = eps * (left + d.phi[x + 1] - 2.0 * d.phi[x]);
    }
  }
  return d;
}

// integral of e^{k nu s} over [t0, t1]
double exp_segment(double k_nu, double t0, double t1) {
  if (k_nu == 0.0) return t1 - t0;
  return std::exp(k_nu * t0) * std::expm1(k_nu * (t1 - t0)) / k_nu;
}

class Observer : public SimulationObserver {
 public:
  Observer(const EnsembleSetup& s, ReplicaRecord& rec) : s_(s), rec_(rec) {
    const double eps = s.epsilon;
    for (const auto& tf : s.phis) phis_.push_back(phi_data(tf, s.params, s.lattice, eps));
    for (double T : s.T_grid) times_.push_back(T / (eps * eps));
    sites_ = s.sites();
    const std::size_t nt = times_.size(), np = phis_.size();
    rec_.z.assign(nt * sites_.size(), 0.0);
    rec_.n.assign(np * nt, 0.0);
    rec_.bracket = rec_.n;
    rec_.leading = rec_.n;
  }

  void on_start(const Configuration& c, const HeightField& h) override {
    const int n = s_.lattice.size;
    y_.resize(n + 1);
    for (int x = 0; x <= n; ++x) y_[x] = std::exp(-s_.params.lambda * static_cast<double>(h.h[x]));
    const std::size_t np = phis_.size();
    s_phi_.assign(np, 0.0);
    s_w_.assign(np, 0.0);
    s_b_.assign(np, 0.0);
    s_l_.assign(np, 0.0);
    i_w_.assign(np, 0.0);
    i_b_.assign(np, 0.0);
    i_l_.assign(np, 0.0);
    rate_.assign(n + 1, 0.0);
    for (int x = 0; x <= last_site(s_.lattice); ++x) rate_[x] = bracket_rate(c, s_.params, s_.lattice, x).rate;
    resum();
    for (std::size_t k = 0; k < np; ++k) s_phi0_.push_back(s_phi_[k]);
  }

  void on_advance(double t0, double t1) override {
    while (next_ < times_.size() && times_[next_] >= t0 && times_[next_] < t1) {
      integrate(t0, times_[next_]);
      t0 = times_[next_];
      record(next_);
      ++next_;
    }
    integrate(t0, t1);
  }

  void on_event(const Event& e, double, const Configuration& c, const HeightField& h) override {
    ++rec_.events;
    int x;
    switch (e.kind) {
      case EventKind::RightJump:
      case EventKind::LeftJump: x = e.site; break;
      case EventKind::CreateLeft:
      case EventKind::AnnihilateLeft: x = 0; break;
      default: x = s_.lattice.size; break;
    }
    const double eps = s_.epsilon;
    const double y_new = std::exp(-s_.params.lambda * static_cast<double>(h.h[x]));
    const double dy = y_new - y_[x];
    const double dy2 = y_new * y_new - y_[x] * y_[x];
    const int last = last_site(s_.lattice);
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      const auto& p = phis_[k];
      s_phi_[k] += eps * p.phi[x] * dy;
      s_w_[k] += p.w[x] * dy;
      if (x <= last) s_l_[k] += eps * eps * eps * p.phi[x] * p.phi[x] * dy2;
    }
    // bracket terms at x-1, x, x+1 change through eta and Y(x)
    const int lo = std::max(0, x - 1), hi = std::min(last, x + 1);
    for (int z = lo; z <= hi; ++z) {
      for (std::size_t k = 0; k < phis_.size(); ++k) {
        s_b_[k] -= eps * eps * phis_[k].phi[z] * phis_[k].phi[z] * rate_[z] * y_[z] * y_[z];
      }
    }
    y_[x] = y_new;
    for (int z = lo; z <= hi; ++z) {
      rate_[z] = bracket_rate(c, s_.params, s_.lattice, z).rate;
      for (std::size_t k = 0; k < phis_.size(); ++k) {
        s_b_[k] += eps * eps * phis_[k].phi[z] * phis_[k].phi[z] * rate_[z] * y_[z] * y_[z];
      }
    }
  }

  bool complete() const { return next_ == times_.size(); }

 private:
  void resum() {
    const double eps = s_.epsilon;
    const int n = s_.lattice.size, last = last_site(s_.lattice);
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      const auto& p = phis_[k];
      double a = 0, b = 0, c = 0, d = 0;
      for (int x = 0; x <= n; ++x) {
        a += eps * p.phi[x] * y_[x];
        b += p.w[x] * y_[x];
        if (x <= last) {
          c += eps * eps * p.phi[x] * p.phi[x] * rate_[x] * y_[x] * y_[x];
          d += eps * eps * eps * p.phi[x] * p.phi[x] * y_[x] * y_[x];
        }
      }
      s_phi_[k] = a;
      s_w_[k] = b;
      s_b_[k] = c;
      s_l_[k] = d;
    }
  }

  void integrate(double t0, double t1) {
    if (t1 <= t0) return;
    const double nu = s_.params.nu;
    const double e1 = exp_segment(nu, t0, t1), e2 = exp_segment(2.0 * nu, t0, t1);
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      i_w_[k] += s_w_[k] * e1;
      i_b_[k] += s_b_[k] * e2;
      i_l_[k] += s_l_[k] * e2;
    }
  }

  void record(std::size_t i) {
    resum();  // limit drift in the running sums
    const double t = times_[i];
    const double g = std::exp(s_.params.nu * t);
    const std::size_t nt = times_.size();
    for (std::size_t j = 0; j < sites_.size(); ++j) rec_.z[i * sites_.size() + j] = g * y_[sites_[j]];
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      rec_.n[k * nt + i] = g * s_phi_[k] - s_phi0_[k] - 0.5 * i_w_[k];
      rec_.bracket[k * nt + i] = i_b_[k];
      rec_.leading[k * nt + i] = i_l_[k];
    }
  }

  const EnsembleSetup& s_;
  ReplicaRecord& rec_;
  std::vector<PhiData> phis_;
  std::vector<double> times_;
  std::vector<int> sites_;
  std::size_t next_ = 0;
  std::vector<double> y_, rate_;
  std::vector<double> s_phi_, s_phi0_, s_w_, s_b_, s_l_;
  std::vector<double> i_w_, i_b_, i_l_;
};

}  // namespace

void EnsembleSetup::validate() const {
  std::vector<std::string> bad;
  if (!(epsilon > 0.0)) bad.push_back("epsilon > 0");
  if (lattice.size < 2) bad.push_back("lattice size >= 2");
  if (!(rho > 0.0 && rho < 1.0)) bad.push_back("0 < rho < 1");
  if (T_grid.empty() || !std::is_sorted(T_grid.begin(), T_grid.end()) || T_grid.front() < 0.0) {
    bad.push_back("T grid non-empty, ascending, >= 0");
  }
  if (!bad.empty()) {
    std::string msg = "invalid ensemble setup:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw PreconditionError(msg);
  }
  (void)sites();
}

std::vector<int> EnsembleSetup::sites() const {
  std::vector<int> out;
  for (double X : X_grid) {
    const double x = X / epsilon;
    const long r = std::lround(x);
    if (std::abs(x - r) > 1e-9 || r < 0 || r > lattice.size) {
      std::ostringstream msg;
      msg << "X = " << X << " is not a lattice site for epsilon = " << epsilon;
      throw PreconditionError(msg.str());
    }
    out.push_back(static_cast<int>(r));
  }
  return out;
}

ReplicaRecord run_replica(const EnsembleSetup& s, std::uint64_t master, std::size_t index) {
  ReplicaRecord rec;
  Rng init(derive_seed(master, kStreamInit, index));
  const Configuration c0 = bernoulli_configuration(s.lattice.size, s.rho, init);
  Observer obs(s, rec);
  const double t_end = s.T_grid.back() / (s.epsilon * s.epsilon);
  const double horizon = t_end * (1.0 + 1e-12) + 1e-9;
  simulate(c0, s.params, s.lattice, horizon, {}, derive_seed(master, kStreamDynamics, index), &obs);
  if (!obs.complete()) throw NumericalError("observer missed a record time");
  return rec;
}

std::vector<ReplicaRecord> run_ensemble(const EnsembleSetup& s, std::size_t replicas,
                                        std::uint64_t master, int threads) {
  s.validate();
  require(replicas >= 1, "replica count must be >= 1");
  std::vector<ReplicaRecord> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t i) { out[i] = run_replica(s, master, i); });
  return out;
}

Stat summarize(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  s.se = s.sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

bool MartingaleReport::pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const MartingaleRow& r) { return r.pass; });
}

MartingaleReport martingale_diagnostics(const EnsembleSetup& s,
                                        const std::vector<ReplicaRecord>& records) {
  require(!records.empty(), "no replicas");
  const std::size_t nt = s.T_grid.size();
  MartingaleReport rep;
  for (std::size_t k = 0; k < s.phis.size(); ++k) {
    for (std::size_t i = 0; i < nt; ++i) {
      std::vector<double> n, qe, ql;
      for (const auto& r : records) {
        const double v = r.n[k * nt + i];
        n.push_back(v);
        qe.push_back(v * v - r.bracket[k * nt + i]);
        ql.push_back(v * v - r.leading[k * nt + i]);
      }
      MartingaleRow row;
      row.phi = s.phis[k].name;
      row.T = s.T_grid[i];
      row.n = summarize(n);
      row.q_exact = summarize(qe);
      row.q_leading = summarize(ql);
      // T = 0 is identically zero
      row.pass = s.T_grid[i] == 0.0 ? (row.n.mean == 0.0 && row.q_leading.mean == 0.0)
                                    : (row.n.within(3.0) && row.q_leading.within(3.0));
      rep.rows.push_back(row);
    }
  }
  return rep;
}

SampledMartingale martingale_from_trajectory(const Trajectory& tr, const ModelParams& m,
                                             const Lattice& lat, const TestFunction& tf) {
  require(m.epsilon > 0.0, "martingale needs a weakly asymmetric model");
  require(!tr.snapshots.empty(), "trajectory has no snapshots");
  const double eps = m.epsilon;
  const PhiData p = phi_data(tf, m, lat, eps);
  SampledMartingale out;
  auto pair = [&](const Snapshot& s) {
    const ZField z = z_field(s.heights, s.time, m);
    double a = 0.0, b = 0.0;
    for (int x = 0; x <= z.size(); ++x) {
      a += eps * p.phi[x] * z.value(x);
      b += p.w[x] * z.value(x);
    }
    return std::pair{a, b};
  };
  const auto [a0, b0] = pair(tr.snapshots.front());
  double integral = 0.0, prev_b = b0, prev_t = tr.snapshots.front().time, gap = 0.0;
  for (const auto& s : tr.snapshots) {
    const auto [a, b] = pair(s);
    integral += 0.5 * (b + prev_b) * (s.time - prev_t);
    gap = std::max(gap, s.time - prev_t);
    prev_b = b;
    prev_t = s.time;
    out.times.push_back(s.time);
    out.n.push_back(a - a0 - 0.5 * integral);
  }
  out.resolved = gap <= 1e-3 / (eps * eps);
  return out;
}

}  // namespace asepkpz

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "asepkpz/asep_engine.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/rng.hpp"
#include "oracles.hpp"

using namespace asepkpz;

namespace {

Configuration config_of(std::initializer_list<int> v) {
  Configuration c;
  for (int e : v) c.eta.push_back(static_cast<std::int8_t>(e));
  return c;
}

double rate_of(const std::vector<Event>& ev, EventKind k, int site) {
  for (const auto& e : ev) {
    if (e.kind == k && e.site == site) return e.rate;
  }
  return -1.0;
}

ModelParams symmetric_params() {
  ModelParams m;
  m.p = m.q = 0.5;
  m.alpha = m.gamma = 0.3;
  m.beta = m.delta = 0.2;
  return m;
}

// Watches every event: height consistency and boundary locality.
class LocalityObserver : public SimulationObserver {
 public:
  void on_start(const Configuration&, const HeightField& h) override { prev_ = h; }
  void on_event(const Event& e, double, const Configuration& c, const HeightField& h) override {
    ok = ok && heights_consistent(c, h);
    const int n = h.size();
    for (int x = 0; x <= n; ++x) {
      const auto d = h.h[x] - prev_.h[x];
      int expect = 0;
      switch (e.kind) {
        case EventKind::CreateLeft: expect = x == 0 ? -2 : 0; break;
        case EventKind::AnnihilateLeft: expect = x == 0 ? 2 : 0; break;
        case EventKind::CreateRight: expect = x == n ? 2 : 0; break;
        case EventKind::AnnihilateRight: expect = x == n ? -2 : 0; break;
        case EventKind::RightJump: expect = x == e.site ? -2 : 0; break;
        case EventKind::LeftJump: expect = x == e.site ? 2 : 0; break;
      }
      ok = ok && d == expect;
    }
    prev_ = h;
    ++events;
  }
  bool ok = true;
  long events = 0;

 private:
  HeightField prev_;
};

// Time spent with eta(1) = -1 and the number of left creations.
class CreationCounter : public SimulationObserver {
 public:
  void on_start(const Configuration& c, const HeightField&) override { empty_ = c.at(1) < 0; }
  void on_advance(double t0, double t1) override {
    if (empty_) exposure += t1 - t0;
  }
  void on_event(const Event& e, double, const Configuration& c, const HeightField&) override {
    if (e.kind == EventKind::CreateLeft) ++created;
    empty_ = c.at(1) < 0;
  }
  double exposure = 0.0;
  long created = 0;

 private:
  bool empty_ = false;
};

class FluxCounter : public SimulationObserver {
 public:
  void on_event(const Event& e, double, const Configuration&, const HeightField&) override {
    if (e.kind == EventKind::CreateLeft) ++net;
    if (e.kind == EventKind::AnnihilateLeft) --net;
  }
  long net = 0;
};

}  // namespace

TEST_CASE("event_rates: exclusion, boundary factors, bond rates") {
  const ModelParams m = build_params_free(1.0 / 16, 1.0, 2.0);
  const Lattice lat = Lattice::interval(4);
  const auto ev = event_rates(config_of({1, 1, -1, -1}), m, lat);
  CHECK(rate_of(ev, EventKind::RightJump, 1) == 0.0);
  CHECK(rate_of(ev, EventKind::LeftJump, 1) == 0.0);
  CHECK(rate_of(ev, EventKind::RightJump, 2) == m.p);
  CHECK(rate_of(ev, EventKind::LeftJump, 2) == 0.0);
  CHECK(rate_of(ev, EventKind::CreateLeft, 1) == 0.0);
  CHECK(rate_of(ev, EventKind::AnnihilateLeft, 1) == m.gamma);
  CHECK(rate_of(ev, EventKind::CreateRight, 4) == m.delta);
  CHECK(rate_of(ev, EventKind::AnnihilateRight, 4) == 0.0);
  for (const auto& e : ev) CHECK(e.rate >= 0.0);
}

TEST_CASE("half line has no right reservoir events") {
  const ModelParams m = build_params_free(1.0 / 16, 1.0, 0.0);
  const auto ev = event_rates(config_of({-1, 1, -1}), m, Lattice::half_line(3));
  CHECK(rate_of(ev, EventKind::CreateRight, 3) < 0.0);
  CHECK(rate_of(ev, EventKind::RightJump, 2) == m.p);
}

TEST_CASE("heights: slopes follow eta and round-trip") {
  const Configuration c = config_of({1, -1, -1, 1, 1});
  const HeightField h = heights_from(c, 4);
  CHECK(h.h == std::vector<std::int64_t>{4, 5, 4, 3, 4, 5});
  CHECK(config_from(h) == c);
  CHECK(heights_consistent(c, h));
  HeightField bad = h;
  bad.h[2] = 7;
  CHECK_THROWS_AS(config_from(bad), PreconditionError);
}

TEST_CASE("simulate: all rates zero keeps the trajectory constant") {
  ModelParams m;
  m.p = m.q = m.alpha = m.beta = m.gamma = m.delta = 0.0;
  const Configuration c = config_of({1, -1, 1});
  const std::vector<double> times{0.0, 1.0, 10.0};
  const Trajectory tr = simulate(c, m, Lattice::interval(3), 10.0, times, 5);
  CHECK(tr.event_count == 0);
  for (const auto& s : tr.snapshots) CHECK(s.config == c);
}

TEST_CASE("simulate: determinism and height invariants") {
  const ModelParams m = build_params_free(1.0 / 8, 1.0, 1.0);
  Rng r(3);
  const Configuration c = bernoulli_configuration(8, 0.5, r);
  const std::vector<double> times{0.0, 1.0, 5.0, 20.0};
  const Trajectory a = simulate(c, m, Lattice::interval(8), 20.0, times, 42);
  const Trajectory b = simulate(c, m, Lattice::interval(8), 20.0, times, 42);
  const Trajectory d = simulate(c, m, Lattice::interval(8), 20.0, times, 43);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  for (const auto& s : a.snapshots) CHECK(heights_consistent(s.config, s.heights));
}

TEST_CASE("simulate: event-level height consistency and boundary locality") {
  const ModelParams m = build_params_free(1.0 / 8, 1.0, 2.0);
  LocalityObserver obs;
  simulate(flat_configuration(8), m, Lattice::interval(8), 200.0, {}, 11, &obs);
  CHECK(obs.events > 300);
  CHECK(obs.ok);
}

TEST_CASE("simulate: rejects bad inputs") {
  const ModelParams m = build_params_free(1.0 / 8, 0.0, 0.0);
  const std::vector<double> bad{1.0, 0.5};
  CHECK_THROWS_AS(simulate(flat_configuration(4), m, Lattice::interval(4), 2.0, bad, 1), PreconditionError);
  CHECK_THROWS_AS(simulate(flat_configuration(4), m, Lattice::interval(5), 2.0, {}, 1), PreconditionError);
}

TEST_CASE("N = 1: occupation fraction matches the two-state chain") {
  const ModelParams m = build_params_free(0.09, 1.0, 2.0);
  const double f = oracle::two_state_plus_fraction(m.alpha, m.beta, m.gamma, m.delta);
  const int reps = 20000;
  const std::vector<double> at{30.0};
  int plus = 0;
  for (int i = 0; i < reps; ++i) {
    Rng r(derive_seed(9, 1, i));
    const Configuration c = bernoulli_configuration(1, 0.5, r);
    const Trajectory tr = simulate(c, m, Lattice::interval(1), 30.0, at, derive_seed(9, 2, i));
    plus += tr.snapshots[0].config.at(1) > 0;
  }
  const double est = double(plus) / reps;
  CHECK(std::abs(est - f) <= 3.0 * std::sqrt(f * (1 - f) / reps));
}

TEST_CASE("single event type: empirical rate equals alpha within 3 sigma") {
  const ModelParams m = build_params_free(0.09, 1.0, 2.0);
  CreationCounter obs;
  simulate(config_of({-1}), m, Lattice::interval(1), 60000.0, {}, 77, &obs);
  REQUIRE(obs.created >= 10000);
  const double rate = obs.created / obs.exposure;
  CHECK(std::abs(rate - m.alpha) <= 3.0 * std::sqrt(double(obs.created)) / obs.exposure);
}

TEST_CASE("SOS dynamics: staircase and flat-slope rules") {
  const ModelParams m = build_params_free(1.0 / 8, 0.0, 0.0);
  // all-up staircase: no interior flips, only boundary moves
  const HeightField stair = heights_from(config_of({1, 1, 1, 1}), 0);
  const std::vector<double> t{0.0, 1e-9};
  const Trajectory tr = sos_simulate(stair, m, Lattice::interval(4), 1e-9, t, 3);
  CHECK(tr.snapshots.back().heights == stair);
  HeightField bad = stair;
  bad.h[2] = 5;
  CHECK_THROWS_AS(sos_simulate(bad, m, Lattice::interval(4), 1.0, {}, 1), PreconditionError);
}

TEST_CASE("SOS and particle dynamics agree in law (N = 4, 1e4 replicas)") {
  const ModelParams m = build_params_free(1.0 / 4, 1.0, 1.0);
  const int n = 4, reps = 10000;
  const double horizon = 3.0;
  const std::vector<double> at{horizon};
  const Configuration c0 = config_of({1, -1, 1, -1});
  const HeightField h0 = heights_from(c0, 0);
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0), q1(n + 1, 0.0), q2(n + 1, 0.0);
  for (int i = 0; i < reps; ++i) {
    const auto a = simulate(c0, m, Lattice::interval(n), horizon, at, derive_seed(5, 1, i));
    const auto b = sos_simulate(h0, m, Lattice::interval(n), horizon, at, derive_seed(5, 2, i));
    for (int x = 0; x <= n; ++x) {
      const double ha = double(a.snapshots[0].heights.h[x]), hb = double(b.snapshots[0].heights.h[x]);
      s1[x] += ha;
      q1[x] += ha * ha;
      s2[x] += hb;
      q2[x] += hb * hb;
    }
  }
  for (int x = 0; x <= n; ++x) {
    const double m1 = s1[x] / reps, m2 = s2[x] / reps;
    const double v1 = q1[x] / reps - m1 * m1, v2 = q2[x] / reps - m2 * m2;
    INFO("x = " << x);
    CHECK(std::abs(m1 - m2) <= 3.0 * std::sqrt((v1 + v2) / reps));
  }
}

TEST_CASE("exact generator: N = 1 matrix, row sums, dense oracle") {
  const ModelParams m = build_params_free(0.09, 1.0, 2.0);
  const Eigen::MatrixXd q1 = Eigen::MatrixXd(exact_generator(m, 1));
  CHECK(std::abs(q1(0, 1) - (m.alpha + m.delta)) <= 1e-15);
  CHECK(std::abs(q1(1, 0) - (m.beta + m.gamma)) <= 1e-15);
  CHECK(std::abs(q1(0, 0) + (m.alpha + m.delta)) <= 1e-15);

  const ModelParams r = build_params_free(1.0 / 6, 0.7, 1.3);
  const Eigen::MatrixXd q6 = Eigen::MatrixXd(exact_generator(r, 6));
  CHECK(q6.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((q6 - oracle::dense_generator(r, 6)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(exact_generator(r, 13), PreconditionError);
}

TEST_CASE("symmetric rates: detailed balance w.r.t. the uniform measure") {
  const Eigen::MatrixXd q = Eigen::MatrixXd(exact_generator(symmetric_params(), 4));
  // Q^T D = D Q with D uniform reduces to Q symmetric
  CHECK((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  const Eigen::VectorXd pi = stationary_measure(exact_generator(symmetric_params(), 4));
  CHECK((pi.array() - 1.0 / 16).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("stationary measure: N = 1 closed form and nullspace oracle") {
  const ModelParams m = build_params_free(0.09, 1.0, 2.0);
  const Eigen::VectorXd pi = stationary_measure(exact_generator(m, 1));
  CHECK(std::abs(pi(1) - oracle::two_state_plus_fraction(m.alpha, m.beta, m.gamma, m.delta)) <= 1e-14);
  const ModelParams r = build_params_free(1.0 / 5, 0.5, 1.5);
  const Eigen::VectorXd p5 = stationary_measure(exact_generator(r, 5));
  CHECK((p5 - oracle::stationary_nullspace(oracle::dense_generator(r, 5))).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("equal-density line: product Bernoulli is stationary (N = 5)") {
  const ModelParams base = build_params_free(1.0 / 5, 0.0, 0.0);
  const double mu_b = 0.9;
  const ModelParams m = make_params(base.p, base.q, equal_density_mu_a(base.p, base.q, mu_b), mu_b);
  const double rho = m.alpha / m.p;
  const Eigen::VectorXd pi = stationary_measure(exact_generator(m, 5));
  CHECK(total_variation(pi, product_bernoulli(5, rho)) <= 1e-10);
}

TEST_CASE("mean current: blocked boundary and the equal-density line") {
  ModelParams blocked = build_params_free(1.0 / 4, 0.0, 0.0);
  blocked.alpha = blocked.gamma = 0.0;
  CHECK(mean_current(stationary_measure(exact_generator(blocked, 3)), blocked, 3) == 0.0);

  // product measure is stationary there, so J = rho (1 - rho) for every N
  const ModelParams base = build_params_free(1.0 / 4, 0.0, 0.0);
  const ModelParams m = make_params(base.p, base.q, equal_density_mu_a(base.p, base.q, 0.95), 0.95);
  const double rho = m.alpha / m.p;
  for (int n : {4, 6, 8}) {
    const double j = mean_current(stationary_measure(exact_generator(m, n)), m, n);
    CHECK(std::abs(j - rho * (1.0 - rho)) <= 1e-12);
  }
}

TEST_CASE("mean current: N = 2 matches a flux-counting simulation") {
  const ModelParams m = build_params_free(0.25, 1.0, 0.5);
  const Eigen::VectorXd pi = stationary_measure(exact_generator(m, 2));
  const double j = mean_current(pi, m, 2);
  const int reps = 400;
  const double horizon = 200.0;
  std::vector<double> flux;
  for (int i = 0; i < reps; ++i) {
    Rng r(derive_seed(21, 1, i));
    // stationary start drawn from pi
    const double u = r.uniform();
    int s = 0;
    double acc = pi(0);
    while (u > acc && s < 3) acc += pi(++s);
    const Configuration c = config_of({(s & 1) ? 1 : -1, (s & 2) ? 1 : -1});
    FluxCounter obs;
    simulate(c, m, Lattice::interval(2), horizon, {}, derive_seed(21, 2, i), &obs);
    flux.push_back(obs.net / horizon / (m.p - m.q));
  }
  double mean = 0.0, ss = 0.0;
  for (double f : flux) mean += f;
  mean /= reps;
  for (double f : flux) ss += (f - mean) * (f - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  CHECK(std::abs(mean - j) <= 3.0 * se);
}

TEST_CASE("half-line truncation rule") {
  const int l = half_line_truncation(40, 100.0, 1e-6);
  CHECK(l >= 40 + 4.0 * 10.0 * std::log(1e6));
  CHECK_THROWS_AS(half_line_truncation(-1, 1.0), PreconditionError);
}

TEST_CASE("height file input and trajectory CSV export") {
  const auto dir = std::filesystem::temp_directory_path() / "asepkpz_engine_test";
  std::filesystem::create_directories(dir);
  const auto file = (dir / "h.txt").string();
  {
    std::ofstream out(file);
    out << "2\n3\n2\n1\n2\n";
  }
  const HeightField h = read_height_file(file);
  CHECK(h.h == std::vector<std::int64_t>{2, 3, 2, 1, 2});
  {
    std::ofstream out(file);
    out << "0\n2\n";
  }
  CHECK_THROWS_AS(read_height_file(file), PreconditionError);

  const ModelParams m = build_params_free(1.0 / 4, 0.0, 0.0);
  const std::vector<double> times{0.0, 1.0};
  const Trajectory tr = simulate(config_from(h), m, Lattice::interval(4), 1.0, times, 2);
  write_trajectory_csv(tr, (dir / "traj").string());
  std::ifstream eta((dir / "traj_eta.csv").string());
  std::string line;
  int lines = 0;
  while (std::getline(eta, line)) ++lines;
  CHECK(lines == 1 + 2 * 4);
  std::filesystem::remove_all(dir);
}

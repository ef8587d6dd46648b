#include "asepkpz/gartner_transform.hpp"

#include <algorithm>
#include <cmath>

#include "asepkpz/csv.hpp"
#include "asepkpz/errors.hpp"

namespace asepkpz {

double ZField::value(int x) const { return std::exp(log_value(x)); }

double ZField::ratio(int x, int y) const { return std::exp(log_value(x) - log_value(y)); }

double ZField::interpolate(double x) const {
  require(x >= -1e-12 && x <= size() + 1e-12, "interpolation point outside the lattice");
  x = std::clamp(x, 0.0, static_cast<double>(size()));
  const int i = std::min(static_cast<int>(std::floor(x)), std::max(size() - 1, 0));
  const double f = x - i;
  if (f == 0.0 || size() == 0) return value(i);
  return value(i) * ((1.0 - f) + f * ratio(i + 1, i));
}

ZField z_field(const HeightField& hf, double t, const ModelParams& m) {
  std::vector<double> lz(hf.h.size());
  for (std::size_t x = 0; x < hf.h.size(); ++x) {
    lz[x] = -m.lambda * static_cast<double>(hf.h[x]) + m.nu * t;
  }
  return ZField(std::move(lz), t);
}

namespace {

struct LocalRates {
  double up;    // rate of the move that raises h(x) by 2 (Z(x) times p/q)
  double down;  // rate of the move that lowers h(x) by 2 (Z(x) times q/p)
  double rl;    // Z(x-1)/Z(x)
  double rr;    // Z(x+1)/Z(x)
  bool boundary;
};

LocalRates local(const Configuration& c, const ModelParams& m, const Lattice& lat, int x) {
  const int n = c.size();
  require(n == lat.size, "configuration does not match lattice");
  const int last = lat.right_reservoir() ? n : n - 1;
  require(x >= 0 && x <= last, "site outside the identity's range");
  LocalRates r{};
  if (x == 0) {
    const int e1 = c.at(1);
    r.up = e1 > 0 ? m.gamma : 0.0;
    r.down = e1 < 0 ? m.alpha : 0.0;
    r.rl = m.mu_a;
    r.rr = std::exp(-m.lambda * e1);
    r.boundary = true;
  } else if (x == n) {
    const int en = c.at(n);
    r.up = en < 0 ? m.delta : 0.0;
    r.down = en > 0 ? m.beta : 0.0;
    r.rl = std::exp(m.lambda * en);
    r.rr = m.mu_b;
    r.boundary = true;
  } else {
    const int a = c.at(x), b = c.at(x + 1);
    r.up = (a < 0 && b > 0) ? m.q : 0.0;
    r.down = (a > 0 && b < 0) ? m.p : 0.0;
    r.rl = std::exp(m.lambda * a);
    r.rr = std::exp(-m.lambda * b);
    r.boundary = false;
  }
  return r;
}

}  // namespace

std::vector<double> drift_identity_residual(const Configuration& c, const ModelParams& m,
                                            const Lattice& lat) {
  const double up_factor = std::expm1(-2.0 * m.lambda);   // p/q - 1
  const double down_factor = std::expm1(2.0 * m.lambda);  // q/p - 1
  const int last = lat.right_reservoir() ? c.size() : c.size() - 1;
  std::vector<double> res(static_cast<std::size_t>(last) + 1);
  for (int x = 0; x <= last; ++x) {
    const LocalRates r = local(c, m, lat, x);
    const double omega = m.nu + up_factor * r.up + down_factor * r.down;
    const double half_lap = 0.5 * ((r.rl - 1.0) + (r.rr - 1.0));
    res[x] = omega - half_lap;
  }
  return res;
}

BracketRate bracket_rate(const Configuration& c, const ModelParams& m, const Lattice& lat, int x) {
  const double up_factor = std::expm1(-2.0 * m.lambda);
  const double down_factor = std::expm1(2.0 * m.lambda);
  const double eps = m.lambda * m.lambda;
  const LocalRates r = local(c, m, lat, x);
  BracketRate b;
  b.rate = up_factor * up_factor * r.up + down_factor * down_factor * r.down;
  // bulk: eps Z^2 - grad+Z(x) grad+Z(x-1)
  b.leading = r.boundary ? eps : eps - (r.rr - 1.0) * (1.0 - r.rl);
  b.remainder = b.rate - b.leading;
  return b;
}

double bracket_remainder_sup(double epsilon, double A, double B) {
  const ModelParams m = build_params_free(epsilon, A, B);
  const int n = 3;
  const Lattice lat = Lattice::interval(n);
  double worst = 0.0;
  Configuration c;
  c.eta.resize(n);
  for (int s = 0; s < (1 << n); ++s) {
    for (int i = 0; i < n; ++i) c.eta[i] = (s >> i) & 1 ? 1 : -1;
    for (int x = 0; x <= n; ++x) {
      worst = std::max(worst, std::abs(bracket_rate(c, m, lat, x).remainder) / epsilon);
    }
  }
  return worst;
}

std::vector<ScaledField> rescale(const Trajectory& tr, const ModelParams& m,
                                 std::span<const double> T_grid, std::span<const double> X_grid) {
  require(m.epsilon > 0.0, "rescale needs a weakly asymmetric model");
  const double eps = m.epsilon;
  std::vector<ScaledField> out;
  for (double T : T_grid) {
    const double t = T / (eps * eps);
    auto it = std::find_if(tr.snapshots.begin(), tr.snapshots.end(), [&](const Snapshot& s) {
      return std::abs(s.time - t) <= 1e-9 * std::max(1.0, t);
    });
    if (it == tr.snapshots.end()) throw PreconditionError("requested T not among sample times");
    const ZField z = z_field(it->heights, it->time, m);
    ScaledField f;
    f.T = T;
    for (double X : X_grid) {
      const double x = X / eps;
      if (x < -1e-9 || x > z.size() + 1e-9) throw PreconditionError("X outside the lattice");
      f.X.push_back(X);
      f.values.push_back(z.interpolate(x));
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_scaled_csv(const std::vector<ScaledField>& fields, const std::string& path) {
  CsvWriter w(path, {"T", "X", "value"});
  for (const auto& f : fields) {
    for (std::size_t i = 0; i < f.X.size(); ++i) {
      w << f.T << f.X[i] << f.values[i];
      w.end_row();
    }
  }
}

}  // namespace asepkpz

#include <algorithm>
#include <cmath>
#include <functional>

#include "asepkpz/errors.hpp"
#include "asepkpz/robin_kernel.hpp"

namespace asepkpz {

bool BoundAuditReport::all_stable() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(), [](const BoundAuditEntry& e) { return e.stable; });
}

namespace {

// Kernel rows on {0..y_max} for a geometry; interval rows come from one spectral product.
struct RowSource {
  std::function<std::vector<double>(double t, long x)> row;
  long x_max = 0;
  long y_max_for(double t, long x) const;
  bool half_line = false;
};

long RowSource::y_max_for(double t, long x) const {
  if (!half_line) return x_max;
  return x + static_cast<long>(std::ceil(12.0 * std::sqrt(t) + 40.0));
}

struct Grid {
  std::vector<double> times;
  std::vector<long> xs;
};

Grid make_grid(double t_max, long x_max, int refine) {
  Grid g;
  const int nt = 10 * refine;
  const double t0 = 0.5;
  const double r = std::pow(t_max / t0, 1.0 / nt);
  for (int k = 0; k <= nt; ++k) g.times.push_back(t0 * std::pow(r, k));
  const long stride = std::max(1L, x_max / (8L * refine));
  for (long x = 0; x <= x_max; x += stride) g.xs.push_back(x);
  if (g.xs.back() != x_max) g.xs.push_back(x_max);
  return g;
}

double sq_min(double t) { return std::min(1.0, 1.0 / std::sqrt(t)); }

// ratio functionals; each returns the grid max
using Probe = std::function<double(const RowSource&, const Grid&, double eps)>;

double probe_gauss(const RowSource& src, const Grid& g, double) {
  double worst = 0.0;
  for (double t : g.times) {
    const double s = sq_min(t);
    for (long x : g.xs) {
      const auto r = src.row(t, x);
      const long y_top = std::min<long>(static_cast<long>(r.size()) - 1, src.x_max);
      for (long y = 0; y <= y_top; ++y) {
        worst = std::max(worst, r[y] / (s * std::exp(-std::abs(x - y) * s)));
      }
    }
  }
  return worst;
}

double probe_sup(const RowSource& src, const Grid& g, double) {
  double worst = 0.0;
  for (double t : g.times) {
    for (double gap : {0.1, 1.0}) {
      for (long x : g.xs) {
        const auto a = src.row(t, x);
        const auto b = src.row(t + gap, x);
        const long y_top = std::min<long>(static_cast<long>(a.size()) - 1, src.x_max);
        for (long y = 0; y <= y_top; ++y) {
          if (b[y] > 0) worst = std::max(worst, a[y] / (std::exp(gap) * b[y]));
        }
      }
    }
  }
  return worst;
}

double probe_holder(const RowSource& src, const Grid& g, double) {
  const double v = 0.5;
  double worst = 0.0;
  for (double t : g.times) {
    const double gap = 0.25 * t;
    const double shape = std::min(1.0, std::pow(t, -0.5 - v)) * std::pow(gap, v);
    for (long x : g.xs) {
      const auto a = src.row(t, x);
      const auto b = src.row(t + gap, x);
      const long y_top = std::min<long>(static_cast<long>(a.size()) - 1, src.x_max);
      for (long y = 0; y <= y_top; ++y) worst = std::max(worst, std::abs(b[y] - a[y]) / shape);
    }
  }
  return worst;
}

double probe_gradient(const RowSource& src, const Grid& g, double) {
  double worst = 0.0;
  for (double t : g.times) {
    const double s = sq_min(t);
    const long n_far = static_cast<long>(std::ceil(std::sqrt(t)));
    for (long x : g.xs) {
      const auto a = src.row(t, x);
      // n = 1, v = 1 and n = ceil(sqrt t), v = 1/2
      for (auto [n, v] : {std::pair<long, double>{1, 1.0}, {n_far, 0.5}}) {
        if (x + n > src.x_max && !src.half_line) continue;
        const auto b = src.row(t, x + n);
        const double shape_t = std::min(1.0, std::pow(t, -(1.0 + v) / 2.0)) * std::pow(double(n), v);
        const long y_top = std::min<long>({static_cast<long>(a.size()) - 1,
                                           static_cast<long>(b.size()) - 1, src.x_max});
        for (long y = 0; y <= y_top; ++y) {
          worst = std::max(worst, std::abs(b[y] - a[y]) / (shape_t * std::exp(-std::abs(x - y) * s)));
        }
      }
    }
  }
  return worst;
}

// Weighted row sums; a = 1. The interval version drops the e^{a eps y} weight.
double probe_sum(const RowSource& src, const Grid& g, double eps, bool gradient) {
  const double a = 1.0;
  double worst = 0.0;
  for (double t : g.times) {
    const double s = sq_min(t);
    for (long x : g.xs) {
      if (gradient && !src.half_line && x + 1 > src.x_max) continue;
      const auto r = src.row(t, x);
      std::vector<double> r1;
      if (gradient) r1 = src.row(t, x + 1);
      const long y_top = std::min<long>(static_cast<long>(r.size()) - 1,
                                        gradient ? static_cast<long>(r1.size()) - 1 : r.size() - 1);
      double acc = 0.0;
      for (long y = 0; y <= y_top; ++y) {
        const double val = gradient ? std::abs(r1[y] - r[y]) : r[y];
        double w = std::exp(a * std::abs(x - y) * s);
        if (src.half_line) w *= std::exp(a * eps * (y - x));
        acc += val * w;
      }
      worst = std::max(worst, gradient ? acc * std::sqrt(t) : acc);
    }
  }
  return worst;
}

}  // namespace

BoundAuditReport kernel_bound_audit(double epsilon, double slope_a, double slope_b, double t_bar) {
  require(epsilon > 0 && epsilon <= 0.5, "epsilon outside (0, 1/2]");
  require(slope_a >= 0 && slope_b >= 0 && t_bar > 0, "slopes must be >= 0 and T > 0");
  const double t_max = t_bar / (epsilon * epsilon);
  const double mu_a = 1.0 - epsilon * slope_a, mu_b = 1.0 - epsilon * slope_b;
  require(mu_a > 0 && mu_b > 0, "epsilon * slope must be < 1");

  RowSource half;
  half.half_line = true;
  half.x_max = static_cast<long>(std::ceil(2.0 / epsilon));
  half.row = [&half, mu_a](double t, long x) {
    return halfline_robin_row(t, x, half.y_max_for(t, x), mu_a);
  };

  const int n = static_cast<int>(std::lround(1.0 / epsilon));
  const SpectralData spec = solve_interval_spectrum(n, mu_a, mu_b);
  RowSource inter;
  inter.x_max = n;
  double cached_t = -1.0;
  Eigen::MatrixXd cached;
  inter.row = [&](double t, long x) {
    if (t != cached_t) {
      cached = interval_kernel_spectral(spec, t).values;
      cached_t = t;
    }
    std::vector<double> r(static_cast<std::size_t>(n) + 1);
    for (int y = 0; y <= n; ++y) r[y] = cached(x, y);
    return r;
  };

  struct Item {
    const char* name;
    Probe probe;
  };
  const std::vector<Item> items = {
      {"gaussian_b1", probe_gauss},
      {"time_monotone", probe_sup},
      {"time_holder_v0.5", probe_holder},
      {"gradient", probe_gradient},
      {"weighted_sum", [](const RowSource& s, const Grid& g, double e) { return probe_sum(s, g, e, false); }},
      {"weighted_gradient_sum",
       [](const RowSource& s, const Grid& g, double e) { return probe_sum(s, g, e, true); }},
  };

  BoundAuditReport rep;
  for (const RowSource* src : {&half, &inter}) {
    const Grid base = make_grid(t_max, src->x_max, 1);
    const Grid fine = make_grid(t_max, src->x_max, 2);
    for (const Item& it : items) {
      BoundAuditEntry e;
      e.name = it.name;
      e.geometry = src->half_line ? "half_line" : "interval";
      e.constant = it.probe(*src, base, epsilon);
      e.constant_refined = it.probe(*src, fine, epsilon);
      e.stable = std::isfinite(e.constant) && std::isfinite(e.constant_refined) &&
                 e.constant_refined <= 2.0 * e.constant;
      rep.entries.push_back(e);
    }
  }
  return rep;
}

}  // namespace asepkpz

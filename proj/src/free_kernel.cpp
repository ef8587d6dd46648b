// e^{-t} I_n(t) for the continuous-time simple random walk.
//   t <= kAsymptoticFrom : Miller backward recurrence normalized by sum_n p_t(n) = 1
//   t >  kAsymptoticFrom : Hankel series (n = 0) and Debye uniform expansion (n >= 1)
#include <cmath>
#include <numbers>
#include <vector>

#include "asepkpz/errors.hpp"
#include "asepkpz/robin_kernel.hpp"
#include "free_kernel_detail.hpp"

namespace asepkpz {

namespace detail {

std::vector<double> free_kernel_miller(double t, long max_n) {
  std::vector<double> out(static_cast<std::size_t>(max_n) + 1, 0.0);
  if (t == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const long top = max_n + 30 + static_cast<long>(std::ceil(12.0 * std::sqrt(t + 1.0)));
  std::vector<double> f(static_cast<std::size_t>(top) + 2, 0.0);
  f[top] = 1.0;
  const double two_over_t = 2.0 / t;
  for (long n = top; n >= 1; --n) {
    f[n - 1] = two_over_t * static_cast<double>(n) * f[n] + f[n + 1];
    if (f[n - 1] > 1e250) {
      for (long k = n - 1; k <= top; ++k) f[k] *= 1e-250;
    }
  }
  double norm = f[0];
  for (long n = 1; n <= top; ++n) norm += 2.0 * f[n];
  for (long n = 0; n <= max_n; ++n) out[n] = f[n] / norm;
  return out;
}

double free_kernel_asymptotic(double t, long n) {
  const double pi2 = 2.0 * std::numbers::pi;
  if (n == 0) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= odd * odd / (8.0 * k * t);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return sum / std::sqrt(pi2 * t);
  }
  const double nu = static_cast<double>(n);
  const double r = std::hypot(nu, t);
  const double p = nu / r;
  const double p2 = p * p;
  const double u1 = p * (3.0 - 5.0 * p2) / 24.0;
  const double u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0;
  const double u3 =
      p * p2 * (30375.0 - 369603.0 * p2 + 765765.0 * p2 * p2 - 425425.0 * p2 * p2 * p2) / 414720.0;
  const double u4 = p2 * p2 *
                    (4465125.0 - 94121676.0 * p2 + 349922430.0 * p2 * p2 -
                     446185740.0 * p2 * p2 * p2 + 185910725.0 * p2 * p2 * p2 * p2) /
                    39813120.0;
  const double series = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
  const double expo = nu * nu / (r + t) - nu * std::asinh(nu / t);
  return std::exp(expo) / std::sqrt(pi2 * r) * series;
}

}  // namespace detail

std::vector<double> free_walk_kernel_row(double t, long max_abs_x) {
  require(t >= 0.0 && std::isfinite(t), "kernel time must be finite and >= 0");
  require(max_abs_x >= 0, "row length must be >= 0");
  if (t <= detail::kAsymptoticFrom) return detail::free_kernel_miller(t, max_abs_x);
  std::vector<double> out(static_cast<std::size_t>(max_abs_x) + 1);
  for (long n = 0; n <= max_abs_x; ++n) {
    out[n] = detail::free_kernel_asymptotic(t, n);
    // far tail: stop once the entries are below the double range of interest
    if (out[n] < 1e-300) break;
  }
  return out;
}

double free_walk_kernel(double t, long x) {
  const long n = x < 0 ? -x : x;
  if (t > detail::kAsymptoticFrom) return detail::free_kernel_asymptotic(t, n);
  return free_walk_kernel_row(t, n)[static_cast<std::size_t>(n)];
}

}  // namespace asepkpz

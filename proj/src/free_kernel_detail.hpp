#pragma once

#include <vector>

namespace asepkpz::detail {

inline constexpr double kAsymptoticFrom = 1000.0;

std::vector<double> free_kernel_miller(double t, long max_n);
double free_kernel_asymptotic(double t, long n);

}  // namespace asepkpz::detail

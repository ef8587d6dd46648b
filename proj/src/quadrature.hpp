#pragma once

#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace asepkpz::detail {

struct Rule {
  std::vector<double> x;  // nodes on [-1, 1], ascending
  std::vector<double> w;
};

template <unsigned N>
Rule gauss_legendre() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  Rule r;
  // boost stores the nonnegative half; a zero node appears once for odd N
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] == 0.0) continue;
    r.x.push_back(-a[i]);
    r.w.push_back(wt[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x.push_back(a[i]);
    r.w.push_back(wt[i]);
  }
  return r;
}

struct Node {
  double t;
  double w;
  int panel;
};

// Nodes of `rule` mapped to each [edges[i], edges[i+1]].
inline std::vector<Node> panel_nodes(const Rule& rule, const std::vector<double>& edges) {
  std::vector<Node> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double mid = 0.5 * (edges[i] + edges[i + 1]), half = 0.5 * (edges[i + 1] - edges[i]);
    for (std::size_t k = 0; k < rule.x.size(); ++k) {
      out.push_back({mid + half * rule.x[k], half * rule.w[k], static_cast<int>(i)});
    }
  }
  return out;
}

// 0, first, 2 first, 4 first, ... capped at t_end
inline std::vector<double> dyadic_edges(double first, double t_end) {
  std::vector<double> e{0.0};
  double t = first;
  while (t < t_end * (1 - 1e-12)) {
    e.push_back(t);
    t *= 2.0;
  }
  e.push_back(t_end);
  return e;
}

// each panel split into k equal pieces
inline std::vector<double> subdivide(const std::vector<double>& edges, int k) {
  std::vector<double> out{edges.front()};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    for (int j = 1; j <= k; ++j) out.push_back(edges[i] + (edges[i + 1] - edges[i]) * j / k);
  }
  return out;
}

}  // namespace asepkpz::detail

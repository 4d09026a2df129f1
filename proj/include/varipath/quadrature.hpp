#pragma once

#include "varipath/common.hpp"

#include <cmath>
#include <functional>

namespace varipath {

/// Gauss-Legendre rule with `order` nodes mapped to [0,1]. Weights are
/// positive and sum to one; the rule is exact for polynomials of degree
/// up to 2*order - 1.
struct QuadratureRule {
  int order = 0;
  Vec nodes;    // in (0,1), ascending
  Vec weights;  // positive, sum to 1

  int exact_degree() const { return 2 * order - 1; }

  static QuadratureRule gauss_legendre(int order) {
    if (order < 1 || order > 64)
      throw ConfigError("QuadratureRule: order must be in [1,64]");
    QuadratureRule rule;
    rule.order = order;
    rule.nodes = Vec(order);
    rule.weights = Vec(order);
    // Newton iteration on P_order over [-1,1], then map to [0,1].
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
      double pp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < order; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = order * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      const double w = 2.0 / ((1.0 - z * z) * pp * pp);
      rule.nodes[i] = 0.5 * (1.0 - z);
      rule.nodes[order - 1 - i] = 0.5 * (1.0 + z);
      rule.weights[i] = 0.5 * w;
      rule.weights[order - 1 - i] = 0.5 * w;
    }
    return rule;
  }

  /// Integral of f over [a,b] with a single panel.
  double integrate(const std::function<double(double)>& f, double a, double b) const {
    const double len = b - a;
    double acc = 0.0;
    for (int q = 0; q < order; ++q) acc += weights[q] * f(a + nodes[q] * len);
    return acc * len;
  }

  /// Composite integral over [a,b] split into `panels` equal panels,
  /// accumulated in index order for reproducibility.
  double integrate_composite(const std::function<double(double)>& f, double a,
                             double b, int panels) const {
    if (panels < 1) throw ConfigError("integrate_composite: panels must be >= 1");
    const double len = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) acc += integrate(f, a + p * len, a + (p + 1) * len);
    return acc;
  }
};

}  // namespace varipath

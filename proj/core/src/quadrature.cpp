#include "vcl/errors.hpp"
#include "vcl/fespaces.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace vcl {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double pn = n == 0 ? 1.0 : p1;
  const double pm = n == 0 ? 0.0 : p0;
  return {pn, n * (x * pn - pm) / (x * x - 1.0)};
}

} // namespace

LineRule gaussLegendre01(int npoints) {
  if (npoints < 1) {
    throw InputError("gaussLegendre01: need at least one point");
  }
  LineRule rule;
  rule.points.resize(npoints);
  rule.weights.resize(npoints);
  for (int i = 0; i < npoints; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (npoints + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(npoints, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double dp = legendre(npoints, x).second;
    rule.points[npoints - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[npoints - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

QuadratureRule triangleRule(int degree) {
  if (degree < 0) {
    throw InputError("triangleRule: negative degree");
  }
  // The Duffy map x = u, y = v (1 - u) raises the u-degree by one through its
  // Jacobian, so n Gauss points per direction integrate total degree 2n - 2.
  const int npoints = (degree + 3) / 2;
  const LineRule line = gaussLegendre01(npoints);
  QuadratureRule rule;
  rule.points.reserve(static_cast<std::size_t>(npoints) * npoints);
  rule.weights.reserve(static_cast<std::size_t>(npoints) * npoints);
  for (int a = 0; a < npoints; ++a) {
    for (int b = 0; b < npoints; ++b) {
      const double u = line.points[a];
      const double x = u;
      const double y = line.points[b] * (1.0 - u);
      rule.points.push_back({1.0 - x - y, x, y});
      rule.weights.push_back(line.weights[a] * line.weights[b] * (1.0 - u));
    }
  }
  return rule;
}

} // namespace vcl

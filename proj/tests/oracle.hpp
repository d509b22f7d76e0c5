#pragma once
// Brute-force reference computations shared by the unit tests.  Nothing here calls into
// the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using C = std::complex<double>;

struct Atom {
  C z;
  double w;
};

inline double ball(const std::vector<Atom>& a, C x, double r) {
  double s = 0;
  for (const auto& t : a)
    if (std::abs(t.z - x) <= r) s += t.w;
  return s;
}

// sup over r of f(r), sampled at every distance, just left/right of it, and a log grid.
template <class F>
double sup_over_radii(const std::vector<Atom>& a, C x, double r_min, F f) {
  std::vector<double> rs{r_min};
  for (const auto& t : a) {
    const double d = std::abs(t.z - x);
    for (double s : {d, d * (1 - 1e-12), d * (1 + 1e-12), d / 3, d / 3 * (1 + 1e-12)})
      if (s > 0) rs.push_back(s);
  }
  for (double r = 1e-6; r < 1e3; r *= 1.01) rs.push_back(r);
  double best = 0;
  for (double r : rs)
    if (r >= r_min) best = std::max(best, f(r));
  return best;
}

// max over eps > 0 of |sum_{|z_j - z| > eps} g_j w_j / (z_j - z)|
inline double cauchy_max(const std::vector<Atom>& a, const std::vector<C>& g, C z) {
  double best = 0;
  std::vector<double> eps{0.0};
  for (const auto& t : a) eps.push_back(std::abs(t.z - z));
  for (double e : eps) {
    C s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double d = std::abs(a[j].z - z);
      if (d > e && d > 0) s += g[j] * a[j].w / (a[j].z - z);
    }
    best = std::max(best, std::abs(s));
  }
  return best;
}

inline double circumradius_inverse(C x, C y, C z) {
  const double a = std::abs(y - z), b = std::abs(x - z), c = std::abs(x - y);
  const double s = (a + b + c) / 2;
  const double area2 = s * (s - a) * (s - b) * (s - c);  // Heron
  if (area2 <= 0) return 0;
  return 4 * std::sqrt(area2) / (a * b * c);
}

}  // namespace oracle

#include "tblab/curvature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tblab {

namespace {
// Neumaier accumulator
struct Acc {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};
}  // namespace

double menger(Point x, Point y, Point z) {
  const double a = std::abs(x - y), b = std::abs(y - z), c = std::abs(z - x);
  if (a == 0.0 || b == 0.0 || c == 0.0) return 0.0;
  const double cross = ((y - x) * std::conj(z - x)).imag();
  return 2.0 * std::abs(cross) / (a * b * c);  // 4 * area = 2 |cross|
}

CurvatureResult c2(const PlanarMeasure& nu, std::optional<double> eps) {
  CurvatureResult out;
  out.truncation = eps;
  const auto n = nu.size();
  const double cut = eps.value_or(-1.0);
  Acc total;
  for (Eigen::Index i = 0; i < n; ++i) {
    Acc row;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(nu.z(i) - nu.z(j)) <= cut) continue;
      for (Eigen::Index k = j + 1; k < n; ++k) {
        if (std::abs(nu.z(j) - nu.z(k)) <= cut || std::abs(nu.z(i) - nu.z(k)) <= cut) continue;
        const double c = menger(nu.z(i), nu.z(j), nu.z(k));
        row.add(c * c * nu.w(i) * nu.w(j) * nu.w(k));
        out.triple_count += 6;
      }
    }
    total.add(row.value());
  }
  out.c2 = 6.0 * total.value();
  return out;
}

std::complex<double> permutation_sum(Point x, Point y, Point z) {
  const std::array<Point, 3> p{x, y, z};
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::complex<double> s = 0.0;
  for (const auto& s3 : perms) s += 1.0 / ((p[s3[0]] - p[s3[2]]) * std::conj(p[s3[1]] - p[s3[2]]));
  return s;
}

CheckReport permutation_identity_check(Point x, Point y, Point z) {
  CheckReport r;
  r.name = "permutation_identity";
  r.samples = 1;
  if (x == y || y == z || x == z) return not_applicable(r.name, "coincident points");
  const double c = menger(x, y, z);
  const auto s = permutation_sum(x, y, z);
  // near-collinear triples cancel; measure error against the term sizes
  const double a = std::abs(x - y), b = std::abs(y - z), d = std::abs(z - x);
  const double scale = std::max({c * c, 2.0 * (1.0 / (a * b) + 1.0 / (b * d) + 1.0 / (d * a)), 1e-300});
  r.observed = std::max(std::abs(s.real() - c * c) / scale, std::abs(s.imag()) / scale);
  r.set_bound(1e-10);
  return r;
}

CheckReport mv_identity_check(const PlanarMeasure& mu) {
  const auto n = mu.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (mu.z(i) == mu.z(j)) throw std::domain_error("duplicate atoms");
  Acc lhs, corr;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::complex<double> c1 = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      c1 += mu.w(j) / (mu.z(j) - mu.z(i));
      corr.add(mu.w(i) * mu.w(j) * mu.w(j) / std::norm(mu.z(i) - mu.z(j)));
    }
    lhs.add(mu.w(i) * std::norm(c1));
  }
  const double rhs = c2(mu).c2 / 6.0 + corr.value();
  CheckReport r;
  r.name = "mv_identity";
  r.samples = n;
  r.observed = std::abs(lhs.value() - rhs) / std::max({std::abs(lhs.value()), std::abs(rhs), 1e-300});
  r.set_bound(1e-9);
  return r;
}

LPSolution simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const auto m = A.rows(), n = A.cols();
  if ((b.array() < 0).any()) throw std::invalid_argument("simplex_max needs b >= 0");
  // tableau [A I b], objective row holds reduced costs
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = b;
  T.bottomLeftCorner(1, n) = c.transpose();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;
  constexpr double tol = 1e-12;
  LPSolution out;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (T(m, j) > tol) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) <= tol) continue;
      const double ratio = T(i, n + m) / T(i, enter);
      if (leave < 0 || ratio < best - tol || (std::abs(ratio - best) <= tol && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) {
      out.unbounded = true;
      return out;
    }
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[leave] = enter;
    ++out.pivots;
  }
  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) out.x(basis[i]) = std::max(0.0, T(i, n + m));
  out.value = c.dot(out.x);
  return out;
}

CapacityBound gamma_plus_lb(const PlanarMeasure& support, const std::vector<Point>& grid, int directions) {
  if (directions < 8) throw std::invalid_argument("need at least 8 directions");
  CapacityBound out;
  out.constraint_points = grid;
  out.directions = directions;
  out.slack = 1.0 / std::cos(std::numbers::pi / directions);
  const auto n = support.size();
  out.weights = Eigen::VectorXd::Zero(n);
  if (n == 0) return out;
  for (const auto& x : grid)
    for (Eigen::Index j = 0; j < n; ++j)
      if (support.z(j) == x) throw std::invalid_argument("constraint point on a support atom");
  const auto rows = static_cast<Eigen::Index>(grid.size()) * directions;
  Eigen::MatrixXd A(rows, n);
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (int k = 0; k < directions; ++k) {
      const Point rot = std::polar(1.0, 2 * std::numbers::pi * k / directions);
      for (Eigen::Index j = 0; j < n; ++j)
        A(static_cast<Eigen::Index>(g) * directions + k, j) = (rot / (support.z(j) - grid[g])).real();
    }
  const auto sol = simplex_max(A, Eigen::VectorXd::Ones(rows), Eigen::VectorXd::Ones(n));
  if (sol.unbounded) throw std::runtime_error("capacity LP unbounded: use a denser constraint grid");
  out.weights = sol.x;
  out.value = sol.value;
  double worst = 0.0;
  for (const auto& x : grid) {
    std::complex<double> c = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) c += out.weights(j) / (support.z(j) - x);
    worst = std::max(worst, std::abs(c));
  }
  out.max_violation = worst - 1.0;
  return out;
}

std::vector<Point> ring_grid(Point center, double radius, int count) {
  std::vector<Point> g;
  for (int k = 0; k < count; ++k) g.push_back(center + std::polar(radius, 2 * std::numbers::pi * k / count));
  return g;
}

nlohmann::json to_json(const CurvatureResult& r) {
  nlohmann::json j{{"c2", r.c2}, {"triples", r.triple_count}};
  j["eps"] = r.truncation ? nlohmann::json(*r.truncation) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const CapacityBound& r) {
  return {{"value", r.value},
          {"weights", std::vector<double>(r.weights.data(), r.weights.data() + r.weights.size())},
          {"max_violation", r.max_violation},
          {"slack", r.slack},
          {"directions", r.directions},
          {"constraint_points", r.constraint_points.size()}};
}

}  // namespace tblab

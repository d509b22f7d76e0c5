#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

// 1 / circumradius; 0 for coincident or collinear points
double menger(Point x, Point y, Point z);

struct CurvatureResult {
  double c2 = 0.0;
  std::int64_t triple_count = 0;  // ordered triples that entered the sum
  std::optional<double> truncation;
};
// Sum over ordered distinct triples of c^2 w_i w_j w_k, optionally only triples with all
// pairwise distances > eps.
CurvatureResult c2(const PlanarMeasure& nu, std::optional<double> eps = std::nullopt);

// ||C1||^2 = c^2 / 6 + sum_{i != j} w_i w_j^2 / |z_i - z_j|^2, where C1(z_i) = sum_{j != i} w_j / (z_j - z_i)
CheckReport mv_identity_check(const PlanarMeasure& mu);
// c^2 against the six-permutation sum for one triple
CheckReport permutation_identity_check(Point x, Point y, Point z);
std::complex<double> permutation_sum(Point x, Point y, Point z);

struct CapacityBound {
  double value = 0.0;
  Eigen::VectorXd weights;
  std::vector<Point> constraint_points;
  double max_violation = 0.0;  // max |C(x)| - 1 over the constraint points
  double slack = 1.0;          // sec(pi/d): the modulus can exceed 1 by at most this factor
  int directions = 16;
};
// max sum w subject to Re(e^{2 pi i k/d} sum_j w_j / (z_j - x)) <= 1 for every constraint x and k.
CapacityBound gamma_plus_lb(const PlanarMeasure& support, const std::vector<Point>& grid, int directions = 16);
std::vector<Point> ring_grid(Point center, double radius, int count);

// Dense simplex for max c.x subject to A x <= b, x >= 0, b >= 0 (Bland's rule).
struct LPSolution {
  Eigen::VectorXd x;
  double value = 0.0;
  bool unbounded = false;
  int pivots = 0;
};
LPSolution simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

nlohmann::json to_json(const CurvatureResult& r);
nlohmann::json to_json(const CapacityBound& r);

}  // namespace tblab

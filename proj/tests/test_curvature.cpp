#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "tblab/curvature.hpp"

using namespace tblab;

TEST_CASE("Menger curvature closed forms") {
  // equilateral triangle of side 1: circumradius 1/sqrt(3)
  CHECK(menger({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}) == doctest::Approx(std::sqrt(3.0)));
  // right triangle inscribed in the unit circle
  CHECK(menger({-1, 0}, {1, 0}, {0, 1}) == doctest::Approx(1.0));
  CHECK(menger({0, 0}, {1, 0}, {2, 0}) == 0.0);
  CHECK(menger({0, 0}, {0, 0}, {2, 0}) == 0.0);
  std::mt19937_64 eng(3);
  for (int t = 0; t < 1000; ++t) {
    const Point a(uniform01(eng), uniform01(eng)), b(uniform01(eng), uniform01(eng)), c(uniform01(eng), uniform01(eng));
    CHECK(menger(a, b, c) == doctest::Approx(oracle::circumradius_inverse(a, b, c)).epsilon(1e-7));
  }
}

TEST_CASE("c2 sums ordered triples") {
  const PlanarMeasure tri(std::vector<Atom>{{{-1, 0}, 1.0}, {{1, 0}, 2.0}, {{0, 1}, 0.5}});
  const auto r = c2(tri);
  CHECK(r.c2 == doctest::Approx(6.0 * 1.0 * 1.0 * 2.0 * 0.5));
  CHECK(r.triple_count == 6);
  // truncation below the smallest distance changes nothing; above it removes the triple
  CHECK(c2(tri, 1.0).c2 == doctest::Approx(r.c2));
  CHECK(c2(tri, 1.5).c2 == 0.0);
  // collinear atoms carry no curvature
  CHECK(c2(segment_measure({0, 0}, {1, 0}, 30)).c2 == 0.0);
  // brute force over ordered triples
  const auto mu = random_cloud(5, 20);
  double want = 0;
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 20; ++j)
      for (Eigen::Index k = 0; k < 20; ++k)
        if (i != j && j != k && i != k) {
          const double c = oracle::circumradius_inverse(mu.z(i), mu.z(j), mu.z(k));
          want += c * c * mu.w(i) * mu.w(j) * mu.w(k);
        }
  CHECK(c2(mu).c2 == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("discrete Cauchy identity") {
  // two unit atoms at distance 1: ||C1||^2 = 2 = 0 + 2
  const PlanarMeasure two(std::vector<Atom>{{{0, 0}, 1.0}, {{1, 0}, 1.0}});
  CHECK(mv_identity_check(two).observed < 1e-15);
  for (const auto& mu : {normalize(segment_measure({0, 0}, {1, 0}, 64)).mu, normalize(arc_measure({0, 0}, 1, 0, 6.28, 64)).mu,
                         normalize(random_cloud(7, 64)).mu, normalize(cantor_corner(3)).mu})
    CHECK(mv_identity_check(mu).ok());
}

TEST_CASE("permutation identity") {
  std::mt19937_64 eng(9);
  for (int t = 0; t < 10000; ++t) {
    const Point a(uniform01(eng), uniform01(eng)), b(uniform01(eng), uniform01(eng)), c(uniform01(eng), uniform01(eng));
    CHECK(permutation_identity_check(a, b, c).ok());
  }
  CHECK_FALSE(permutation_identity_check({0, 0}, {0, 0}, {1, 0}).applicable);
}

TEST_CASE("simplex") {
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 2, 3, 2;
  Eigen::VectorXd b(3), c(2);
  b << 4, 12, 18;
  c << 3, 5;
  const auto s = simplex_max(A, b, c);
  CHECK_FALSE(s.unbounded);
  CHECK(s.value == doctest::Approx(36.0));
  CHECK(s.x(0) == doctest::Approx(2.0));
  CHECK(s.x(1) == doctest::Approx(6.0));
  Eigen::MatrixXd U(1, 2);
  U << 1, -1;
  Eigen::VectorXd ub(1), uc(2);
  ub << 1;
  uc << 0, 1;
  CHECK(simplex_max(U, ub, uc).unbounded);
  CHECK_THROWS(simplex_max(A, -b, c));
}

TEST_CASE("capacity lower bound of one atom on a ring") {
  const PlanarMeasure one(std::vector<Atom>{{{0, 0}, 1.0}});
  const auto r = gamma_plus_lb(one, ring_grid({0, 0}, 0.5, 16), 16);
  // |w / x| <= 1 on the ring, and one of the directions lines up exactly
  CHECK(r.value == doctest::Approx(0.5));
  CHECK(r.max_violation <= r.slack - 1 + 1e-12);
  CHECK_THROWS(gamma_plus_lb(one, ring_grid({0, 0}, 0.5, 16), 4));
  CHECK_THROWS(gamma_plus_lb(one, {Point(0, 0)}, 16));
  const auto nu = normalize(cantor_corner(2)).mu;
  const auto rc = gamma_plus_lb(nu, ring_grid({0, 0}, 0.2, 64), 16);
  CHECK(rc.value > 0);
  CHECK(rc.max_violation <= rc.slack - 1 + 1e-9);
  CHECK(to_json(rc)["directions"] == 16);
}

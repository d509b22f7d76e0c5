#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tblab/geometry.hpp"

using namespace tblab;

namespace {
DyadicSquare unit() {
  DyadicSquare s;
  s.side = 1.0;
  return s;
}
}  // namespace

TEST_CASE("children tile the parent and round-trip") {
  const auto lat = lattice_from_shift({0.1, -0.2});
  const auto q = lat.square(3, 5, 2);
  double area = 0;
  for (int j = 1; j <= 4; ++j) {
    const auto c = q.child(j);
    CHECK(c.parent() == q);
    CHECK(c.inside(q));
    CHECK(c.level == 4);
    CHECK(std::abs(c.side - q.side / 2) < 1e-15);
    area += c.area();
  }
  CHECK(area == doctest::Approx(q.area()));
  CHECK(q.child(1).origin == q.origin);
  CHECK(q.child(4).origin == q.origin + Point(q.side / 2, q.side / 2));
  CHECK_THROWS(q.child(0));
  CHECK_THROWS(lat.root.parent());
}

TEST_CASE("locate agrees with half-open containment") {
  std::mt19937_64 eng(7);
  const auto lat = sample_lattice(3);
  for (int t = 0; t < 2000; ++t) {
    const Point p = lat.root.origin + Point(uniform01(eng), uniform01(eng));
    const int level = 1 + static_cast<int>(eng() % 10);
    const auto q = lat.locate(level, p);
    REQUIRE(q.has_value());
    CHECK(q->contains(p));
  }
  CHECK_FALSE(lat.locate(2, lat.root.origin + Point(1.0, 0.5)).has_value());
}

TEST_CASE("sampled lattice shifts stay in the quarter box") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto lat = sample_lattice(s);
    CHECK(std::abs(lat.shift.real()) <= 0.25);
    CHECK(std::abs(lat.shift.imag()) <= 0.25);
    CHECK(lat.root.contains(Point(0, 0)));
  }
  CHECK(sample_lattice(11).shift == sample_lattice(11).shift);
}

TEST_CASE("square distances") {
  const auto lat = lattice_from_shift({0.5, 0.5});  // root [0,1)^2
  const auto a = lat.square(2, 0, 0), b = lat.square(2, 2, 0), c = lat.square(2, 3, 3);
  CHECK(dist_squares(a, b) == doctest::Approx(0.25));
  CHECK(dist_squares(a, c) == doctest::Approx(std::hypot(0.5, 0.5)));
  CHECK(dist_squares(a, lat.square(2, 1, 1)) == 0.0);
  CHECK(long_distance(a, b) == doctest::Approx(0.75));
  CHECK(dist_point_square({-1.0, 0.1}, a) == doctest::Approx(1.0));
  CHECK(dist_to_square_complement({0.1, 0.2}, a) == doctest::Approx(0.05));
  CHECK(dist_to_square_complement({0.3, 0.2}, a) == 0.0);
  CHECK(dist_point_boundary({0.125, 0.125}, a) == doctest::Approx(0.125));
}

TEST_CASE("contours") {
  const auto q = unit();
  CHECK(boundary(q).length() == doctest::Approx(4.0));
  CHECK(skeleton(q).length() == doctest::Approx(6.0));
  CHECK(skeleton(q).distance({0.5, 0.25}) == doctest::Approx(0.0));
  CHECK(skeleton(q).distance({0.25, 0.25}) == doctest::Approx(0.25));
  const auto circ = circle_contour({0, 0}, 2.0);
  CHECK(circ.length() == doctest::Approx(4 * std::numbers::pi));
  CHECK(circ.distance({0.5, 0}) == doctest::Approx(1.5));
  CHECK(circ.distance({0, 3}) == doctest::Approx(1.0));
  CHECK(circ.distance({0, 0}) == doctest::Approx(2.0));
  Arc upper{{0, 0}, 1.0, 0.0, std::numbers::pi};
  CHECK(dist_point_arc({0, -2}, upper) == doctest::Approx(std::hypot(1.0, 2.0)));
  CHECK(dist_point_arc({0, 2}, upper) == doctest::Approx(1.0));
  CHECK(dist_point_segment({0.5, 1}, {0, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(dist_point_segment({2, 0}, {0, 0}, {1, 0}) == doctest::Approx(1.0));
}

TEST_CASE("Whitney family of the unit square") {
  const auto w = whitney(unit(), 6);
  // level j squares of side 2^-j with gap >= side: a (2^j - 2)^2 block minus the children of the previous block
  CHECK(w.count_per_level[1] == 0);
  CHECK(w.count_per_level[2] == 4);
  CHECK(w.count_per_level[3] == 20);
  CHECK(w.count_per_level[4] == 52);
  for (int j = 2; j <= 6; ++j) {
    const int n = (1 << j) - 2, prev = (1 << (j - 1)) - 2;
    CHECK(w.count_per_level[j] == n * n - 4 * prev * prev);
  }
  double area = w.residual_area;
  for (const auto& s : w.squares) area += s.area();
  CHECK(area == doctest::Approx(1.0));
  // residual is the boundary strip of width 2^-6
  CHECK(w.residual_area == doctest::Approx(1.0 - std::pow(1.0 - 2.0 / 64, 2)));
  CHECK(whitney_max_overlap(unit(), w, 64) <= 12);
  CHECK_THROWS(whitney(unit(), 1));
}

TEST_CASE("lattice JSON round trip") {
  const auto lat = sample_lattice(42);
  const auto back = lattice_from_json(to_json(lat, {lat.square(1, 0, 1)}));
  CHECK(back.shift == lat.shift);
  CHECK(back.root.origin == lat.root.origin);
  CHECK(to_json(lat, {lat.square(1, 0, 1)})["squares"].size() == 1);
}

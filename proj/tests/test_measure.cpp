#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "tblab/measure.hpp"

using namespace tblab;

namespace {
std::vector<oracle::Atom> atoms_of(const PlanarMeasure& mu) {
  std::vector<oracle::Atom> a;
  for (Eigen::Index i = 0; i < mu.size(); ++i) a.push_back({mu.z(i), mu.w(i)});
  return a;
}
PlanarMeasure single(Point z = {0, 0}, double w = 1.0) { return PlanarMeasure(std::vector<Atom>{{z, w}}); }
}  // namespace

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS(PlanarMeasure(std::vector<Atom>{{{0, 0}, 1.0}, {{0, 0}, 2.0}}));
  CHECK_THROWS(PlanarMeasure(std::vector<Atom>{{{0, 0}, 0.0}}));
  CHECK_THROWS(PlanarMeasure(std::vector<Atom>{{{NAN, 0}, 1.0}}));
  CHECK_THROWS(cantor_corner(0));
  CHECK_THROWS(segment_measure({0, 0}, {1, 0}, 0));
}

TEST_CASE("generators") {
  const auto c = cantor_corner(3);
  CHECK(c.size() == 64);
  CHECK(c.total() == doctest::Approx(1.0));
  double dmin = 1e9;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    for (Eigen::Index j = i + 1; j < c.size(); ++j) dmin = std::min(dmin, std::abs(c.z(i) - c.z(j)));
  CHECK(dmin == doctest::Approx(3.0 / 64));
  const auto s = segment_measure({0, 0}, {2, 0}, 8);
  CHECK(s.total() == doctest::Approx(2.0));
  CHECK(s.z(0).real() == doctest::Approx(0.125));
  const auto a = arc_measure({0, 0}, 1.0, 0.0, M_PI, 10);
  CHECK(a.total() == doctest::Approx(M_PI));
  const auto r1 = random_cloud(5, 50), r2 = random_cloud(5, 50);
  CHECK(r1.z() == r2.z());
}

TEST_CASE("normalize puts mass 1 inside B(0,1/8)") {
  for (const auto& mu : {cantor_corner(2), segment_measure({1, 1}, {5, 3}, 17), random_cloud(9, 40)}) {
    const auto nm = normalize(mu);
    CHECK(nm.mu.total() == doctest::Approx(1.0));
    CHECK(nm.mu.z().array().abs().maxCoeff() <= 0.125);
    // map back
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      CHECK(std::abs(nm.mu.z(i) * nm.length_scale + nm.center - mu.z(i)) < 1e-12);
  }
}

TEST_CASE("compensated sum") {
  Eigen::VectorXd v(4);
  v << 1e16, 1.0, -1e16, 1.0;
  CHECK(compensated_sum(v) == 2.0);
}

TEST_CASE("Ahlfors radius of a single atom is 1/M") {
  const auto mu = single();
  CHECK(ahlfors_radius(mu, 2.0, {0, 0}) == doctest::Approx(0.5));
  CHECK(ahlfors_radius(mu, 40.0, {0, 0}) == doctest::Approx(1.0 / 40));
  CHECK(ahlfors_radius(mu, 2.0, {0, 0}, 0.6) == 0.0);
  // off the atom: mass 1 appears at r = 1 and 1 > M r needs M < 1
  CHECK(ahlfors_radius(mu, 2.0, {1, 0}) == 0.0);
}

TEST_CASE("Ahlfors radius against a brute-force scan") {
  const auto mu = random_cloud(3, 40);
  const auto a = atoms_of(mu);
  std::mt19937_64 eng(1);
  for (int t = 0; t < 30; ++t) {
    const Point x(uniform01(eng), uniform01(eng));
    const double M = 1.0 + 20 * uniform01(eng);
    const double want = oracle::sup_over_radii(a, x, 0.0, [&](double r) {
      return oracle::ball(a, x, r) > M * r ? r : 0.0;
    });
    CHECK(ahlfors_radius(mu, M, x) == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("exceptional set: disjoint disks, radius sum below mass over M") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto mu = normalize(random_cloud(seed, 200)).mu;
    for (double M : {10.0, 100.0}) {
      const auto es = exceptional_set(mu, M);
      CHECK(es.radius_sum < mu.total() / M);
      for (std::size_t i = 0; i < es.selected.size(); ++i) {
        CHECK(ball_mass(mu, es.selected[i].c, es.selected[i].r) > M * es.selected[i].r);
        for (std::size_t j = i + 1; j < es.selected.size(); ++j)
          CHECK(std::abs(es.selected[i].c - es.selected[j].c) > es.selected[i].r + es.selected[j].r);
      }
    }
  }
}

TEST_CASE("disk unions") {
  DiskSet s;
  s.disks = {{{0, 0}, 1.0}, {{1.5, 0}, 1.0}};
  CHECK(s.contains({0.75, 0}));
  CHECK_FALSE(s.contains({0.75, 1}));
  CHECK(s.dist_to_complement({-0.5, 0}) == doctest::Approx(0.5));
  CHECK(s.dist_to_complement({3, 0}) == 0.0);
  // at the midpoint the nearest exit is the crossing point of the two circles
  CHECK(s.dist_to_complement({0.75, 0}) == doctest::Approx(std::sqrt(1 - 0.75 * 0.75)));
  const auto arcs = free_boundary(s);
  double len = 0;
  for (const auto& a : arcs) len += a.length();
  const double half = std::acos(0.75);
  CHECK(len == doctest::Approx(2 * (2 * M_PI - 2 * half)));
  DyadicSquare q;
  q.origin = {-0.25, -0.25};
  q.side = 0.5;
  CHECK(s.covers_square(q));
  q.origin = {-2, -2};
  CHECK_FALSE(s.covers_square(q));
}

TEST_CASE("negligibility constant") {
  // atoms at distances 1,2,3 with unit mass from a segment: sup cum/d = max(1, 1, 1) = 1
  PlanarMeasure mu(std::vector<Atom>{{{0, 1}, 1.0}, {{0, 2}, 1.0}, {{0, 3}, 1.0}});
  CHECK(negligibility_constant(mu, segment_contour({-1, 0}, {1, 0})) == doctest::Approx(1.0));
  PlanarMeasure on(std::vector<Atom>{{{0, 0}, 1.0}});
  CHECK(std::isinf(negligibility_constant(on, segment_contour({-1, 0}, {1, 0}))));
}

TEST_CASE("maximal functions against brute force") {
  const auto mu = random_cloud(4, 25);
  const auto a = atoms_of(mu);
  std::mt19937_64 eng(2);
  ComplexDensity f(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) f(i) = {uniform01(eng) - 0.5, uniform01(eng)};
  for (int t = 0; t < 20; ++t) {
    const Point x(uniform01(eng), uniform01(eng));
    const double r0 = 0.05 * uniform01(eng) + 1e-3;
    const double want = oracle::sup_over_radii(a, x, r0, [&](double r) {
      double s = 0;
      for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (std::abs(mu.z(i) - x) <= r) s += std::abs(f(i)) * mu.w(i);
      return s / r;
    });
    CHECK(maximal_m1(mu, f, x, r0) == doctest::Approx(want).epsilon(1e-6));
    const double beta = 1.5;
    const double want_t = oracle::sup_over_radii(a, x, 0.0, [&](double r) {
      double num = 0;
      for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (std::abs(mu.z(i) - x) <= r) num += std::pow(std::abs(f(i)), beta) * mu.w(i);
      const double den = oracle::ball(a, x, 3 * r);
      return den > 0 ? std::pow(num, 1 / beta) / den : 0.0;
    });
    CHECK(maximal_tilde(mu, f, x, beta) == doctest::Approx(want_t).epsilon(1e-6));
  }
}

TEST_CASE("maximal functions, closed forms") {
  const auto mu = single({0, 0}, 2.0);
  const ComplexDensity one = ComplexDensity::Ones(1);
  // sup_{r >= r0} 2 / r
  CHECK(maximal_m1(mu, one, {0, 0}, 0.5) == doctest::Approx(4.0));
  CHECK(maximal_m1(mu, one, {1, 0}, 0.1) == doctest::Approx(2.0));
  // one atom: (|g|^beta w)^(1/beta) / w -> w^(1/beta - 1) = 1 for w = 1
  CHECK(maximal_tilde(single(), one, {0, 0}, 1.5) == doctest::Approx(1.0));
  // segment: sup reached once the numerator ball holds everything
  const auto seg = segment_measure({0, 0}, {1, 0}, 200);
  const ComplexDensity ones = ComplexDensity::Ones(200);
  CHECK(maximal_tilde(seg, ones, {0.5, 0}, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("comparison lemma on a segment") {
  const auto mu = segment_measure({-1, 0}, {1, 0}, 400);
  const Target pt = Point(0, 0.01);
  const auto r = comparison_lemma_check(mu, pt, PowerProfile{1.0}, 0.1, 2.5, 0.05);
  CHECK(r.applicable);
  CHECK(r.ok());
  CHECK_FALSE(comparison_lemma_check(mu, pt, PowerProfile{1.0}, 0.01, 2.5, 0.05).applicable);
  // growth hypothesis fails with M below the density
  CHECK_FALSE(comparison_lemma_check(mu, pt, PowerProfile{1.0}, 0.1, 0.5, 0.05).applicable);
  CHECK(profile_tail(InvSquareProfile{0.5}, 2.0) == doctest::Approx(0.25));
  CHECK(profile_tail(PowerProfile{1.0}, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("measure JSON round trip") {
  const auto mu = random_cloud(8, 10);
  const auto back = measure_from_json(to_json(mu));
  CHECK(back.z() == mu.z());
  CHECK(back.w() == mu.w());
  CHECK(back.seed() == 8);
  CHECK_THROWS(measure_from_json(nlohmann::json::parse(R"({"atoms":[{"z":[0,0]}]})")));
}

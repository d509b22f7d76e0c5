#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tblab/martingale.hpp"

using namespace tblab;

namespace {
struct Instance {
  PlanarMeasure mu;
  DyadicLattice lat;
  ComplexDensity small;  // h - 1
  ComplexDensity h;
};

Instance random_instance(std::uint64_t seed, int n, double delta) {
  std::mt19937_64 eng(seed);
  Instance in;
  in.mu = normalize(random_cloud(eng(), n)).mu;
  in.lat = sample_lattice(eng());
  in.small.resize(n);
  for (int i = 0; i < n; ++i) in.small(i) = std::polar(delta / 2 * uniform01(eng), 2 * std::numbers::pi * uniform01(eng));
  in.h = ComplexDensity::Ones(n) + in.small;
  return in;
}

ComplexDensity gaussian(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  ComplexDensity f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = {nd(eng), nd(eng)};
  return f;
}

// four unit atoms, one per child of the root [0,1)^2
PlanarMeasure four_corners() {
  return PlanarMeasure(std::vector<Atom>{{{0.25, 0.25}, 1.0}, {{0.75, 0.25}, 1.0}, {{0.25, 0.75}, 1.0}, {{0.75, 0.75}, 2.0}});
}
}  // namespace

TEST_CASE("classification rules") {
  const auto lat = lattice_from_shift({0.5, 0.5});
  const auto mu = four_corners();
  const ComplexDensity zero = ComplexDensity::Zero(4);
  const auto cls = classify(lat, mu, zero, 0.1, {}, 10);
  CHECK(cls.root().transit());
  CHECK(cls.nodes.size() == 5);
  for (int k = 1; k <= 4; ++k) {
    CHECK_FALSE(cls.nodes[k].transit());
    CHECK(cls.nodes[k].reason == TerminalReason::atom_isolated);
  }
  // single atom: root forced transit, the isolating child terminal, empty children zero-mass
  const PlanarMeasure one(std::vector<Atom>{{{0.1, 0.1}, 1.0}});
  const auto c1 = classify(lat, one, ComplexDensity::Zero(1), 0.1, {}, 10);
  CHECK(c1.root_forced);
  CHECK(c1.root_would_be == TerminalReason::atom_isolated);
  CHECK(c1.nodes[1].reason == TerminalReason::atom_isolated);
  CHECK(c1.nodes[2].reason == TerminalReason::zero_mass);
  // planted energy: child 2 carries |g|^2 = delta^2 exactly
  ComplexDensity g = ComplexDensity::Zero(4);
  g(1) = 0.1;
  const auto c2 = classify(lat, four_corners(), g, 0.1, {}, 10);
  CHECK(c2.nodes[2].reason == TerminalReason::high_g_energy);
  // H covering everything
  DiskSet H;
  H.disks = {{{0.5, 0.5}, 1.0}};
  const auto c3 = classify(lat, mu, zero, 0.1, H, 10);
  CHECK(c3.root_would_be == TerminalReason::inside_H);
  for (int k = 1; k <= 4; ++k) CHECK(c3.nodes[k].reason == TerminalReason::inside_H);
  // truncation
  const PlanarMeasure pair(std::vector<Atom>{{{0.1, 0.1}, 1.0}, {{0.1 + 1e-9, 0.1}, 1.0}});
  const auto c4 = classify(lat, pair, ComplexDensity::Zero(2), 0.1, {}, 3);
  CHECK(c4.nodes.back().square.level == 3);
  bool truncated = false;
  for (const auto& n : c4.nodes) truncated = truncated || n.reason == TerminalReason::truncated;
  CHECK(truncated);
  CHECK_THROWS_AS(classify(lat, PlanarMeasure(std::vector<Atom>{{{5, 5}, 1.0}}), ComplexDensity::Zero(1), 0.1, {}, 3),
                  std::domain_error);
  CHECK_THROWS(classify(lat, mu, zero, 0.1, {}, 0));
}

TEST_CASE("decomposition on a one-level tree equals mean plus fluctuation") {
  const auto lat = lattice_from_shift({0.5, 0.5});
  const auto mu = four_corners();
  const auto cls = classify(lat, mu, ComplexDensity::Zero(4), 0.1, {}, 10);
  const AdaptedSystem sys(mu, cls, ComplexDensity::Ones(4), 0.1);
  ComplexDensity f(4);
  f << Point(1, 0), Point(2, 1), Point(-1, 0), Point(0, 3);
  // weighted mean with weights 1,1,1,2
  const Point mean = (f(0) + f(1) + f(2) + 2.0 * f(3)) / 5.0;
  const auto d = sys.decompose(f);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(d.lambda_part(i) - mean) < 1e-14);
  REQUIRE(d.deltas.size() == 1);
  const auto dq = d.deltas.begin()->second.dense(4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(dq(i) - (f(i) - mean)) < 1e-14);
}

TEST_CASE("decomposition properties on random instances") {
  const double delta = 0.01;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto in = random_instance(seed, 150, delta);
    const auto cls = classify(in.lat, in.mu, in.small, delta, {}, 20);
    const AdaptedSystem sys(in.mu, cls, in.h, delta);
    const auto f = gaussian(150, seed), g = gaussian(150, seed + 100);
    const auto d = sys.decompose(f);
    CHECK((d.reconstruct() - f).cwiseAbs().maxCoeff() <= 1e-9 * f.cwiseAbs().maxCoeff());
    CHECK(riesz_ratio(in.mu, f, d).ok());
    CHECK(projection_algebra_check(sys, f, g).ok());
    CHECK(bessel_check(in.mu, d, g).ok());
    std::map<SquareKey, std::complex<double>> coeffs;
    std::mt19937_64 eng(seed);
    for (const auto& [k, v] : d.deltas) coeffs[k] = {uniform01(eng) - 0.5, uniform01(eng)};
    CHECK(finite_coefficient_check(in.mu, d, coeffs).ok());
  }
}

TEST_CASE("denominator guard") {
  const auto lat = lattice_from_shift({0.5, 0.5});
  const auto mu = four_corners();
  const auto cls = classify(lat, mu, ComplexDensity::Zero(4), 0.1, {}, 10);
  ComplexDensity h(4);
  h << 1.0, -1.0, 1.0, -1.0;  // average 1/5 on the root
  CHECK_THROWS_AS(AdaptedSystem(mu, cls, h, 0.1), std::domain_error);
}

TEST_CASE("Carleson embedding") {
  const double delta = 0.01;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto in = random_instance(seed, 120, delta);
    const auto cls = classify(in.lat, in.mu, in.small, delta, {}, 20);
    const auto g = gaussian(120, seed);
    const auto a = standard_difference_energy(cls, in.mu, g);
    // the packing constant of this family: max over squares of the subtree sum over mass
    double A = 0;
    std::vector<double> sub(cls.nodes.size(), 0.0);
    for (const auto& [k, v] : a) sub[cls.index.at(k)] += v;
    for (int k = static_cast<int>(cls.nodes.size()) - 1; k > 0; --k) sub[cls.nodes[k].parent] += sub[k];
    for (std::size_t k = 0; k < cls.nodes.size(); ++k)
      if (cls.nodes[k].mass > 0) A = std::max(A, sub[k] / cls.nodes[k].mass);
    const auto phi = gaussian(120, seed + 7);
    const auto r = carleson_verify(a, A, cls, in.mu, phi);
    CHECK(r.applicable);
    CHECK(r.ok());
    CHECK_FALSE(carleson_verify(a, A / 2, cls, in.mu, phi).applicable);
  }
}

TEST_CASE("nonaccretive squares") {
  const auto lat = lattice_from_shift({0.5, 0.5});
  const auto mu = four_corners();
  CHECK(nonaccretive_squares(lat, mu, ComplexDensity::Ones(4), 0.5).empty());
  ComplexDensity b(4);
  b << 1.0, -1.0, 1.0, -1.0;
  // root: |1 - 1 + 1 - 2| / 5 = 1/5 <= 1/2, so only the root is returned
  const auto t = nonaccretive_squares(lat, mu, b, 0.5);
  REQUIRE(t.size() == 1);
  CHECK(t[0].level == 0);
  CHECK_THROWS(nonaccretive_squares(lat, mu, b, 0.0));
}

TEST_CASE("badness rules") {
  BadnessRule rule;
  rule.m = 3;
  rule.alpha = 0.25;
  const auto d2 = lattice_from_shift({0.5, 0.5});  // lines at the integers and dyadic points
  DyadicSquare q;
  q.side = 1.0 / 1024;
  q.origin = {0.5 - q.side / 2, 0.3};  // straddles x = 1/2
  CHECK(rim_bad_at_scale(q, d2, rule, 4));
  CHECK(bad_part1(q, d2, rule));
  // scale above 1/2 never counts
  CHECK_FALSE(rim_bad_at_scale(q, d2, rule, 10));
  const auto mu = normalize(cantor_corner(3)).mu;
  const auto chk = badness_implication_check(rule, mu, 300, 5);
  CHECK(chk.ok());
}

TEST_CASE("good/bad split and the suppression function") {
  const double delta = 0.01;
  const auto in = random_instance(3, 150, delta);
  const auto es = exceptional_set(in.mu, 50.0);
  const auto cls = classify(in.lat, in.mu, in.small, delta, es.H, 20);
  const AdaptedSystem sys(in.mu, cls, in.h, delta);
  const auto f = gaussian(150, 3);
  const auto d = sys.decompose(f);
  const auto split = split_good_bad(f, sys, d, sample_lattice(99), BadnessRule{});
  CHECK((split.good + split.bad - f).cwiseAbs().maxCoeff() < 1e-10);
  const auto tilde = build_phi_tilde(es.H, {0, 0}, 0.2);
  const auto phiD = build_phi_D(cls, tilde, in.mu, delta);
  CHECK(phiD.positive_mass >= 0.0);
  CHECK(phiD.check.samples >= 0);
}

TEST_CASE("classification JSON and delta table") {
  const auto lat = lattice_from_shift({0.5, 0.5});
  const auto mu = four_corners();
  const auto cls = classify(lat, mu, ComplexDensity::Zero(4), 0.1, {}, 10);
  const auto j = to_json(cls);
  CHECK(j.dump().find("atom_isolated") != std::string::npos);
  const AdaptedSystem sys(mu, cls, ComplexDensity::Ones(4), 0.1);
  const auto csv = deltas_csv(mu, sys.decompose(ComplexDensity::Ones(4)));
  CHECK(csv.find('\n') != std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracle.hpp"
#include "tblab/transform.hpp"

using namespace tblab;

namespace {
std::vector<oracle::Atom> atoms_of(const PlanarMeasure& mu) {
  std::vector<oracle::Atom> a;
  for (Eigen::Index i = 0; i < mu.size(); ++i) a.push_back({mu.z(i), mu.w(i)});
  return a;
}
ComplexDensity random_density(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  ComplexDensity f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = {uniform01(eng) - 0.5, uniform01(eng) - 0.5};
  return f;
}
}  // namespace

TEST_CASE("Cauchy transform on three atoms") {
  const PlanarMeasure mu(std::vector<Atom>{{{-1, 0}, 1.0}, {{1, 0}, 1.0}, {{2, 0}, 1.0}});
  const ComplexDensity one = ComplexDensity::Ones(3);
  CHECK(std::abs(cauchy_truncated(mu, one, {0, 0}, 0.5) - Point(0.5, 0)) < 1e-15);
  // strict cutoff: the atoms at distance 1 are excluded at eps = 1
  CHECK(std::abs(cauchy_truncated(mu, one, {0, 0}, 1.0) - Point(0.5, 0)) < 1e-15);
  CHECK(std::abs(cauchy_truncated(mu, one, {0, 0}, 2.0)) < 1e-15);
  CHECK(cauchy_maximal(mu, one, {0, 0}) == doctest::Approx(0.5));
  // at an atom the atom itself never enters
  CHECK(cauchy_maximal(mu, one, {1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("maximal transforms against the breakpoint oracle") {
  const auto mu = random_cloud(12, 60);
  const auto f = random_density(60, 3);
  const auto a = atoms_of(mu);
  std::vector<oracle::C> g(f.data(), f.data() + f.size());
  std::mt19937_64 eng(4);
  for (int t = 0; t < 30; ++t) {
    const Point z = t < 10 ? mu.z(t) : Point(uniform01(eng), uniform01(eng));
    const double want = oracle::cauchy_max(a, g, z);
    CHECK(cauchy_maximal(mu, f, z) == doctest::Approx(want).epsilon(1e-10));
    // no suppression: |k| is the Cauchy kernel, so the maximal functions agree
    CHECK(k_phi_maximal(mu, Eigen::VectorXd::Zero(60), 0.0, f, z) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("suppression-cut transform equals the suppressed kernel when the envelope vanishes") {
  const auto mu = random_cloud(2, 40);
  const auto f = random_density(40, 1);
  const EnvelopeFn zero = [](Point) { return 0.0; };
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    CHECK(std::abs(c_phi(mu, zero, f, mu.z(i)) - k_phi_truncated(mu, zero, f, mu.z(i), 0.0)) < 1e-12);
  CHECK(lemma1_constant(mu, zero, f).observed < 1e-10);
  const EnvelopeFn flat = [](Point) { return 0.05; };
  const auto r = lemma1_constant(mu, flat, f);
  CHECK(std::isfinite(r.observed));
  CHECK(r.observed > 0.0);
  CHECK_FALSE(r.bound.has_value());
}

TEST_CASE("operator norm") {
  // two atoms of mass 1/2 at distance 1: [[0, -1/2], [1/2, 0]]
  const PlanarMeasure two(std::vector<Atom>{{{0, 0}, 0.5}, {{1, 0}, 0.5}});
  const auto m2 = operator_matrix(two, Eigen::VectorXd::Zero(2));
  CHECK(std::abs(m2.entries(0, 1) - Point(-0.5, 0)) < 1e-15);
  CHECK(operator_norm(m2, two).value == doctest::Approx(0.5));
  const PlanarMeasure one(std::vector<Atom>{{{0, 0}, 1.0}});
  CHECK(operator_norm(operator_matrix(one, Eigen::VectorXd::Zero(1)), one).value == 0.0);
  // nonuniform weights against a full SVD of W^{1/2} A W^{-1/2}
  auto mu = random_cloud(6, 50);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(50, 0.5, 2.0);
  mu = PlanarMeasure(mu.z(), w);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(50, 0.01);
  const auto m = operator_matrix(mu, theta);
  const Eigen::VectorXd s = w.cwiseSqrt();
  const Eigen::MatrixXcd B = s.asDiagonal() * m.entries * s.cwiseInverse().asDiagonal();
  const double svd = Eigen::JacobiSVD<Eigen::MatrixXcd>(B).singularValues()(0);
  const auto est = operator_norm(m, mu, 1e-12, 100000);
  CHECK_FALSE(est.cap_hit);
  CHECK(est.value == doctest::Approx(svd).epsilon(1e-5));
}

TEST_CASE("level set for the top truncation") {
  const auto mu = normalize(segment_measure({0, 0}, {1, 0}, 64)).mu;
  const ComplexDensity b = ComplexDensity::Ones(64);
  const EnvelopeFn zero = [](Point) { return 0.0; };
  const auto none = epsilon0_and_GL(mu, zero, b, 1e9);
  CHECK(none.disks.empty());
  CHECK(none.eps0.maxCoeff() == 0.0);
  const auto some = epsilon0_and_GL(mu, zero, b, 5.0);
  CHECK_FALSE(some.disks.empty());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (some.eps0(i) > 0) CHECK(std::abs(k_phi_truncated(mu, zero, b, mu.z(i), some.eps0(i))) >= 5.0 - 1e-12);
  CHECK_THROWS(epsilon0_and_GL(mu, zero, b, 0.0));
}

TEST_CASE("mass of G_L shrinks as L grows") {
  const auto mu = normalize(random_cloud(5, 120)).mu;
  const auto es = exceptional_set(mu, 10.0, median_spacing(mu));
  LipschitzEnvelope phi;
  if (!es.H.empty()) phi.add_disks(es.H);
  const ComplexDensity b = ComplexDensity::Ones(mu.size());
  double prev = 2.0;
  for (double L = 0.25; L <= 1024; L *= 2) {
    const auto gl = epsilon0_and_GL(mu, std::cref(phi), b, L);
    double m = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (gl.disks.contains(mu.z(i)) && !es.H.contains(mu.z(i))) m += mu.w(i);
    CHECK(m <= prev + 1e-15);
    prev = m;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("Cotlar ratio is reported and finite") {
  const auto mu = normalize(cantor_corner(3)).mu;
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(mu.size(), 0.05);
  const auto f = ComplexDensity::Ones(mu.size()).eval();
  const auto r = cotlar_check(mu, theta, f, 10.0, 1.5, median_spacing(mu));
  CHECK(r.applicable);
  CHECK(std::isfinite(r.observed));
  CHECK(r.observed > 0.0);
  CHECK_THROWS(cotlar_check(mu, theta, f, 10.0, 2.0));
  // two heavy atoms closer than their Ahlfors radius: the precondition fails
  const PlanarMeasure close(std::vector<Atom>{{{0, 0}, 1.0}, {{0.01, 0}, 1.0}});
  CHECK_FALSE(cotlar_check(close, Eigen::VectorXd::Zero(2), ComplexDensity::Ones(2), 1.0, 1.5).applicable);
}

TEST_CASE("blanket inequality") {
  const auto mu = random_cloud(21, 50);
  const auto f = random_density(50, 2);
  const PairKernel cauchy = [](Point x, Point y) { return 1.0 / (x - y); };
  const auto phi = [](double s) { return std::min(1.0, 0.1 / std::max(s, 1e-300)); };
  CHECK(blanket_check(mu, cauchy, phi, 0.05, f).ok());
  const PairKernel big = [](Point x, Point y) { return 2.0 / (x - y); };
  CHECK_FALSE(blanket_check(mu, big, phi, 0.05, f).applicable);
  const auto rising = [](double s) { return std::min(1.0, s); };
  CHECK_FALSE(blanket_check(mu, cauchy, rising, 0.05, f).applicable);
}

TEST_CASE("weak type against a direct level-set scan") {
  const auto mu = segment_measure({0.01, 0}, {1, 0}, 100);
  const PlanarMeasure nu(std::vector<Atom>{{{0, 0}, 1.0}});
  const EnvelopeFn zero = [](Point) { return 0.0; };
  const auto wt = weak_type_experiment(mu, nu, zero, 1.0, 0.0);
  double want = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double t = 1 / std::abs(mu.z(i)) * (1 - 1e-12);
    double m = 0;
    for (Eigen::Index j = 0; j < mu.size(); ++j)
      if (1 / std::abs(mu.z(j)) > t) m += mu.w(j);
    want = std::max(want, t * m);
  }
  CHECK(wt.sup_t == doctest::Approx(want).epsilon(1e-9));
  CHECK(wt.ratio == doctest::Approx(want));
  const PlanarMeasure on(std::vector<Atom>{{mu.z(3), 1.0}});
  CHECK_FALSE(weak_type_experiment(mu, on, zero, 1.0, 0.0).report.applicable);
}

TEST_CASE("averaged kernel profile") {
  const auto a = LipschitzEnvelope::constant(0.1), b = LipschitzEnvelope::constant(0.3);
  const EnvelopeFn zero = [](Point) { return 0.0; };
  const std::vector<EnvelopeFn> fam{std::cref(a), std::cref(b)};
  const auto k = averaged_kernel_profile(fam, {0.5, 0.5}, zero, {0.2, 0}, {0, 0});
  CHECK(k.v == doctest::Approx(0.5));
  CHECK(std::abs(k.c - Point(2.5, 0)) < 1e-12);
  CHECK(averaged_kernel_profile(fam, {0.5, 0.5}, zero, {0.4, 0}, {0, 0}).v == doctest::Approx(1.0));
  const auto mu = random_cloud(3, 30);
  const auto r = mi_constant(mu, fam, {0.5, 0.5}, zero, random_density(30, 5));
  CHECK(std::isfinite(r.observed));
  CHECK_THROWS(averaged_kernel_profile(fam, {1.0}, zero, {0, 0}, {1, 0}));
}

TEST_CASE("matrix dump") {
  const auto dir = std::filesystem::temp_directory_path() / "tblab_dump_test";
  std::filesystem::create_directories(dir);
  const auto mu = random_cloud(1, 5);
  const auto m = operator_matrix(mu, Eigen::VectorXd::Zero(5));
  dump_matrix(m, (dir / "k.bin").string(), (dir / "k.json").string(), {{"kind", "zero"}});
  CHECK(std::filesystem::file_size(dir / "k.bin") == 5 * 5 * 2 * sizeof(double));
  std::ifstream js(dir / "k.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["n"] == 5);
  std::filesystem::remove_all(dir);
}

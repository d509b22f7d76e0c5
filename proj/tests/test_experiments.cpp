#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tblab/experiments.hpp"

using namespace tblab;
using nlohmann::json;

namespace {
std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "tblab_experiments_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const CheckReport* find(const PipelineReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}
}  // namespace

TEST_CASE("config parsing") {
  const auto c = config_from_json(json::parse(R"({"measure": {"kind": "circle", "n": 32}, "params": {"M": 20}, "seed": 9})"));
  CHECK(c.measure.kind == "circle");
  CHECK(c.measure.n == 32);
  CHECK(c.params.M == 20);
  CHECK(c.seed == 9);
  CHECK(c.taus.size() == 2);
  // round trip
  const auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"mesure": {}})")), doctest::Contains("mesure"),
                       std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"params": {"deltaa": 0.1}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"measure": {"n": 3, "extra": 1}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"params": {"delta": 1.5}})")), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"params": {"M": 0.5}})")), std::invalid_argument);
}

TEST_CASE("config and measure file errors name the path") {
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << "{\n  \"seed\": 1,\n  oops\n}\n";
  CHECK_THROWS_WITH(load_config(bad.string()), doctest::Contains(bad.string().c_str()));
  CHECK_THROWS_WITH(load_config(bad.string()), doctest::Contains("line 3"));
  CHECK_THROWS(load_config(scratch("missing.json").string()));
  MeasureSpec spec;
  spec.kind = "file";
  spec.file = bad.string();
  CHECK_THROWS_WITH(raw_measure(spec), doctest::Contains("line 3"));
  const auto good = scratch("mu.json");
  std::ofstream(good) << to_json(cantor_corner(2)).dump();
  spec.file = good.string();
  CHECK(build_measure(spec).size() == 16);
  spec.kind = "nope";
  CHECK_THROWS(raw_measure(spec));
}

TEST_CASE("densities") {
  const auto mu = build_measure({"random", 200, 3, 4, ""});
  CHECK((build_density({"ones", 0.1, 16}, mu).array() == 1.0).all());
  for (double g : {0.1, 0.3, 0.7}) {
    const auto b = build_density({"checkerboard", g, 16}, mu);
    CHECK(b.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
    CHECK(std::abs(b.dot(mu.w().cast<std::complex<double>>())) == doctest::Approx(g));
  }
  CHECK_THROWS(build_density({"checkerboard", 1.5, 16}, mu));
  CHECK_THROWS(build_density({"stripes", 0.1, 16}, mu));
}

TEST_CASE("single atom: zero norms") {
  ExperimentConfig cfg;
  const PlanarMeasure one(std::vector<Atom>{{{0, 0}, 1.0}});
  const auto r = run_theorem1_pipeline(cfg, one);
  CHECK(r.values["norm"] == 0.0);
  CHECK(r.ok());
}

TEST_CASE("t1 pipeline on a segment") {
  ExperimentConfig cfg;
  cfg.params.M = 20;
  const auto mu = build_measure({"segment", 64, 3, 1, ""});
  const auto r = run_theorem1_pipeline(cfg, mu);
  CHECK(r.ok());
  // at this M the discretized segment is Ahlfors above the atom spacing
  CHECK(r.values["mass_H"] == 0.0);
  CHECK(r.values["ratio"].get<double>() > 0.0);
  // determinism: identical JSON apart from timings
  CHECK(run_theorem1_pipeline(cfg, mu).to_json() == r.to_json());
}

TEST_CASE("t1a: a huge L leaves Psi = Phi") {
  ExperimentConfig cfg;
  cfg.params.M = 20;
  cfg.params.L = 1e9;
  const auto mu = build_measure({"segment", 48, 3, 1, ""});
  const auto r = run_theorem1a_pipeline(cfg, mu);
  CHECK(r.ok());
  CHECK(r.values["G_disks"] == 0);
  CHECK(r.values["sup_maximal_psi"].get<double>() == doctest::Approx(r.values["sup_maximal_phi"].get<double>()));
}

TEST_CASE("t1a on a spike") {
  ExperimentConfig cfg;
  cfg.params.M = 20;
  cfg.params.L = 4;
  const auto mu = build_measure({"spike", 96, 3, 2, ""});
  const auto r = run_theorem1a_pipeline(cfg, mu);
  CHECK(r.ok());
  CHECK(r.values["G_disks"].get<int>() > 0);
}

TEST_CASE("t3 bookkeeping") {
  ExperimentConfig cfg;
  cfg.lattices = 4;
  const auto mu = build_measure({"circle", 64, 3, 1, ""});
  const auto b = build_density({"checkerboard", 0.2, 16}, mu);
  const auto z = zero_set_construction(cfg, mu, b);
  CHECK(z.gamma == doctest::Approx(0.2));
  CHECK(z.beta == doctest::Approx(0.04 / 16));
  CHECK(z.pairs == 16);
  // stage accounting: every atom outside F has exactly one reason
  double out = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    CHECK((z.in_F[i] != 0) == (z.reason[i] == "F"));
    if (!z.in_F[i]) out += mu.w(i);
  }
  CHECK(out + z.mass_F == doctest::Approx(mu.total()));
  const auto rep = run_theorem3_pipeline(cfg, mu, b);
  CHECK(rep.ok());
  const auto* frac = find(rep, "zero_set_fraction");
  REQUIRE(frac != nullptr);
  CHECK(frac->applicable);
  CHECK(reasons_csv(mu, z).find("reason") != std::string::npos);
}

TEST_CASE("Vitushkin report on a segment") {
  ExperimentConfig cfg;
  cfg.lattices = 4;
  const auto v = vitushkin_report(segment_contour({0, 0}, {1, 0}), 64, cfg);
  CHECK(v.report.values["H1"].get<double>() == doctest::Approx(1.0));
  CHECK(v.report.values["c2_F"].get<double>() == 0.0);
  CHECK(v.report.ok());
}

TEST_CASE("suite passes on the default config and is seed-stable in its verdicts") {
  ExperimentConfig cfg;
  cfg.measure.n = 96;
  cfg.trials = 200;
  const auto a = run_suite(cfg);
  for (const auto& c : a.checks) CHECK_MESSAGE(c.ok(), c.name);
  cfg.seed = 2;
  const auto b = run_suite(cfg);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t k = 0; k < a.checks.size(); ++k) CHECK(a.checks[k].ok() == b.checks[k].ok());
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tblab/geometry.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

struct MeasureSpec {
  std::string kind = "segment";  // segment | circle | arc | cantor | random | spike | file
  int n = 128;
  int level = 3;
  std::uint64_t seed = 1;
  std::string file;
};

struct DensitySpec {
  std::string kind = "ones";  // ones | checkerboard
  double gamma = 0.1;         // target |integral of b| for the checkerboard
  int cells = 16;
};

struct ExperimentConfig {
  std::string scenario = "default";
  MeasureSpec measure;
  DensitySpec density;
  GlobalParams params;
  std::int64_t trials = 1000;
  int lattices = 8;  // the zero-set construction uses every ordered pair of these
  std::uint64_t seed = 1;
  std::string out = "out";
  std::vector<double> taus{1e-3, 1e-4};
  std::vector<double> M_grid;  // empty: powers of two
  std::vector<double> L_grid;
  double phi_const = 0.05;
  int n_max = 20;
};

// Unknown keys anywhere in the file are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

// Generated measure, rescaled to mass 1 inside B(0, 1/8).
PlanarMeasure build_measure(const MeasureSpec& spec);
PlanarMeasure raw_measure(const MeasureSpec& spec);
ComplexDensity build_density(const DensitySpec& spec, const PlanarMeasure& mu);

struct PipelineReport {
  std::string name;
  nlohmann::json values;
  std::vector<CheckReport> checks;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage, kept out of values
  bool ok() const;
  nlohmann::json to_json() const;
};

PipelineReport run_theorem1_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu);
PipelineReport run_theorem1a_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu);
PipelineReport run_theorem3_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu, const ComplexDensity& b);

// Zero set F and the surrounding bookkeeping of the construction.
struct ZeroSetConstruction {
  double gamma = 0.0;  // |integral b| / ||mu||
  double beta = 0.0;
  double M = 0.0, L = 0.0;
  bool M_found = false, L_found = false;
  double mass_H = 0.0, mass_G_minus_H = 0.0;
  double min_mass_outside_T = 0.0;  // min over lattices of mu(E \ T)
  double mass_p1_large = 0.0;       // mu{p1 > gamma / 4}
  Eigen::VectorXd p1;
  Eigen::VectorXd phi0;
  std::vector<char> in_F;
  std::vector<std::string> reason;  // F | H | G | T per atom
  double mass_F = 0.0;
  int pairs = 0;
};
ZeroSetConstruction zero_set_construction(const ExperimentConfig& cfg, const PlanarMeasure& mu, const ComplexDensity& b);

// The removal-reason table behind a t3 or vitushkin run.
std::string reasons_csv(const PlanarMeasure& mu, const ZeroSetConstruction& z);

struct VitushkinReport {
  PipelineReport report;
  ZeroSetConstruction zero_set;
  PlanarMeasure measure;  // normalized discretization
};
// Discretizes H^1 on the contour with about `atoms` atoms, b = 1, and runs the zero-set construction.
VitushkinReport vitushkin_report(const Contour& gamma_set, int atoms, const ExperimentConfig& cfg);

// One seeded pass over every module's checks at modest sample counts.
PipelineReport run_suite(const ExperimentConfig& cfg);

}  // namespace tblab

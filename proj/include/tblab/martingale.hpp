#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tblab/geometry.hpp"
#include "tblab/kernel.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

enum class Status { transit, terminal };
enum class TerminalReason { none, inside_H, zero_mass, high_g_energy, atom_isolated, truncated };
std::string to_string(TerminalReason r);

struct SquareNode {
  DyadicSquare square;
  Status status = Status::transit;
  TerminalReason reason = TerminalReason::none;
  double mass = 0.0;
  double g_energy = 0.0;  // integral of |g|^2 over the square
  std::vector<Eigen::Index> atoms;
  int parent = -1;
  std::array<int, 4> children{-1, -1, -1, -1};
  bool transit() const { return status == Status::transit; }
};

// Tree of classified squares; node 0 is the root.  Children of terminal squares are absent.
struct Classification {
  DyadicLattice lattice;
  std::vector<SquareNode> nodes;
  std::map<SquareKey, int> index;
  int n_max = 0;
  bool root_forced = false;  // the root met a terminal rule and was kept transit anyway
  TerminalReason root_would_be = TerminalReason::none;

  const SquareNode& root() const { return nodes.front(); }
  std::optional<int> find(const DyadicSquare& q) const;
  std::vector<int> transit_nodes() const;
  std::vector<int> terminal_nodes() const;
  // Deepest classified square of the tree containing p.
  int leaf_containing(Point p) const;
};

Classification classify(const DyadicLattice& lattice, const PlanarMeasure& mu, const ComplexDensity& g,
                        double delta, const DiskSet& H, int n_max);

struct SparseDensity {
  std::vector<Eigen::Index> idx;
  Eigen::VectorXcd val;
  ComplexDensity dense(Eigen::Index n) const;
};

struct MartingaleDecomposition {
  ComplexDensity lambda_part;
  std::map<SquareKey, SparseDensity> deltas;  // one entry per transit square
  ComplexDensity reconstruct() const;
};

// Averaging operators Lambda and Delta_Q adapted to the density h on a classified tree.
class AdaptedSystem {
 public:
  AdaptedSystem(PlanarMeasure mu, Classification cls, ComplexDensity h, double delta);

  ComplexDensity lambda(const ComplexDensity& f) const;
  SparseDensity delta(int node, const ComplexDensity& f) const;
  MartingaleDecomposition decompose(const ComplexDensity& f) const;
  // (integral of f over the node) / (integral of h over the node)
  std::complex<double> ratio(int node, const ComplexDensity& f) const;
  std::complex<double> integral(int node, const ComplexDensity& f) const;

  const PlanarMeasure& measure() const { return mu_; }
  const Classification& classification() const { return cls_; }
  const ComplexDensity& h() const { return h_; }
  const std::vector<int>& transit() const { return transit_; }

 private:
  PlanarMeasure mu_;
  Classification cls_;
  ComplexDensity h_;
  std::vector<int> transit_;
};

MartingaleDecomposition decompose(const ComplexDensity& phi, const AdaptedSystem& sys);

// <f, g> = sum f_i conj(g_i) w_i
std::complex<double> inner(const PlanarMeasure& mu, const ComplexDensity& f, const ComplexDensity& g);
double norm2(const PlanarMeasure& mu, const ComplexDensity& f);
double norm2(const PlanarMeasure& mu, const SparseDensity& f);

CheckReport riesz_ratio(const PlanarMeasure& mu, const ComplexDensity& phi, const MartingaleDecomposition& d);
CheckReport finite_coefficient_check(const PlanarMeasure& mu, const MartingaleDecomposition& d,
                                     const std::map<SquareKey, std::complex<double>>& coeffs);
CheckReport bessel_check(const PlanarMeasure& mu, const MartingaleDecomposition& d, const ComplexDensity& psi);
// Worst absolute defect among the projection identities, tested on the given functions.
CheckReport projection_algebra_check(const AdaptedSystem& sys, const ComplexDensity& f, const ComplexDensity& g);

CheckReport carleson_verify(const std::map<SquareKey, double>& a, double A_hyp, const Classification& cls,
                            const PlanarMeasure& mu, const ComplexDensity& phi);
// a_Q = ||standard martingale difference of g||^2 on the transit squares of the tree.
std::map<SquareKey, double> standard_difference_energy(const Classification& cls, const PlanarMeasure& mu,
                                                       const ComplexDensity& g);

std::vector<DyadicSquare> nonaccretive_squares(const DyadicLattice& lattice, const PlanarMeasure& mu,
                                               const ComplexDensity& b, double eta, int n_max = 30);

enum class BadnessVariant { consolidated, separation, skeleton, negligibility };

struct BadnessRule {
  int m = 3;
  double alpha = 0.25;
  double tildeM = 1e4;
  BadnessVariant variant = BadnessVariant::consolidated;
};

// Rim condition at grid size 2^k l(Q) of the extended lattice; false when that size exceeds 1/2.
bool rim_bad_at_scale(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, int k);
bool bad_part1(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule);
bool bad_part2(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, const PlanarMeasure& mu);
bool is_bad(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, const PlanarMeasure& mu);

struct LegacyBadness {
  bool separation = false;
  bool skeleton = false;
  bool negligibility = false;
  bool consolidated = false;
  bool violated() const { return (separation || skeleton || negligibility) && !consolidated; }
};
LegacyBadness badness_implication(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule,
                                  const PlanarMeasure& mu);
// Random squares of side at most 2^-(m+1) against random lattices; counts legacy-bad squares
// that the consolidated rule misses.
CheckReport badness_implication_check(const BadnessRule& rule, const PlanarMeasure& mu, std::int64_t samples,
                                      std::uint64_t seed);

struct GoodBadSplit {
  ComplexDensity good;
  ComplexDensity bad;
  int bad_squares = 0;
  int good_squares = 0;
};
GoodBadSplit split_good_bad(const ComplexDensity& phi, const AdaptedSystem& sys, const MartingaleDecomposition& d,
                            const DyadicLattice& d2, const BadnessRule& rule);

struct PhiD {
  LipschitzEnvelope envelope;
  double positive_mass = 0.0;  // mu{Phi_D > 0}
  CheckReport check;           // positive_mass <= delta * ||mu||
};
PhiD build_phi_D(const Classification& cls, const LipschitzEnvelope& phi_tilde, const PlanarMeasure& mu, double delta);

nlohmann::json to_json(const Classification& cls);
std::string deltas_csv(const PlanarMeasure& mu, const MartingaleDecomposition& d);

}  // namespace tblab

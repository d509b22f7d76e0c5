#pragma once

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tblab/kernel.hpp"
#include "tblab/martingale.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

// Dense matrix of k(z_i, z_j) w_i w_j for suppression values theta at the atoms.
Eigen::MatrixXcd weighted_kernel(const PlanarMeasure& mu, const Eigen::VectorXd& theta);

// sum_{i,j} f_i k(z_i, z_j) g_j w_i w_j, no conjugation, diagonal excluded
std::complex<double> bilinear_form(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const ComplexDensity& f,
                                   const ComplexDensity& g);
std::complex<double> bilinear_form(const PlanarMeasure& mu, const EnvelopeFn& theta, const ComplexDensity& f,
                                   const ComplexDensity& g);

enum class PairTag { sigma1, sigma2, sigma3_term, sigma3_tr, sigma3_split };
std::string to_string(PairTag t);

struct PairTerm {
  SquareKey q;   // square of the first lattice
  SquareKey r;   // square of the second lattice
  bool mirror;   // true when the first-lattice square is the larger one
  PairTag tag;
  std::complex<double> value;
};

// Goodness of the smaller square of a pair.  `first` tells which lattice it belongs to.
using Goodness = std::function<bool(const DyadicSquare& small, bool first)>;

struct BilinearPartition {
  std::vector<PairTerm> terms;
  std::map<PairTag, std::complex<double>> sums;
  std::complex<double> lambda_terms = 0.0;
  std::complex<double> total = 0.0;   // all tagged terms plus lambda terms
  std::complex<double> direct = 0.0;  // <phi, K psi>
  double rel_error = 0.0;
  int max_sigma1_count = 0;
  double sigma1_bound = 0.0;
  int skeleton_violations = 0;  // good small squares too close to the skeleton of the big one
  int skipped_bad = 0;          // pairs left out because the small square is bad
};

// Splits <phi, K psi> over pairs of transit squares.  Pairs whose smaller square is bad are
// skipped; a good small square in the third group that meets two children throws unless
// `allow_split` is set, in which case it is tagged sigma3_split.
BilinearPartition partition(const AdaptedSystem& sys1, const AdaptedSystem& sys2, const ComplexDensity& phi,
                            const ComplexDensity& psi, const Eigen::VectorXd& theta, int m, double alpha,
                            const Goodness& good, bool allow_split);

std::string partition_csv(const BilinearPartition& p);
nlohmann::json to_json(const BilinearPartition& p);

CheckReport far_interaction_verify(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const DyadicSquare& Q,
                                   const DyadicSquare& R, const ComplexDensity& fQ, const ComplexDensity& gR,
                                   double A_const = 16.0, double eps_cz = 1.0);

// max mu(S) / l(S) over transit squares
double transit_growth_constant(const Classification& cls);

CheckReport tqr_matrix_verify(const Classification& cls1, const Classification& cls2, double eps_cz, double M,
                              const std::map<SquareKey, double>& a, const std::map<SquareKey, double>& b);

struct Sigma3Coefficients {
  SquareKey r_of_q{};
  bool found = false;
  std::vector<std::pair<SquareKey, std::complex<double>>> chain;  // c_{R,Q} for R strictly above R(Q)
  std::complex<double> telescoped = 0.0;
  std::complex<double> target = 0.0;  // ratio of psi to h on R(Q)
  double restriction_defect = 0.0;
  double telescoping_defect = 0.0;
};
Sigma3Coefficients sigma3_coefficients(const AdaptedSystem& sys2, const ComplexDensity& psi, const DyadicSquare& Q,
                                       int m);

struct Sigma3Carleson {
  CheckReport packing;  // sum_{R in S} a_R <= 2 ||chi_S K h||^2
  CheckReport growth;   // 2 ||chi_S K h||^2 <= 2 B^2 mu(S)
  double B = 0.0;
  int families = 0;
};
Sigma3Carleson sigma3_carleson_numbers(const AdaptedSystem& sys1, const ComplexDensity& phi, const AdaptedSystem& sys2,
                                       const Eigen::VectorXd& theta, int m, const Goodness& good);

CheckReport negligible_split_verify(const PlanarMeasure& mu, const AdaptedSystem& sys1, const AdaptedSystem& sys2,
                                    int q_node, int r_node, const ComplexDensity& phi, const ComplexDensity& psi,
                                    const Eigen::VectorXd& theta, double tildeM, double delta);

}  // namespace tblab

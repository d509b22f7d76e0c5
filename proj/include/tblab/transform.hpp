#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tblab/kernel.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

// sum_{|z_j - z| > eps} g_j w_j / (z_j - z)
std::complex<double> cauchy_truncated(const PlanarMeasure& mu, const ComplexDensity& g, Point z, double eps);
// sup over eps > 0 of the modulus above, exact over the breakpoints
double cauchy_maximal(const PlanarMeasure& mu, const ComplexDensity& g, Point z);

// sum_{|z_j - z| >= eps} k(z, z_j) g_j w_j with suppression theta_z at z and theta at the atoms
std::complex<double> k_phi_truncated(const PlanarMeasure& mu, const Eigen::VectorXd& theta, double theta_z,
                                     const ComplexDensity& g, Point z, double eps);
double k_phi_maximal(const PlanarMeasure& mu, const Eigen::VectorXd& theta, double theta_z, const ComplexDensity& g,
                     Point z);
std::complex<double> k_phi_truncated(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point z,
                                     double eps);
double k_phi_maximal(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point z);

// sum_{|z_j - x| >= Phi(x)} g_j w_j / (x - z_j); same orientation as k(x, y) ~ 1/(x - y)
std::complex<double> c_phi(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point x);

// max over atoms of |K_Phi f - C_Phi f| / M_{1,Phi} f; reported, no bound
CheckReport lemma1_constant(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& f);

struct GLSet {
  Eigen::VectorXd eps0;  // per atom, 0 when the level is never reached
  DiskSet disks;         // union of B(x, 2 eps0(x)) over atoms with eps0 > 0
};
GLSet epsilon0_and_GL(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& b, double L);

// (i, j) entry k(z_i, z_j) w_j: the operator f -> K f on L^2(mu)
struct OperatorMatrix {
  Eigen::MatrixXcd entries;
  std::string kernel = "k_phi";
};
OperatorMatrix operator_matrix(const PlanarMeasure& mu, const Eigen::VectorXd& theta);
OperatorMatrix operator_matrix(const PlanarMeasure& mu, const EnvelopeFn& phi);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool cap_hit = false;
};
// Largest singular value in the mu-weighted inner product; power iteration from all ones.
NormEstimate operator_norm(const OperatorMatrix& mat, const PlanarMeasure& mu, double rel_tol = 1e-8,
                           int max_iter = 10000);

// Raw row-major complex doubles plus a JSON sidecar {n, kernel, phi}.
void dump_matrix(const OperatorMatrix& mat, const std::string& bin_path, const std::string& json_path,
                 const nlohmann::json& phi);

// max over atoms of T*f / (M~[Tf] + M M~_beta f + ||T|| M~_beta f) for T = K_theta.
// The ratio is reported only.  Precondition |k(x,y)| <= min(1/R(x), 1/R(y)) with R the Ahlfors radius.
CheckReport cotlar_check(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const ComplexDensity& f, double M,
                         double beta, double r_floor = 0.0);

using PairKernel = std::function<Point(Point, Point)>;
// |int_{|y-x|>R} b(x,y) phi(|x-y|) f dmu| <= 2 b*f + 2 M_{1,R} f at every atom
CheckReport blanket_check(const PlanarMeasure& mu, const PairKernel& b, const std::function<double(double)>& phi_mono,
                          double R, const ComplexDensity& f);

struct WeakType {
  double sup_t = 0.0;  // sup_t t mu{|T nu| > t}
  double ratio = 0.0;  // sup_t / ((M + ||T||) ||nu||)
  CheckReport report;
};
WeakType weak_type_experiment(const PlanarMeasure& mu, const PlanarMeasure& nu, const EnvelopeFn& phi, double M,
                              double t_norm);

struct AveragedKernel {
  double v = 0.0;
  std::complex<double> c = 0.0;
};
// v(t) = P{max(Phi, Phi_w)(x) <= t} at t = |x - y|, c = v / (x - y)
AveragedKernel averaged_kernel_profile(const std::vector<EnvelopeFn>& family, const std::vector<double>& probs,
                                       const EnvelopeFn& phi, Point x, Point y);
// max over atoms of |C_Phi f| / (c* f + M_{1,Phi} f); reported
CheckReport mi_constant(const PlanarMeasure& mu, const std::vector<EnvelopeFn>& family,
                        const std::vector<double>& probs, const EnvelopeFn& phi, const ComplexDensity& f);

}  // namespace tblab

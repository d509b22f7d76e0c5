#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tblab/geometry.hpp"
#include "tblab/report.hpp"

namespace tblab {

using ComplexDensity = Eigen::VectorXcd;

struct Atom {
  Point z;
  double w;
};

// Finite weighted atom cloud.  Locations are pairwise distinct, weights positive.
class PlanarMeasure {
 public:
  PlanarMeasure() = default;
  PlanarMeasure(Eigen::VectorXcd z, Eigen::VectorXd w, std::string generator = "custom",
                std::uint64_t seed = 0);
  explicit PlanarMeasure(const std::vector<Atom>& atoms);

  Eigen::Index size() const { return z_.size(); }
  bool empty() const { return z_.size() == 0; }
  const Eigen::VectorXcd& z() const { return z_; }
  const Eigen::VectorXd& w() const { return w_; }
  Point z(Eigen::Index i) const { return z_(i); }
  double w(Eigen::Index i) const { return w_(i); }
  double total() const { return total_; }
  const std::string& generator() const { return generator_; }
  std::uint64_t seed() const { return seed_; }

  // Restriction to the atoms listed.
  PlanarMeasure subset(const std::vector<Eigen::Index>& idx) const;

 private:
  Eigen::VectorXcd z_;
  Eigen::VectorXd w_;
  double total_ = 0.0;
  std::string generator_ = "custom";
  std::uint64_t seed_ = 0;
};

// Neumaier-compensated sum.
double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& v);

struct Disk {
  Point c;
  double r;
};

struct DiskSet {
  std::vector<Disk> disks;
  bool empty() const { return disks.empty(); }
  bool contains(Point p) const;
  // dist(p, C \ union of disks), exact for a finite union.
  double dist_to_complement(Point p) const;
  // true when the closed square lies inside the union (sampled on a fine grid plus corners
  // is not enough in general, so this uses the exact complement distance at the center of
  // a covering of sub-cells).
  bool covers_square(const DyadicSquare& q) const;
  double mass(const class PlanarMeasure& mu) const;
};

// Arcs of the union's boundary (pieces of each circle outside every other open disk).
std::vector<Arc> free_boundary(const DiskSet& set);

struct GlobalParams {
  double delta = 0.01;
  double M = 10.0;
  int m = 3;
  double eps_cz = 1.0;
  double beta = 0.1;
  double tildeM = 1e4;
  double eta = 0.5;
  double L = 10.0;
  double B = 1.0;
  double alpha() const { return eps_cz / (2.0 * (1.0 + eps_cz)); }
};

// Measure generators.
PlanarMeasure cantor_corner(int level);
PlanarMeasure segment_measure(Point a, Point b, int n);
PlanarMeasure arc_measure(Point center, double radius, double theta0, double theta1, int n);
PlanarMeasure random_cloud(std::uint64_t seed, int n);

struct NormalizedMeasure {
  PlanarMeasure mu;
  Point center;        // original-frame center
  double length_scale;  // original length = normalized length * length_scale
  double mass_scale;    // original mass = normalized mass * mass_scale
};
// Rescale to total mass 1 with support inside B(0, 1/8).
NormalizedMeasure normalize(const PlanarMeasure& mu);

double ball_mass(const PlanarMeasure& mu, Point x, double r);
// sup{r >= r_floor : mu(B(x,r)) > M r}, 0 if the set is empty.  A positive floor ignores
// the non-Ahlfors disks every atom carries below the sampling resolution.
double ahlfors_radius(const PlanarMeasure& mu, double M, Point x, double r_floor = 0.0);

struct ExceptionalSet {
  std::vector<Disk> selected;  // disjoint non-Ahlfors disks B(x_j, r_j)
  DiskSet H;                   // union of B(x_j, 5 r_j)
  double radius_sum = 0.0;
};
ExceptionalSet exceptional_set(const PlanarMeasure& mu, double M, double r_floor = 0.0);
// Median distance from an atom to its nearest neighbour.
double median_spacing(const PlanarMeasure& mu);

double negligibility_constant(const PlanarMeasure& mu, const Contour& g);
// Same, against the boundary of a square; only atoms within `reach` of the boundary are
// examined when the caller knows the rest cannot matter.
double negligibility_constant(const PlanarMeasure& mu, const DyadicSquare& q);

double maximal_m1(const PlanarMeasure& mu, const ComplexDensity& f, Point x, double r0);
double maximal_tilde(const PlanarMeasure& mu, const ComplexDensity& g, Point x, double beta);

// Decreasing profiles with closed-form tails.
struct InvSquareProfile { double eps; };      // eps / t^2
struct PowerProfile { double eps; };          // 1 / t^(1+eps)
struct SuppressedProfile { double r; };       // r (r + t) / t^3
struct ZeroProfile {};
using Profile = std::variant<InvSquareProfile, PowerProfile, SuppressedProfile, ZeroProfile>;
double profile_value(const Profile& u, double t);
double profile_tail(const Profile& u, double R);

using Target = std::variant<Point, Contour>;
CheckReport comparison_lemma_check(const PlanarMeasure& mu, const Target& s, const Profile& u,
                                   double R, double M, double R0);

double h1_length(const Contour& g);

nlohmann::json to_json(const PlanarMeasure& mu);
PlanarMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiskSet& d);

}  // namespace tblab

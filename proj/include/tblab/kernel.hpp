#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tblab/geometry.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

struct ConstantPrim {
  double lambda;
};
struct DiskComplementPrim {
  DiskSet set;
  std::vector<Arc> free_arcs;  // cached boundary of the union
};
struct SquareComplementPrim {
  DyadicSquare square;
};
struct ConePrim {
  Point x0;
  double rho;
};
using Primitive = std::variant<ConstantPrim, DiskComplementPrim, SquareComplementPrim, ConePrim>;

// Pointwise max of 1-Lipschitz nonnegative primitives.  Empty means zero.
class LipschitzEnvelope {
 public:
  LipschitzEnvelope() = default;

  static LipschitzEnvelope constant(double lambda);
  static LipschitzEnvelope disk_complement(const DiskSet& set);
  static LipschitzEnvelope square_complement(const DyadicSquare& q);
  static LipschitzEnvelope cone(Point x0, double rho);

  LipschitzEnvelope& add(Primitive p);
  LipschitzEnvelope& add_constant(double lambda) { return add(ConstantPrim{lambda}); }
  LipschitzEnvelope& add_disks(const DiskSet& set);
  LipschitzEnvelope& add_square(const DyadicSquare& q) { return add(SquareComplementPrim{q}); }
  LipschitzEnvelope& add_cone(Point x0, double rho) { return add(ConePrim{x0, rho}); }
  LipschitzEnvelope& merge(const LipschitzEnvelope& other);

  double operator()(Point x) const;
  const std::vector<Primitive>& primitives() const { return prims_; }

 private:
  std::vector<Primitive> prims_;
};

using EnvelopeFn = std::function<double(Point)>;

inline double env_eval(const LipschitzEnvelope& phi, Point x) { return phi(x); }

// k(x, y) = conj(x - y) / (|x - y|^2 + phi_x phi_y), zero on the diagonal.
template <class Scalar>
std::complex<Scalar> k_phi(PointT<Scalar> x, PointT<Scalar> y, Scalar phi_x, Scalar phi_y) {
  const auto d = x - y;
  if (d == PointT<Scalar>(0)) return {0, 0};
  return std::conj(d) / (std::norm(d) + phi_x * phi_y);
}

template <class Env>
Point k_phi(const Env& phi, Point x, Point y) {
  return k_phi<double>(x, y, phi(x), phi(y));
}

// Values of an envelope at every atom of a measure.
Eigen::VectorXd sample_envelope(const EnvelopeFn& phi, const PlanarMeasure& mu);

CheckReport env_lipschitz_check(const EnvelopeFn& phi, std::int64_t n_samples, std::uint64_t seed);
CheckReport suppression_bounds_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed);
CheckReport cz_smoothness_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed,
                                double eps_cz = 1.0);
// Antisymmetry k(x,y) + k(y,x) == 0, counted exactly.
CheckReport antisymmetry_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed);

// Random envelope with up to `max_prims` primitives inside [-1,1]^2, for sampled suites.
LipschitzEnvelope random_envelope(std::uint64_t seed, int max_prims = 10);

LipschitzEnvelope build_phi_tilde(const DiskSet& H, Point x0, double rho_prime);

// E_beta of a finite family of envelopes, evaluated pointwise.
class TrimmedEnvelope {
 public:
  TrimmedEnvelope(std::vector<EnvelopeFn> family, std::vector<double> probs, double beta);
  double operator()(Point x) const;

 private:
  std::vector<EnvelopeFn> family_;
  std::vector<double> probs_;
  double beta_;
};

nlohmann::json to_json(const LipschitzEnvelope& phi);
LipschitzEnvelope envelope_from_json(const nlohmann::json& j);

}  // namespace tblab

#include "tblab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tblab/probability.hpp"

namespace tblab {

namespace {
double eval(const ConstantPrim& p, Point) { return p.lambda; }
double eval(const DiskComplementPrim& p, Point x) {
  const bool inside = std::any_of(p.set.disks.begin(), p.set.disks.end(),
                                  [&](const Disk& d) { return std::abs(x - d.c) < d.r; });
  if (!inside) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : p.free_arcs) best = std::min(best, dist_point_arc(x, a));
  return best;
}
double eval(const SquareComplementPrim& p, Point x) { return dist_to_square_complement(x, p.square); }
double eval(const ConePrim& p, Point x) { return std::max(0.0, std::abs(x - p.x0) - p.rho); }
}  // namespace

LipschitzEnvelope LipschitzEnvelope::constant(double lambda) {
  LipschitzEnvelope e;
  e.add_constant(lambda);
  return e;
}
LipschitzEnvelope LipschitzEnvelope::disk_complement(const DiskSet& set) {
  LipschitzEnvelope e;
  e.add_disks(set);
  return e;
}
LipschitzEnvelope LipschitzEnvelope::square_complement(const DyadicSquare& q) {
  LipschitzEnvelope e;
  e.add_square(q);
  return e;
}
LipschitzEnvelope LipschitzEnvelope::cone(Point x0, double rho) {
  LipschitzEnvelope e;
  e.add_cone(x0, rho);
  return e;
}

LipschitzEnvelope& LipschitzEnvelope::add(Primitive p) {
  if (auto* c = std::get_if<ConstantPrim>(&p); c && !(c->lambda >= 0.0))
    throw std::invalid_argument("constant primitive must be nonnegative");
  if (auto* d = std::get_if<DiskComplementPrim>(&p); d && d->free_arcs.empty() && !d->set.empty())
    d->free_arcs = free_boundary(d->set);
  prims_.push_back(std::move(p));
  return *this;
}

LipschitzEnvelope& LipschitzEnvelope::add_disks(const DiskSet& set) {
  if (set.empty()) return *this;
  return add(DiskComplementPrim{set, free_boundary(set)});
}

LipschitzEnvelope& LipschitzEnvelope::merge(const LipschitzEnvelope& other) {
  prims_.insert(prims_.end(), other.prims_.begin(), other.prims_.end());
  return *this;
}

double LipschitzEnvelope::operator()(Point x) const {
  double v = 0.0;
  for (const auto& p : prims_) v = std::max(v, std::visit([x](const auto& q) { return eval(q, x); }, p));
  return v;
}

Eigen::VectorXd sample_envelope(const EnvelopeFn& phi, const PlanarMeasure& mu) {
  Eigen::VectorXd v(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) v(i) = phi(mu.z(i));
  return v;
}

namespace {
Point uniform_point(std::mt19937_64& eng, double half) {
  const double a = (2 * uniform01(eng) - 1) * half;
  return {a, (2 * uniform01(eng) - 1) * half};
}
// offset of log-uniform length in [lo, hi] and uniform direction
Point random_offset(std::mt19937_64& eng, double lo, double hi) {
  const double r = lo * std::pow(hi / lo, uniform01(eng));
  return std::polar(r, 2 * std::numbers::pi * uniform01(eng));
}
}  // namespace

CheckReport env_lipschitz_check(const EnvelopeFn& phi, std::int64_t n_samples, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  double worst = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const Point x = uniform_point(eng, 1.5);
    const Point y = x + random_offset(eng, 1e-4, 2.0);
    worst = std::max(worst, std::abs(phi(x) - phi(y)) / std::abs(x - y));
  }
  CheckReport r{.name = "env_lipschitz", .observed = worst, .samples = n_samples, .seed = seed};
  r.set_bound(1.0, 1e-12);
  return r;
}

CheckReport suppression_bounds_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  double worst = 0.0;
  std::int64_t violations = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const Point x = uniform_point(eng, 1.5);
    const Point y = x + random_offset(eng, 1e-5, 2.0);
    const double px = phi(x), py = phi(y);
    const double k = std::abs(k_phi<double>(x, y, px, py));
    const double a = k * std::max(px, py), b = k * std::abs(x - y);
    if (a > 1 + 1e-12 || b > 1 + 1e-12) ++violations;
    worst = std::max({worst, a, b});
  }
  CheckReport r{.name = "suppression_bounds", .observed = worst, .samples = samples, .seed = seed};
  r.set_bound(1.0, 1e-12);
  r.note = "violations=" + std::to_string(violations);
  return r;
}

CheckReport cz_smoothness_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed, double eps_cz) {
  std::mt19937_64 eng(seed);
  double worst = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const Point x = uniform_point(eng, 1.5);
    const Point y = x + random_offset(eng, 1e-3, 2.0);
    const double dxy = std::abs(x - y);
    const Point xp = x + random_offset(eng, 1e-6 * dxy, dxy / 2);
    const double dxx = std::abs(x - xp);
    if (dxx == 0.0 || dxx > dxy / 2) continue;
    const double diff = std::abs(k_phi(phi, x, y) - k_phi(phi, xp, y));
    worst = std::max(worst, diff * std::pow(dxy, 1 + eps_cz) / std::pow(dxx, eps_cz));
  }
  CheckReport r{.name = "cz_smoothness", .observed = worst, .samples = samples, .seed = seed};
  if (eps_cz == 1.0) r.set_bound(16.0, 1e-9);
  else r.note = "no constant asserted for eps < 1";
  return r;
}

CheckReport antisymmetry_check(const EnvelopeFn& phi, std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::int64_t bad = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const Point x = uniform_point(eng, 1.5);
    const Point y = x + random_offset(eng, 1e-5, 2.0);
    if (k_phi(phi, x, y) + k_phi(phi, y, x) != Point(0, 0)) ++bad;
  }
  CheckReport r{.name = "antisymmetry", .observed = static_cast<double>(bad), .samples = samples, .seed = seed};
  r.set_bound(0.0);
  return r;
}

LipschitzEnvelope random_envelope(std::uint64_t seed, int max_prims) {
  std::mt19937_64 eng(seed);
  LipschitzEnvelope e;
  const int count = 1 + static_cast<int>(uniform01(eng) * max_prims);
  for (int k = 0; k < count; ++k) {
    switch (static_cast<int>(uniform01(eng) * 4)) {
      case 0:
        e.add_constant(0.5 * uniform01(eng));
        break;
      case 1: {
        DiskSet set;
        const int n = 1 + static_cast<int>(uniform01(eng) * 3);
        for (int j = 0; j < n; ++j) {
          const Point c = uniform_point(eng, 1.0);
          set.disks.push_back({c, 0.05 + 0.55 * uniform01(eng)});
        }
        e.add_disks(set);
        break;
      }
      case 2: {
        DyadicSquare q;
        q.origin = uniform_point(eng, 1.0);
        q.side = 0.1 + 0.9 * uniform01(eng);
        e.add_square(q);
        break;
      }
      default: {
        const Point c = uniform_point(eng, 1.0);
        e.add_cone(c, 0.5 * uniform01(eng));
      }
    }
  }
  return e;
}

LipschitzEnvelope build_phi_tilde(const DiskSet& H, Point x0, double rho_prime) {
  if (!(rho_prime > 0.0)) throw std::invalid_argument("rho_prime must be positive");
  LipschitzEnvelope e;
  e.add_disks(H);
  e.add_cone(x0, rho_prime);
  return e;
}

TrimmedEnvelope::TrimmedEnvelope(std::vector<EnvelopeFn> family, std::vector<double> probs, double beta)
    : family_(std::move(family)), probs_(std::move(probs)), beta_(beta) {
  if (family_.empty() || family_.size() != probs_.size())
    throw std::invalid_argument("trimmed envelope needs one probability per envelope");
}

double TrimmedEnvelope::operator()(Point x) const {
  std::vector<double> v(family_.size());
  for (std::size_t i = 0; i < family_.size(); ++i) v[i] = family_[i](x);
  return truncated_expectation(v, probs_, beta_);
}

nlohmann::json to_json(const LipschitzEnvelope& phi) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : phi.primitives()) {
    std::visit(
        [&](const auto& q) {
          using P = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<P, ConstantPrim>) {
            arr.push_back({{"kind", "constant"}, {"lambda", q.lambda}});
          } else if constexpr (std::is_same_v<P, DiskComplementPrim>) {
            arr.push_back({{"kind", "disks"}, {"disks", to_json(q.set)["disks"]}});
          } else if constexpr (std::is_same_v<P, SquareComplementPrim>) {
            arr.push_back({{"kind", "square"},
                           {"origin", {q.square.origin.real(), q.square.origin.imag()}},
                           {"side", q.square.side}});
          } else {
            arr.push_back({{"kind", "cone"}, {"x0", {q.x0.real(), q.x0.imag()}}, {"rho", q.rho}});
          }
        },
        p);
  }
  return {{"primitives", arr}};
}

LipschitzEnvelope envelope_from_json(const nlohmann::json& j) {
  auto pt = [](const nlohmann::json& a) { return Point(a.at(0).get<double>(), a.at(1).get<double>()); };
  LipschitzEnvelope e;
  for (const auto& p : j.at("primitives")) {
    const auto kind = p.at("kind").get<std::string>();
    if (kind == "constant") {
      e.add_constant(p.at("lambda").get<double>());
    } else if (kind == "disks") {
      DiskSet set;
      for (const auto& d : p.at("disks")) set.disks.push_back({pt(d.at("c")), d.at("r").get<double>()});
      e.add_disks(set);
    } else if (kind == "square") {
      DyadicSquare q;
      q.origin = pt(p.at("origin"));
      q.side = p.at("side").get<double>();
      e.add_square(q);
    } else if (kind == "cone") {
      e.add_cone(pt(p.at("x0")), p.at("rho").get<double>());
    } else {
      throw std::invalid_argument("unknown envelope primitive: " + kind);
    }
  }
  return e;
}

}  // namespace tblab

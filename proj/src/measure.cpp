#include "tblab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tblab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Indices sorted by the given key, ascending.
std::vector<Eigen::Index> argsort(const std::vector<double>& key) {
  std::vector<Eigen::Index> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key[a] < key[b]; });
  return idx;
}

std::vector<double> distances_to(const PlanarMeasure& mu, Point x) {
  std::vector<double> d(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) d[i] = std::abs(mu.z(i) - x);
  return d;
}
}  // namespace

double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double s = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = s + v(i);
    if (std::abs(s) >= std::abs(v(i)))
      c += (s - t) + v(i);
    else
      c += (v(i) - t) + s;
    s = t;
  }
  return s + c;
}

PlanarMeasure::PlanarMeasure(Eigen::VectorXcd z, Eigen::VectorXd w, std::string generator,
                             std::uint64_t seed)
    : z_(std::move(z)), w_(std::move(w)), generator_(std::move(generator)), seed_(seed) {
  if (z_.size() != w_.size()) throw std::invalid_argument("atom locations and weights differ in length");
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!(w_(i) > 0.0) || !std::isfinite(w_(i))) throw std::invalid_argument("atom weight must be positive");
    if (!std::isfinite(z_(i).real()) || !std::isfinite(z_(i).imag()))
      throw std::invalid_argument("atom location must be finite");
  }
  std::vector<Eigen::Index> idx(z_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return std::pair(z_(a).real(), z_(a).imag()) < std::pair(z_(b).real(), z_(b).imag());
  });
  for (std::size_t k = 1; k < idx.size(); ++k)
    if (z_(idx[k]) == z_(idx[k - 1])) throw std::invalid_argument("duplicate atom location");
  total_ = compensated_sum(w_);
}

PlanarMeasure::PlanarMeasure(const std::vector<Atom>& atoms) {
  Eigen::VectorXcd z(atoms.size());
  Eigen::VectorXd w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    z(i) = atoms[i].z;
    w(i) = atoms[i].w;
  }
  *this = PlanarMeasure(std::move(z), std::move(w));
}

PlanarMeasure PlanarMeasure::subset(const std::vector<Eigen::Index>& idx) const {
  Eigen::VectorXcd z(idx.size());
  Eigen::VectorXd w(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    z(k) = z_(idx[k]);
    w(k) = w_(idx[k]);
  }
  return PlanarMeasure(std::move(z), std::move(w), generator_, seed_);
}

// ---- disk unions -----------------------------------------------------------

bool DiskSet::contains(Point p) const {
  return std::any_of(disks.begin(), disks.end(), [&](const Disk& d) { return std::abs(p - d.c) <= d.r; });
}

std::vector<Arc> free_boundary(const DiskSet& set) {
  const auto& disks = set.disks;
  std::vector<Arc> out;
  const double two_pi = 2 * std::numbers::pi;
  for (std::size_t j = 0; j < disks.size(); ++j) {
    const Disk& a = disks[j];
    std::vector<std::pair<double, double>> covered;
    bool gone = false;
    for (std::size_t k = 0; k < disks.size() && !gone; ++k) {
      if (k == j) continue;
      const Disk& b = disks[k];
      const double d = std::abs(b.c - a.c);
      if (d == 0.0 && b.r == a.r) {
        if (k < j) gone = true;  // duplicate disk: keep the first copy
        continue;
      }
      if (d + a.r < b.r) {
        gone = true;
        continue;
      }
      if (d >= a.r + b.r || d + b.r <= a.r) continue;
      const double c = std::clamp((d * d + a.r * a.r - b.r * b.r) / (2 * d * a.r), -1.0, 1.0);
      const double half = std::acos(c);
      const double mid = std::arg(b.c - a.c);
      double lo = mid - half;
      lo = std::fmod(std::fmod(lo, two_pi) + two_pi, two_pi);
      const double hi = lo + 2 * half;
      if (hi > two_pi) {
        covered.push_back({lo, two_pi});
        covered.push_back({0.0, hi - two_pi});
      } else {
        covered.push_back({lo, hi});
      }
    }
    if (gone) continue;
    std::sort(covered.begin(), covered.end());
    double cursor = 0.0;
    for (const auto& [lo, hi] : covered) {
      if (lo > cursor) out.push_back({a.c, a.r, cursor, lo});
      cursor = std::max(cursor, hi);
    }
    if (cursor < two_pi) out.push_back({a.c, a.r, cursor, two_pi});
  }
  return out;
}

double DiskSet::dist_to_complement(Point p) const {
  const bool inside = std::any_of(disks.begin(), disks.end(),
                                  [&](const Disk& d) { return std::abs(p - d.c) < d.r; });
  if (!inside) return 0.0;
  double best = kInf;
  for (const auto& arc : free_boundary(*this)) best = std::min(best, dist_point_arc(p, arc));
  return best;
}

bool DiskSet::covers_square(const DyadicSquare& q) const {
  // A cell is covered when one disk holds all four corners (disks are convex).  Cells are
  // split a bounded number of times; undecided cells count as uncovered.
  struct Cell { Point o; double s; int depth; };
  std::vector<Cell> stack{{q.origin, q.side, 0}};
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    const Point corners[4] = {c.o, c.o + Point(c.s, 0), c.o + Point(0, c.s), c.o + Point(c.s, c.s)};
    bool one = false;
    for (const auto& d : disks) {
      bool all = true;
      for (const auto& p : corners) all = all && std::abs(p - d.c) <= d.r;
      if (all) { one = true; break; }
    }
    if (one) continue;
    if (!contains(c.o + Point(c.s / 2, c.s / 2)) || c.depth >= 6) return false;
    const double h = c.s / 2;
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy) stack.push_back({c.o + Point(dx * h, dy * h), h, c.depth + 1});
  }
  return true;
}

double DiskSet::mass(const PlanarMeasure& mu) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (contains(mu.z(i))) s += mu.w(i);
  return s;
}

// ---- generators -------------------------------------------------------------

PlanarMeasure cantor_corner(int level) {
  if (level < 1) throw std::invalid_argument("cantor level must be at least 1");
  std::vector<Point> corners{Point(0, 0)};
  double side = 1.0;
  for (int k = 0; k < level; ++k) {
    std::vector<Point> next;
    next.reserve(corners.size() * 4);
    const double off = side * 0.75;
    for (const auto& c : corners)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) next.push_back(c + Point(dx * off, dy * off));
    corners = std::move(next);
    side /= 4;
  }
  const auto n = static_cast<Eigen::Index>(corners.size());
  Eigen::VectorXcd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = corners[i] + Point(side / 2, side / 2);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, std::ldexp(1.0, -2 * level));
  return PlanarMeasure(std::move(z), std::move(w), "cantor-corner(" + std::to_string(level) + ")");
}

PlanarMeasure segment_measure(Point a, Point b, int n) {
  if (n < 1) throw std::invalid_argument("segment needs at least one atom");
  Eigen::VectorXcd z(n);
  for (int i = 0; i < n; ++i) z(i) = a + (b - a) * ((i + 0.5) / n);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, std::abs(b - a) / n);
  return PlanarMeasure(std::move(z), std::move(w), "segment");
}

PlanarMeasure arc_measure(Point center, double radius, double theta0, double theta1, int n) {
  if (n < 1) throw std::invalid_argument("arc needs at least one atom");
  Eigen::VectorXcd z(n);
  for (int i = 0; i < n; ++i) z(i) = center + std::polar(radius, theta0 + (theta1 - theta0) * ((i + 0.5) / n));
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, radius * std::abs(theta1 - theta0) / n);
  return PlanarMeasure(std::move(z), std::move(w), "arc");
}

PlanarMeasure random_cloud(std::uint64_t seed, int n) {
  if (n < 1) throw std::invalid_argument("random cloud needs at least one atom");
  std::mt19937_64 eng(seed);
  Eigen::VectorXcd z(n);
  for (int i = 0; i < n; ++i) {
    const double x = uniform01(eng);
    z(i) = Point(x, uniform01(eng));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n);
  return PlanarMeasure(std::move(z), std::move(w), "random-cloud", seed);
}

NormalizedMeasure normalize(const PlanarMeasure& mu) {
  if (mu.empty()) return {mu, Point(0, 0), 1.0, 1.0};
  const auto& z = mu.z();
  const double x0 = z.real().minCoeff(), x1 = z.real().maxCoeff();
  const double y0 = z.imag().minCoeff(), y1 = z.imag().maxCoeff();
  const Point c((x0 + x1) / 2, (y0 + y1) / 2);
  const double radius = (z.array() - c).abs().maxCoeff();
  const double scale = radius > 0 ? radius / 0.12 : 1.0;
  Eigen::VectorXcd nz = (z.array() - c) / scale;
  Eigen::VectorXd nw = mu.w() / mu.total();
  return {PlanarMeasure(std::move(nz), std::move(nw), mu.generator(), mu.seed()), c, scale, mu.total()};
}

// ---- Ahlfors geometry --------------------------------------------------------

double ball_mass(const PlanarMeasure& mu, Point x, double r) {
  double s = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (std::abs(mu.z(i) - x) <= r) {
      const double t = s + mu.w(i);
      c += std::abs(s) >= mu.w(i) ? (s - t) + mu.w(i) : (mu.w(i) - t) + s;
      s = t;
    }
  }
  return s + c;
}

double ahlfors_radius(const PlanarMeasure& mu, double M, Point x, double r_floor) {
  const auto d = distances_to(mu, x);
  const auto order = argsort(d);
  double best = 0.0, cum = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double dk = d[order[k]];
    while (k < order.size() && d[order[k]] == dk) cum += mu.w(order[k++]);
    const double next = k < order.size() ? d[order[k]] : kInf;
    // on [dk, next) the ball holds `cum`; non-Ahlfors for r < cum / M
    const double cap = cum / M;
    if (std::max(dk, r_floor) < std::min(next, cap)) best = std::max(best, std::min(next, cap));
  }
  return best;
}

ExceptionalSet exceptional_set(const PlanarMeasure& mu, double M, double r_floor) {
  struct Cand { Eigen::Index i; double r; };
  std::vector<Cand> cands;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    // the supremum itself is never attained, so step just inside it
    const double r = ahlfors_radius(mu, M, mu.z(i), r_floor) * (1.0 - 1e-9);
    if (r > 0.0) cands.push_back({i, r});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.r > b.r; });
  ExceptionalSet out;
  for (const auto& c : cands) {
    const Point x = mu.z(c.i);
    const bool free = std::all_of(out.selected.begin(), out.selected.end(),
                                  [&](const Disk& d) { return std::abs(x - d.c) > c.r + d.r; });
    if (!free) continue;
    out.selected.push_back({x, c.r});
    out.H.disks.push_back({x, 5 * c.r});
    out.radius_sum += c.r;
  }
  return out;
}

double median_spacing(const PlanarMeasure& mu) {
  if (mu.size() < 2) return 0.0;
  std::vector<double> nn(mu.size(), kInf);
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < mu.size(); ++j)
      if (i != j) nn[i] = std::min(nn[i], std::abs(mu.z(i) - mu.z(j)));
  std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
  return nn[nn.size() / 2];
}

namespace {
template <class DistFn>
double jump_scan(const PlanarMeasure& mu, DistFn dist) {
  std::vector<double> d(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) d[i] = dist(mu.z(i));
  const auto order = argsort(d);
  double best = 0.0, cum = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double dk = d[order[k]];
    while (k < order.size() && d[order[k]] == dk) cum += mu.w(order[k++]);
    if (dk == 0.0) return kInf;
    best = std::max(best, cum / dk);
  }
  return best;
}
}  // namespace

double negligibility_constant(const PlanarMeasure& mu, const Contour& g) {
  return jump_scan(mu, [&](Point p) { return g.distance(p); });
}

double negligibility_constant(const PlanarMeasure& mu, const DyadicSquare& q) {
  return jump_scan(mu, [&](Point p) { return dist_point_boundary(p, q); });
}

double maximal_m1(const PlanarMeasure& mu, const ComplexDensity& f, Point x, double r0) {
  const auto d = distances_to(mu, x);
  const auto order = argsort(d);
  double best = 0.0, cum = 0.0;
  std::size_t k = 0;
  // mass strictly needed at r0 itself: everything with d <= r0
  while (k < order.size() && d[order[k]] <= r0) {
    cum += std::abs(f(order[k])) * mu.w(order[k]);
    ++k;
  }
  if (r0 > 0.0) best = cum / r0;
  else if (cum > 0.0) return kInf;
  while (k < order.size()) {
    const double dk = d[order[k]];
    while (k < order.size() && d[order[k]] == dk) {
      cum += std::abs(f(order[k])) * mu.w(order[k]);
      ++k;
    }
    best = std::max(best, cum / dk);
  }
  return best;
}

double maximal_tilde(const PlanarMeasure& mu, const ComplexDensity& g, Point x, double beta) {
  const auto d = distances_to(mu, x);
  std::vector<double> crit;
  crit.reserve(2 * d.size());
  for (double v : d) {
    crit.push_back(v);
    crit.push_back(v / 3);
  }
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end()), crit.end());
  const auto order = argsort(d);
  // sweep two pointers: one for radius r (numerator), one for 3r (denominator)
  double best = 0.0, num = 0.0, den = 0.0;
  std::size_t a = 0, b = 0;
  for (double r : crit) {
    while (a < order.size() && d[order[a]] <= r) {
      num += std::pow(std::abs(g(order[a])), beta) * mu.w(order[a]);
      ++a;
    }
    while (b < order.size() && d[order[b]] <= 3 * r) den += mu.w(order[b++]);
    if (den > 0.0) best = std::max(best, std::pow(num, 1.0 / beta) / den);
  }
  return best;
}

double profile_value(const Profile& u, double t) {
  return std::visit(
      [t](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InvSquareProfile>) return p.eps / (t * t);
        else if constexpr (std::is_same_v<P, PowerProfile>) return std::pow(t, -(1.0 + p.eps));
        else if constexpr (std::is_same_v<P, SuppressedProfile>) return p.r * (p.r + t) / (t * t * t);
        else return 0.0;
      },
      u);
}

double profile_tail(const Profile& u, double R) {
  return std::visit(
      [R](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InvSquareProfile>) return p.eps / R;
        else if constexpr (std::is_same_v<P, PowerProfile>) return std::pow(R, -p.eps) / p.eps;
        else if constexpr (std::is_same_v<P, SuppressedProfile>) return p.r * p.r / (2 * R * R) + p.r / R;
        else return 0.0;
      },
      u);
}

CheckReport comparison_lemma_check(const PlanarMeasure& mu, const Target& s, const Profile& u,
                                   double R, double M, double R0) {
  const std::string name = "comparison_lemma";
  if (!(R > 0.0) || R < R0) return not_applicable(name, "requires R >= R0 and R > 0");
  std::vector<double> d(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Point y = mu.z(i);
    d[i] = std::holds_alternative<Point>(s) ? std::abs(y - std::get<Point>(s)) : std::get<Contour>(s).distance(y);
  }
  const auto order = argsort(d);
  double cum = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double dk = d[order[k]];
    while (k < order.size() && d[order[k]] == dk) cum += mu.w(order[k++]);
    const double next = k < order.size() ? d[order[k]] : kInf;
    // mass with dist < r equals `cum` for r in (dk, next]
    if (R0 > dk) {
      if (R0 <= next && cum > M * R0) return not_applicable(name, "growth hypothesis fails");
    } else if (cum > M * dk) {
      return not_applicable(name, "growth hypothesis fails");
    }
  }
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (d[i] >= R) lhs += profile_value(u, d[i]) * mu.w(i);
  CheckReport rep;
  rep.name = name;
  rep.observed = lhs;
  rep.samples = mu.size();
  rep.set_bound(M * (R * profile_value(u, R) + profile_tail(u, R)), 1e-12);
  return rep;
}

double h1_length(const Contour& g) { return g.length(); }

nlohmann::json to_json(const PlanarMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    atoms.push_back({{"z", {mu.z(i).real(), mu.z(i).imag()}}, {"w", mu.w(i)}});
  return {{"atoms", atoms}, {"meta", {{"generator", mu.generator()}, {"seed", mu.seed()}}}};
}

PlanarMeasure measure_from_json(const nlohmann::json& j) {
  const auto& atoms = j.at("atoms");
  Eigen::VectorXcd z(atoms.size());
  Eigen::VectorXd w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& a = atoms[i];
    z(i) = Point(a.at("z").at(0).get<double>(), a.at("z").at(1).get<double>());
    w(i) = a.at("w").get<double>();
  }
  std::string gen = "file";
  std::uint64_t seed = 0;
  if (j.contains("meta")) {
    gen = j["meta"].value("generator", gen);
    seed = j["meta"].value("seed", seed);
  }
  return PlanarMeasure(std::move(z), std::move(w), gen, seed);
}

nlohmann::json to_json(const DiskSet& d) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& disk : d.disks) arr.push_back({{"c", {disk.c.real(), disk.c.imag()}}, {"r", disk.r}});
  return {{"disks", arr}};
}

}  // namespace tblab

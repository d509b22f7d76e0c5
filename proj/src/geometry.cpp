#include "tblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tblab {

DyadicSquare DyadicSquare::child(int which) const {
  if (which < 1 || which > 4) throw std::domain_error("child index must be in 1..4");
  const int dx = (which - 1) % 2;
  const int dy = (which - 1) / 2;
  DyadicSquare c;
  c.level = level + 1;
  c.ix = 2 * ix + dx;
  c.iy = 2 * iy + dy;
  c.side = side / 2;
  c.origin = origin + Point(dx * c.side, dy * c.side);
  return c;
}

DyadicSquare DyadicSquare::parent() const {
  if (level == 0) throw std::domain_error("root square has no parent");
  DyadicSquare p;
  p.level = level - 1;
  const std::int64_t dx = ix & 1, dy = iy & 1;
  p.ix = (ix - dx) / 2;
  p.iy = (iy - dy) / 2;
  p.side = side * 2;
  p.origin = origin - Point(dx * side, dy * side);
  return p;
}

bool DyadicSquare::inside(const DyadicSquare& other) const {
  if (level < other.level) return false;
  const int shift = level - other.level;
  return (ix >> shift) == other.ix && (iy >> shift) == other.iy;
}

DyadicSquare DyadicSquare::expanded(double factor) const {
  DyadicSquare e = *this;
  e.side = side * factor;
  e.origin = center() - Point(e.side / 2, e.side / 2);
  return e;
}

DyadicSquare DyadicLattice::square(int level, std::int64_t ix, std::int64_t iy) const {
  DyadicSquare q;
  q.level = level;
  q.ix = ix;
  q.iy = iy;
  q.side = std::ldexp(root.side, -level);
  q.origin = root.origin + Point(ix * q.side, iy * q.side);
  return q;
}

std::optional<DyadicSquare> DyadicLattice::locate(int level, Point p) const {
  if (!root.contains(p)) return std::nullopt;
  const double s = std::ldexp(root.side, -level);
  const std::int64_t n = std::int64_t{1} << level;
  auto ix = static_cast<std::int64_t>(std::floor((p.real() - root.x0()) / s));
  auto iy = static_cast<std::int64_t>(std::floor((p.imag() - root.y0()) / s));
  ix = std::clamp<std::int64_t>(ix, 0, n - 1);
  iy = std::clamp<std::int64_t>(iy, 0, n - 1);
  // guard the floor against rounding at cell edges
  auto q = square(level, ix, iy);
  if (p.real() < q.x0() && ix > 0) --ix;
  if (p.real() >= q.x1() && ix < n - 1) ++ix;
  if (p.imag() < q.y0() && iy > 0) --iy;
  if (p.imag() >= q.y1() && iy < n - 1) ++iy;
  return square(level, ix, iy);
}

DyadicLattice lattice_from_shift(Point shift, std::uint64_t seed) {
  DyadicLattice lat;
  lat.shift = shift;
  lat.seed = seed;
  lat.root.level = 0;
  lat.root.side = 1.0;
  lat.root.origin = shift - Point(0.5, 0.5);
  return lat;
}

DyadicLattice sample_lattice(std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  const double sx = uniform01(eng) * 0.5 - 0.25;
  const double sy = uniform01(eng) * 0.5 - 0.25;
  return lattice_from_shift({sx, sy}, seed);
}

namespace {
double gap(double a0, double a1, double b0, double b1) {
  return std::max({0.0, b0 - a1, a0 - b1});
}
}  // namespace

double dist_squares(const DyadicSquare& q, const DyadicSquare& r) {
  const double dx = gap(q.x0(), q.x1(), r.x0(), r.x1());
  const double dy = gap(q.y0(), q.y1(), r.y0(), r.y1());
  return std::hypot(dx, dy);
}

double long_distance(const DyadicSquare& q, const DyadicSquare& r) {
  return q.side + r.side + dist_squares(q, r);
}

double dist_point_square(Point p, const DyadicSquare& q) {
  const double dx = std::max({0.0, q.x0() - p.real(), p.real() - q.x1()});
  const double dy = std::max({0.0, q.y0() - p.imag(), p.imag() - q.y1()});
  return std::hypot(dx, dy);
}

double dist_to_square_complement(Point p, const DyadicSquare& q) {
  if (!q.contains_closed(p)) return 0.0;
  return std::min({p.real() - q.x0(), q.x1() - p.real(), p.imag() - q.y0(), q.y1() - p.imag()});
}

double dist_point_boundary(Point p, const DyadicSquare& q) {
  if (q.contains_closed(p)) return dist_to_square_complement(p, q);
  return dist_point_square(p, q);
}

double dist_point_segment(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = std::norm(d);
  if (len2 == 0.0) return std::abs(p - a);
  const double t = std::clamp(((p - a) * std::conj(d)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

double dist_point_arc(Point p, const Arc& arc) {
  const double lo = std::min(arc.theta0, arc.theta1);
  const double hi = std::max(arc.theta0, arc.theta1);
  const Point a = arc.center + std::polar(arc.radius, lo);
  const Point b = arc.center + std::polar(arc.radius, hi);
  double best = std::min(std::abs(p - a), std::abs(p - b));
  const Point v = p - arc.center;
  if (std::abs(v) > 0.0) {
    double th = std::arg(v);
    const double two_pi = 2 * std::numbers::pi;
    // bring th into [lo, lo + 2pi)
    th = lo + std::fmod(std::fmod(th - lo, two_pi) + two_pi, two_pi);
    if (th <= hi || hi - lo >= two_pi) best = std::min(best, std::abs(std::abs(v) - arc.radius));
  } else {
    best = arc.radius;
  }
  return best;
}

double Contour::length() const {
  double total = 0.0;
  for (const auto& [a, b] : segments) total += std::abs(b - a);
  for (const auto& arc : arcs) total += arc.length();
  return total;
}

double Contour::distance(Point p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : segments) best = std::min(best, dist_point_segment(p, a, b));
  for (const auto& arc : arcs) best = std::min(best, dist_point_arc(p, arc));
  return best;
}

Contour boundary(const DyadicSquare& r) {
  const Point a = r.origin, b = a + Point(r.side, 0), c = a + Point(r.side, r.side),
              d = a + Point(0, r.side);
  Contour g;
  g.segments = {{a, b}, {b, c}, {c, d}, {d, a}};
  return g;
}

Contour skeleton(const DyadicSquare& r) {
  Contour g = boundary(r);
  const double h = r.side / 2;
  g.segments.push_back({r.origin + Point(h, 0), r.origin + Point(h, r.side)});
  g.segments.push_back({r.origin + Point(0, h), r.origin + Point(r.side, h)});
  return g;
}

Contour segment_contour(Point a, Point b) {
  Contour g;
  g.segments.push_back({a, b});
  return g;
}

Contour circle_contour(Point c, double r) {
  Contour g;
  g.arcs.push_back({c, r, 0.0, 2 * std::numbers::pi});
  return g;
}

namespace {
// distance from S to the boundary of S0, for S inside S0
double inner_gap(const DyadicSquare& s, const DyadicSquare& s0) {
  return std::min({s.x0() - s0.x0(), s0.x1() - s.x1(), s.y0() - s0.y0(), s0.y1() - s.y1()});
}

void whitney_walk(const DyadicSquare& s, const DyadicSquare& s0, int rel, int max_level,
                  WhitneyFamily& out) {
  if (inner_gap(s, s0) >= s.side) {
    out.squares.push_back(s);
    out.count_per_level[rel] += 1;
    return;
  }
  if (rel == max_level) {
    out.residual_area += s.area();
    return;
  }
  for (int j = 1; j <= 4; ++j) whitney_walk(s.child(j), s0, rel + 1, max_level, out);
}
}  // namespace

WhitneyFamily whitney(const DyadicSquare& s0, int max_level) {
  if (max_level < 2) throw std::domain_error("whitney: max_level must be at least 2");
  WhitneyFamily out;
  out.max_level = max_level;
  out.count_per_level.assign(max_level + 1, 0);
  for (int j = 1; j <= 4; ++j) whitney_walk(s0.child(j), s0, 1, max_level, out);
  return out;
}

int whitney_max_overlap(const DyadicSquare& s0, const WhitneyFamily& family, int probes) {
  std::vector<DyadicSquare> grown;
  grown.reserve(family.squares.size());
  for (const auto& s : family.squares) grown.push_back(s.expanded(2.0));
  int worst = 0;
  const double h = s0.side / probes;
  for (int i = 0; i < probes; ++i) {
    for (int j = 0; j < probes; ++j) {
      const Point p = s0.origin + Point((i + 0.5) * h, (j + 0.5) * h);
      int count = 0;
      for (const auto& g : grown) count += g.contains(p) ? 1 : 0;
      worst = std::max(worst, count);
    }
  }
  return worst;
}

nlohmann::json to_json(const DyadicLattice& lat, const std::vector<DyadicSquare>& squares) {
  nlohmann::json j;
  j["shift"] = {lat.shift.real(), lat.shift.imag()};
  j["seed"] = lat.seed;
  auto arr = nlohmann::json::array();
  for (const auto& q : squares) arr.push_back({{"level", q.level}, {"ix", q.ix}, {"iy", q.iy}});
  j["squares"] = arr;
  return j;
}

DyadicLattice lattice_from_json(const nlohmann::json& j) {
  const auto& s = j.at("shift");
  return lattice_from_shift({s.at(0).get<double>(), s.at(1).get<double>()},
                            j.value("seed", std::uint64_t{0}));
}

}  // namespace tblab

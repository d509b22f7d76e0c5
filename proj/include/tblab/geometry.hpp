#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace tblab {

template <class Scalar>
using PointT = std::complex<Scalar>;
using Point = PointT<double>;

// Half-open square [a, a+side) x [c, c+side).  Indices are relative to the
// root of the lattice the square lives in.
struct DyadicSquare {
  int level = 0;
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  Point origin{0.0, 0.0};
  double side = 1.0;

  double x0() const { return origin.real(); }
  double y0() const { return origin.imag(); }
  double x1() const { return origin.real() + side; }
  double y1() const { return origin.imag() + side; }
  Point center() const { return origin + Point(side / 2, side / 2); }
  double area() const { return side * side; }

  bool contains(Point p) const {
    return p.real() >= x0() && p.real() < x1() && p.imag() >= y0() && p.imag() < y1();
  }
  bool contains_closed(Point p) const {
    return p.real() >= x0() && p.real() <= x1() && p.imag() >= y0() && p.imag() <= y1();
  }
  // Children 1..4: lower-left, lower-right, upper-left, upper-right.
  DyadicSquare child(int which) const;
  DyadicSquare parent() const;
  bool is_root() const { return level == 0; }
  // Same lattice assumed.
  bool inside(const DyadicSquare& other) const;
  DyadicSquare expanded(double factor) const;

  friend bool operator==(const DyadicSquare& a, const DyadicSquare& b) {
    return a.level == b.level && a.ix == b.ix && a.iy == b.iy;
  }
};

struct SquareKey {
  int level;
  std::int64_t ix, iy;
  auto operator<=>(const SquareKey&) const = default;
};
inline SquareKey key_of(const DyadicSquare& q) { return {q.level, q.ix, q.iy}; }

struct DyadicLattice {
  Point shift{0.0, 0.0};
  DyadicSquare root;
  std::uint64_t seed = 0;

  DyadicSquare square(int level, std::int64_t ix, std::int64_t iy) const;
  DyadicSquare square(const SquareKey& k) const { return square(k.level, k.ix, k.iy); }
  // Square of the given level containing p, or nullopt if p is outside the root.
  std::optional<DyadicSquare> locate(int level, Point p) const;
};

DyadicLattice lattice_from_shift(Point shift, std::uint64_t seed = 0);
DyadicLattice sample_lattice(std::uint64_t seed);

double dist_squares(const DyadicSquare& q, const DyadicSquare& r);
double long_distance(const DyadicSquare& q, const DyadicSquare& r);
// Distance from p to the closed square.
double dist_point_square(Point p, const DyadicSquare& q);
// Distance from p to the boundary of q.
double dist_point_boundary(Point p, const DyadicSquare& q);
// dist(p, C \ Q) for the open/closed square alike.
double dist_to_square_complement(Point p, const DyadicSquare& q);
double dist_point_segment(Point p, Point a, Point b);

struct Arc {
  Point center;
  double radius;
  double theta0;
  double theta1;
  double length() const { return radius * std::abs(theta1 - theta0); }
};
double dist_point_arc(Point p, const Arc& arc);

struct Contour {
  std::vector<std::pair<Point, Point>> segments;
  std::vector<Arc> arcs;

  double length() const;
  double distance(Point p) const;
};

Contour skeleton(const DyadicSquare& r);
Contour boundary(const DyadicSquare& r);
Contour segment_contour(Point a, Point b);
Contour circle_contour(Point c, double r);

struct WhitneyFamily {
  std::vector<DyadicSquare> squares;
  std::vector<int> count_per_level;  // index = level relative to S0
  double residual_area = 0.0;
  int max_level = 0;
};

WhitneyFamily whitney(const DyadicSquare& s0, int max_level);
int whitney_max_overlap(const DyadicSquare& s0, const WhitneyFamily& family, int probes);

// Deterministic uniform double in [0,1) from a 64-bit engine.
template <class Engine>
double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

nlohmann::json to_json(const DyadicLattice& lat, const std::vector<DyadicSquare>& squares = {});
DyadicLattice lattice_from_json(const nlohmann::json& j);

}  // namespace tblab

#include "tblab/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tblab {

std::string to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::none: return "none";
    case TerminalReason::inside_H: return "inside_H";
    case TerminalReason::zero_mass: return "zero_mass";
    case TerminalReason::high_g_energy: return "high_g_energy";
    case TerminalReason::atom_isolated: return "atom_isolated";
    case TerminalReason::truncated: return "truncated";
  }
  return "unknown";
}

// ---- classification ---------------------------------------------------------

std::optional<int> Classification::find(const DyadicSquare& q) const {
  auto it = index.find(key_of(q));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Classification::transit_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].transit()) out.push_back(i);
  return out;
}

std::vector<int> Classification::terminal_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (!nodes[i].transit()) out.push_back(i);
  return out;
}

namespace {
int child_slot(const DyadicSquare& q, Point p) {
  const Point mid = q.origin + Point(q.side / 2, q.side / 2);
  const int dx = p.real() >= mid.real() ? 1 : 0;
  const int dy = p.imag() >= mid.imag() ? 1 : 0;
  return dy * 2 + dx;
}
}  // namespace

int Classification::leaf_containing(Point p) const {
  int cur = 0;
  while (nodes[cur].transit()) cur = nodes[cur].children[child_slot(nodes[cur].square, p)];
  return cur;
}

Classification classify(const DyadicLattice& lattice, const PlanarMeasure& mu, const ComplexDensity& g,
                        double delta, const DiskSet& H, int n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  if (g.size() != mu.size()) throw std::invalid_argument("density length differs from atom count");
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (!lattice.root.contains(mu.z(i))) throw std::domain_error("measure support leaves the root square");

  Classification c;
  c.lattice = lattice;
  c.n_max = n_max;
  SquareNode root;
  root.square = lattice.root;
  root.atoms.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) root.atoms[i] = i;
  c.nodes.push_back(std::move(root));

  auto rule = [&](const SquareNode& n) {
    if (!H.empty() && H.covers_square(n.square)) return TerminalReason::inside_H;
    if (n.atoms.empty()) return TerminalReason::zero_mass;
    if (n.g_energy >= delta * delta * n.mass) return TerminalReason::high_g_energy;
    if (n.atoms.size() <= 1) return TerminalReason::atom_isolated;
    if (n.square.level >= n_max) return TerminalReason::truncated;
    return TerminalReason::none;
  };

  for (std::size_t k = 0; k < c.nodes.size(); ++k) {
    SquareNode& n = c.nodes[k];
    n.mass = 0.0;
    n.g_energy = 0.0;
    for (auto i : n.atoms) {
      n.mass += mu.w(i);
      n.g_energy += std::norm(g(i)) * mu.w(i);
    }
    const auto why = rule(n);
    if (k == 0 && why != TerminalReason::none) {
      c.root_forced = true;
      c.root_would_be = why;
    } else if (why != TerminalReason::none) {
      n.status = Status::terminal;
      n.reason = why;
    }
    c.index[key_of(n.square)] = static_cast<int>(k);
    if (!c.nodes[k].transit()) continue;
    std::array<SquareNode, 4> kids;
    for (int j = 0; j < 4; ++j) {
      kids[j].square = c.nodes[k].square.child(j + 1);
      kids[j].parent = static_cast<int>(k);
    }
    for (auto i : c.nodes[k].atoms) kids[child_slot(c.nodes[k].square, mu.z(i))].atoms.push_back(i);
    for (int j = 0; j < 4; ++j) {
      c.nodes[k].children[j] = static_cast<int>(c.nodes.size());
      c.nodes.push_back(std::move(kids[j]));
    }
  }
  return c;
}

// ---- adapted martingale differences -------------------------------------------

ComplexDensity SparseDensity::dense(Eigen::Index n) const {
  ComplexDensity out = ComplexDensity::Zero(n);
  for (std::size_t k = 0; k < idx.size(); ++k) out(idx[k]) += val(k);
  return out;
}

ComplexDensity MartingaleDecomposition::reconstruct() const {
  ComplexDensity out = lambda_part;
  for (const auto& [key, d] : deltas)
    for (std::size_t k = 0; k < d.idx.size(); ++k) out(d.idx[k]) += d.val(k);
  return out;
}

AdaptedSystem::AdaptedSystem(PlanarMeasure mu, Classification cls, ComplexDensity h, double delta)
    : mu_(std::move(mu)), cls_(std::move(cls)), h_(std::move(h)) {
  if (h_.size() != mu_.size()) throw std::invalid_argument("density length differs from atom count");
  transit_ = cls_.transit_nodes();
  for (int q : transit_) {
    const auto& n = cls_.nodes[q];
    if (!(n.mass > 0.0)) throw std::domain_error("invalid instance: transit square without mass");
    const double avg = std::abs(integral(q, h_)) / n.mass;
    if (avg < 1 - delta)
      throw std::domain_error("invalid instance: |<h>_Q| < 1 - delta on a transit square at level " +
                              std::to_string(n.square.level));
  }
}

std::complex<double> AdaptedSystem::integral(int node, const ComplexDensity& f) const {
  std::complex<double> s = 0.0;
  for (auto i : cls_.nodes[node].atoms) s += f(i) * mu_.w(i);
  return s;
}

std::complex<double> AdaptedSystem::ratio(int node, const ComplexDensity& f) const {
  return integral(node, f) / integral(node, h_);
}

ComplexDensity AdaptedSystem::lambda(const ComplexDensity& f) const {
  ComplexDensity out = ComplexDensity::Zero(mu_.size());
  const auto a = ratio(0, f);
  for (auto i : cls_.nodes[0].atoms) out(i) = a * h_(i);
  return out;
}

SparseDensity AdaptedSystem::delta(int node, const ComplexDensity& f) const {
  const auto& n = cls_.nodes[node];
  SparseDensity d;
  if (!n.transit()) return d;
  const auto a = ratio(node, f);
  d.idx.reserve(n.atoms.size());
  std::vector<std::complex<double>> vals;
  vals.reserve(n.atoms.size());
  for (int c : n.children) {
    const auto& kid = cls_.nodes[c];
    if (kid.atoms.empty()) continue;
    if (kid.transit()) {
      const auto coef = ratio(c, f) - a;
      for (auto i : kid.atoms) {
        d.idx.push_back(i);
        vals.push_back(coef * h_(i));
      }
    } else {
      for (auto i : kid.atoms) {
        d.idx.push_back(i);
        vals.push_back(f(i) - a * h_(i));
      }
    }
  }
  d.val = Eigen::Map<Eigen::VectorXcd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return d;
}

MartingaleDecomposition AdaptedSystem::decompose(const ComplexDensity& f) const {
  if (f.size() != mu_.size()) throw std::invalid_argument("density length differs from atom count");
  MartingaleDecomposition out;
  out.lambda_part = lambda(f);
  for (int q : transit_) out.deltas.emplace(key_of(cls_.nodes[q].square), delta(q, f));
  return out;
}

MartingaleDecomposition decompose(const ComplexDensity& phi, const AdaptedSystem& sys) { return sys.decompose(phi); }

std::complex<double> inner(const PlanarMeasure& mu, const ComplexDensity& f, const ComplexDensity& g) {
  std::complex<double> s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) s += f(i) * std::conj(g(i)) * mu.w(i);
  return s;
}

double norm2(const PlanarMeasure& mu, const ComplexDensity& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) s += std::norm(f(i)) * mu.w(i);
  return s;
}

double norm2(const PlanarMeasure& mu, const SparseDensity& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.idx.size(); ++k) s += std::norm(f.val(k)) * mu.w(f.idx[k]);
  return s;
}

namespace {
CheckReport band_report(std::string name, double ratio, double lo, double hi) {
  CheckReport r;
  r.name = std::move(name);
  r.observed = ratio;
  r.bound = hi;
  r.pass = ratio >= lo - 1e-10 && ratio <= hi + 1e-10;
  std::ostringstream os;
  os << "band [" << lo << ", " << hi << "]";
  r.note = os.str();
  return r;
}
}  // namespace

CheckReport riesz_ratio(const PlanarMeasure& mu, const ComplexDensity& phi, const MartingaleDecomposition& d) {
  const double base = norm2(mu, phi);
  if (base == 0.0) return not_applicable("riesz_ratio", "phi vanishes");
  double s = norm2(mu, d.lambda_part);
  for (const auto& [k, v] : d.deltas) s += norm2(mu, v);
  auto r = band_report("riesz_ratio", s / base, 0.5, 2.0);
  r.samples = static_cast<std::int64_t>(d.deltas.size());
  return r;
}

CheckReport finite_coefficient_check(const PlanarMeasure& mu, const MartingaleDecomposition& d,
                                     const std::map<SquareKey, std::complex<double>>& coeffs) {
  ComplexDensity sum = ComplexDensity::Zero(mu.size());
  double weighted = 0.0;
  for (const auto& [key, c] : coeffs) {
    auto it = d.deltas.find(key);
    if (it == d.deltas.end()) continue;
    weighted += std::norm(c) * norm2(mu, it->second);
    for (std::size_t k = 0; k < it->second.idx.size(); ++k) sum(it->second.idx[k]) += c * it->second.val(k);
  }
  if (weighted == 0.0) return not_applicable("finite_coefficient_riesz", "all weighted terms vanish");
  auto r = band_report("finite_coefficient_riesz", norm2(mu, sum) / weighted, 0.5, 2.0);
  r.samples = static_cast<std::int64_t>(coeffs.size());
  return r;
}

CheckReport bessel_check(const PlanarMeasure& mu, const MartingaleDecomposition& d, const ComplexDensity& psi) {
  double s = 0.0;
  std::int64_t used = 0;
  for (const auto& [key, v] : d.deltas) {
    const double n2 = norm2(mu, v);
    if (n2 <= 0.0) continue;
    std::complex<double> ip = 0.0;
    for (std::size_t k = 0; k < v.idx.size(); ++k) ip += v.val(k) * std::conj(psi(v.idx[k])) * mu.w(v.idx[k]);
    s += std::norm(ip) / n2;
    ++used;
  }
  const double base = norm2(mu, psi);
  if (base == 0.0) return not_applicable("bessel", "psi vanishes");
  CheckReport r;
  r.name = "bessel";
  r.observed = s / base;
  r.samples = used;
  r.set_bound(2.0, 1e-10);
  return r;
}

CheckReport projection_algebra_check(const AdaptedSystem& sys, const ComplexDensity& f, const ComplexDensity& g) {
  const auto& mu = sys.measure();
  const auto& cls = sys.classification();
  const auto n = mu.size();
  const double scale = std::max({f.cwiseAbs().maxCoeff(), g.cwiseAbs().maxCoeff(), 1e-300});
  double worst = 0.0;
  auto defect = [&](const ComplexDensity& v) { worst = std::max(worst, v.size() ? v.cwiseAbs().maxCoeff() : 0.0); };

  const ComplexDensity lf = sys.lambda(f);
  defect(sys.lambda(lf) - lf);
  std::int64_t checks = 1;
  for (const ComplexDensity* src : {&f, &g}) {
    const ComplexDensity lam = sys.lambda(*src);
    for (int q : sys.transit()) {
      const ComplexDensity dq = sys.delta(q, *src).dense(n);
      defect(sys.delta(q, dq).dense(n) - dq);  // idempotent
      defect(sys.lambda(dq));                  // Lambda Delta_Q = 0
      defect(sys.delta(q, lam).dense(n));      // Delta_Q Lambda = 0
      // integral of Delta_Q f vanishes
      std::complex<double> s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += dq(i) * mu.w(i);
      worst = std::max(worst, std::abs(s) / std::sqrt(mu.total()));
      // Delta_R Delta_Q = 0 along the ancestor chain (other pairs have disjoint supports)
      for (int r = cls.nodes[q].parent; r >= 0; r = cls.nodes[r].parent) {
        defect(sys.delta(r, dq).dense(n));
        defect(sys.delta(q, sys.delta(r, *src).dense(n)).dense(n));
        checks += 2;
      }
      checks += 4;
    }
  }
  CheckReport r;
  r.name = "projection_algebra";
  r.observed = worst / scale;
  r.samples = checks;
  r.set_bound(1e-10);
  return r;
}

// ---- Carleson embedding ----------------------------------------------------------

CheckReport carleson_verify(const std::map<SquareKey, double>& a, double A_hyp, const Classification& cls,
                            const PlanarMeasure& mu, const ComplexDensity& phi) {
  const std::string name = "carleson_embedding";
  std::vector<double> own(cls.nodes.size(), 0.0);
  for (const auto& [key, v] : a) {
    if (v < 0.0) throw std::invalid_argument("carleson coefficients must be nonnegative");
    auto it = cls.index.find(key);
    if (it == cls.index.end()) throw std::invalid_argument("coefficient attached to a square outside the tree");
    own[it->second] += v;
  }
  std::vector<double> sub = own;
  for (int k = static_cast<int>(cls.nodes.size()) - 1; k > 0; --k) sub[cls.nodes[k].parent] += sub[k];
  double worst = 0.0;
  for (std::size_t k = 0; k < cls.nodes.size(); ++k) {
    const double cap = A_hyp * cls.nodes[k].mass;
    if (sub[k] > cap * (1 + 1e-10) + 1e-300) return not_applicable(name, "packing hypothesis fails");
    if (cap > 0) worst = std::max(worst, sub[k] / cap);
  }
  double lhs = 0.0;
  for (std::size_t k = 0; k < cls.nodes.size(); ++k) {
    if (own[k] == 0.0 || cls.nodes[k].mass == 0.0) continue;
    std::complex<double> s = 0.0;
    for (auto i : cls.nodes[k].atoms) s += phi(i) * mu.w(i);
    lhs += own[k] * std::norm(s / cls.nodes[k].mass);
  }
  CheckReport r;
  r.name = name;
  r.observed = lhs;
  r.samples = static_cast<std::int64_t>(a.size());
  const double rhs = 4 * A_hyp * norm2(mu, phi);
  r.set_bound(rhs, 1e-10 * std::max(rhs, 1e-300));
  std::ostringstream os;
  os << "max packing ratio " << worst;
  r.note = os.str();
  return r;
}

std::map<SquareKey, double> standard_difference_energy(const Classification& cls, const PlanarMeasure& mu,
                                                       const ComplexDensity& g) {
  auto avg = [&](const SquareNode& n) {
    std::complex<double> s = 0.0;
    for (auto i : n.atoms) s += g(i) * mu.w(i);
    return s / n.mass;
  };
  std::map<SquareKey, double> out;
  for (const auto& n : cls.nodes) {
    if (!n.transit() || n.mass == 0.0) continue;
    const auto aq = avg(n);
    double e = 0.0;
    for (int c : n.children) {
      const auto& kid = cls.nodes[c];
      if (kid.atoms.empty()) continue;
      if (kid.transit()) {
        e += std::norm(avg(kid) - aq) * kid.mass;
      } else {
        for (auto i : kid.atoms) e += std::norm(g(i) - aq) * mu.w(i);
      }
    }
    out[key_of(n.square)] = e;
  }
  return out;
}

std::vector<DyadicSquare> nonaccretive_squares(const DyadicLattice& lattice, const PlanarMeasure& mu,
                                               const ComplexDensity& b, double eta, int n_max) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  std::vector<DyadicSquare> out;
  struct Item {
    DyadicSquare q;
    std::vector<Eigen::Index> atoms;
  };
  std::vector<Item> stack;
  {
    Item root{lattice.root, {}};
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (lattice.root.contains(mu.z(i))) root.atoms.push_back(i);
    stack.push_back(std::move(root));
  }
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    if (it.atoms.empty()) continue;
    double mass = 0.0;
    std::complex<double> s = 0.0;
    for (auto i : it.atoms) {
      mass += mu.w(i);
      s += b(i) * mu.w(i);
    }
    if (std::abs(s) <= eta * mass) {
      out.push_back(it.q);
      continue;
    }
    if (it.atoms.size() <= 1 || it.q.level >= n_max) continue;
    std::array<Item, 4> kids;
    for (int j = 0; j < 4; ++j) kids[j].q = it.q.child(j + 1);
    for (auto i : it.atoms) kids[child_slot(it.q, mu.z(i))].atoms.push_back(i);
    for (int j = 3; j >= 0; --j) stack.push_back(std::move(kids[j]));
  }
  return out;
}

// ---- badness ---------------------------------------------------------------------

namespace {
// distance from [lo, hi] to the nearest point of offset + s Z
double gap_to_lines(double lo, double hi, double offset, double s) {
  const double j = std::ceil((lo - offset) / s);
  const double above = offset + j * s;
  if (above <= hi) return 0.0;
  const double below = above - s;
  return std::min(above - hi, std::max(0.0, lo - below));
}

double rect_gap(double ax0, double ax1, double ay0, double ay1, double bx0, double bx1, double by0, double by1) {
  const double dx = std::max({0.0, bx0 - ax1, ax0 - bx1});
  const double dy = std::max({0.0, by0 - ay1, ay0 - by1});
  return std::hypot(dx, dy);
}

bool disjoint(const DyadicSquare& a, const DyadicSquare& b) {
  return a.x1() <= b.x0() || b.x1() <= a.x0() || a.y1() <= b.y0() || b.y1() <= a.y0();
}

// atoms close enough to a region to matter for negligibility at level tildeM
std::vector<Eigen::Index> atoms_near(const PlanarMeasure& mu, const DyadicSquare& region, double reach) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (dist_point_square(mu.z(i), region) < reach) out.push_back(i);
  return out;
}

// true when the boundary of r is not tildeM-negligible; only atoms within total/tildeM of the
// boundary can break the bound, and `near` must contain all of them
bool boundary_heavy(const PlanarMeasure& mu, const std::vector<Eigen::Index>& near, const DyadicSquare& r,
                    double tildeM) {
  const double reach = mu.total() / tildeM;
  std::vector<std::pair<double, double>> d;
  for (auto i : near) {
    const double t = dist_point_boundary(mu.z(i), r);
    if (t < reach) d.push_back({t, mu.w(i)});
  }
  std::sort(d.begin(), d.end());
  double cum = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    cum += d[k].second;
    if (k + 1 < d.size() && d[k + 1].first == d[k].first) continue;
    if (cum > tildeM * d[k].first) return true;
  }
  return false;
}

DyadicSquare grid_square(Point offset, double s, std::int64_t ix, std::int64_t iy) {
  DyadicSquare q;
  q.side = s;
  q.ix = ix;
  q.iy = iy;
  q.origin = offset + Point(ix * s, iy * s);
  return q;
}
}  // namespace

bool rim_bad_at_scale(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, int k) {
  const double s = std::ldexp(q.side, k);
  if (s > 0.5 * (1 + 1e-12)) return false;
  const double w = 16 * std::pow(q.side, rule.alpha) * std::pow(s, 1 - rule.alpha);
  const double dx = gap_to_lines(q.x0(), q.x1(), d2.shift.real(), s);
  const double dy = gap_to_lines(q.y0(), q.y1(), d2.shift.imag(), s);
  return std::min(dx, dy) <= w;
}

bool bad_part1(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule) {
  const double floor_size = std::ldexp(q.side, rule.m) * (1 - 1e-12);
  for (int n = 1;; ++n) {
    const double s = std::ldexp(1.0, -n);
    if (s < floor_size) break;
    const double w = 16 * std::pow(q.side, rule.alpha) * std::pow(s, 1 - rule.alpha);
    const double dx = gap_to_lines(q.x0(), q.x1(), d2.shift.real(), s);
    const double dy = gap_to_lines(q.y0(), q.y1(), d2.shift.imag(), s);
    if (std::min(dx, dy) <= w) return true;
  }
  return false;
}

bool bad_part2(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, const PlanarMeasure& mu) {
  if (mu.empty()) return false;
  const double factor = 4.0 * std::ldexp(1.0, rule.m) + 1;
  const DyadicSquare box = q.expanded(factor);
  const double reach = mu.total() / rule.tildeM;
  const auto near = atoms_near(mu, box, reach);
  if (near.empty()) return false;
  const double lo = std::ldexp(q.side, -(rule.m + 1)) * (1 - 1e-12);
  const double hi = std::min(0.5, factor * q.side) * (1 + 1e-12);
  const double eps = 1e-12 * box.side;
  for (int n = 1;; ++n) {
    const double s = std::ldexp(1.0, -n);
    if (s < lo) break;
    if (s > hi) continue;
    const auto t = static_cast<std::int64_t>(std::ceil(reach / s)) + 1;
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (auto a : near) {
      const Point z = mu.z(a);
      const auto ci = static_cast<std::int64_t>(std::floor((z.real() - d2.shift.real()) / s));
      const auto cj = static_cast<std::int64_t>(std::floor((z.imag() - d2.shift.imag()) / s));
      // restrict to cells inside the box
      const auto bx0 = static_cast<std::int64_t>(std::ceil((box.x0() - eps - d2.shift.real()) / s));
      const auto bx1 = static_cast<std::int64_t>(std::floor((box.x1() + eps - d2.shift.real()) / s)) - 1;
      const auto by0 = static_cast<std::int64_t>(std::ceil((box.y0() - eps - d2.shift.imag()) / s));
      const auto by1 = static_cast<std::int64_t>(std::floor((box.y1() + eps - d2.shift.imag()) / s)) - 1;
      for (auto ix = std::max(ci - t, bx0); ix <= std::min(ci + t, bx1); ++ix)
        for (auto iy = std::max(cj - t, by0); iy <= std::min(cj + t, by1); ++iy) {
          const auto r = grid_square(d2.shift, s, ix, iy);
          if (dist_point_boundary(z, r) >= reach) continue;
          if (!seen.insert({ix, iy}).second) continue;
          if (boundary_heavy(mu, near, r, rule.tildeM)) return true;
        }
    }
  }
  return false;
}

namespace {
bool legacy_separation(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule) {
  const double big = std::ldexp(q.side, rule.m);
  for (int L = 0;; ++L) {
    const double s = std::ldexp(d2.root.side, -L);
    if (s <= big * (1 + 1e-12)) break;
    const double thr = std::pow(q.side, rule.alpha) * std::pow(s, 1 - rule.alpha);
    const std::int64_t n = std::int64_t{1} << L;
    const auto i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.x0() - thr - d2.root.x0()) / s)) - 1);
    const auto i1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.x1() + thr - d2.root.x0()) / s)) + 1);
    const auto j0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.y0() - thr - d2.root.y0()) / s)) - 1);
    const auto j1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.y1() + thr - d2.root.y0()) / s)) + 1);
    for (auto ix = i0; ix <= i1; ++ix)
      for (auto iy = j0; iy <= j1; ++iy) {
        const auto r = d2.square(L, ix, iy);
        if (disjoint(q, r) && dist_squares(q, r) < thr) return true;
      }
  }
  return false;
}

double dist_to_skeleton(const DyadicSquare& q, const DyadicSquare& r) {
  const double xm = r.x0() + r.side / 2, ym = r.y0() + r.side / 2;
  const double xs[3] = {r.x0(), xm, r.x1()}, ys[3] = {r.y0(), ym, r.y1()};
  double best = std::numeric_limits<double>::infinity();
  for (double x : xs) best = std::min(best, rect_gap(q.x0(), q.x1(), q.y0(), q.y1(), x, x, r.y0(), r.y1()));
  for (double y : ys) best = std::min(best, rect_gap(q.x0(), q.x1(), q.y0(), q.y1(), r.x0(), r.x1(), y, y));
  return best;
}

bool legacy_skeleton(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule) {
  const double big = std::ldexp(q.side, rule.m);
  for (int L = 0;; ++L) {
    const double s = std::ldexp(d2.root.side, -L);
    if (s <= big * (1 + 1e-12)) break;
    const double thr = 8 * std::pow(q.side, rule.alpha) * std::pow(s, 1 - rule.alpha);
    const std::int64_t n = std::int64_t{1} << L;
    const auto pad = thr + s;
    const auto i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.x0() - pad - d2.root.x0()) / s)));
    const auto i1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.x1() + pad - d2.root.x0()) / s)));
    const auto j0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.y0() - pad - d2.root.y0()) / s)));
    const auto j1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.y1() + pad - d2.root.y0()) / s)));
    for (auto ix = i0; ix <= i1; ++ix)
      for (auto iy = j0; iy <= j1; ++iy)
        if (dist_to_skeleton(q, d2.square(L, ix, iy)) <= thr) return true;
  }
  return false;
}

// Comparable nearby squares with a heavy child boundary.  The transit requirement is dropped,
// which only enlarges the predicate.
bool legacy_negligibility(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule,
                          const PlanarMeasure& mu) {
  if (mu.empty()) return false;
  const double reach = mu.total() / rule.tildeM;
  const double far = std::ldexp(q.side, rule.m);
  DyadicSquare zone = q.expanded(1 + 2 * (2 * far) / q.side);
  const auto near = atoms_near(mu, zone, reach);
  if (near.empty()) return false;
  for (int L = 0;; ++L) {
    const double s = std::ldexp(d2.root.side, -L);
    if (s < std::ldexp(q.side, -rule.m) * (1 - 1e-12)) break;
    if (s > far * (1 + 1e-12)) continue;
    const std::int64_t n = std::int64_t{1} << L;
    const double pad = far + s;
    const auto i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.x0() - pad - d2.root.x0()) / s)));
    const auto i1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.x1() + pad - d2.root.x0()) / s)));
    const auto j0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q.y0() - pad - d2.root.y0()) / s)));
    const auto j1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q.y1() + pad - d2.root.y0()) / s)));
    for (auto ix = i0; ix <= i1; ++ix)
      for (auto iy = j0; iy <= j1; ++iy) {
        const auto r = d2.square(L, ix, iy);
        if (dist_squares(q, r) > far) continue;
        const bool touched = std::any_of(near.begin(), near.end(),
                                         [&](Eigen::Index i) { return dist_point_square(mu.z(i), r) < reach; });
        if (!touched) continue;
        for (int j = 1; j <= 4; ++j)
          if (boundary_heavy(mu, near, r.child(j), rule.tildeM)) return true;
      }
  }
  return false;
}
}  // namespace

bool is_bad(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule, const PlanarMeasure& mu) {
  switch (rule.variant) {
    case BadnessVariant::consolidated: return bad_part1(q, d2, rule) || bad_part2(q, d2, rule, mu);
    case BadnessVariant::separation: return legacy_separation(q, d2, rule);
    case BadnessVariant::skeleton: return legacy_skeleton(q, d2, rule);
    case BadnessVariant::negligibility: return legacy_negligibility(q, d2, rule, mu);
  }
  return false;
}

LegacyBadness badness_implication(const DyadicSquare& q, const DyadicLattice& d2, const BadnessRule& rule,
                                  const PlanarMeasure& mu) {
  LegacyBadness b;
  b.separation = legacy_separation(q, d2, rule);
  b.skeleton = legacy_skeleton(q, d2, rule);
  b.negligibility = legacy_negligibility(q, d2, rule, mu);
  b.consolidated = bad_part1(q, d2, rule) || bad_part2(q, d2, rule, mu);
  return b;
}

CheckReport badness_implication_check(const BadnessRule& rule, const PlanarMeasure& mu, std::int64_t samples,
                                      std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::int64_t violations = 0, legacy = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const auto d1 = sample_lattice(eng());
    const auto d2 = sample_lattice(eng());
    const int level = rule.m + 1 + static_cast<int>(uniform01(eng) * 4);
    const std::int64_t n = std::int64_t{1} << level;
    DyadicSquare q;
    if (!mu.empty() && uniform01(eng) < 0.5) {
      const auto a = static_cast<Eigen::Index>(uniform01(eng) * mu.size());
      const auto found = d1.locate(level, mu.z(a));
      q = found ? *found : d1.square(level, 0, 0);
    } else {
      const auto ix = static_cast<std::int64_t>(uniform01(eng) * n);
      q = d1.square(level, ix, static_cast<std::int64_t>(uniform01(eng) * n));
    }
    const auto b = badness_implication(q, d2, rule, mu);
    legacy += (b.separation || b.skeleton || b.negligibility) ? 1 : 0;
    violations += b.violated() ? 1 : 0;
  }
  CheckReport r;
  r.name = "badness_implication";
  r.observed = static_cast<double>(violations);
  r.samples = samples;
  r.seed = seed;
  r.set_bound(0.0);
  r.note = "legacy-bad samples: " + std::to_string(legacy);
  return r;
}

GoodBadSplit split_good_bad(const ComplexDensity& phi, const AdaptedSystem& sys, const MartingaleDecomposition& d,
                            const DyadicLattice& d2, const BadnessRule& rule) {
  const auto n = sys.measure().size();
  GoodBadSplit out;
  out.good = d.lambda_part;
  out.bad = ComplexDensity::Zero(n);
  for (int q : sys.transit()) {
    const auto& sq = sys.classification().nodes[q].square;
    const auto it = d.deltas.find(key_of(sq));
    if (it == d.deltas.end()) continue;
    const bool bad = is_bad(sq, d2, rule, sys.measure());
    auto& target = bad ? out.bad : out.good;
    for (std::size_t k = 0; k < it->second.idx.size(); ++k) target(it->second.idx[k]) += it->second.val(k);
    (bad ? out.bad_squares : out.good_squares) += 1;
  }
  (void)phi;
  return out;
}

PhiD build_phi_D(const Classification& cls, const LipschitzEnvelope& phi_tilde, const PlanarMeasure& mu, double delta) {
  PhiD out;
  out.envelope = phi_tilde;
  for (const auto& n : cls.nodes) {
    if (n.transit()) continue;
    // the terminal squares the energy rule picks out (zero mass included) and those inside H
    if (n.reason == TerminalReason::high_g_energy || n.reason == TerminalReason::zero_mass ||
        n.reason == TerminalReason::inside_H)
      out.envelope.add_square(n.square);
  }
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (out.envelope(mu.z(i)) > 0.0) out.positive_mass += mu.w(i);
  out.check.name = "phi_D_support";
  out.check.observed = out.positive_mass;
  out.check.samples = mu.size();
  out.check.set_bound(delta * mu.total(), 1e-12);
  return out;
}

nlohmann::json to_json(const Classification& cls) {
  std::function<nlohmann::json(int)> node = [&](int k) {
    const auto& n = cls.nodes[k];
    nlohmann::json j{{"square", {{"level", n.square.level}, {"ix", n.square.ix}, {"iy", n.square.iy}}},
                     {"status", n.transit() ? "transit" : "terminal"},
                     {"mass", n.mass},
                     {"g_energy", n.g_energy}};
    if (!n.transit()) j["reason"] = to_string(n.reason);
    if (n.transit()) {
      nlohmann::json kids = nlohmann::json::array();
      for (int c : n.children) kids.push_back(node(c));
      j["children"] = kids;
    }
    return j;
  };
  nlohmann::json out{{"lattice", to_json(cls.lattice)}, {"n_max", cls.n_max}, {"tree", node(0)}};
  if (cls.root_forced) out["root_forced"] = to_string(cls.root_would_be);
  return out;
}

std::string deltas_csv(const PlanarMeasure& mu, const MartingaleDecomposition& d) {
  std::ostringstream os;
  os.precision(17);
  os << "level,ix,iy,norm2\n";
  for (const auto& [k, v] : d.deltas) os << k.level << ',' << k.ix << ',' << k.iy << ',' << norm2(mu, v) << '\n';
  return os.str();
}

}  // namespace tblab

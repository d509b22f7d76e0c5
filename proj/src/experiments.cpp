#include "tblab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tblab/bilinear.hpp"
#include "tblab/curvature.hpp"
#include "tblab/kernel.hpp"
#include "tblab/martingale.hpp"
#include "tblab/probability.hpp"
#include "tblab/transform.hpp"

namespace tblab {

using nlohmann::json;

// ---- config ------------------------------------------------------------------

namespace {
void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::vector<double> default_grid(double lo_exp, double hi_exp) {
  std::vector<double> g;
  for (double e = lo_exp; e <= hi_exp; ++e) g.push_back(std::ldexp(1.0, static_cast<int>(e)));
  return g;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<DyadicLattice> lattices(std::uint64_t seed, int count) {
  std::mt19937_64 master(seed);
  std::vector<DyadicLattice> out;
  for (int a = 0; a < count; ++a) out.push_back(sample_lattice(master()));
  return out;
}

CheckReport hard(std::string name, double observed, double bound, double tol = 0.0) {
  CheckReport r;
  r.name = std::move(name);
  r.observed = observed;
  r.samples = 1;
  r.set_bound(bound, tol);
  return r;
}
}  // namespace

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, {"scenario", "measure", "density", "params", "trials", "lattices", "seed", "out", "taus", "M_grid",
                     "L_grid", "phi_const", "n_max"},
                 "config");
  ExperimentConfig c;
  read(j, "scenario", c.scenario);
  read(j, "trials", c.trials);
  read(j, "lattices", c.lattices);
  read(j, "seed", c.seed);
  read(j, "out", c.out);
  read(j, "taus", c.taus);
  read(j, "M_grid", c.M_grid);
  read(j, "L_grid", c.L_grid);
  read(j, "phi_const", c.phi_const);
  read(j, "n_max", c.n_max);
  if (j.contains("measure")) {
    const auto& m = j.at("measure");
    reject_unknown(m, {"kind", "n", "level", "seed", "file"}, "measure");
    read(m, "kind", c.measure.kind);
    read(m, "n", c.measure.n);
    read(m, "level", c.measure.level);
    read(m, "seed", c.measure.seed);
    read(m, "file", c.measure.file);
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    reject_unknown(d, {"kind", "gamma", "cells"}, "density");
    read(d, "kind", c.density.kind);
    read(d, "gamma", c.density.gamma);
    read(d, "cells", c.density.cells);
  }
  if (j.contains("params")) {
    const auto& p = j.at("params");
    reject_unknown(p, {"delta", "M", "m", "eps_cz", "beta", "tildeM", "eta", "L", "B"}, "params");
    auto& g = c.params;
    read(p, "delta", g.delta);
    read(p, "M", g.M);
    read(p, "m", g.m);
    read(p, "eps_cz", g.eps_cz);
    read(p, "beta", g.beta);
    read(p, "tildeM", g.tildeM);
    read(p, "eta", g.eta);
    read(p, "L", g.L);
    read(p, "B", g.B);
    if (!(g.delta > 0 && g.delta < 1)) throw std::invalid_argument("params: delta must lie in (0,1)");
    if (!(g.M > 1)) throw std::invalid_argument("params: M must exceed 1");
    if (g.m < 1) throw std::invalid_argument("params: m must be at least 1");
    if (!(g.eps_cz > 0 && g.eps_cz <= 1)) throw std::invalid_argument("params: eps_cz must lie in (0,1]");
  }
  if (c.lattices < 1) throw std::invalid_argument("config: lattices must be positive");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  const auto& p = c.params;
  return {{"scenario", c.scenario},
          {"measure", {{"kind", c.measure.kind}, {"n", c.measure.n}, {"level", c.measure.level},
                       {"seed", c.measure.seed}, {"file", c.measure.file}}},
          {"density", {{"kind", c.density.kind}, {"gamma", c.density.gamma}, {"cells", c.density.cells}}},
          {"params", {{"delta", p.delta}, {"M", p.M}, {"m", p.m}, {"eps_cz", p.eps_cz}, {"beta", p.beta},
                      {"tildeM", p.tildeM}, {"eta", p.eta}, {"L", p.L}, {"B", p.B}}},
          {"trials", c.trials},
          {"lattices", c.lattices},
          {"seed", c.seed},
          {"out", c.out},
          {"taus", c.taus},
          {"M_grid", c.M_grid},
          {"L_grid", c.L_grid},
          {"phi_const", c.phi_const},
          {"n_max", c.n_max}};
}

// ---- measures and densities --------------------------------------------------

PlanarMeasure raw_measure(const MeasureSpec& s) {
  if (s.kind == "segment") return segment_measure({0, 0}, {1, 0}, s.n);
  if (s.kind == "circle") return arc_measure({0, 0}, 1.0, 0.0, 2 * std::numbers::pi, s.n);
  if (s.kind == "arc") return arc_measure({0, 0}, 1.0, 0.0, std::numbers::pi, s.n);
  if (s.kind == "cantor") return cantor_corner(s.level);
  if (s.kind == "random") return random_cloud(s.seed, s.n);
  if (s.kind == "spike") {
    // a segment plus a heavy cluster of a quarter as many atoms near its middle
    const auto seg = segment_measure({0, 0}, {1, 0}, s.n);
    const int extra = std::max(4, s.n / 4);
    std::vector<Atom> atoms;
    for (Eigen::Index i = 0; i < seg.size(); ++i) atoms.push_back({seg.z(i), seg.w(i)});
    std::mt19937_64 eng(s.seed);
    for (int k = 0; k < extra; ++k)
      atoms.push_back({Point(0.5 + 1e-3 * (uniform01(eng) - 0.5), 0.25 + 1e-3 * (uniform01(eng) - 0.5)),
                       1.0 / extra});
    return PlanarMeasure(atoms);
  }
  if (s.kind == "file") {
    std::ifstream in(s.file);
    if (!in) throw std::runtime_error("cannot open measure file " + s.file);
    try {
      return measure_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw std::runtime_error(s.file + ": " + e.what());
    }
  }
  throw std::invalid_argument("unknown measure kind '" + s.kind + "'");
}

PlanarMeasure build_measure(const MeasureSpec& spec) { return normalize(raw_measure(spec)).mu; }

ComplexDensity build_density(const DensitySpec& spec, const PlanarMeasure& mu) {
  const auto n = mu.size();
  if (spec.kind == "ones") return ComplexDensity::Ones(n);
  if (spec.kind != "checkerboard") throw std::invalid_argument("unknown density kind '" + spec.kind + "'");
  if (!(spec.gamma > 0 && spec.gamma < 1)) throw std::invalid_argument("density gamma must lie in (0,1)");
  Eigen::VectorXd s(n);
  const double cell = 0.25 / spec.cells;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cx = static_cast<std::int64_t>(std::floor(mu.z(i).real() / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(mu.z(i).imag() / cell));
    s(i) = ((cx + cy) % 2 == 0) ? 1.0 : -1.0;
  }
  double S = s.dot(mu.w()) / mu.total();
  if (S > spec.gamma) {
    s = -s;
    S = -S;
  }
  // lift the -1 cells just enough that the mean becomes gamma; values stay in [-1, 1]
  const double c = (spec.gamma - S) / (1 - S);
  ComplexDensity b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = s(i) > 0 ? 1.0 : -1.0 + 2 * c;
  return b;
}

// ---- reports -----------------------------------------------------------------

bool PipelineReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.ok(); });
}

json PipelineReport::to_json() const {
  auto arr = json::array();
  for (const auto& c : checks) arr.push_back(tblab::to_json(c));
  return {{"name", name}, {"values", values}, {"checks", arr}, {"ok", ok()}};
}

namespace {
struct HSetup {
  ExceptionalSet es;
  LipschitzEnvelope phi;
  Eigen::VectorXd theta;
  double mass_H = 0.0;
  double r_floor = 0.0;
};

HSetup build_H(const PlanarMeasure& mu, double M) {
  HSetup s;
  s.r_floor = median_spacing(mu);
  s.es = exceptional_set(mu, M, s.r_floor);
  if (!s.es.H.empty()) s.phi.add_disks(s.es.H);
  s.theta = sample_envelope(std::cref(s.phi), mu);
  s.mass_H = s.es.H.mass(mu);
  return s;
}

std::vector<CheckReport> exceptional_checks(const PlanarMeasure& mu, const ExceptionalSet& es, double M) {
  double overlap = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < es.selected.size(); ++a)
    for (std::size_t b = a + 1; b < es.selected.size(); ++b) {
      const auto& p = es.selected[a];
      const auto& q = es.selected[b];
      overlap = std::max(overlap, p.r + q.r - std::abs(p.c - q.c));
    }
  CheckReport sum;
  sum.name = "exceptional_radius_sum";
  sum.observed = es.radius_sum;
  sum.samples = static_cast<std::int64_t>(es.selected.size());
  sum.bound = mu.total() / M;
  sum.pass = es.radius_sum < mu.total() / M || es.selected.empty();
  CheckReport dis;
  dis.name = "exceptional_disjoint";
  dis.observed = std::max(0.0, overlap);
  dis.samples = sum.samples;
  dis.bound = 0.0;
  dis.pass = overlap < 0.0 || es.selected.size() < 2;
  return {sum, dis};
}

double sup_maximal_of_one(const PlanarMeasure& mu, const Eigen::VectorXd& theta) {
  const ComplexDensity one = ComplexDensity::Ones(mu.size());
  double b = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) b = std::max(b, k_phi_maximal(mu, theta, theta(i), one, mu.z(i)));
  return b;
}
}  // namespace

PipelineReport run_theorem1_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu) {
  PipelineReport rep;
  rep.name = "theorem1";
  const double M = cfg.params.M;
  auto t0 = std::chrono::steady_clock::now();
  const auto hs = build_H(mu, M);
  rep.timings.push_back({"exceptional_set", seconds_since(t0)});
  t0 = std::chrono::steady_clock::now();
  const double B = sup_maximal_of_one(mu, hs.theta);
  rep.timings.push_back({"maximal_transform", seconds_since(t0)});
  t0 = std::chrono::steady_clock::now();
  const auto norm = operator_norm(operator_matrix(mu, hs.theta), mu);
  rep.timings.push_back({"operator_norm", seconds_since(t0)});
  const bool degenerate = B <= 0.0;
  rep.values = {{"atoms", mu.size()},
                {"M", M},
                {"r_floor", hs.r_floor},
                {"mass_H", hs.mass_H},
                {"disks", hs.es.selected.size()},
                {"B", B},
                {"norm", norm.value},
                {"norm_iterations", norm.iterations},
                {"norm_cap_hit", norm.cap_hit},
                {"degenerate", degenerate},
                {"ratio", degenerate ? 0.0 : norm.value / (B * M)}};
  for (auto& c : exceptional_checks(mu, hs.es, M)) rep.checks.push_back(std::move(c));
  return rep;
}

PipelineReport run_theorem1a_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu) {
  PipelineReport rep;
  rep.name = "theorem1a";
  const double M = cfg.params.M, L = cfg.params.L;
  const auto n = mu.size();
  const ComplexDensity one = ComplexDensity::Ones(n);
  auto t0 = std::chrono::steady_clock::now();
  const auto hs = build_H(mu, M);
  const auto gl = epsilon0_and_GL(mu, std::cref(hs.phi), one, L);
  rep.timings.push_back({"exceptional_sets", seconds_since(t0)});
  LipschitzEnvelope psi = hs.phi;
  if (!gl.disks.empty()) psi.add_disks(gl.disks);
  const Eigen::VectorXd th_phi = hs.theta;
  const Eigen::VectorXd th_psi = sample_envelope(std::cref(psi), mu);

  // Pointwise decomposition: for every atom and cutoff eps,
  // K^eps_Psi = sum_{eps<=d<Psi} k_Psi + K^{max(eps,Psi)}_Phi + sum_{d>=max} (k_Psi - k_Phi),
  // and the middle term stays below L because max(eps, Psi) >= 2 eps0 > eps0.
  t0 = std::chrono::steady_clock::now();
  double sup_psi = 0.0, sup_phi = 0.0, worst_split = 0.0, worst_L = 0.0, worst_near = 0.0, worst_rel = 0.0;
  int psi_below_2eps0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point x = mu.z(i);
    const double ps = th_psi(i);
    if (gl.eps0(i) > 0 && ps < 2 * gl.eps0(i) * (1 - 1e-12)) ++psi_below_2eps0;
    std::vector<double> cuts;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) cuts.push_back(std::abs(mu.z(j) - x));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (double eps : cuts) {
      const auto kpsi = k_phi_truncated(mu, th_psi, ps, one, x, eps);
      const double top = std::max(eps, ps);
      const auto kphi_top = k_phi_truncated(mu, th_phi, th_phi(i), one, x, top);
      double near = 0.0, diff = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = std::abs(mu.z(j) - x);
        if (j == i || d < eps) continue;
        const auto kp = k_phi<double>(x, mu.z(j), ps, th_psi(j));
        if (d < ps) near += std::abs(kp) * mu.w(j);
        else diff += std::abs(kp - k_phi<double>(x, mu.z(j), th_phi(i), th_phi(j))) * mu.w(j);
      }
      const double bound = near + std::abs(kphi_top) + diff;
      worst_split = std::max(worst_split, std::abs(kpsi) - bound * (1 + 1e-12) - 1e-300);
      worst_L = std::max(worst_L, std::abs(kphi_top) - L);
      if (ps > 0) worst_near = std::max(worst_near, near - ball_mass(mu, x, ps) / ps * (1 + 1e-12));
      sup_psi = std::max(sup_psi, std::abs(kpsi));
      worst_rel = std::max(worst_rel, (near + diff) / M);
    }
    sup_phi = std::max(sup_phi, k_phi_maximal(mu, th_phi, th_phi(i), one, x));
  }
  rep.timings.push_back({"decomposition", seconds_since(t0)});
  t0 = std::chrono::steady_clock::now();
  const auto norm = operator_norm(operator_matrix(mu, th_psi), mu);
  rep.timings.push_back({"operator_norm", seconds_since(t0)});
  double mass_G = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (gl.disks.contains(mu.z(i)) && !hs.es.H.contains(mu.z(i))) mass_G += mu.w(i);
  rep.values = {{"atoms", n},
                {"M", M},
                {"L", L},
                {"mass_H", hs.mass_H},
                {"mass_G_minus_H", mass_G},
                {"G_disks", gl.disks.disks.size()},
                {"sup_maximal_phi", sup_phi},
                {"sup_maximal_psi", sup_psi},
                {"claim1_constant", sup_psi / (L + M)},
                {"error_terms_over_M", worst_rel},
                {"norm_psi", norm.value},
                {"claim2_constant", norm.value / ((L + M) * M)}};
  rep.checks.push_back(hard("decomposition_dominates", worst_split, 0.0, 1e-12));
  rep.checks.push_back(hard("truncation_below_L", worst_L, 0.0));
  rep.checks.push_back(hard("near_term_below_ball_ratio", worst_near, 0.0, 1e-12));
  rep.checks.push_back(hard("psi_covers_2eps0", psi_below_2eps0, 0.0));
  return rep;
}

// ---- zero set -----------------------------------------------------------------

ZeroSetConstruction zero_set_construction(const ExperimentConfig& cfg, const PlanarMeasure& mu,
                                          const ComplexDensity& b) {
  const auto n = mu.size();
  ZeroSetConstruction z;
  if (n == 0) return z;
  z.gamma = std::abs(b.dot(mu.w().cast<std::complex<double>>())) / mu.total();
  z.beta = z.gamma * z.gamma / 16;

  const auto M_grid = cfg.M_grid.empty() ? default_grid(1, 24) : cfg.M_grid;
  const auto L_grid = cfg.L_grid.empty() ? default_grid(-4, 40) : cfg.L_grid;
  const double cap = z.gamma / 32 * mu.total();
  HSetup hs;
  for (double M : M_grid) {
    hs = build_H(mu, M);
    z.M = M;
    if (hs.mass_H < cap) {
      z.M_found = true;
      break;
    }
  }
  z.mass_H = hs.mass_H;
  DiskSet GH = hs.es.H;
  GLSet gl;
  for (double L : L_grid) {
    gl = epsilon0_and_GL(mu, std::cref(hs.phi), b, L);
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (gl.disks.contains(mu.z(i)) && !hs.es.H.contains(mu.z(i))) m += mu.w(i);
    z.L = L;
    z.mass_G_minus_H = m;
    if (m < cap) {
      z.L_found = true;
      break;
    }
  }
  for (const auto& d : gl.disks.disks) GH.disks.push_back(d);

  // per-atom distance to the complement of G_{L,M}, and of each lattice's nonaccretive union
  Eigen::VectorXd g0(n);
  for (Eigen::Index i = 0; i < n; ++i) g0(i) = GH.empty() ? 0.0 : GH.dist_to_complement(mu.z(i));
  const auto lats = lattices(cfg.seed, cfg.lattices);
  const int nl = static_cast<int>(lats.size());
  Eigen::MatrixXd t(n, nl);
  std::vector<std::vector<char>> inside(nl, std::vector<char>(n, 0));
  z.min_mass_outside_T = mu.total();
  z.p1 = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < nl; ++a) {
    const auto T = nonaccretive_squares(lats[a], mu, b, z.gamma / 2, cfg.n_max);
    double outside = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = 0.0;
      for (const auto& q : T) {
        if (q.contains(mu.z(i))) inside[a][i] = 1;
        best = std::max(best, dist_to_square_complement(mu.z(i), q));
      }
      t(i, a) = best;
      if (!inside[a][i]) {
        outside += mu.w(i);
        z.p1(i) += 1.0 / nl;
      }
    }
    z.min_mass_outside_T = std::min(z.min_mass_outside_T, outside);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (z.p1(i) > z.gamma / 4) z.mass_p1_large += mu.w(i);

  // Phi_0(x): smallest value whose lower set has probability beta over all ordered pairs
  z.pairs = nl * nl;
  const auto kth = static_cast<std::size_t>(std::max(1.0, std::ceil(z.beta * z.pairs - 1e-9)));
  z.phi0.resize(n);
  z.in_F.assign(n, 0);
  z.reason.assign(n, "F");
  std::vector<double> vals(z.pairs);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < nl; ++a)
      for (int c = 0; c < nl; ++c) vals[a * nl + c] = std::max({g0(i), t(i, a), t(i, c)});
    std::nth_element(vals.begin(), vals.begin() + (kth - 1), vals.end());
    z.phi0(i) = vals[kth - 1];
    z.in_F[i] = z.phi0(i) == 0.0;
    if (!z.in_F[i]) {
      if (hs.es.H.contains(mu.z(i))) z.reason[i] = "H";
      else if (gl.disks.contains(mu.z(i))) z.reason[i] = "G";
      else z.reason[i] = "T";
    } else {
      z.mass_F += mu.w(i);
    }
  }
  return z;
}

std::string reasons_csv(const PlanarMeasure& mu, const ZeroSetConstruction& z) {
  std::ostringstream os;
  os.precision(17);
  os << "atom,x,y,w,p1,phi0,reason\n";
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    os << i << ',' << mu.z(i).real() << ',' << mu.z(i).imag() << ',' << mu.w(i) << ',' << z.p1(i) << ','
       << z.phi0(i) << ',' << z.reason[i] << '\n';
  return os.str();
}

namespace {
// entries w_j / (x_i - z_j) when |x_i - z_j| >= phi(x_i)
OperatorMatrix truncated_cauchy_matrix(const PlanarMeasure& mu, const Eigen::VectorXd& phi) {
  const auto n = mu.size();
  OperatorMatrix m;
  m.kernel = "cauchy_truncated";
  m.entries = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point d = mu.z(i) - mu.z(j);
      if (i != j && std::abs(d) >= phi(i)) m.entries(i, j) = mu.w(j) / d;
    }
  return m;
}

void zero_set_checks(PipelineReport& rep, const ZeroSetConstruction& z, const PlanarMeasure& mu, double b_sup) {
  const bool hyp = z.M_found && z.L_found && z.gamma > 0 && b_sup <= 1 + 1e-12;
  CheckReport outside = hard("outside_T_at_least_gamma_over_2", z.gamma / 2 * mu.total() - z.min_mass_outside_T, 0.0,
                             1e-12);
  CheckReport large = hard("p1_split_at_least_gamma_over_4", z.gamma / 4 * mu.total() - z.mass_p1_large, 0.0, 1e-12);
  CheckReport frac;
  frac.name = "zero_set_fraction";
  frac.observed = z.mass_F / mu.total();
  frac.samples = z.pairs;
  if (hyp) {
    frac.bound = 3 * z.gamma / 16;
    frac.pass = frac.observed >= *frac.bound - 1e-12;
    frac.note = "lower bound";
  } else {
    frac.applicable = false;
    std::string why;
    if (!z.M_found) why += "no M in grid with mu(H_M) < gamma/32; ";
    if (!z.L_found) why += "no L in grid with mu(G_L \\ H_M) < gamma/32; ";
    if (!(z.gamma > 0)) why += "gamma = 0; ";
    if (b_sup > 1 + 1e-12) why += "|b| exceeds 1; ";
    frac.note = why;
  }
  // removal masses by reason add up to the complement of F
  double removed = 0.0;
  std::map<std::string, double> by_reason;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (!z.in_F[i]) {
      by_reason[z.reason[i]] += mu.w(i);
      removed += mu.w(i);
    }
  for (const auto& [why, m] : by_reason) rep.values["removed_" + why] = m;
  rep.checks.push_back(hard("stage_mass_accounting", std::abs(removed - (mu.total() - z.mass_F)), 0.0, 1e-12));
  if (b_sup <= 1 + 1e-12) {
    rep.checks.push_back(outside);
    rep.checks.push_back(large);
  }
  rep.checks.push_back(frac);
}
}  // namespace

PipelineReport run_theorem3_pipeline(const ExperimentConfig& cfg, const PlanarMeasure& mu, const ComplexDensity& b) {
  PipelineReport rep;
  rep.name = "theorem3";
  const auto n = mu.size();
  auto t0 = std::chrono::steady_clock::now();
  const auto z = zero_set_construction(cfg, mu, b);
  rep.timings.push_back({"zero_set", seconds_since(t0)});
  const double b_sup = n ? b.cwiseAbs().maxCoeff() : 0.0;
  zero_set_checks(rep, z, mu, b_sup);

  t0 = std::chrono::steady_clock::now();
  std::vector<Eigen::Index> f_idx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (z.in_F[i]) f_idx.push_back(i);
  const auto muF = mu.subset(f_idx);
  const double norm_F = operator_norm(operator_matrix(muF, Eigen::VectorXd::Zero(muF.size())), muF).value;
  json per_tau = json::array();
  std::vector<double> kn, cn;
  for (double tau : cfg.taus) {
    const Eigen::VectorXd phi = (z.phi0.array() + tau).matrix();
    const double k_norm = operator_norm(operator_matrix(mu, phi), mu).value;
    const double c_norm = operator_norm(truncated_cauchy_matrix(mu, phi), mu).value;
    kn.push_back(k_norm);
    cn.push_back(c_norm);
    per_tau.push_back({{"tau", tau}, {"norm_K_phi", k_norm}, {"norm_C_phi", c_norm}});
  }
  rep.timings.push_back({"norms", seconds_since(t0)});
  auto spread = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi > 0 ? (*hi - *lo) / *hi : 0.0;
  };
  const double shape = z.L * z.M * std::pow(std::max(z.gamma, 1e-300), -20);
  rep.values.update(json{{"atoms", n},
                {"gamma", z.gamma},
                {"beta", z.beta},
                {"M_gamma", z.M},
                {"L_gamma", z.L},
                {"M_found", z.M_found},
                {"L_found", z.L_found},
                {"mass_H", z.mass_H},
                {"mass_G_minus_H", z.mass_G_minus_H},
                {"min_mass_outside_T", z.min_mass_outside_T},
                {"mass_p1_large", z.mass_p1_large},
                {"mass_F", z.mass_F},
                {"pairs", z.pairs},
                {"norm_cauchy_on_F", norm_F},
                {"per_tau", per_tau},
                {"shape_LM_gamma_minus20", shape},
                {"norm_C_phi_over_shape", cn.empty() ? 0.0 : cn.front() / shape}});
  rep.values["tau_spread_K_phi"] = spread(kn);
  rep.checks.push_back(hard("tau_stability_C_phi", spread(cn), 0.01));
  return rep;
}

VitushkinReport vitushkin_report(const Contour& gamma_set, int atoms, const ExperimentConfig& cfg) {
  const double total = gamma_set.length();
  if (!(total > 0)) throw std::invalid_argument("contour has zero length");
  std::vector<Atom> pts;
  for (const auto& [a, b] : gamma_set.segments) {
    const int k = std::max(1, static_cast<int>(std::lround(atoms * std::abs(b - a) / total)));
    const auto seg = segment_measure(a, b, k);
    for (Eigen::Index i = 0; i < seg.size(); ++i) pts.push_back({seg.z(i), seg.w(i)});
  }
  for (const auto& arc : gamma_set.arcs) {
    const int k = std::max(1, static_cast<int>(std::lround(atoms * arc.length() / total)));
    const auto am = arc_measure(arc.center, arc.radius, arc.theta0, arc.theta1, k);
    for (Eigen::Index i = 0; i < am.size(); ++i) pts.push_back({am.z(i), am.w(i)});
  }
  const PlanarMeasure raw(pts);
  const auto nm = normalize(raw);
  const ComplexDensity one = ComplexDensity::Ones(raw.size());
  VitushkinReport out;
  out.measure = nm.mu;
  out.zero_set = zero_set_construction(cfg, nm.mu, one);
  const auto& z = out.zero_set;
  std::vector<Eigen::Index> f_idx;
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    if (z.in_F[i]) f_idx.push_back(i);
  const auto onF = raw.subset(f_idx);
  const auto curv = c2(onF);
  double diam = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    for (Eigen::Index j = i + 1; j < raw.size(); ++j) diam = std::max(diam, std::abs(raw.z(i) - raw.z(j)));
  const double h1F = onF.total();
  const double gamma_abs = raw.total();  // |integral of b| with b = 1
  auto& rep = out.report;
  rep.name = "vitushkin";
  rep.values = {{"atoms", raw.size()},
                {"H1", total},
                {"H1_discrete", raw.total()},
                {"H1_F", h1F},
                {"fraction_F", h1F / raw.total()},
                {"c2_F", curv.c2},
                {"c2_over_H1_F", h1F > 0 ? curv.c2 / h1F : 0.0},
                {"diam", diam},
                {"shape", (diam / gamma_abs) * std::pow(total / gamma_abs, 42)},
                {"M_gamma", z.M},
                {"L_gamma", z.L},
                {"mass_H", z.mass_H},
                {"mass_G_minus_H", z.mass_G_minus_H}};
  zero_set_checks(rep, z, nm.mu, 1.0);
  return out;
}

// ---- suite -------------------------------------------------------------------

PipelineReport run_suite(const ExperimentConfig& cfg) {
  PipelineReport rep;
  rep.name = "suite";
  const auto& p = cfg.params;
  const auto samples = std::max<std::int64_t>(cfg.trials, 100);
  std::mt19937_64 master(cfg.seed);
  auto push = [&](CheckReport r) { rep.checks.push_back(std::move(r)); };

  // kernel
  const auto env = random_envelope(master(), 8);
  const EnvelopeFn phi = std::cref(env);
  push(env_lipschitz_check(phi, samples, cfg.seed));
  push(suppression_bounds_check(phi, samples, cfg.seed));
  push(cz_smoothness_check(phi, samples, cfg.seed, 1.0));
  push(antisymmetry_check(phi, samples, cfg.seed));

  // measure
  const auto mu = build_measure(cfg.measure);
  const auto es = exceptional_set(mu, p.M, median_spacing(mu));
  for (auto& c : exceptional_checks(mu, es, p.M)) push(c);

  // probability
  {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::int64_t bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      WeightedSample s;
      const int k = 1 + static_cast<int>(master() % 12);
      double tot = 0.0;
      for (int i = 0; i < k; ++i) {
        s.values.push_back(u(master));
        s.probs.push_back(0.1 + u(master));
        tot += s.probs.back();
      }
      for (auto& q : s.probs) q /= tot;
      const auto r = truncated_expectation_properties(s, p.beta);
      worst = std::max(worst, r.observed / (*r.bound > 0 ? *r.bound : 1.0));
      bad += r.ok() ? 0 : 1;
    }
    push(hard("property_B_violations", static_cast<double>(bad), 0.0));
    std::vector<double> xs, ws;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      xs.push_back(mu.z(i).real());
      ws.push_back(mu.w(i));
    }
    const auto sw = sweeping_negligibility(xs, ws, 0.25, p.tildeM / 1e3);
    CheckReport r;
    r.name = "sweeping";
    r.observed = sw.bad_length;
    r.set_bound(sw.bound_length, 1e-12);
    push(r);
  }

  // martingale
  const auto lat1 = sample_lattice(master());
  const auto lat2 = sample_lattice(master());
  const ComplexDensity ones = ComplexDensity::Ones(mu.size());
  ComplexDensity f(mu.size()), g(mu.size());
  {
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      f(i) = {nd(master), nd(master)};
      g(i) = {nd(master), nd(master)};
    }
  }
  // h = 1 + small, with the small part driving the energy rule; |<h>_Q| >= 1 - delta/2 everywhere
  ComplexDensity small(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) small(i) = std::polar(p.delta / 2, 2 * std::numbers::pi * uniform01(master));
  const ComplexDensity h = ones + small;
  const auto cls1 = classify(lat1, mu, small, p.delta, es.H, cfg.n_max);
  const auto cls2 = classify(lat2, mu, small, p.delta, es.H, cfg.n_max);
  const AdaptedSystem sys1(mu, cls1, h, p.delta), sys2(mu, cls2, h, p.delta);
  const auto d1 = sys1.decompose(f);
  push(hard("reconstruction", (d1.reconstruct() - f).cwiseAbs().maxCoeff() / f.cwiseAbs().maxCoeff(), 1e-9));
  push(riesz_ratio(mu, f, d1));
  push(projection_algebra_check(sys1, f, g));
  push(bessel_check(mu, d1, g));
  {
    // packing constant of the energy family itself
    const auto a = standard_difference_energy(cls1, mu, f);
    std::vector<double> sub(cls1.nodes.size(), 0.0);
    for (const auto& [k, v] : a) sub[cls1.index.at(k)] += v;
    for (int k = static_cast<int>(cls1.nodes.size()) - 1; k > 0; --k) sub[cls1.nodes[k].parent] += sub[k];
    double A = 0.0;
    for (std::size_t k = 0; k < cls1.nodes.size(); ++k)
      if (cls1.nodes[k].mass > 0) A = std::max(A, sub[k] / cls1.nodes[k].mass);
    push(carleson_verify(a, A, cls1, mu, g));
  }

  // bilinear
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(mu.size(), cfg.phi_const);
  const auto part = partition(sys1, sys2, f, g, theta, p.m, p.alpha(),
                              [](const DyadicSquare&, bool) { return true; }, true);
  push(hard("partition_completeness", part.rel_error, 1e-8));
  push(hard("sigma1_count", part.max_sigma1_count, part.sigma1_bound));

  // transform
  push(blanket_check(mu, [](Point x, Point y) { return 1.0 / (x - y); },
                     [](double s) { return std::min(1.0, 0.05 / std::max(s, 1e-300)); }, 0.05, ones));

  // curvature
  if (mu.size() <= 512) push(mv_identity_check(mu));
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Point a(uniform01(master), uniform01(master)), b(uniform01(master), uniform01(master)),
          c(uniform01(master), uniform01(master));
      worst = std::max(worst, permutation_identity_check(a, b, c).observed);
    }
    push(hard("permutation_identity", worst, 1e-10));
  }
  rep.values = {{"checks", rep.checks.size()}, {"atoms", mu.size()}};
  return rep;
}

}  // namespace tblab

#include "tblab/bilinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tblab {

Eigen::MatrixXcd weighted_kernel(const PlanarMeasure& mu, const Eigen::VectorXd& theta) {
  const auto n = mu.size();
  Eigen::MatrixXcd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      K(i, j) = k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j)) * (mu.w(i) * mu.w(j));
  return K;
}

std::complex<double> bilinear_form(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const ComplexDensity& f,
                                   const ComplexDensity& g) {
  std::complex<double> s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (f(i) == 0.0) continue;
    std::complex<double> row = 0.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j)
      if (g(j) != 0.0) row += k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j)) * g(j) * mu.w(j);
    s += f(i) * mu.w(i) * row;
  }
  return s;
}

std::complex<double> bilinear_form(const PlanarMeasure& mu, const EnvelopeFn& theta, const ComplexDensity& f,
                                   const ComplexDensity& g) {
  return bilinear_form(mu, sample_envelope(theta, mu), f, g);
}

std::string to_string(PairTag t) {
  switch (t) {
    case PairTag::sigma1: return "sigma1";
    case PairTag::sigma2: return "sigma2";
    case PairTag::sigma3_term: return "sigma3_term";
    case PairTag::sigma3_tr: return "sigma3_tr";
    case PairTag::sigma3_split: return "sigma3_split";
  }
  return "unknown";
}

namespace {
bool within(const DyadicSquare& s, const DyadicSquare& b) {
  return b.x0() <= s.x0() && s.x1() <= b.x1() && b.y0() <= s.y0() && s.y1() <= b.y1();
}
bool meets(const DyadicSquare& a, const DyadicSquare& b) {
  return a.x0() < b.x1() && b.x0() < a.x1() && a.y0() < b.y1() && b.y0() < a.y1();
}
double dist_to_skeleton(const DyadicSquare& q, const DyadicSquare& r) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : skeleton(r).segments) {
    const double dx = std::max({0.0, std::min(a.real(), b.real()) - q.x1(), q.x0() - std::max(a.real(), b.real())});
    const double dy = std::max({0.0, std::min(a.imag(), b.imag()) - q.y1(), q.y0() - std::max(a.imag(), b.imag())});
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}
std::complex<double> contract(const SparseDensity& f, const Eigen::VectorXcd& v) {
  std::complex<double> s = 0.0;
  for (std::size_t k = 0; k < f.idx.size(); ++k) s += f.val(k) * v(f.idx[k]);
  return s;
}
}  // namespace

BilinearPartition partition(const AdaptedSystem& sys1, const AdaptedSystem& sys2, const ComplexDensity& phi,
                            const ComplexDensity& psi, const Eigen::VectorXd& theta, int m, double alpha,
                            const Goodness& good, bool allow_split) {
  const auto& mu = sys1.measure();
  const auto n = mu.size();
  const auto& c1 = sys1.classification();
  const auto& c2 = sys2.classification();
  const Eigen::MatrixXcd K = weighted_kernel(mu, theta);

  BilinearPartition out;
  const double two_m = std::ldexp(1.0, m);
  out.sigma1_bound = two_m * two_m * std::pow(4 * two_m + 1, 2) * (2 * m + 1);

  std::vector<SparseDensity> dq;
  for (int q : sys1.transit()) dq.push_back(sys1.delta(q, phi));
  std::vector<Eigen::VectorXcd> kr;
  for (int r : sys2.transit()) kr.push_back(K * sys2.delta(r, psi).dense(n));

  std::map<std::pair<SquareKey, bool>, int> sigma1_count;
  for (std::size_t a = 0; a < sys1.transit().size(); ++a) {
    const auto& qn = c1.nodes[sys1.transit()[a]];
    for (std::size_t b = 0; b < sys2.transit().size(); ++b) {
      const auto& rn = c2.nodes[sys2.transit()[b]];
      const bool mirror = qn.square.side > rn.square.side;
      const SquareNode& small = mirror ? rn : qn;
      const SquareNode& big = mirror ? qn : rn;
      const Classification& big_cls = mirror ? c1 : c2;
      if (!good(small.square, !mirror)) {
        ++out.skipped_bad;
        continue;
      }
      const double ls = small.square.side, lb = big.square.side;
      PairTag tag;
      if (ls >= lb / two_m * (1 - 1e-12)) {
        tag = dist_squares(small.square, big.square) <= lb ? PairTag::sigma1 : PairTag::sigma2;
      } else if (!meets(small.square, big.square)) {
        tag = PairTag::sigma2;
      } else {
        int child = -1;
        for (int j = 0; j < 4; ++j)
          if (within(small.square, big_cls.nodes[big.children[j]].square)) child = big.children[j];
        if (child < 0) {
          if (!allow_split) throw std::logic_error("good square meets two children of a much larger square");
          tag = PairTag::sigma3_split;
        } else {
          tag = big_cls.nodes[child].transit() ? PairTag::sigma3_tr : PairTag::sigma3_term;
          if (dist_to_skeleton(small.square, big.square) < std::pow(ls, alpha) * std::pow(lb, 1 - alpha))
            ++out.skeleton_violations;
        }
      }
      if (tag == PairTag::sigma1) ++sigma1_count[{key_of(small.square), !mirror}];
      const auto v = contract(dq[a], kr[b]);
      out.terms.push_back({key_of(qn.square), key_of(rn.square), mirror, tag, v});
      out.sums[tag] += v;
      out.total += v;
    }
  }
  for (const auto& [k, c] : sigma1_count) out.max_sigma1_count = std::max(out.max_sigma1_count, c);

  const ComplexDensity lphi = sys1.lambda(phi), lpsi = sys2.lambda(psi);
  const ComplexDensity rest = phi - lphi;
  out.lambda_terms = lphi.cwiseProduct(K * psi).sum() + rest.cwiseProduct(K * lpsi).sum();
  out.total += out.lambda_terms;
  out.direct = phi.cwiseProduct(K * psi).sum();
  double mass = std::abs(out.lambda_terms);
  for (const auto& t : out.terms) mass += std::abs(t.value);
  out.rel_error = std::abs(out.total - out.direct) / std::max(std::abs(out.direct), 1e-12 * std::max(mass, 1e-300));
  return out;
}

std::string partition_csv(const BilinearPartition& p) {
  std::ostringstream os;
  os.precision(17);
  os << "q_level,q_ix,q_iy,r_level,r_ix,r_iy,mirror,tag,abs_term\n";
  for (const auto& t : p.terms)
    os << t.q.level << ',' << t.q.ix << ',' << t.q.iy << ',' << t.r.level << ',' << t.r.ix << ',' << t.r.iy << ','
       << (t.mirror ? 1 : 0) << ',' << to_string(t.tag) << ',' << std::abs(t.value) << '\n';
  return os.str();
}

nlohmann::json to_json(const BilinearPartition& p) {
  nlohmann::json sums;
  for (const auto& [tag, v] : p.sums) sums[to_string(tag)] = {v.real(), v.imag()};
  return {{"pairs", p.terms.size()},
          {"sums", sums},
          {"lambda_terms", {p.lambda_terms.real(), p.lambda_terms.imag()}},
          {"total", {p.total.real(), p.total.imag()}},
          {"direct", {p.direct.real(), p.direct.imag()}},
          {"rel_error", p.rel_error},
          {"max_sigma1_count", p.max_sigma1_count},
          {"sigma1_bound", p.sigma1_bound},
          {"skeleton_violations", p.skeleton_violations},
          {"skipped_bad", p.skipped_bad}};
}

CheckReport far_interaction_verify(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const DyadicSquare& Q,
                                   const DyadicSquare& R, const ComplexDensity& fQ, const ComplexDensity& gR,
                                   double A_const, double eps_cz) {
  const std::string name = "far_interaction";
  if (Q.side > R.side) return not_applicable(name, "requires l(Q) <= l(R)");
  const double alpha = eps_cz / (2 * (1 + eps_cz));
  const double sep = std::pow(Q.side, alpha) * std::pow(R.side, 1 - alpha);
  double mq = 0.0, mr = 0.0, f1 = 0.0;
  std::complex<double> mean = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Point z = mu.z(i);
    if (Q.contains(z)) mq += mu.w(i);
    if (R.contains(z)) mr += mu.w(i);
    if (fQ(i) != 0.0) {
      if (!Q.contains(z)) return not_applicable(name, "f leaves Q");
      mean += fQ(i) * mu.w(i);
      f1 += std::abs(fQ(i)) * mu.w(i);
    }
    if (gR(i) != 0.0) {
      if (!R.contains(z)) return not_applicable(name, "g leaves R");
      if (dist_point_square(z, Q) < sep) return not_applicable(name, "g too close to Q");
    }
  }
  if (std::abs(mean) > 1e-12 * std::max(f1, 1e-300)) return not_applicable(name, "f has nonzero mean");
  const double lhs = std::abs(bilinear_form(mu, theta, fQ, gR));
  const double D = long_distance(Q, R);
  const double bound = std::pow(3.0, 1 + eps_cz) * A_const * std::pow(Q.side * R.side, eps_cz / 2) /
                       std::pow(D, 1 + eps_cz) * std::sqrt(mq * mr) * std::sqrt(norm2(mu, fQ) * norm2(mu, gR));
  CheckReport r;
  r.name = name;
  r.observed = lhs;
  r.samples = 1;
  r.set_bound(bound, 1e-12 * bound + 1e-300);
  return r;
}

double transit_growth_constant(const Classification& cls) {
  double worst = 0.0;
  for (const auto& n : cls.nodes)
    if (n.transit()) worst = std::max(worst, n.mass / n.square.side);
  return worst;
}

CheckReport tqr_matrix_verify(const Classification& cls1, const Classification& cls2, double eps_cz, double M,
                              const std::map<SquareKey, double>& a, const std::map<SquareKey, double>& b) {
  const std::string name = "tqr_matrix";
  for (const auto* cls : {&cls1, &cls2})
    for (const auto& n : cls->nodes)
      if (n.transit() && n.mass > M * n.square.side * (1 + 1e-12))
        return not_applicable(name, "invalid instance: transit square with mu(S) > M l(S)");
  const double c0 = std::pow(3.0, 1 + eps_cz) * (3 + 1 / eps_cz) * M;
  const double c = c0 / (1 - std::pow(2.0, -eps_cz / 2));
  double na = 0.0, nb = 0.0;
  for (const auto& [k, v] : a) {
    if (v < 0) throw std::invalid_argument("coefficients must be nonnegative");
    na += v * v;
  }
  for (const auto& [k, v] : b) {
    if (v < 0) throw std::invalid_argument("coefficients must be nonnegative");
    nb += v * v;
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  std::map<int, double> slices;
  double lhs = 0.0;
  std::int64_t pairs = 0;
  for (const auto& [kq, va] : a) {
    const auto iq = cls1.index.find(kq);
    if (iq == cls1.index.end() || va == 0.0) continue;
    const auto& q = cls1.nodes[iq->second];
    for (const auto& [kr, vb] : b) {
      const auto ir = cls2.index.find(kr);
      if (ir == cls2.index.end() || vb == 0.0) continue;
      const auto& r = cls2.nodes[ir->second];
      if (q.square.side > r.square.side) continue;
      const double t = std::pow(q.square.side * r.square.side, eps_cz / 2) /
                       std::pow(long_distance(q.square, r.square), 1 + eps_cz) * std::sqrt(q.mass * r.mass);
      lhs += t * va * vb;
      slices[q.square.level - r.square.level] += t * va * vb;
      ++pairs;
    }
  }
  double worst_slice = 0.0;
  bool slices_ok = true;
  for (const auto& [k, v] : slices) {
    const double cap = std::pow(2.0, -eps_cz * k / 2) * c0 * na * nb;
    if (cap > 0) worst_slice = std::max(worst_slice, v / cap);
    slices_ok = slices_ok && v <= cap * (1 + 1e-12);
  }
  CheckReport r;
  r.name = name;
  r.observed = lhs;
  r.samples = pairs;
  const double bound = c * na * nb;
  r.set_bound(bound, 1e-12 * bound);
  r.pass = *r.pass && slices_ok;
  std::ostringstream os;
  os << "worst slice ratio " << worst_slice;
  r.note = os.str();
  return r;
}

Sigma3Coefficients sigma3_coefficients(const AdaptedSystem& sys2, const ComplexDensity& psi, const DyadicSquare& Q,
                                       int m) {
  const auto& cls = sys2.classification();
  Sigma3Coefficients out;
  std::vector<int> chain;
  const double floor_side = std::ldexp(Q.side, m) * (1 - 1e-12);
  int cur = 0;
  while (cls.nodes[cur].transit() && within(Q, cls.nodes[cur].square) && cls.nodes[cur].square.side >= floor_side) {
    chain.push_back(cur);
    int next = -1;
    for (int c : cls.nodes[cur].children)
      if (within(Q, cls.nodes[c].square)) next = c;
    if (next < 0) break;
    cur = next;
  }
  if (chain.empty()) return out;
  out.found = true;
  out.r_of_q = key_of(cls.nodes[chain.back()].square);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    const int r = chain[k], rq = chain[k + 1];
    const auto c = sys2.ratio(rq, psi) - sys2.ratio(r, psi);
    out.chain.push_back({key_of(cls.nodes[r].square), c});
    out.telescoped += c;
    const auto d = sys2.delta(r, psi);
    const auto& inside = cls.nodes[rq].atoms;
    for (std::size_t t = 0; t < d.idx.size(); ++t)
      if (std::binary_search(inside.begin(), inside.end(), d.idx[t]))
        out.restriction_defect = std::max(out.restriction_defect, std::abs(d.val(t) - c * sys2.h()(d.idx[t])));
  }
  out.target = sys2.ratio(chain.back(), psi);
  // Lambda contributes the root ratio; the chain supplies the rest
  out.telescoping_defect = std::abs(sys2.ratio(0, psi) + out.telescoped - out.target);
  return out;
}

Sigma3Carleson sigma3_carleson_numbers(const AdaptedSystem& sys1, const ComplexDensity& phi, const AdaptedSystem& sys2,
                                       const Eigen::VectorXd& theta, int m, const Goodness& good) {
  const auto& mu = sys1.measure();
  const auto n = mu.size();
  const auto& h = sys2.h();
  Eigen::VectorXcd kh(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::complex<double> s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j)) * h(j) * mu.w(j);
    kh(i) = s;
  }
  Sigma3Carleson out;
  out.B = n ? kh.cwiseAbs().maxCoeff() : 0.0;
  const auto& c1 = sys1.classification();
  const auto& c2 = sys2.classification();
  std::vector<double> a(c2.nodes.size(), 0.0);
  std::vector<char> used(c2.nodes.size(), 0);
  for (int q : sys1.transit()) {
    const auto& sq = c1.nodes[q].square;
    if (!good(sq, true)) continue;
    const auto d = sys1.delta(q, phi);
    const double n2 = norm2(mu, d);
    if (n2 <= 0.0) continue;
    const auto coef = sigma3_coefficients(sys2, ComplexDensity::Zero(n), sq, m);
    if (!coef.found) continue;
    std::complex<double> ip = 0.0;
    for (std::size_t k = 0; k < d.idx.size(); ++k) ip += d.val(k) * std::conj(kh(d.idx[k])) * mu.w(d.idx[k]);
    const int r = c2.index.at(coef.r_of_q);
    a[r] += std::norm(ip) / n2;
    used[r] = 1;
  }
  for (char u : used) out.families += u;
  std::vector<double> sub = a;
  for (int k = static_cast<int>(c2.nodes.size()) - 1; k > 0; --k) sub[c2.nodes[k].parent] += sub[k];
  double worst_pack = 0.0, worst_growth = 0.0;
  bool pack_ok = true, growth_ok = true;
  for (std::size_t k = 0; k < c2.nodes.size(); ++k) {
    const auto& s = c2.nodes[k];
    if (!s.transit()) continue;
    double mid = 0.0;
    for (auto i : s.atoms) mid += std::norm(kh(i)) * mu.w(i);
    mid *= 2;
    const double rhs = 2 * out.B * out.B * s.mass;
    pack_ok = pack_ok && sub[k] <= mid * (1 + 1e-10) + 1e-300;
    growth_ok = growth_ok && mid <= rhs * (1 + 1e-12) + 1e-300;
    if (mid > 0) worst_pack = std::max(worst_pack, sub[k] / mid);
    else if (sub[k] > 0) worst_pack = std::numeric_limits<double>::infinity();
    if (rhs > 0) worst_growth = std::max(worst_growth, mid / rhs);
  }
  out.packing = {.name = "sigma3_packing", .observed = worst_pack, .bound = 1.0, .pass = pack_ok,
                 .samples = static_cast<std::int64_t>(sys2.transit().size())};
  out.growth = {.name = "sigma3_growth", .observed = worst_growth, .bound = 1.0, .pass = growth_ok,
                .samples = static_cast<std::int64_t>(sys2.transit().size())};
  return out;
}

CheckReport negligible_split_verify(const PlanarMeasure& mu, const AdaptedSystem& sys1, const AdaptedSystem& sys2,
                                    int q_node, int r_node, const ComplexDensity& phi, const ComplexDensity& psi,
                                    const Eigen::VectorXd& theta, double tildeM, double delta) {
  const std::string name = "negligible_split";
  const auto n = mu.size();
  const auto& rn = sys2.classification().nodes[r_node];
  if (!rn.transit()) return not_applicable(name, "R must be transit");
  const ComplexDensity fq = sys1.delta(q_node, phi).dense(n);
  const ComplexDensity gr = sys2.delta(r_node, psi).dense(n);
  const auto& h = sys2.h();
  double worst = 0.0, cancel = 0.0;
  int pieces = 0, skipped = 0;
  for (int c : rn.children) {
    const auto& kid = sys2.classification().nodes[c];
    if (negligibility_constant(mu, kid.square) > tildeM) return not_applicable(name, "child boundary not negligible");
    ComplexDensity inside = ComplexDensity::Zero(n);
    for (auto i : kid.atoms) inside(i) = 1.0;
    const ComplexDensity eta2 = gr.cwiseProduct(inside);
    const ComplexDensity out_q = fq - fq.cwiseProduct(inside);
    const ComplexDensity in_q = fq.cwiseProduct(inside);
    const double n2 = std::sqrt(norm2(mu, eta2));
    {
      const double lhs = std::abs(bilinear_form(mu, theta, out_q, eta2));
      const double cap = 4 * tildeM * std::sqrt(norm2(mu, out_q)) * n2;
      if (cap > 0) worst = std::max(worst, lhs / cap);
      else if (lhs > 1e-14) worst = std::numeric_limits<double>::infinity();
      ++pieces;
    }
    if (kid.transit()) {
      const ComplexDensity eta = h.cwiseProduct(inside);
      cancel = std::max(cancel, std::abs(bilinear_form(mu, theta, eta, eta)));
      ++pieces;
    } else {
      bool suppressed = true;
      for (auto i : kid.atoms)
        suppressed = suppressed && theta(i) >= delta * dist_to_square_complement(mu.z(i), kid.square) * (1 - 1e-12);
      if (!suppressed) {
        ++skipped;
        continue;
      }
      const double lhs = std::abs(bilinear_form(mu, theta, in_q, eta2));
      const double cap = 4 * tildeM / delta * std::sqrt(norm2(mu, in_q)) * n2;
      if (cap > 0) worst = std::max(worst, lhs / cap);
      else if (lhs > 1e-14) worst = std::numeric_limits<double>::infinity();
      ++pieces;
    }
  }
  CheckReport r;
  r.name = name;
  r.observed = worst;
  r.samples = pieces;
  r.set_bound(1.0, 1e-12);
  r.pass = *r.pass && cancel <= 1e-10;
  std::ostringstream os;
  os << "max |<chi h, K chi h>| = " << cancel << ", terminal pieces without suppression: " << skipped;
  r.note = os.str();
  return r;
}

}  // namespace tblab

#include "tblab/transform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tblab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// max over eps > 0 of |sum_{d_j >= eps} c_j|: suffix sums over groups of equal distance
double max_suffix(std::vector<std::pair<double, std::complex<double>>>& terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::complex<double> cum = 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k < terms.size();) {
    const double d = terms[k].first;
    if (d <= 0.0) break;
    while (k < terms.size() && terms[k].first == d) cum += terms[k++].second;
    best = std::max(best, std::abs(cum));
  }
  return best;
}

}  // namespace

std::complex<double> cauchy_truncated(const PlanarMeasure& mu, const ComplexDensity& g, Point z, double eps) {
  std::complex<double> s = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j)
    if (std::abs(mu.z(j) - z) > eps) s += g(j) * mu.w(j) / (mu.z(j) - z);
  return s;
}

double cauchy_maximal(const PlanarMeasure& mu, const ComplexDensity& g, Point z) {
  std::vector<std::pair<double, std::complex<double>>> t;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double d = std::abs(mu.z(j) - z);
    if (d > 0.0) t.push_back({d, g(j) * mu.w(j) / (mu.z(j) - z)});
  }
  return max_suffix(t);
}

std::complex<double> k_phi_truncated(const PlanarMeasure& mu, const Eigen::VectorXd& theta, double theta_z,
                                     const ComplexDensity& g, Point z, double eps) {
  std::complex<double> s = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j)
    if (std::abs(mu.z(j) - z) >= eps) s += k_phi<double>(z, mu.z(j), theta_z, theta(j)) * g(j) * mu.w(j);
  return s;
}

double k_phi_maximal(const PlanarMeasure& mu, const Eigen::VectorXd& theta, double theta_z, const ComplexDensity& g,
                     Point z) {
  std::vector<std::pair<double, std::complex<double>>> t;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double d = std::abs(mu.z(j) - z);
    if (d > 0.0) t.push_back({d, k_phi<double>(z, mu.z(j), theta_z, theta(j)) * g(j) * mu.w(j)});
  }
  return max_suffix(t);
}

std::complex<double> k_phi_truncated(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point z,
                                     double eps) {
  return k_phi_truncated(mu, sample_envelope(phi, mu), phi(z), g, z, eps);
}

double k_phi_maximal(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point z) {
  return k_phi_maximal(mu, sample_envelope(phi, mu), phi(z), g, z);
}

std::complex<double> c_phi(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& g, Point x) {
  const double r = phi(x);
  std::complex<double> s = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const Point d = x - mu.z(j);
    if (d != Point(0.0) && std::abs(d) >= r) s += g(j) * mu.w(j) / d;
  }
  return s;
}

CheckReport lemma1_constant(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& f) {
  const Eigen::VectorXd theta = sample_envelope(phi, mu);
  double worst = 0.0;
  std::int64_t used = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Point x = mu.z(i);
    const auto k = k_phi_truncated(mu, theta, theta(i), f, x, 0.0);
    const auto c = c_phi(mu, phi, f, x);
    const double m1 = maximal_m1(mu, f, x, theta(i));
    if (!std::isfinite(m1) || m1 <= 0.0) continue;
    worst = std::max(worst, std::abs(k - c) / m1);
    ++used;
  }
  CheckReport r;
  r.name = "lemma1_constant";
  r.observed = worst;
  r.samples = used;
  r.note = "reported constant";
  return r;
}

GLSet epsilon0_and_GL(const PlanarMeasure& mu, const EnvelopeFn& phi, const ComplexDensity& b, double L) {
  if (!(L > 0)) throw std::invalid_argument("L must be positive");
  const Eigen::VectorXd theta = sample_envelope(phi, mu);
  GLSet out;
  out.eps0 = Eigen::VectorXd::Zero(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    std::vector<std::pair<double, std::complex<double>>> t;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      const double d = std::abs(mu.z(j) - mu.z(i));
      if (d > 0.0) t.push_back({d, k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j)) * b(j) * mu.w(j)});
    }
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
    std::complex<double> cum = 0.0;
    for (std::size_t k = 0; k < t.size();) {
      const double d = t[k].first;
      while (k < t.size() && t[k].first == d) cum += t[k++].second;
      if (std::abs(cum) >= L) {
        out.eps0(i) = d;
        break;
      }
    }
    if (out.eps0(i) > 0.0) out.disks.disks.push_back({mu.z(i), 2 * out.eps0(i)});
  }
  return out;
}

OperatorMatrix operator_matrix(const PlanarMeasure& mu, const Eigen::VectorXd& theta) {
  const auto n = mu.size();
  OperatorMatrix m;
  m.entries.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m.entries(i, j) = k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j)) * mu.w(j);
  return m;
}

OperatorMatrix operator_matrix(const PlanarMeasure& mu, const EnvelopeFn& phi) {
  return operator_matrix(mu, sample_envelope(phi, mu));
}

NormEstimate operator_norm(const OperatorMatrix& mat, const PlanarMeasure& mu, double rel_tol, int max_iter) {
  NormEstimate out;
  const auto n = mu.size();
  if (n == 0) return out;
  const Eigen::VectorXd s = mu.w().cwiseSqrt();
  // unitary change of variables: B = W^{1/2} A W^{-1/2} in the plain inner product
  const Eigen::MatrixXcd B = s.asDiagonal() * mat.entries * s.cwiseInverse().asDiagonal();
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n);
  v.normalize();
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXcd u = B.adjoint() * (B * v);
    const double lam = u.norm();
    out.iterations = it;
    if (lam == 0.0) {
      out.value = 0.0;
      return out;
    }
    v = u / lam;
    out.value = std::sqrt(lam);
    if (it > 1 && std::abs(lam - prev) <= rel_tol * lam) return out;
    prev = lam;
  }
  out.cap_hit = true;
  return out;
}

void dump_matrix(const OperatorMatrix& mat, const std::string& bin_path, const std::string& json_path,
                 const nlohmann::json& phi) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + bin_path);
  const auto n = mat.entries.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = mat.entries(i, j).real(), im = mat.entries(i, j).imag();
      bin.write(reinterpret_cast<const char*>(&re), sizeof re);
      bin.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << nlohmann::json{{"n", n}, {"kernel", mat.kernel}, {"phi", phi}}.dump(2) << '\n';
}

CheckReport cotlar_check(const PlanarMeasure& mu, const Eigen::VectorXd& theta, const ComplexDensity& f, double M,
                         double beta, double r_floor) {
  const std::string name = "cotlar";
  if (!(beta > 1 && beta < 2)) throw std::invalid_argument("beta must lie in (1,2)");
  const auto n = mu.size();
  std::vector<double> inv_r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = ahlfors_radius(mu, M, mu.z(i), r_floor);
    inv_r[i] = r > 0 ? 1 / r : kInf;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && std::abs(k_phi<double>(mu.z(i), mu.z(j), theta(i), theta(j))) >
                        std::min(inv_r[i], inv_r[j]) * (1 + 1e-12))
        return not_applicable(name, "kernel exceeds 1/R at some pair");
  const auto T = operator_matrix(mu, theta);
  const double tn = operator_norm(T, mu).value;
  const ComplexDensity tf = T.entries * f;
  double worst = 0.0;
  std::int64_t used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point x = mu.z(i);
    const double lhs = k_phi_maximal(mu, theta, theta(i), f, x);
    const double mb = maximal_tilde(mu, f, x, beta);
    const double rhs = maximal_tilde(mu, tf, x, 1.0) + (M + tn) * mb;
    if (rhs > 0) {
      worst = std::max(worst, lhs / rhs);
      ++used;
    } else if (lhs > 0) {
      worst = kInf;
    }
  }
  CheckReport r;
  r.name = name;
  r.observed = worst;
  r.samples = used;
  std::ostringstream os;
  os << "reported constant; ||T|| = " << tn;
  r.note = os.str();
  return r;
}

CheckReport blanket_check(const PlanarMeasure& mu, const PairKernel& b, const std::function<double(double)>& phi_mono,
                          double R, const ComplexDensity& f) {
  const std::string name = "blanket";
  const auto n = mu.size();
  std::vector<double> ds;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        const double d = std::abs(mu.z(i) - mu.z(j));
        ds.push_back(d);
        if (std::abs(b(mu.z(i), mu.z(j))) > (1 + 1e-12) / d) return not_applicable(name, "|b| exceeds 1/|x-y|");
      }
  ds.push_back(0.0);
  std::sort(ds.begin(), ds.end());
  double prev = kInf;
  for (double d : ds) {
    const double v = phi_mono(d);
    if (v < 0 || v > 1 || v > prev) return not_applicable(name, "phi not decreasing in [0,1]");
    prev = v;
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point x = mu.z(i);
    std::complex<double> lhs = 0.0;
    std::vector<std::pair<double, std::complex<double>>> t;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = std::abs(mu.z(j) - x);
      if (d == 0.0) continue;
      const auto term = b(x, mu.z(j)) * f(j) * mu.w(j);
      t.push_back({d, term});
      if (d > R) lhs += term * phi_mono(d);
    }
    const double rhs = 2 * max_suffix(t) + 2 * maximal_m1(mu, f, x, R);
    const double excess = std::abs(lhs) - rhs;
    worst = std::max(worst, excess / std::max(rhs, 1.0));
  }
  CheckReport r;
  r.name = name;
  r.observed = worst;
  r.samples = n;
  r.set_bound(0.0, 1e-10);
  r.note = "observed = max (lhs - rhs) / max(rhs, 1)";
  return r;
}

WeakType weak_type_experiment(const PlanarMeasure& mu, const PlanarMeasure& nu, const EnvelopeFn& phi, double M,
                              double t_norm) {
  WeakType out;
  for (Eigen::Index p = 0; p < nu.size(); ++p)
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (nu.z(p) == mu.z(i)) {
        out.report = not_applicable("weak_type", "point masses sit on atoms of mu");
        return out;
      }
  const Eigen::VectorXd th_mu = sample_envelope(phi, mu), th_nu = sample_envelope(phi, nu);
  std::vector<std::pair<double, double>> vals;  // |T nu|, weight
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    std::complex<double> s = 0.0;
    for (Eigen::Index p = 0; p < nu.size(); ++p) s += k_phi<double>(mu.z(i), nu.z(p), th_mu(i), th_nu(p)) * nu.w(p);
    vals.push_back({std::abs(s), mu.w(i)});
  }
  std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double cum = 0.0;
  for (std::size_t k = 0; k < vals.size();) {
    const double v = vals[k].first;
    while (k < vals.size() && vals[k].first == v) cum += vals[k++].second;
    out.sup_t = std::max(out.sup_t, v * cum);
  }
  const double scale = (M + t_norm) * nu.total();
  out.ratio = scale > 0 ? out.sup_t / scale : 0.0;
  out.report.name = "weak_type";
  out.report.observed = out.ratio;
  out.report.samples = mu.size();
  std::ostringstream os;
  os << "sup_t t mu{|T nu|>t} = " << out.sup_t << "; reported ratio";
  out.report.note = os.str();
  return out;
}

AveragedKernel averaged_kernel_profile(const std::vector<EnvelopeFn>& family, const std::vector<double>& probs,
                                       const EnvelopeFn& phi, Point x, Point y) {
  if (family.empty() || family.size() != probs.size()) throw std::invalid_argument("family and probs mismatch");
  const double t = std::abs(x - y), base = phi(x);
  AveragedKernel out;
  for (std::size_t w = 0; w < family.size(); ++w)
    if (std::max(base, family[w](x)) <= t) out.v += probs[w];
  if (x != y) out.c = out.v / (x - y);
  return out;
}

CheckReport mi_constant(const PlanarMeasure& mu, const std::vector<EnvelopeFn>& family,
                        const std::vector<double>& probs, const EnvelopeFn& phi, const ComplexDensity& f) {
  if (family.empty() || family.size() != probs.size()) throw std::invalid_argument("family and probs mismatch");
  double worst = 0.0;
  std::int64_t used = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Point x = mu.z(i);
    const double base = phi(x);
    std::vector<std::pair<double, double>> cut;  // threshold, probability
    for (std::size_t w = 0; w < family.size(); ++w) cut.push_back({std::max(base, family[w](x)), probs[w]});
    std::vector<std::pair<double, std::complex<double>>> t;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      const Point d = x - mu.z(j);
      if (d == Point(0.0)) continue;
      double v = 0.0;
      for (const auto& [c, p] : cut)
        if (c <= std::abs(d)) v += p;
      t.push_back({std::abs(d), v / d * f(j) * mu.w(j)});
    }
    const double rhs = max_suffix(t) + maximal_m1(mu, f, x, base);
    const double lhs = std::abs(c_phi(mu, phi, f, x));
    if (rhs > 0 && std::isfinite(rhs)) {
      worst = std::max(worst, lhs / rhs);
      ++used;
    }
  }
  CheckReport r;
  r.name = "mi_constant";
  r.observed = worst;
  r.samples = used;
  r.note = "reported constant";
  return r;
}

}  // namespace tblab

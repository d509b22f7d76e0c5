#include "tblab/probability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tblab/martingale.hpp"

namespace tblab {

double truncated_expectation(const std::vector<double>& values, const std::vector<double>& probs, double beta) {
  if (values.size() != probs.size()) throw std::invalid_argument("values and probabilities differ in length");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0,1)");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  double left = beta, sum = 0.0, comp = 0.0;
  for (auto i : order) {
    double p = probs[i];
    if (left > 0.0) {
      const double cut = std::min(left, p);
      left -= cut;
      p -= cut;
    }
    if (p <= 0.0) continue;
    const double term = values[i] * p;
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

CheckReport truncated_expectation_properties(const WeightedSample& s, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) return not_applicable("truncated_expectation_properties", "beta outside (0,1)");
  const double e = truncated_expectation(s, beta);
  double p = 0.0;
  CheckReport r;
  r.name = "truncated_expectation_properties";
  r.samples = static_cast<std::int64_t>(s.values.size());
  if (e > 0.0) {
    const double t = e / beta;
    for (std::size_t i = 0; i < s.values.size(); ++i)
      if (s.values[i] >= t) p += s.probs[i];
    r.observed = p;
    r.set_bound(2 * beta, 1e-12);
    r.note = "P{xi >= E/beta} against 2 beta";
  } else {
    for (std::size_t i = 0; i < s.values.size(); ++i)
      if (s.values[i] > 0.0) p += s.probs[i];
    r.observed = p;
    r.set_bound(beta, 1e-12);
    r.note = "E_beta = 0: P{xi > 0} against beta";
  }
  return r;
}

Interval wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = k / nn;
  const double z2 = z * z;
  const double den = 1 + z2 / nn;
  const double mid = (p + z2 / (2 * nn)) / den;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / den;
  return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
}

bool BadSquareEstimate::pass() const {
  return part1_pass && std::all_of(scales.begin(), scales.end(), [](const ScaleRow& r) { return r.pass; });
}

double rim_probability_exact(double side, int k, double alpha) {
  const double s = std::ldexp(side, k);
  if (s > 0.5) return 0.0;
  const double w = 16 * std::pow(side, alpha) * std::pow(s, 1 - alpha);
  const double p = std::min(1.0, (side + 2 * w) / s);
  return 1 - (1 - p) * (1 - p);
}

BadSquareEstimate bad_square_probability(const DyadicSquare& q, const BadnessRule& rule, const PlanarMeasure& mu,
                                         std::int64_t trials, std::uint64_t seed, int extra_scales) {
  BadSquareEstimate est;
  est.trials = trials;
  est.seed = seed;
  const int nk = extra_scales + 1;
  std::vector<std::int64_t> per_scale(nk, 0);
  std::int64_t part1 = 0, part2 = 0;
  std::mt19937_64 master(seed);
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto lat = sample_lattice(master());
    for (int j = 0; j < nk; ++j) per_scale[j] += rim_bad_at_scale(q, lat, rule, rule.m + j) ? 1 : 0;
    part1 += bad_part1(q, lat, rule) ? 1 : 0;
    if (!mu.empty()) part2 += bad_part2(q, lat, rule, mu) ? 1 : 0;
  }
  for (int j = 0; j < nk; ++j) {
    const int k = rule.m + j;
    const auto ci = wilson_interval(per_scale[j], trials);
    ScaleRow row;
    row.k = k;
    row.frequency = static_cast<double>(per_scale[j]) / trials;
    row.wilson_lo = ci.lo;
    row.wilson_hi = ci.hi;
    row.exact = rim_probability_exact(q.side, k, rule.alpha);
    row.bound = 68 * std::pow(2.0, -k * rule.alpha);
    row.pass = ci.hi <= row.bound;
    row.exact_in_ci = row.exact >= ci.lo - 1e-12 && row.exact <= ci.hi + 1e-12;
    est.scales.push_back(row);
  }
  const auto c1 = wilson_interval(part1, trials);
  est.part1_frequency = static_cast<double>(part1) / trials;
  est.part1_wilson_hi = c1.hi;
  est.part1_bound = 68 * std::pow(2.0, -rule.m * rule.alpha) / (1 - std::pow(2.0, -rule.alpha));
  est.part1_pass = c1.hi <= est.part1_bound;
  est.part2_frequency = static_cast<double>(part2) / trials;
  est.part2_wilson_hi = wilson_interval(part2, trials).hi;
  return est;
}

namespace {
struct Copy {
  double x;
  double w;
};

// Copies of the atoms over enough periods to cover [lo, hi).
std::vector<Copy> periodize(const std::vector<double>& xs, const std::vector<double>& ws, double period, double lo,
                            double hi) {
  std::vector<Copy> out;
  const auto k0 = static_cast<long>(std::floor(lo / period)) - 1;
  const auto k1 = static_cast<long>(std::ceil(hi / period)) + 1;
  for (long k = k0; k <= k1; ++k)
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double base = xs[i] - period * std::floor(xs[i] / period);
      out.push_back({base + k * period, ws[i]});
    }
  std::sort(out.begin(), out.end(), [](const Copy& a, const Copy& b) { return a.x < b.x; });
  return out;
}
}  // namespace

SweepResult sweeping_negligibility(const std::vector<double>& abscissae, const std::vector<double>& masses,
                                   double period, double tildeM) {
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  if (abscissae.size() != masses.size()) throw std::invalid_argument("abscissae and masses differ in length");
  SweepResult res;
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  res.bound_length = 4 * total / tildeM;
  if (total == 0.0) return res;
  const double lambda = tildeM / 2;
  if (lambda <= total / period) {
    // the average density alone reaches the threshold at every offset
    res.bad_length = period;
    res.probability = 1.0;
    res.pass = res.bad_length <= res.bound_length + 1e-12;
    return res;
  }
  // spans longer than this cannot satisfy span < nu([a,b]) / lambda
  const double span_max = (total / lambda) / (1 - total / (period * lambda));
  const double reach = span_max + total / lambda + period;
  const auto copies = periodize(abscissae, masses, period, -reach, period + reach);
  std::vector<std::pair<double, double>> bad;
  for (std::size_t i = 0; i < copies.size(); ++i) {
    double mass = 0.0;
    for (std::size_t j = i; j < copies.size(); ++j) {
      const double span = copies[j].x - copies[i].x;
      if (span > span_max) break;
      mass += copies[j].w;
      const double c = mass / (2 * lambda);
      const double lo = std::max(0.0, copies[j].x - c), hi = std::min(period, copies[i].x + c);
      if (lo < hi) bad.push_back({lo, hi});
    }
  }
  std::sort(bad.begin(), bad.end());
  double length = 0.0, cur_lo = 0.0, cur_hi = -1.0;
  for (const auto& [lo, hi] : bad) {
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) length += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) length += cur_hi - cur_lo;
  res.bad_length = length;
  res.probability = length / period;
  res.pass = length <= res.bound_length + 1e-12;
  return res;
}

double sweeping_negligibility_mc(const std::vector<double>& abscissae, const std::vector<double>& masses,
                                 double period, double tildeM, std::int64_t trials, std::uint64_t seed) {
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (total == 0.0 || trials <= 0) return 0.0;
  if (tildeM <= 2 * total / period) return 1.0;
  // window mass is at most (2r/period + 1) total, so no radius beyond this can be bad
  const double reach = total / (tildeM - 2 * total / period) + period;
  std::mt19937_64 eng(seed);
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const double tau = uniform01(eng) * period;
    // window mass nu[tau - r, tau + r] at each copy distance; bad when it exceeds tildeM * r
    std::vector<std::pair<double, double>> d;
    for (const auto& c : periodize(abscissae, masses, period, tau - reach, tau + reach)) {
      const double dist = std::abs(c.x - tau);
      if (dist <= reach) d.push_back({dist, c.w});
    }
    std::sort(d.begin(), d.end());
    double cum = 0.0;
    bool hit = false;
    for (std::size_t k = 0; k < d.size() && !hit; ++k) {
      cum += d[k].second;
      if (k + 1 < d.size() && d[k + 1].first == d[k].first) continue;
      hit = cum > tildeM * d[k].first;
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / trials;
}

}  // namespace tblab

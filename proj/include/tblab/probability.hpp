#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tblab/geometry.hpp"
#include "tblab/measure.hpp"
#include "tblab/report.hpp"

namespace tblab {

struct WeightedSample {
  std::vector<double> values;
  std::vector<double> probs;
};

// Remove probability mass beta from the top (splitting one sample if needed) and
// integrate what is left.
double truncated_expectation(const std::vector<double>& values, const std::vector<double>& probs, double beta);
inline double truncated_expectation(const WeightedSample& s, double beta) {
  return truncated_expectation(s.values, s.probs, beta);
}

// Checks the two tail properties on a finite sample; observed = P{xi >= E_beta/beta}
// (strict form when E_beta = 0), bound = 2 beta.
CheckReport truncated_expectation_properties(const WeightedSample& s, double beta);

struct Interval {
  double lo, hi;
};
// Wilson score interval for k successes out of n trials.
Interval wilson_interval(std::int64_t k, std::int64_t n, double z = 2.5758293035489004);

struct ScaleRow {
  int k;
  double frequency;
  double wilson_lo;
  double wilson_hi;
  double exact;
  double bound;
  bool pass;
  bool exact_in_ci;
};

struct BadSquareEstimate {
  std::vector<ScaleRow> scales;
  double part1_frequency = 0.0;
  double part1_wilson_hi = 0.0;
  double part1_bound = 0.0;
  bool part1_pass = true;
  double part2_frequency = 0.0;
  double part2_wilson_hi = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  bool pass() const;
};

struct BadnessRule;
// Probability that Q fails the rim condition at grid size 2^k l(Q), computed on the
// shift torus.  Zero when the grid size exceeds 1/2.
double rim_probability_exact(double side, int k, double alpha);

BadSquareEstimate bad_square_probability(const DyadicSquare& q, const BadnessRule& rule, const PlanarMeasure& mu,
                                         std::int64_t trials, std::uint64_t seed, int extra_scales = 4);

struct SweepResult {
  double bad_length = 0.0;
  double probability = 0.0;
  double bound_length = 0.0;  // 4 ||nu|| / tildeM
  bool pass = true;
};
// Offsets tau in [0, period) for which the centered maximal function of the periodized
// projection exceeds tildeM / 2.
SweepResult sweeping_negligibility(const std::vector<double>& abscissae, const std::vector<double>& masses,
                                   double period, double tildeM);
double sweeping_negligibility_mc(const std::vector<double>& abscissae, const std::vector<double>& masses,
                                 double period, double tildeM, std::int64_t trials, std::uint64_t seed);

}  // namespace tblab

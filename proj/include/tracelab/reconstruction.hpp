#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "tracelab/bits.hpp"
#include "tracelab/channel.hpp"
#include "tracelab/mean_trace.hpp"

namespace tracelab {

// Search space of the mean-based decoder: all of {-1,+1}^n (enumerated in
// lexicographic order with -1 < +1) or an explicit list of distinct strings.
class CandidateSet {
 public:
  static CandidateSet exhaustive(int n);
  static CandidateSet from_list(std::vector<BitString> list);

  int n() const { return n_; }
  std::size_t size() const;
  BitString at(std::size_t idx) const;
  bool is_exhaustive() const { return exhaustive_; }

 private:
  CandidateSet() = default;
  bool exhaustive_ = false;
  int n_ = 0;
  std::vector<BitString> list_;
};

struct ReconstructResult {
  BitString x_hat;
  double distance = 0.0;  // L1 distance of the winner
  std::size_t index = 0;
};

// argmin over candidates of || mu_candidate^N - mu_hat ||_1, exact candidate
// mean traces from the shared PositionWeights; ties broken lexicographically
// with -1 < +1.
ReconstructResult reconstruct(std::span<const double> mu_hat,
                              const ChannelSpec& spec,
                              const PositionWeights& weights,
                              const CandidateSet& candidates, int threads = 1);
ReconstructResult reconstruct(std::span<const double> mu_hat,
                              const ChannelSpec& spec,
                              const CandidateSet& candidates, int N,
                              int threads = 1);

struct PairMode {
  enum class Kind { AllPairs, Sampled } kind = Kind::AllPairs;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  static PairMode all_pairs() { return {Kind::AllPairs, 0, 0}; }
  static PairMode sampled(std::size_t k, std::uint64_t seed) {
    return {Kind::Sampled, k, seed};
  }
};

struct SeparationReport {
  int n = 0;
  int N = 0;
  double min_l1 = 0.0;
  BitString argmin_a, argmin_b;
  std::size_t pairs = 0;  // unordered pairs accounted (mirrored pairs included)
  double mean_l1 = 0.0;
  double max_l1 = 0.0;
  // log10 quarter-decade buckets over [1e-12, 1e+2); (lower edge, count)
  std::vector<std::pair<double, std::size_t>> histogram;
};

// Minimum pairwise L1 distance between truncated mean traces. all_pairs mode
// needs n <= 12 and halves the work through global sign symmetry
// (d(x,x') = d(-x,-x')); sampled mode draws random distinct pairs.
SeparationReport pairwise_separation(const ChannelSpec& spec, int n, int N,
                                     const PairMode& mode, int threads = 1);

struct Certification {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool vacuous = false;  // rhs <= 0
  std::complex<double> z_star;
  double phi_star = 0.0;
  double arc_max_abs = 0.0;
  double tail_term = 0.0;
  int trunc = 0;
  double L = 0.0;
};

// Certifies || mu_x^N - mu_x'^N ||_1 >= |z*|^{-N} (|P̄_x(z*) - P̄_x'(z*)| - tail)
// with z* obtained by inverting g_M at the arc-max angle of the halved
// difference polynomial; lhs and rhs travel independent code paths.
Certification certify_lower_bound(const ChannelSpec& spec, std::span<const Bit> x,
                                  std::span<const Bit> x_prime, double L);

struct ScalingRow {
  int n = 0;
  int N = 0;
  double min_l1 = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double fitted_C = 0.0;       // slope of ln(1/min_l1) against n^{1/3}
  double fitted_intercept = 0.0;
};

ScalingReport separation_scaling(const ChannelSpec& spec,
                                 std::span<const int> n_values, double trunc_eps,
                                 int threads = 1);

struct SuccessPoint {
  long t = 0;
  int successes = 0;
  int trials = 0;
  double rate = 0.0;
  double ci_lo = 0.0;  // 95% Wilson interval
  double ci_hi = 0.0;
};

// For each t: per trial draw a fresh uniform random input, sample t traces,
// reconstruct over the exhaustive candidate set, record the success fraction.
std::vector<SuccessPoint> trace_complexity_experiment(
    const ChannelSpec& spec, int n, std::span<const long> t_grid, int trials,
    std::uint64_t seed, int threads = 1);

// 95% Wilson score interval for s successes out of t trials.
std::pair<double, double> wilson_interval(int s, int t);

}  // namespace tracelab

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tracelab/bits.hpp"
#include "tracelab/channel.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

// Truncated mean trace. values[j] holds coordinate j+1, i.e. the expected
// value of the (j+1)-th symbol of the zero-padded trace.
struct MeanTrace {
  std::vector<double> values;
  int n = 0;                    // input length
  int trunc = 0;                // N, number of retained coordinates
  double tail_bound = 0.0;      // bound on sum_{i>N} |mu_i|
  std::vector<double> stderrs;  // per-coordinate standard errors (empirical)
};

// V[i][j] = Pr[j in R_i]: the probability that absolute output position j is
// a replication of input bit i. Built by iterated convolution of the prefix
// length pmf with the replication profile. mu_x = (1-2 p_flip) V^T x, so one
// matrix serves every candidate string of the same length.
class PositionWeights {
 public:
  PositionWeights(const ChannelSpec& spec, int n, int N);

  int n() const { return n_; }
  int trunc() const { return N_; }
  double at(int i, int j) const {  // 1-based
    return v_[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(N_) +
              static_cast<std::size_t>(j - 1)];
  }
  std::span<const double> row(int i) const {
    return {v_.data() + static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(N_),
            static_cast<std::size_t>(N_)};
  }
  // Prefix-length pmf mass lost to truncation at N (zero when the law has
  // finite support and N >= n * max_m).
  double discarded_mass() const { return discarded_; }

  // scale * V^T x
  std::vector<double> weighted_sum(std::span<const Bit> x, double scale) const;

 private:
  int n_, N_;
  double discarded_ = 0.0;
  std::vector<double> v_;
};

// Chernoff bound on Pr[M^{(n)} >= j] optimized over the documented grid
// S = { s_hi k/64 : k = 1..63 }, s_hi = min(log_radius, 40).
double chernoff_point(const ChannelSpec& spec, int n, int j);

// Bound on sum_{i>N} Pr[M^{(n)} >= i] |z|^{i-1}; exact 0 for finite-support
// laws once N >= n*max_m. Throws std::domain_error when no grid point keeps
// the geometric sum convergent at |z|.
double chernoff_sum_tail(const ChannelSpec& spec, int n, int N, double abs_z);

// Smallest N (index of the last retained coordinate) whose discarded mass
// bound Pr[M^{(n)} >= N+1] is <= eps, capped at n*max_m for finite support.
int choose_truncation(const ChannelSpec& spec, int n, double eps);

MeanTrace exact_mean_trace(const ChannelSpec& spec, std::span<const Bit> x, int N);
MeanTrace exact_mean_trace(const ChannelSpec& spec, const PositionWeights& weights,
                           std::span<const Bit> x);

// Empirical means of zero-padded traces with per-coordinate standard errors.
MeanTrace empirical_mean_trace(const std::vector<Trace>& traces, int N);

// Samples t traces of x (trace j from base.substream(j)) and accumulates the
// empirical mean trace in fixed 4096-trial blocks, reduced in block order, so
// the result is bit-identical for every thread count.
MeanTrace empirical_mean_trace_sampled(const ChannelSpec& spec,
                                       std::span<const Bit> x, long t, int N,
                                       RngStream base, int threads = 1);

std::vector<Trace> sample_traces(const ChannelSpec& spec, std::span<const Bit> x,
                                 long t, RngStream base, int threads = 1);

// Exact pmf of M^{(n)} truncated at N (index = total length), plus the lost
// mass. Used by tail oracles and the exact per-coordinate variances.
struct TotalLengthPmf {
  std::vector<double> pmf;  // 0..N
  double lost = 0.0;
};
TotalLengthPmf total_length_pmf(const ChannelSpec& spec, int n, int N);

struct SeriesValue {
  std::complex<double> value;
  double tail_bound = 0.0;
};

// Truncated mean trace power series sum_{i=1..N} mu_{x,i} z^{i-1} with a
// rigorous bound on the discarded part. Requires 1 <= |z| and |z| small
// enough for the Chernoff tail sum to converge on the grid.
SeriesValue series_eval(const ChannelSpec& spec, std::span<const Bit> x,
                        std::complex<double> z, int N);

struct ChangeVarResult {
  double residual = 0.0;
  double budget = 0.0;  // truncation + evaluation error budget
  std::complex<double> lhs;
  std::complex<double> rhs;
};

// Residual of the change-of-variable identity
//   sum_i mu_{x,i} z^{i-1} = (1-2 p_flip) E[|R|] g_W(z) P_x(g_M(z)),
// with N from choose_truncation(spec, n, 1e-12). Callers assert
// residual <= budget + 1e-9.
ChangeVarResult verify_changevar(const ChannelSpec& spec, std::span<const Bit> x,
                                 std::complex<double> z);

}  // namespace tracelab

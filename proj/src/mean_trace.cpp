#include "tracelab/mean_trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tracelab/parallel.hpp"
#include "tracelab/pgf.hpp"

namespace tracelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kChernoffGrid = 64;
constexpr double kSHi = 40.0;  // cap so exp(s) stays far from overflow
// Fixed accumulation block for empirical estimates; reducing blocks in index
// order keeps sums bit-identical across thread counts.
constexpr long kAccumBlock = 4096;

double grid_s(const ChannelSpec& spec, int k) {
  const double hi = std::min(spec.log_radius(), kSHi);
  return hi * static_cast<double>(k) / kChernoffGrid;
}

}  // namespace

PositionWeights::PositionWeights(const ChannelSpec& spec, int n, int N)
    : n_(n), N_(N) {
  if (n < 1 || N < 1) {
    throw std::invalid_argument("PositionWeights: need n >= 1 and N >= 1");
  }
  const auto prof = spec.replication_profile(N);
  const auto mpmf = spec.m_pmf(N);
  v_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(N), 0.0);

  // pm[j] = Pr[M^{(i-1)} = j], truncated at N-1 (longer prefixes cannot place
  // a replication within the first N positions).
  std::vector<double> pm(static_cast<std::size_t>(N), 0.0);
  pm[0] = 1.0;
  std::vector<double> next(pm.size());
  for (int i = 1; i <= n; ++i) {
    double* row = v_.data() + static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(N);
    for (int j = 1; j <= N; ++j) {
      double acc = 0.0;
      for (int jp = 0; jp < j; ++jp) {
        const double p = pm[static_cast<std::size_t>(jp)];
        if (p != 0.0) acc += p * prof.r[static_cast<std::size_t>(j - jp - 1)];
      }
      row[j - 1] = acc;
    }
    if (i == n) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int jp = 0; jp < N; ++jp) {
      const double p = pm[static_cast<std::size_t>(jp)];
      if (p == 0.0) continue;
      const int top = std::min(N - 1 - jp, N);
      for (int m = 0; m <= top; ++m) {
        next[static_cast<std::size_t>(jp + m)] += p * mpmf[static_cast<std::size_t>(m)];
      }
    }
    pm.swap(next);
  }
  // Prefix lengths >= N can never place a replication at a position <= N, so
  // the retained entries are exact; the lost mass is diagnostic only.
  double mass = 0.0;
  for (double p : pm) mass += p;
  discarded_ = std::max(0.0, 1.0 - mass);
}

std::vector<double> PositionWeights::weighted_sum(std::span<const Bit> x,
                                                  double scale) const {
  if (static_cast<int>(x.size()) != n_) {
    throw std::invalid_argument("PositionWeights: input length mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(N_), 0.0);
  for (int i = 0; i < n_; ++i) {
    const double xi = static_cast<double>(x[static_cast<std::size_t>(i)]);
    const double* row = v_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N_);
    for (int j = 0; j < N_; ++j) out[static_cast<std::size_t>(j)] += xi * row[j];
  }
  for (double& v : out) v *= scale;
  return out;
}

double chernoff_point(const ChannelSpec& spec, int n, int j) {
  double best = 0.0;  // log domain; Pr <= 1 always
  for (int k = 1; k < kChernoffGrid; ++k) {
    const double s = grid_s(spec, k);
    if (!(s > 0.0) || !(s < spec.log_radius())) continue;
    const double lb = n * spec.log_mgf(s) - s * static_cast<double>(j);
    best = std::min(best, lb);
  }
  return std::exp(best);
}

double chernoff_sum_tail(const ChannelSpec& spec, int n, int N, double abs_z) {
  if (spec.finite_support() && N >= n * spec.max_m()) return 0.0;
  const double lz = std::log(abs_z);
  double best = kInf;
  for (int k = 1; k < kChernoffGrid; ++k) {
    const double s = grid_s(spec, k);
    if (!(s > 0.0) || !(s < spec.log_radius())) continue;
    const double ratio = std::exp(lz - s);
    if (!(ratio < 1.0 - 1e-12)) continue;
    // sum_{i>N} exp(n lnG - s i) |z|^{i-1}
    const double lb = n * spec.log_mgf(s) - s * static_cast<double>(N + 1) +
                      static_cast<double>(N) * lz - std::log1p(-ratio);
    best = std::min(best, lb);
  }
  if (best == kInf) {
    throw std::domain_error("chernoff_sum_tail: no feasible grid point at |z|");
  }
  return std::exp(best);
}

int choose_truncation(const ChannelSpec& spec, int n, double eps) {
  if (n < 1) throw std::invalid_argument("choose_truncation: n must be >= 1");
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::invalid_argument("choose_truncation: eps must lie in (0, 1)");
  }
  const long cap = spec.finite_support()
                       ? static_cast<long>(n) * spec.max_m()
                       : std::numeric_limits<long>::max() / 2;

  // chernoff_point is nonincreasing in its index: exponential bracket, then
  // binary search for the smallest N with Pr[M^{(n)} >= N+1] <= eps.
  long lo = 0;  // invariant: bound(lo+1) > eps (or lo == 0)
  long hi = 1;
  while (hi < cap && chernoff_point(spec, n, static_cast<int>(hi) + 1) > eps) {
    lo = hi;
    hi *= 2;
    if (hi > 100000000L) {
      throw convergence_error("choose_truncation: bound does not reach eps");
    }
  }
  if (hi >= cap) return static_cast<int>(cap);
  while (lo + 1 < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (chernoff_point(spec, n, static_cast<int>(mid) + 1) > eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const long chosen = std::max<long>(hi, 1);
  return static_cast<int>(std::min(chosen, cap));
}

MeanTrace exact_mean_trace(const ChannelSpec& spec, const PositionWeights& weights,
                           std::span<const Bit> x) {
  MeanTrace mt;
  mt.n = static_cast<int>(x.size());
  mt.trunc = weights.trunc();
  mt.values = weights.weighted_sum(x, 1.0 - 2.0 * spec.p_flip());
  mt.tail_bound = chernoff_sum_tail(spec, mt.n, mt.trunc, 1.0);
  return mt;
}

MeanTrace exact_mean_trace(const ChannelSpec& spec, std::span<const Bit> x, int N) {
  const PositionWeights weights(spec, static_cast<int>(x.size()), N);
  return exact_mean_trace(spec, weights, x);
}

MeanTrace empirical_mean_trace(const std::vector<Trace>& traces, int N) {
  if (traces.empty()) {
    throw std::invalid_argument("empirical_mean_trace: need at least one trace");
  }
  if (N < 1) throw std::invalid_argument("empirical_mean_trace: N must be >= 1");
  const auto t = static_cast<double>(traces.size());
  std::vector<double> sum(static_cast<std::size_t>(N), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(N), 0.0);
  for (const auto& tr : traces) {
    const std::size_t len = std::min<std::size_t>(tr.symbols.size(),
                                                  static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < len; ++i) {
      sum[i] += tr.symbols[i];
      sumsq[i] += 1.0;  // symbols are +-1
    }
  }
  MeanTrace mt;
  mt.trunc = N;
  mt.values.resize(static_cast<std::size_t>(N));
  mt.stderrs.assign(static_cast<std::size_t>(N), 0.0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
    mt.values[i] = sum[i] / t;
    if (traces.size() > 1) {
      const double var =
          std::max(0.0, (sumsq[i] - t * mt.values[i] * mt.values[i]) / (t - 1.0));
      mt.stderrs[i] = std::sqrt(var / t);
    }
  }
  return mt;
}

MeanTrace empirical_mean_trace_sampled(const ChannelSpec& spec,
                                       std::span<const Bit> x, long t, int N,
                                       RngStream base, int threads) {
  if (t < 1) throw std::invalid_argument("empirical_mean_trace_sampled: t >= 1");
  if (N < 1) throw std::invalid_argument("empirical_mean_trace_sampled: N >= 1");
  const std::size_t blocks =
      static_cast<std::size_t>((t + kAccumBlock - 1) / kAccumBlock);
  std::vector<std::vector<double>> bsum(blocks), bsq(blocks);

  parallel_blocks(blocks, threads, [&](std::size_t b) {
    auto& sum = bsum[b];
    auto& sq = bsq[b];
    sum.assign(static_cast<std::size_t>(N), 0.0);
    sq.assign(static_cast<std::size_t>(N), 0.0);
    const long first = static_cast<long>(b) * kAccumBlock;
    const long last = std::min(t, first + kAccumBlock);
    for (long j = first; j < last; ++j) {
      const Trace tr = spec.apply(x, base.substream(static_cast<std::uint64_t>(j)));
      const std::size_t len = std::min<std::size_t>(tr.symbols.size(),
                                                    static_cast<std::size_t>(N));
      for (std::size_t i = 0; i < len; ++i) {
        sum[i] += tr.symbols[i];
        sq[i] += 1.0;
      }
    }
  });

  std::vector<double> sum(static_cast<std::size_t>(N), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(N), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
      sum[i] += bsum[b][i];
      sumsq[i] += bsq[b][i];
    }
  }
  MeanTrace mt;
  mt.n = static_cast<int>(x.size());
  mt.trunc = N;
  mt.values.resize(static_cast<std::size_t>(N));
  mt.stderrs.assign(static_cast<std::size_t>(N), 0.0);
  const auto td = static_cast<double>(t);
  for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
    mt.values[i] = sum[i] / td;
    if (t > 1) {
      const double var =
          std::max(0.0, (sumsq[i] - td * mt.values[i] * mt.values[i]) / (td - 1.0));
      mt.stderrs[i] = std::sqrt(var / td);
    }
  }
  return mt;
}

std::vector<Trace> sample_traces(const ChannelSpec& spec, std::span<const Bit> x,
                                 long t, RngStream base, int threads) {
  if (t < 0) throw std::invalid_argument("sample_traces: t must be >= 0");
  std::vector<Trace> out(static_cast<std::size_t>(t));
  const std::size_t blocks =
      static_cast<std::size_t>((t + kAccumBlock - 1) / kAccumBlock);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    const long first = static_cast<long>(b) * kAccumBlock;
    const long last = std::min(t, first + kAccumBlock);
    for (long j = first; j < last; ++j) {
      out[static_cast<std::size_t>(j)] =
          spec.apply(x, base.substream(static_cast<std::uint64_t>(j)));
    }
  });
  return out;
}

TotalLengthPmf total_length_pmf(const ChannelSpec& spec, int n, int N) {
  if (n < 1 || N < 0) {
    throw std::invalid_argument("total_length_pmf: need n >= 1 and N >= 0");
  }
  const auto mpmf = spec.m_pmf(N);
  std::vector<double> pm(static_cast<std::size_t>(N) + 1, 0.0);
  pm[0] = 1.0;
  std::vector<double> next(pm.size());
  for (int i = 0; i < n; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int jp = 0; jp <= N; ++jp) {
      const double p = pm[static_cast<std::size_t>(jp)];
      if (p == 0.0) continue;
      for (int m = 0; m + jp <= N; ++m) {
        next[static_cast<std::size_t>(jp + m)] += p * mpmf[static_cast<std::size_t>(m)];
      }
    }
    pm.swap(next);
  }
  TotalLengthPmf out;
  out.pmf = std::move(pm);
  double mass = 0.0;
  for (double p : out.pmf) mass += p;
  out.lost = std::max(0.0, 1.0 - mass);
  return out;
}

SeriesValue series_eval(const ChannelSpec& spec, std::span<const Bit> x,
                        std::complex<double> z, int N) {
  const double az = std::abs(z);
  if (!(az >= 1.0 - 1e-12)) {
    throw std::domain_error("series_eval: requires |z| >= 1");
  }
  const int n = static_cast<int>(x.size());
  const double tail = chernoff_sum_tail(spec, n, N, std::max(az, 1.0));

  const PositionWeights weights(spec, n, N);
  const auto mu = weights.weighted_sum(x, 1.0 - 2.0 * spec.p_flip());
  std::complex<double> acc = 0.0;
  for (std::size_t i = mu.size(); i-- > 0;) {
    acc = acc * z + mu[i];
  }
  // Accumulated rounding of the Horner sum; the retained coordinates are exact.
  const double lpow = static_cast<double>(N - 1) * std::log(std::max(az, 1.0));
  const double slack =
      lpow > 690.0 ? kInf
                   : 1e-15 * static_cast<double>(N) * std::exp(lpow) *
                         static_cast<double>(std::max(n, 2));
  return {acc, tail + slack};
}

ChangeVarResult verify_changevar(const ChannelSpec& spec, std::span<const Bit> x,
                                 std::complex<double> z) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw std::invalid_argument("verify_changevar: empty input");
  const int N = choose_truncation(spec, n, 1e-12);

  const Pgf gm = pgf_of_m(spec, 1e-14);
  const Pgf gw = pgf_of_w(spec, 1e-14);
  if (!(std::abs(z) < gm.radius()) || !(std::abs(z) < gw.radius())) {
    throw std::domain_error("verify_changevar: z outside a convergence disk");
  }

  const SeriesValue lhs = series_eval(spec, x, z, N);
  const PgfValue vm = gm.eval(z);
  const PgfValue vw = gw.eval(z);
  const double c1 = (1.0 - 2.0 * spec.p_flip()) * spec.mean_r();

  const std::complex<double> pval = input_poly_eval(x, vm.value);
  // |P'| on the segment between g_M(z) and its float estimate.
  const double wabs = std::abs(vm.value) + vm.error_bound;
  double pderiv = 0.0;
  for (int i = 2; i <= n; ++i) {
    pderiv += static_cast<double>(i - 1) * std::pow(std::max(1.0, wabs), i - 2);
  }

  const std::complex<double> rhs = c1 * vw.value * pval;
  const double budget =
      lhs.tail_bound +
      std::abs(c1) * (vw.error_bound * std::abs(pval) +
                      (std::abs(vw.value) + vw.error_bound) * vm.error_bound * pderiv);

  ChangeVarResult out;
  out.lhs = lhs.value;
  out.rhs = rhs;
  out.residual = std::abs(lhs.value - rhs);
  out.budget = budget;
  return out;
}

}  // namespace tracelab

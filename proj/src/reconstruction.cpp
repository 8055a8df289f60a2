#include "tracelab/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "tracelab/arc.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/pgf.hpp"

namespace tracelab {

namespace {

constexpr std::size_t kCandidateBlock = 1024;

BitString bits_from_index(std::uint64_t idx, int n) {
  BitString x(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    const int shift = n - 1 - b;
    x[static_cast<std::size_t>(b)] = ((idx >> shift) & 1u) ? Bit{+1} : Bit{-1};
  }
  return x;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

// Histogram bucket edges: quarter decades from 1e-12 up to 1e2.
constexpr int kHistBuckets = 56;
int hist_bucket(double d) {
  if (!(d > 0.0)) return 0;
  const int b = static_cast<int>(std::floor(4.0 * (std::log10(d) + 12.0)));
  return std::clamp(b, 0, kHistBuckets - 1);
}
double hist_edge(int b) { return std::pow(10.0, -12.0 + b / 4.0); }

}  // namespace

CandidateSet CandidateSet::exhaustive(int n) {
  if (n < 1 || n > 30) {
    throw std::invalid_argument("CandidateSet: exhaustive n must lie in [1, 30]");
  }
  CandidateSet s;
  s.exhaustive_ = true;
  s.n_ = n;
  return s;
}

CandidateSet CandidateSet::from_list(std::vector<BitString> list) {
  if (list.empty()) {
    throw std::invalid_argument("CandidateSet: empty candidate list");
  }
  const auto n = list.front().size();
  std::set<std::string> seen;
  for (const auto& x : list) {
    if (x.size() != n || n == 0) {
      throw std::invalid_argument("CandidateSet: candidates must share a length");
    }
    if (!seen.insert(bits_to_string(x)).second) {
      throw std::invalid_argument("CandidateSet: duplicate candidate");
    }
  }
  CandidateSet s;
  s.exhaustive_ = false;
  s.n_ = static_cast<int>(n);
  s.list_ = std::move(list);
  return s;
}

std::size_t CandidateSet::size() const {
  return exhaustive_ ? (std::size_t{1} << n_) : list_.size();
}

BitString CandidateSet::at(std::size_t idx) const {
  if (idx >= size()) throw std::out_of_range("CandidateSet::at");
  return exhaustive_ ? bits_from_index(idx, n_) : list_[idx];
}

ReconstructResult reconstruct(std::span<const double> mu_hat,
                              const ChannelSpec& spec,
                              const PositionWeights& weights,
                              const CandidateSet& candidates, int threads) {
  if (candidates.size() == 0) {
    throw std::invalid_argument("reconstruct: empty candidate set");
  }
  if (static_cast<int>(mu_hat.size()) != weights.trunc()) {
    throw std::invalid_argument("reconstruct: mu_hat length must equal N");
  }
  if (candidates.n() != weights.n()) {
    throw std::invalid_argument("reconstruct: candidate length mismatch");
  }
  const double scale = 1.0 - 2.0 * spec.p_flip();
  const std::size_t total = candidates.size();
  const std::size_t blocks = (total + kCandidateBlock - 1) / kCandidateBlock;

  struct Best {
    double dist = std::numeric_limits<double>::infinity();
    std::size_t idx = 0;
    BitString x;
  };
  std::vector<Best> best(blocks);

  parallel_blocks(blocks, threads, [&](std::size_t b) {
    Best local;
    const std::size_t first = b * kCandidateBlock;
    const std::size_t last = std::min(total, first + kCandidateBlock);
    for (std::size_t idx = first; idx < last; ++idx) {
      const BitString cand = candidates.at(idx);
      const auto mu = weights.weighted_sum(cand, scale);
      const double d = l1_distance(mu, mu_hat);
      if (d < local.dist ||
          (d == local.dist && !local.x.empty() && lex_less(cand, local.x))) {
        local.dist = d;
        local.idx = idx;
        local.x = cand;
      }
    }
    best[b] = std::move(local);
  });

  Best winner;
  for (auto& b : best) {
    if (b.x.empty()) continue;
    if (b.dist < winner.dist ||
        (b.dist == winner.dist && !winner.x.empty() && lex_less(b.x, winner.x))) {
      winner = std::move(b);
    }
  }
  return {std::move(winner.x), winner.dist, winner.idx};
}

ReconstructResult reconstruct(std::span<const double> mu_hat,
                              const ChannelSpec& spec,
                              const CandidateSet& candidates, int N,
                              int threads) {
  const PositionWeights weights(spec, candidates.n(), N);
  return reconstruct(mu_hat, spec, weights, candidates, threads);
}

SeparationReport pairwise_separation(const ChannelSpec& spec, int n, int N,
                                     const PairMode& mode, int threads) {
  if (n < 1) throw std::invalid_argument("pairwise_separation: n must be >= 1");
  SeparationReport rep;
  rep.n = n;
  rep.N = N;
  rep.min_l1 = std::numeric_limits<double>::infinity();
  rep.histogram.resize(kHistBuckets);
  for (int b = 0; b < kHistBuckets; ++b) rep.histogram[b] = {hist_edge(b), 0};

  const PositionWeights weights(spec, n, N);
  const double scale = 1.0 - 2.0 * spec.p_flip();

  double sum = 0.0;
  if (mode.kind == PairMode::Kind::AllPairs) {
    if (n > 12) {
      throw validation_error(
          "pairwise_separation: all_pairs is capped at n = 12; use sampled mode");
    }
    const std::uint64_t K = std::uint64_t{1} << n;
    const std::uint64_t mask = K - 1;

    // Precompute every mean trace once; pairs then cost O(N) each.
    std::vector<double> mus(static_cast<std::size_t>(K) * static_cast<std::size_t>(N));
    for (std::uint64_t i = 0; i < K; ++i) {
      const auto mu = weights.weighted_sum(bits_from_index(i, n), scale);
      std::copy(mu.begin(), mu.end(),
                mus.begin() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N));
    }

    // Global negation maps index i to ~i and preserves distances, so only the
    // canonical member of each mirrored pair is evaluated.
    struct Partial {
      double min = std::numeric_limits<double>::infinity();
      std::uint64_t a = 0, b = 0;
      double sum = 0.0, max = 0.0;
      std::size_t pairs = 0;
      std::vector<std::size_t> hist = std::vector<std::size_t>(kHistBuckets, 0);
    };
    const std::size_t blocks = static_cast<std::size_t>(K);
    std::vector<Partial> parts(blocks);
    parallel_blocks(blocks, threads, [&](std::size_t bi) {
      auto& part = parts[bi];
      const std::uint64_t i = bi;
      const double* mi = mus.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N);
      for (std::uint64_t j = i + 1; j < K; ++j) {
        const std::uint64_t ma = (~j) & mask;
        const std::uint64_t mb = (~i) & mask;
        std::size_t weight = 2;
        if (std::make_pair(ma, mb) < std::make_pair(i, j)) continue;
        if (std::make_pair(ma, mb) == std::make_pair(i, j)) weight = 1;
        const double* mj = mus.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(N);
        double d = 0.0;
        for (int c = 0; c < N; ++c) d += std::abs(mi[c] - mj[c]);
        part.pairs += weight;
        part.sum += d * static_cast<double>(weight);
        part.max = std::max(part.max, d);
        part.hist[static_cast<std::size_t>(hist_bucket(d))] += weight;
        if (d < part.min) {
          part.min = d;
          part.a = i;
          part.b = j;
        }
      }
    });
    for (const auto& part : parts) {
      if (part.pairs == 0) continue;
      rep.pairs += part.pairs;
      sum += part.sum;
      rep.max_l1 = std::max(rep.max_l1, part.max);
      for (int b = 0; b < kHistBuckets; ++b) {
        rep.histogram[static_cast<std::size_t>(b)].second += part.hist[static_cast<std::size_t>(b)];
      }
      if (part.min < rep.min_l1) {
        rep.min_l1 = part.min;
        rep.argmin_a = bits_from_index(part.a, n);
        rep.argmin_b = bits_from_index(part.b, n);
      }
    }
  } else {
    if (mode.samples == 0) {
      throw std::invalid_argument("pairwise_separation: sampled mode needs k >= 1");
    }
    auto account = [&](const BitString& xa, const BitString& xb) {
      const auto ma = weights.weighted_sum(xa, scale);
      const auto mb = weights.weighted_sum(xb, scale);
      const double d = l1_distance(ma, mb);
      rep.pairs += 1;
      sum += d;
      rep.max_l1 = std::max(rep.max_l1, d);
      rep.histogram[static_cast<std::size_t>(hist_bucket(d))].second += 1;
      if (d < rep.min_l1) {
        rep.min_l1 = d;
        rep.argmin_a = xa;
        rep.argmin_b = xb;
      }
    };
    // known hard families first: the alternating string against its negation
    // (a one-position shift of itself) and against a single end flip
    BitString alt(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) alt[static_cast<std::size_t>(i)] = i % 2 ? -1 : +1;
    if (n >= 2) {
      account(alt, negated(alt));
      BitString flip = alt;
      flip.back() = static_cast<Bit>(-flip.back());
      account(alt, flip);
    }
    RngStream root = RngStream::root(mode.seed);
    for (std::size_t s = 0; s < mode.samples; ++s) {
      RngStream rs = root.substream(s);
      BitString xa = random_bits(n, rs);
      BitString xb = random_bits(n, rs);
      while (xa == xb) xb = random_bits(n, rs);
      account(xa, xb);
    }
  }

  rep.mean_l1 = rep.pairs ? sum / static_cast<double>(rep.pairs) : 0.0;
  return rep;
}

Certification certify_lower_bound(const ChannelSpec& spec, std::span<const Bit> x,
                                  std::span<const Bit> x_prime, double L) {
  const int n = static_cast<int>(x.size());
  if (n < 1 || x_prime.size() != x.size()) {
    throw std::invalid_argument("certify_lower_bound: length mismatch");
  }
  if (!(L > 0.0)) throw std::invalid_argument("certify_lower_bound: L > 0");

  // Halved difference coefficients live in {-1,0,1} as the arc bound needs;
  // the factor 2 is reapplied below.
  std::vector<int> diff(static_cast<std::size_t>(n));
  bool any = false;
  for (int i = 0; i < n; ++i) {
    diff[static_cast<std::size_t>(i)] =
        (static_cast<int>(x[static_cast<std::size_t>(i)]) -
         static_cast<int>(x_prime[static_cast<std::size_t>(i)])) / 2;
    any = any || diff[static_cast<std::size_t>(i)] != 0;
  }
  if (!any) throw std::invalid_argument("certify_lower_bound: x == x'");

  Certification cert;
  cert.L = L;
  const auto am = arc_max(diff, ArcSpec{L, 0});
  cert.phi_star = am.phi_star;
  cert.arc_max_abs = am.max_abs;

  const double tol = 1e-10;
  const Pgf gm = pgf_of_m(spec, 1e-14);
  const Pgf gw = pgf_of_w(spec, 1e-14);
  const auto inv = invert_on_arc(gm, am.phi_star, tol);
  cert.z_star = inv.z;
  const double az = std::abs(inv.z);

  // Truncation point: enough that the tail term at |z*| is negligible, with
  // a hard cap in case |z*| sits too close to the radius.
  int N = choose_truncation(spec, n, 1e-12);
  double tail = std::numeric_limits<double>::infinity();
  const double z_for_tail = std::max(az, 1.0) + 1e-12;
  try {
    tail = 2.0 * chernoff_sum_tail(spec, n, N, z_for_tail);
    while (tail > 1e-12 && N < 20000) {
      N = std::min(20000, N * 2);
      tail = 2.0 * chernoff_sum_tail(spec, n, N, z_for_tail);
    }
  } catch (const std::domain_error&) {
    // no feasible Chernoff point at |z*|: keep tail = inf, rhs goes vacuous
  }
  cert.trunc = N;
  cert.tail_term = tail;

  const PositionWeights weights(spec, n, N);
  const double scale = 1.0 - 2.0 * spec.p_flip();
  double lhs = 0.0;
  {
    std::vector<Bit> d2(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = static_cast<Bit>(
          x[static_cast<std::size_t>(i)] - x_prime[static_cast<std::size_t>(i)]);
    }
    // V^T (x - x') directly; entries of d2 lie in {-2, 0, 2}
    for (int j = 1; j <= N; ++j) {
      double acc = 0.0;
      for (int i = 1; i <= n; ++i) {
        acc += static_cast<double>(d2[static_cast<std::size_t>(i - 1)]) *
               weights.at(i, j);
      }
      lhs += std::abs(scale * acc);
    }
  }
  cert.lhs = lhs;

  // |P_x - P_x'| at the true g_M(z*): the arc value, eroded by how far
  // g_M(z*) can sit from e^{i phi*}.
  double aderiv = 0.0;
  for (int jj = 1; jj < n; ++jj) {
    aderiv += static_cast<double>(jj) * std::abs(diff[static_cast<std::size_t>(jj)]);
  }
  aderiv *= std::pow(1.0 + tol, std::max(0, n - 1));
  const double pdiff_lb = 2.0 * std::max(0.0, am.max_abs - inv.residual * aderiv);

  const auto wv = gw.eval(inv.z);
  const double gw_lb = std::max(0.0, std::abs(wv.value) - wv.error_bound);
  const double c1 = scale * spec.mean_r();
  const double pbar_lb = c1 * gw_lb * pdiff_lb;

  double rhs;
  if (!std::isfinite(tail)) {
    rhs = -std::numeric_limits<double>::infinity();
  } else {
    rhs = (pbar_lb - tail) * std::exp(-static_cast<double>(N) *
                                      std::log(std::max(az, 1.0)));
  }
  cert.rhs = rhs;
  cert.vacuous = !(rhs > 0.0);
  cert.pass = lhs >= rhs - 1e-9;
  return cert;
}

ScalingReport separation_scaling(const ChannelSpec& spec,
                                 std::span<const int> n_values, double trunc_eps,
                                 int threads) {
  ScalingReport rep;
  for (int n : n_values) {
    if (n < 2 || n > 12) {
      throw std::invalid_argument("separation_scaling: n values must lie in [2, 12]");
    }
    const int N = choose_truncation(spec, n, trunc_eps);
    const auto sep = pairwise_separation(spec, n, N, PairMode::all_pairs(), threads);
    rep.rows.push_back({n, N, sep.min_l1});
  }
  // Least squares of ln(1/min_l1) against n^{1/3}.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto m = static_cast<double>(rep.rows.size());
  for (const auto& row : rep.rows) {
    const double xv = std::cbrt(static_cast<double>(row.n));
    const double yv = std::log(1.0 / row.min_l1);
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) > 1e-12 && rep.rows.size() >= 2) {
    rep.fitted_C = (m * sxy - sx * sy) / denom;
    rep.fitted_intercept = (sy - rep.fitted_C * sx) / m;
  }
  return rep;
}

std::pair<double, double> wilson_interval(int s, int t) {
  if (t <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double p = static_cast<double>(s) / t;
  const double denom = 1.0 + z2 / t;
  const double center = (p + z2 / (2.0 * t)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / t + z2 / (4.0 * static_cast<double>(t) * t)) /
      denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<SuccessPoint> trace_complexity_experiment(
    const ChannelSpec& spec, int n, std::span<const long> t_grid, int trials,
    std::uint64_t seed, int threads) {
  if (n < 1 || n > 12) {
    throw std::invalid_argument("trace_complexity_experiment: n must lie in [1, 12]");
  }
  if (trials < 1) {
    throw std::invalid_argument("trace_complexity_experiment: trials must be >= 1");
  }
  const int N = choose_truncation(spec, n, 1e-12);
  const PositionWeights weights(spec, n, N);
  const double scale = 1.0 - 2.0 * spec.p_flip();
  const std::uint64_t K = std::uint64_t{1} << n;

  // Candidate mean traces once; every trial reuses them.
  std::vector<double> mus(static_cast<std::size_t>(K) * static_cast<std::size_t>(N));
  for (std::uint64_t i = 0; i < K; ++i) {
    const auto mu = weights.weighted_sum(bits_from_index(i, n), scale);
    std::copy(mu.begin(), mu.end(),
              mus.begin() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N));
  }

  const RngStream root = RngStream::root(seed);
  std::vector<SuccessPoint> out;
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const long t = t_grid[ti];
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(trials), 0);
    const RngStream tstream = root.substream(ti);
    parallel_blocks(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
      RngStream rs = tstream.substream(trial);
      RngStream xs = rs.substream(0);
      const BitString x = random_bits(n, xs);
      std::vector<double> sum(static_cast<std::size_t>(N), 0.0);
      const RngStream traces = rs.substream(1);
      for (long j = 0; j < t; ++j) {
        const Trace tr = spec.apply(x, traces.substream(static_cast<std::uint64_t>(j)));
        const std::size_t len = std::min<std::size_t>(tr.symbols.size(),
                                                      static_cast<std::size_t>(N));
        for (std::size_t c = 0; c < len; ++c) sum[c] += tr.symbols[c];
      }
      for (auto& v : sum) v /= static_cast<double>(std::max<long>(t, 1));
      // inline argmin over the precomputed candidate block
      double best = std::numeric_limits<double>::infinity();
      std::uint64_t best_idx = 0;
      for (std::uint64_t i = 0; i < K; ++i) {
        const double* mi = mus.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N);
        double d = 0.0;
        for (int c = 0; c < N; ++c) d += std::abs(mi[c] - sum[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          best_idx = i;
        }
      }
      ok[trial] = bits_from_index(best_idx, n) == x ? 1 : 0;
    });
    int successes = 0;
    for (auto v : ok) successes += v;
    SuccessPoint pt;
    pt.t = t;
    pt.successes = successes;
    pt.trials = trials;
    pt.rate = static_cast<double>(successes) / trials;
    std::tie(pt.ci_lo, pt.ci_hi) = wilson_interval(successes, trials);
    out.push_back(pt);
  }
  return out;
}

}  // namespace tracelab

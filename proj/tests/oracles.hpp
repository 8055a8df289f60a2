// Test-only oracles, independent of the library's production code paths.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "tracelab/bits.hpp"
#include "tracelab/channel.hpp"

namespace tracelab::oracle {

struct Outcome {
  int m = 0;
  std::vector<int> r;
  double p = 0.0;
};

// Full outcome support of a finite-support law, straight from the law
// definition (not from the library's marginals).
inline std::vector<Outcome> outcome_support(const ChannelSpec& spec) {
  if (!spec.finite_support()) {
    throw std::invalid_argument("outcome_support: finite-support laws only");
  }
  const auto& law = spec.law();
  if (const auto* d = std::get_if<DeletionLaw>(&law)) {
    return {{0, {}, d->q}, {1, {1}, 1.0 - d->q}};
  }
  if (const auto* g = std::get_if<GeoInsDelLaw>(&law)) {
    // finite only when sigma == 1, so G == 0
    return {{0, {}, g->delta}, {1, {1}, 1.0 - g->delta}};
  }
  if (const auto* dup = std::get_if<DuplicationLaw>(&law)) {
    std::vector<Outcome> out;
    for (std::size_t i = 0; i < dup->length_pmf.size(); ++i) {
      Outcome o;
      o.m = static_cast<int>(i + 1);
      for (int k = 1; k <= o.m; ++k) o.r.push_back(k);
      o.p = dup->length_pmf[i];
      out.push_back(std::move(o));
    }
    return out;
  }
  if (const auto* t = std::get_if<ExplicitTableLaw>(&law)) {
    std::vector<Outcome> out;
    for (const auto& row : t->rows) out.push_back({row.m, row.r_mask, row.prob});
    return out;
  }
  throw std::invalid_argument("outcome_support: unsupported law");
}

// Brute-force mean trace: enumerate every combination of per-bit outcomes and
// average the padded outputs. Replication positions contribute
// (1-2 p_flip) x_i, insertions contribute 0.
inline std::vector<double> enumerated_mean_trace(const ChannelSpec& spec,
                                                 std::span<const Bit> x, int N) {
  const auto support = outcome_support(spec);
  const int n = static_cast<int>(x.size());
  std::vector<double> mu(static_cast<std::size_t>(N), 0.0);
  std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
  const double scale = 1.0 - 2.0 * spec.p_flip();
  for (;;) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) prob *= support[pick[static_cast<std::size_t>(i)]].p;
    if (prob > 0.0) {
      int offset = 0;
      for (int i = 0; i < n; ++i) {
        const auto& o = support[pick[static_cast<std::size_t>(i)]];
        for (int k : o.r) {
          const int pos = offset + k;  // 1-based
          if (pos <= N) {
            mu[static_cast<std::size_t>(pos - 1)] +=
                prob * scale * static_cast<double>(x[static_cast<std::size_t>(i)]);
          }
        }
        offset += o.m;
      }
    }
    // odometer
    int i = 0;
    while (i < n) {
      if (++pick[static_cast<std::size_t>(i)] < support.size()) break;
      pick[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == n) break;
  }
  return mu;
}

// Exact tail of M^{(n)} by direct convolution of the single-bit pmf; the mass
// truncated by the window is counted toward the tail, so the result is exact.
struct ExactTail {
  std::vector<double> tail;  // tail[j] = Pr[M^{(n)} >= j], j = 0..window
};

inline ExactTail exact_total_tail(const ChannelSpec& spec, int n, int window) {
  std::vector<double> single(static_cast<std::size_t>(window) + 1);
  for (int j = 0; j <= window; ++j) {
    single[static_cast<std::size_t>(j)] = spec.m_pmf_at(j);
  }
  std::vector<double> pm(static_cast<std::size_t>(window) + 1, 0.0);
  pm[0] = 1.0;
  std::vector<double> next(pm.size());
  for (int i = 0; i < n; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int a = 0; a <= window; ++a) {
      if (pm[static_cast<std::size_t>(a)] == 0.0) continue;
      for (int b = 0; a + b <= window; ++b) {
        next[static_cast<std::size_t>(a + b)] +=
            pm[static_cast<std::size_t>(a)] * single[static_cast<std::size_t>(b)];
      }
    }
    pm.swap(next);
  }
  ExactTail out;
  out.tail.resize(static_cast<std::size_t>(window) + 1);
  double head = 0.0;
  for (int j = 0; j <= window; ++j) {
    out.tail[static_cast<std::size_t>(j)] = std::max(0.0, 1.0 - head);
    head += pm[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace tracelab::oracle

// Acceptance suite: one test case per criterion, each printing a summary line.
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tracelab/arc.hpp"
#include "tracelab/mean_trace.hpp"
#include "tracelab/pgf.hpp"
#include "tracelab/reconstruction.hpp"

using namespace tracelab;
using cplx = std::complex<double>;
namespace fs = std::filesystem;

namespace {

void report(int id, bool ok, const std::string& what) {
  std::printf("acceptance %02d: %s  %s\n", id, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

std::vector<ChannelSpec> builtin_channels() {
  return {
      ChannelSpec::deletion(0.3),
      ChannelSpec::deletion(0.7),
      ChannelSpec::geo_ins_del(0.5, 0.25),
      ChannelSpec::geo_ins_before(0.5, 0.3),
      ChannelSpec::duplication({1.0 / 3, 1.0 / 3, 1.0 / 3}),
  };
}

}  // namespace

TEST_CASE("criterion 1: change-of-variable identity across builtins") {
  bool ok = true;
  RngStream rng = RngStream::root(1001);
  std::vector<std::pair<BitString, int>> inputs;  // 20 random x, n in 4..16
  for (int k = 0; k < 20; ++k) {
    const int n = 4 + static_cast<int>(rng.next_unit() * 13);  // 4..16
    RngStream xs = rng.substream(static_cast<std::uint64_t>(k));
    inputs.emplace_back(random_bits(n, xs), n);
  }
  std::vector<cplx> zs;
  for (int k = 0; k < 10; ++k) {
    const double r = 1.0 + 0.05 * k / 9.0;
    const double theta = -0.04 + 0.08 * k / 9.0;
    zs.push_back(std::polar(r, theta));
  }
  double worst_excess = -1.0;
  for (const auto& spec : builtin_channels()) {
    for (const auto& [x, n] : inputs) {
      for (const cplx z : zs) {
        const auto res = verify_changevar(spec, x, z);
        const double excess = res.residual - (res.budget + 1e-9);
        worst_excess = std::max(worst_excess, excess);
        if (excess > 0.0) ok = false;
      }
    }
  }
  report(1, ok, "change-of-variable identity residual <= budget + 1e-9 (5 channels x 20 x x 10 z)");
  CHECK(ok);
}

TEST_CASE("criterion 2: brute-force oracle equivalence for finite channels") {
  bool ok = true;
  const std::vector<ChannelSpec> channels = {
      ChannelSpec::deletion(0.3),
      ChannelSpec::deletion(0.7),
      ChannelSpec::duplication({1.0 / 3, 1.0 / 3, 1.0 / 3}),
      ChannelSpec::explicit_table({{2, {1, 2}, 0.4}, {1, {}, 0.3}, {0, {}, 0.3}}, 0.1),
  };
  for (const auto& spec : channels) {
    for (int n = 1; n <= 6; ++n) {
      const int N = n * spec.max_m();
      const PositionWeights v(spec, n, N);
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        BitString x(static_cast<std::size_t>(n));
        for (int b = 0; b < n; ++b) {
          x[static_cast<std::size_t>(b)] = (mask >> b) & 1 ? Bit{+1} : Bit{-1};
        }
        const auto got = exact_mean_trace(spec, v, x);
        const auto want = oracle::enumerated_mean_trace(spec, x, N);
        for (int j = 0; j < N; ++j) {
          if (std::abs(got.values[static_cast<std::size_t>(j)] -
                       want[static_cast<std::size_t>(j)]) > 1e-12) {
            ok = false;
          }
        }
      }
    }
  }
  report(2, ok, "exact mean trace == outcome enumeration, all inputs n<=6, 1e-12");
  CHECK(ok);
}

TEST_CASE("criterion 3: Monte Carlo consistency at n=10, t=1e6") {
  bool ok = true;
  int channel_idx = 0;
  for (const auto& spec : builtin_channels()) {
    const int n = 10;
    const long t = 1000000;
    RngStream xs = RngStream::root(3000 + channel_idx);
    const BitString x = random_bits(n, xs);
    const int N = choose_truncation(spec, n, 1e-9);
    const auto exact = exact_mean_trace(spec, x, N);
    const auto emp = empirical_mean_trace_sampled(
        spec, x, t, N, RngStream::root(7000 + channel_idx), 4);

    // exact estimator std: sqrt((Pr[M^(n) >= i] - mu_i^2) / t)
    const auto total = total_length_pmf(spec, n, N);
    double head = 1.0;
    int violations = 0;
    for (int i = 1; i <= N; ++i) {
      head -= total.pmf[static_cast<std::size_t>(i - 1)];
      // head is exactly Pr[M^{(n)} >= i]: truncated-away mass stays in the tail
      const double reach = std::max(head, 0.0);
      const double mu = exact.values[static_cast<std::size_t>(i - 1)];
      const double var = std::max(reach - mu * mu, 0.0);
      const double sigma = std::sqrt(var / static_cast<double>(t));
      const double dev = std::abs(emp.values[static_cast<std::size_t>(i - 1)] - mu);
      if (dev > 5.0 * sigma + 1e-15) ++violations;
    }
    if (violations > 1) ok = false;
    ++channel_idx;
  }
  report(3, ok, "per-coordinate |muhat - mu| <= 5 sigma, <= 1 violation per channel");
  CHECK(ok);
}

TEST_CASE("criterion 4: arc certification passes on 50 seeded pairs") {
  bool ok = true;
  std::size_t nonvacuous = 0, total_pairs = 0;
  int channel_idx = 0;
  for (const auto& spec : builtin_channels()) {
    for (int n : {6, 8, 10}) {
      const double L = std::cbrt(static_cast<double>(n));
      RngStream root = RngStream::root(4000 + channel_idx);
      for (int pair = 0; pair < 50; ++pair) {
        RngStream rs = root.substream(static_cast<std::uint64_t>(pair) +
                                      1000 * static_cast<std::uint64_t>(n));
        const BitString x = random_bits(n, rs);
        BitString y = random_bits(n, rs);
        while (y == x) y = random_bits(n, rs);
        const auto cert = certify_lower_bound(spec, x, y, L);
        ++total_pairs;
        if (!cert.vacuous) ++nonvacuous;
        if (!cert.pass) ok = false;
      }
    }
    ++channel_idx;
  }
  std::ostringstream what;
  what << "lhs >= rhs - 1e-9 on all " << total_pairs << " pairs (" << nonvacuous
       << " with rhs > 0)";
  report(4, ok, what.str());
  CHECK(ok);
}

TEST_CASE("criterion 5: zero-noise reconstruction of every n=8 input") {
  bool ok = true;
  for (const auto& spec : builtin_channels()) {
    const int n = 8;
    const int N = choose_truncation(spec, n, 1e-12);
    const auto sep = pairwise_separation(spec, n, N, PairMode::all_pairs(), 4);
    if (!(sep.min_l1 > 0.0)) {
      ok = false;
      continue;
    }
    const PositionWeights v(spec, n, N);
    const auto candidates = CandidateSet::exhaustive(n);
    for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
      const BitString x = candidates.at(idx);
      const auto mu = exact_mean_trace(spec, v, x);
      const auto got = reconstruct(mu.values, spec, v, candidates, 4);
      if (got.x_hat != x) ok = false;
    }
  }
  report(5, ok, "argmin(exact mu_x) == x for all 256 inputs on every builtin");
  CHECK(ok);
}

TEST_CASE("criterion 6: inside the min_l1/4 ball reconstruction never errs") {
  const auto spec = ChannelSpec::deletion(0.3);
  const int n = 8;
  const int N = choose_truncation(spec, n, 1e-12);
  const auto sep = pairwise_separation(spec, n, N, PairMode::all_pairs(), 4);
  REQUIRE(sep.min_l1 > 0.0);
  const double delta = sep.min_l1;
  const PositionWeights v(spec, n, N);
  const auto candidates = CandidateSet::exhaustive(n);

  // t calibrated so || muhat - mu ||_1 <= delta/4 holds in most trials: the
  // L1 error concentrates near sum_i sigma_i sqrt(2/(pi t)).
  const auto total = total_length_pmf(spec, n, N);
  double head = 1.0, sigma_sum = 0.0;
  for (int i = 1; i <= N; ++i) {
    head -= total.pmf[static_cast<std::size_t>(i - 1)];
    sigma_sum += std::sqrt(std::max(head, 0.0));
  }
  const long t = static_cast<long>(std::ceil(std::pow(6.4 * sigma_sum / delta, 2)));

  int qualifying = 0, exceptions = 0;
  const RngStream root = RngStream::root(606);
  for (int trial = 0; trial < 200; ++trial) {
    RngStream rs = root.substream(static_cast<std::uint64_t>(trial));
    RngStream xs = rs.substream(0);
    const BitString x = random_bits(n, xs);
    const auto muhat =
        empirical_mean_trace_sampled(spec, x, t, N, rs.substream(1), 4);
    const auto mux = exact_mean_trace(spec, v, x);
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
      err += std::abs(muhat.values[static_cast<std::size_t>(i)] -
                      mux.values[static_cast<std::size_t>(i)]);
    }
    if (err <= delta / 4.0) {
      ++qualifying;
      const auto got = reconstruct(muhat.values, spec, v, candidates, 4);
      if (got.x_hat != x) ++exceptions;
    }
  }
  const bool ok = exceptions == 0 && qualifying >= 100;
  std::ostringstream what;
  what << "t=" << t << ", " << qualifying << "/200 trials inside the ball, "
       << exceptions << " exceptions";
  report(6, ok, what.str());
  CHECK(ok);
}

TEST_CASE("criterion 7: separation regression values") {
  bool ok = true;
  const auto two = pairwise_separation(ChannelSpec::deletion(0.5), 2, 2,
                                       PairMode::all_pairs());
  if (std::abs(two.min_l1 - 1.0) > 1e-12) ok = false;

  double prev = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= 10; ++n) {
    const auto spec = ChannelSpec::deletion(0.5);
    const int N = choose_truncation(spec, n, 1e-12);
    const auto rep = pairwise_separation(spec, n, N, PairMode::all_pairs(), 4);
    if (rep.min_l1 > prev + 1e-12) ok = false;
    prev = rep.min_l1;
  }

  for (int n : {2, 5, 8}) {
    const auto rep = pairwise_separation(ChannelSpec::identity(), n, n,
                                         PairMode::all_pairs());
    if (std::abs(rep.min_l1 - 2.0) > 1e-12) ok = false;
  }
  report(7, ok, "min_l1(del 0.5, n=2) = 1; monotone over n=2..10; identity = 2");
  CHECK(ok);
}

TEST_CASE("criterion 8: inversion matches the Mobius closed form") {
  bool ok = true;
  for (double q : {0.2, 0.5, 0.8}) {
    const auto spec = ChannelSpec::deletion(q);
    const Pgf gw = pgf_of_w(spec, 1e-14);
    for (int k = 0; k < 50; ++k) {
      const double phi = (std::numbers::pi / 8.0) * (k - 24.5) / 24.5;
      const auto inv = invert_on_arc(spec, phi, 1e-12);
      const cplx mobius = (std::polar(1.0, phi) - q) / (1.0 - q);
      if (std::abs(inv.z - mobius) > 1e-10) ok = false;
      if (std::abs(gw.eval(inv.z).value) < 0.5) ok = false;
    }
  }
  report(8, ok, "z_phi within 1e-10 of (e^{i phi} - q)/(1-q); |g_W| >= 1/2");
  CHECK(ok);
}

TEST_CASE("criterion 9: truncation never under-truncates vs the exact tail") {
  bool ok = true;
  const std::vector<ChannelSpec> channels = {
      ChannelSpec::geo_ins_del(0.5, 0.25),
      ChannelSpec::geo_ins_before(0.5, 0.3),
      ChannelSpec::duplication_geometric(0.4),
  };
  for (const auto& spec : channels) {
    for (int n = 1; n <= 20; ++n) {
      for (double eps : {1e-6, 1e-9, 1e-12}) {
        const int got = choose_truncation(spec, n, eps);
        const auto exact = oracle::exact_total_tail(spec, n, 2 * got + 64);
        if (exact.tail[static_cast<std::size_t>(got + 1)] > eps) ok = false;
        int n_exact = 0;
        while (exact.tail[static_cast<std::size_t>(n_exact + 1)] > eps) ++n_exact;
        if (got < n_exact) ok = false;
      }
    }
  }
  report(9, ok, "Chernoff N >= exact-convolution N, n <= 20, eps {1e-6,1e-9,1e-12}");
  CHECK(ok);
}

TEST_CASE("criterion 10: byte-identical CSVs at 1, 4, 8 threads") {
  const fs::path dir = fs::temp_directory_path() / "tracelab_acceptance10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream sep(dir / "sep.json");
    sep << R"({"channel": {"p_flip": 0.0, "law": {"kind": "geo_ins_del", "sigma": 0.5, "delta": 0.25}}, "n": 8})";
    std::ofstream rec(dir / "rec.json");
    rec << R"({"channel": {"p_flip": 0.0, "law": {"kind": "geo_ins_del", "sigma": 0.5, "delta": 0.25}}, "x": "+-+-+--+", "t": 20000})";
  }
  auto run_cli = [&](const std::string& args) {
    const std::string cmd = std::string(TRACELAB_BIN) + " " + args;
    const int status = std::system(cmd.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  auto slurp = [&](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool ok = true;
  for (int threads : {1, 4, 8}) {
    const std::string tag = std::to_string(threads);
    ok = ok && run_cli("separation --config '" + (dir / "sep.json").string() +
                       "' --out '" + (dir / ("s" + tag)).string() +
                       "' --seed 42 --threads " + tag);
    ok = ok && run_cli("reconstruct --config '" + (dir / "rec.json").string() +
                       "' --out '" + (dir / ("r" + tag)).string() +
                       "' --seed 42 --threads " + tag);
  }
  if (ok) {
    const std::string sep1 = slurp(dir / "s1" / "separation.csv");
    const std::string rec1 = slurp(dir / "r1" / "reconstruct.csv");
    for (const std::string tag : {"4", "8"}) {
      if (slurp(dir / ("s" + tag) / "separation.csv") != sep1) ok = false;
      if (slurp(dir / ("r" + tag) / "reconstruct.csv") != rec1) ok = false;
    }
    ok = ok && !sep1.empty() && !rec1.empty();
  }
  report(10, ok, "separation + reconstruct CSVs identical for threads 1/4/8");
  CHECK(ok);
}

// tracelab: command-line front end for the replication-insertion channel
// toolkit. Loads a JSON experiment config, dispatches to the library, writes
// CSV results plus a run manifest (written last, as the commit marker).
//
//   tracelab <sample|mean-trace|reconstruct|separation|certify|arc>
//            --config FILE [--seed S] [--out DIR] [--threads K]
//
// Exit codes: 0 success, 2 config/validation, 3 numeric convergence, 4 I/O.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tracelab/arc.hpp"
#include "tracelab/bits.hpp"
#include "tracelab/channel.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/mean_trace.hpp"
#include "tracelab/pgf.hpp"
#include "tracelab/reconstruction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tracelab;

namespace {

constexpr const char* kToolVersion = "tracelab 0.1.0";

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_complex_re(std::complex<double> z) { return fmt(z.real()); }
std::string fmt_complex_im(std::complex<double> z) { return fmt(z.imag()); }

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunContext {
  json config;  // resolved (seed folded in)
  std::uint64_t seed = 0;
  fs::path out_dir;
  int threads = 1;
  std::string started;
  std::vector<std::string> outputs;

  std::ofstream open_output(const std::string& name) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir.string());
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw io_error("cannot open output file: " + (out_dir / name).string());
    outputs.push_back(name);
    return out;
  }

  void write_manifest() {
    json manifest;
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    manifest["config_digest"] = digest;
    manifest["config"] = config;  // resolved; replaying it reproduces the CSVs
    manifest["root_seed"] = seed;
    manifest["tool_version"] = kToolVersion;
    manifest["started_utc"] = started;
    manifest["finished_utc"] = utc_now();
    manifest["outputs"] = outputs;
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out) throw io_error("cannot write manifest");
    out << manifest.dump(2) << "\n";
  }
};

ChannelSpec channel_from_config(const json& config) {
  if (!config.contains("channel")) {
    throw validation_error("config: missing \"channel\"");
  }
  return ChannelSpec::from_json_text(config.at("channel").dump());
}

BitString bits_from_config(const json& config, const char* key) {
  if (!config.contains(key)) {
    throw validation_error(std::string("config: missing \"") + key + "\"");
  }
  const auto s = config.at(key).get<std::string>();
  if (s.empty()) {
    throw validation_error(std::string("config: \"") + key + "\" must be nonempty");
  }
  try {
    return parse_bits(s);
  } catch (const std::invalid_argument& e) {
    throw validation_error(std::string("config: ") + key + ": " + e.what());
  }
}

int resolve_truncation(const ChannelSpec& spec, int n, const json& config) {
  if (config.contains("N")) return config.at("N").get<int>();
  const double eps = config.value("eps", 1e-12);
  return choose_truncation(spec, n, eps);
}

// ---------------------------------------------------------------- commands

void cmd_sample(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);
  const auto x = bits_from_config(ctx.config, "x");
  const long t = ctx.config.value("t", 0L);
  if (t < 0) throw validation_error("config: t must be >= 0");

  auto out = ctx.open_output("traces.txt");
  const RngStream root = RngStream::root(ctx.seed);
  const auto traces = sample_traces(spec, x, t, root, ctx.threads);
  for (const auto& tr : traces) {
    out << bits_to_string(tr.symbols) << "\n";
  }
}

void cmd_mean_trace(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);
  const auto x = bits_from_config(ctx.config, "x");
  const int n = static_cast<int>(x.size());
  const int N = resolve_truncation(spec, n, ctx.config);

  if (ctx.config.value("exact", true)) {
    const auto mt = exact_mean_trace(spec, x, N);
    auto out = ctx.open_output("mean_trace_exact.csv");
    out << "index,value,stderr\n";
    for (int i = 0; i < N; ++i) {
      out << (i + 1) << "," << fmt(mt.values[static_cast<std::size_t>(i)]) << ",0\n";
    }
  }
  if (ctx.config.contains("empirical_t")) {
    const long t = ctx.config.at("empirical_t").get<long>();
    if (t < 1) throw validation_error("config: empirical_t must be >= 1");
    const auto mt = empirical_mean_trace_sampled(spec, x, t, N,
                                                 RngStream::root(ctx.seed),
                                                 ctx.threads);
    auto out = ctx.open_output("mean_trace_empirical.csv");
    out << "index,value,stderr\n";
    for (int i = 0; i < N; ++i) {
      out << (i + 1) << "," << fmt(mt.values[static_cast<std::size_t>(i)]) << ","
          << fmt(mt.stderrs[static_cast<std::size_t>(i)]) << "\n";
    }
  }
}

void cmd_reconstruct(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);

  // success-curve mode: fresh random inputs per trial over a grid of trace
  // counts, reported with Wilson intervals
  if (ctx.config.contains("t_grid")) {
    const int n = ctx.config.value("n", 0);
    if (n < 1) throw validation_error("config: curve mode needs \"n\"");
    const auto t_grid = ctx.config.at("t_grid").get<std::vector<long>>();
    const int trials = ctx.config.value("trials", 50);
    const auto curve =
        trace_complexity_experiment(spec, n, t_grid, trials, ctx.seed, ctx.threads);
    auto out = ctx.open_output("success_curve.csv");
    out << "t,successes,trials,rate,ci_lo,ci_hi\n";
    for (const auto& p : curve) {
      out << p.t << "," << p.successes << "," << p.trials << "," << fmt(p.rate)
          << "," << fmt(p.ci_lo) << "," << fmt(p.ci_hi) << "\n";
    }
    return;
  }

  const auto x = bits_from_config(ctx.config, "x");
  const int n = static_cast<int>(x.size());
  if (n > 12) {
    throw validation_error("config: reconstruct is capped at n = 12 (exhaustive)");
  }
  const long t = ctx.config.value("t", 0L);
  if (t < 1) throw validation_error("config: t must be >= 1");
  const int N = resolve_truncation(spec, n, ctx.config);

  const auto mu_hat = empirical_mean_trace_sampled(
      spec, x, t, N, RngStream::root(ctx.seed), ctx.threads);
  const auto result = reconstruct(mu_hat.values, spec,
                                  CandidateSet::exhaustive(n), N, ctx.threads);

  auto out = ctx.open_output("reconstruct.csv");
  out << "x,x_hat,success,t,N,distance_l1\n";
  out << bits_to_string(x) << "," << bits_to_string(result.x_hat) << ","
      << (result.x_hat == x ? 1 : 0) << "," << t << "," << N << ","
      << fmt(result.distance) << "\n";
}

void write_separation_rows(std::ofstream& out, const SeparationReport& rep) {
  out << rep.n << "," << rep.N << "," << fmt(rep.min_l1) << ","
      << bits_to_string(rep.argmin_a) << "," << bits_to_string(rep.argmin_b)
      << "," << rep.pairs << "," << fmt(rep.mean_l1) << "," << fmt(rep.max_l1)
      << "\n";
}

void cmd_separation(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);

  PairMode mode = PairMode::all_pairs();
  if (ctx.config.contains("mode")) {
    const auto& m = ctx.config.at("mode");
    if (m.is_string() && m.get<std::string>() == "all_pairs") {
      mode = PairMode::all_pairs();
    } else if (m.is_object() && m.contains("sampled")) {
      mode = PairMode::sampled(m.at("sampled").get<std::size_t>(), ctx.seed);
    } else {
      throw validation_error("config: mode must be \"all_pairs\" or {\"sampled\": k}");
    }
  }

  if (ctx.config.contains("n_values")) {
    const auto n_values = ctx.config.at("n_values").get<std::vector<int>>();
    const double eps = ctx.config.value("eps", 1e-12);
    const auto rep = separation_scaling(spec, n_values, eps, ctx.threads);
    auto out = ctx.open_output("separation.csv");
    out << "n,N,min_l1\n";
    for (const auto& row : rep.rows) {
      out << row.n << "," << row.N << "," << fmt(row.min_l1) << "\n";
    }
    auto fit = ctx.open_output("scaling_fit.csv");
    fit << "C,intercept,points\n";
    fit << fmt(rep.fitted_C) << "," << fmt(rep.fitted_intercept) << ","
        << rep.rows.size() << "\n";
    return;
  }

  const int n = ctx.config.value("n", 0);
  if (n < 1) throw validation_error("config: missing or invalid \"n\"");
  const int N = resolve_truncation(spec, n, ctx.config);
  const auto rep = pairwise_separation(spec, n, N, mode, ctx.threads);

  auto out = ctx.open_output("separation.csv");
  out << "n,N,min_l1,argmin_a,argmin_b,pairs,mean_l1,max_l1\n";
  write_separation_rows(out, rep);

  auto hist = ctx.open_output("histogram.csv");
  hist << "bucket_lo,count\n";
  for (const auto& [edge, count] : rep.histogram) {
    hist << fmt(edge) << "," << count << "\n";
  }
}

void cmd_certify(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);
  const int n = ctx.config.value("n", 0);

  std::vector<std::pair<BitString, BitString>> pairs;
  if (ctx.config.contains("pairs")) {
    for (const auto& p : ctx.config.at("pairs")) {
      pairs.emplace_back(parse_bits(p.at(0).get<std::string>()),
                         parse_bits(p.at(1).get<std::string>()));
    }
  } else {
    if (n < 2) throw validation_error("config: missing or invalid \"n\"");
    const auto num_pairs = ctx.config.value("num_pairs", std::size_t{50});
    RngStream root = RngStream::root(ctx.seed);
    for (std::size_t s = 0; s < num_pairs; ++s) {
      RngStream rs = root.substream(s);
      BitString a = random_bits(n, rs);
      BitString b = random_bits(n, rs);
      while (a == b) b = random_bits(n, rs);
      pairs.emplace_back(std::move(a), std::move(b));
    }
  }
  if (pairs.empty()) throw validation_error("config: no pairs to certify");

  const int len = static_cast<int>(pairs.front().first.size());
  const double L = ctx.config.value("L", std::cbrt(static_cast<double>(len)));

  auto out = ctx.open_output("certify.csv");
  out << "a,b,L,phi_star,arc_max_abs,z_re,z_im,abs_z,N,lhs,rhs,pass\n";
  for (const auto& [a, b] : pairs) {
    const auto cert = certify_lower_bound(spec, a, b, L);
    out << bits_to_string(a) << "," << bits_to_string(b) << "," << fmt(cert.L)
        << "," << fmt(cert.phi_star) << "," << fmt(cert.arc_max_abs) << ","
        << fmt_complex_re(cert.z_star) << "," << fmt_complex_im(cert.z_star)
        << "," << fmt(std::abs(cert.z_star)) << "," << cert.trunc << ","
        << fmt(cert.lhs) << "," << fmt(cert.rhs) << "," << (cert.pass ? 1 : 0)
        << "\n";
  }
}

void cmd_arc(RunContext& ctx) {
  const auto spec = channel_from_config(ctx.config);
  const double L = ctx.config.value("L", 4.0);
  const double tol = ctx.config.value("tol", 1e-10);

  std::vector<double> phis;
  if (ctx.config.contains("phis")) {
    phis = ctx.config.at("phis").get<std::vector<double>>();
  } else {
    const int count = ctx.config.value("count", 16);
    if (count < 1) throw validation_error("config: count must be >= 1");
    const double phi_max = ctx.config.value("phi_max", 3.141592653589793 / L);
    for (int k = count; k >= 1; --k) {
      phis.push_back(phi_max * static_cast<double>(k) / count);
    }
  }

  const auto report = arc_quadratic_bound_check(spec, phis, tol);
  auto out = ctx.open_output("arc.csv");
  out << "phi,z_re,z_im,abs_z,ratio,gw_abs,residual\n";
  for (const auto& row : report.rows) {
    out << fmt(row.phi) << "," << fmt_complex_re(row.z) << ","
        << fmt_complex_im(row.z) << "," << fmt(row.abs_z) << ","
        << fmt(row.ratio) << "," << fmt(row.gw_abs) << "," << fmt(row.residual)
        << "\n";
  }
  auto fit = ctx.open_output("arc_fit.csv");
  fit << "c_prime,gw_min,gw_all_ok\n";
  fit << fmt(report.fitted_cprime) << "," << fmt(report.gw_min) << ","
      << (report.gw_all_ok ? 1 : 0) << "\n";

  if (ctx.config.contains("coeffs")) {
    const auto s = ctx.config.at("coeffs").get<std::string>();
    std::vector<int> coeffs;
    for (char c : s) {
      if (c == '+') coeffs.push_back(1);
      else if (c == '-') coeffs.push_back(-1);
      else if (c == '0') coeffs.push_back(0);
      else throw validation_error("config: coeffs must use '+', '-', '0'");
    }
    const auto am = arc_max(coeffs, ArcSpec{L, 0});
    auto amax = ctx.open_output("arcmax.csv");
    amax << "phi_star,max_abs\n";
    amax << fmt(am.phi_star) << "," << fmt(am.max_abs) << "\n";
  }
}

int run(const std::string& command, const std::string& config_path,
        std::optional<std::uint64_t> seed_flag,
        std::optional<std::string> out_flag, int threads) {
  json config;
  {
    std::ifstream in(config_path);
    if (!in) throw io_error("cannot open config file: " + config_path);
    try {
      in >> config;
    } catch (const json::exception& e) {
      throw validation_error(std::string("config: invalid JSON: ") + e.what());
    }
  }

  RunContext ctx;
  ctx.seed = seed_flag ? *seed_flag : config.value("seed", std::uint64_t{0});
  config["seed"] = ctx.seed;
  ctx.config = config;
  ctx.out_dir = out_flag ? fs::path(*out_flag)
                         : fs::path(config.value("out_dir", std::string("tracelab_out")));
  ctx.threads = threads;
  ctx.started = utc_now();

  if (command == "sample") cmd_sample(ctx);
  else if (command == "mean-trace") cmd_mean_trace(ctx);
  else if (command == "reconstruct") cmd_reconstruct(ctx);
  else if (command == "separation") cmd_separation(ctx);
  else if (command == "certify") cmd_certify(ctx);
  else if (command == "arc") cmd_arc(ctx);
  else throw validation_error("unknown command: " + command);

  ctx.write_manifest();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-based trace reconstruction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> out_flag;
  int threads = 0;

  const char* env_threads = std::getenv("TRACELAB_THREADS");

  std::vector<CLI::App*> subs;
  for (const char* name :
       {"sample", "mean-trace", "reconstruct", "separation", "certify", "arc"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", seed_flag, "root seed (overrides config)");
    sub->add_option("--out", out_flag, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker threads");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  if (threads <= 0) {
    threads = env_threads ? std::atoi(env_threads) : 1;
    if (threads <= 0) threads = 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config_path, seed_flag, out_flag, threads);
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

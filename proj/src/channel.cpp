#include "tracelab/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace tracelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbSumTol = 1e-12;
// Safety factor on the geometric decay rate so the certificate has slack
// strictly inside the convergence radius.
constexpr double kAlphaSafety = 0.95;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int sample_geometric0(double sigma, RngStream& rng) {
  if (sigma >= 1.0) return 0;
  const double u = rng.next_unit();
  const double g = std::floor(std::log1p(-u) / std::log1p(-sigma));
  if (!(g >= 0.0)) return 0;
  if (g > 1e7) return 10000000;  // mass below exp(-alpha*1e7); never observed
  return static_cast<int>(g);
}

}  // namespace

ChannelSpec ChannelSpec::deletion(double q, double p_flip) {
  return make(p_flip, DeletionLaw{q});
}
ChannelSpec ChannelSpec::geo_ins_del(double sigma, double delta, double p_flip) {
  return make(p_flip, GeoInsDelLaw{sigma, delta});
}
ChannelSpec ChannelSpec::geo_ins_before(double sigma, double q, double p_flip) {
  return make(p_flip, GeoInsBeforeLaw{sigma, q});
}
ChannelSpec ChannelSpec::duplication(std::vector<double> length_pmf, double p_flip) {
  return make(p_flip, DuplicationLaw{std::move(length_pmf), 0.0});
}
ChannelSpec ChannelSpec::duplication_geometric(double sigma, double p_flip) {
  return make(p_flip, DuplicationLaw{{}, sigma});
}
ChannelSpec ChannelSpec::explicit_table(std::vector<TableRow> rows, double p_flip) {
  return make(p_flip, ExplicitTableLaw{std::move(rows)});
}

ChannelSpec ChannelSpec::make(double p_flip, ChannelLaw law) {
  if (!(p_flip >= 0.0) || !(p_flip < 0.5)) {
    throw validation_error("p_flip must lie in [0, 1/2)");
  }

  ChannelSpec spec;
  spec.p_flip_ = p_flip;
  spec.law_ = std::move(law);

  std::visit(
      overloaded{
          [&](const DeletionLaw& d) {
            if (!(d.q >= 0.0) || !(d.q < 1.0)) {
              throw validation_error("deletion: q must lie in [0, 1)");
            }
            spec.finite_ = true;
            spec.max_m_ = 1;
            spec.mean_m_ = 1.0 - d.q;
            spec.mean_r_ = 1.0 - d.q;
            spec.log_radius_ = kInf;
          },
          [&](const GeoInsDelLaw& g) {
            if (!(g.sigma > 0.0) || !(g.sigma <= 1.0)) {
              throw validation_error("geo_ins_del: sigma must lie in (0, 1]");
            }
            if (!(g.delta >= 0.0) || !(g.delta < 1.0)) {
              throw validation_error("geo_ins_del: delta must lie in [0, 1)");
            }
            spec.geo_sigma_eff_ = g.sigma;
            spec.geo_delta_eff_ = g.delta;
          },
          [&](const GeoInsBeforeLaw& g) {
            if (!(g.sigma > 0.0) || !(g.sigma <= 1.0)) {
              throw validation_error("geo_ins_before: sigma must lie in (0, 1]");
            }
            if (!(g.q >= 0.0) || !(g.q < 1.0)) {
              throw validation_error("geo_ins_before: q must lie in [0, 1)");
            }
            // Thinning the geometric prefix by the deletion rate is again
            // geometric, so the law coincides with geo_ins_del(sigma', q).
            spec.geo_sigma_eff_ = g.sigma / (1.0 - (1.0 - g.sigma) * g.q);
            spec.geo_delta_eff_ = g.q;
          },
          [&](DuplicationLaw& d) {
            if (d.length_pmf.empty()) {
              if (!(d.geo_sigma > 0.0) || !(d.geo_sigma <= 1.0)) {
                throw validation_error(
                    "duplication: geometric sigma must lie in (0, 1]");
              }
            } else {
              while (!d.length_pmf.empty() && d.length_pmf.back() == 0.0) {
                d.length_pmf.pop_back();
              }
              if (d.length_pmf.empty()) {
                throw validation_error("duplication: length pmf is all zero");
              }
              double sum = 0.0;
              for (double p : d.length_pmf) {
                if (!(p >= 0.0)) {
                  throw validation_error("duplication: negative pmf entry");
                }
                sum += p;
              }
              if (std::abs(sum - 1.0) > kProbSumTol) {
                throw validation_error(
                    "duplication: length pmf must sum to 1 within 1e-12");
              }
              spec.cum_.resize(d.length_pmf.size());
              double acc = 0.0;
              for (std::size_t i = 0; i < d.length_pmf.size(); ++i) {
                acc += d.length_pmf[i];
                spec.cum_[i] = acc;
              }
            }
          },
          [&](ExplicitTableLaw& t) {
            if (t.rows.empty()) {
              throw validation_error("explicit_table: no rows");
            }
            double sum = 0.0;
            for (auto& row : t.rows) {
              if (row.m < 0) {
                throw validation_error("explicit_table: negative m");
              }
              if (!(row.prob >= 0.0)) {
                throw validation_error("explicit_table: negative probability");
              }
              std::sort(row.r_mask.begin(), row.r_mask.end());
              for (std::size_t i = 0; i < row.r_mask.size(); ++i) {
                const int k = row.r_mask[i];
                if (k < 1 || k > row.m) {
                  throw validation_error(
                      "explicit_table: r_mask position outside [1, m]");
                }
                if (i > 0 && row.r_mask[i - 1] == k) {
                  throw validation_error("explicit_table: duplicate r_mask entry");
                }
              }
              sum += row.prob;
            }
            if (std::abs(sum - 1.0) > kProbSumTol) {
              throw validation_error(
                  "explicit_table: probabilities must sum to 1 within 1e-12");
            }
            spec.cum_.resize(t.rows.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
              acc += t.rows[i].prob;
              spec.cum_[i] = acc;
            }
          },
      },
      spec.law_);

  // Derived marginals for the two geometric-prefix laws.
  if (std::holds_alternative<GeoInsDelLaw>(spec.law_) ||
      std::holds_alternative<GeoInsBeforeLaw>(spec.law_)) {
    const double s = spec.geo_sigma_eff_;
    const double d = spec.geo_delta_eff_;
    spec.mean_m_ = (1.0 - s) / s + (1.0 - d);
    spec.mean_r_ = 1.0 - d;
    if (s < 1.0) {
      spec.finite_ = false;
      spec.max_m_ = -1;
      spec.log_radius_ = -std::log1p(-s);
    } else {
      spec.finite_ = true;
      spec.max_m_ = 1;
      spec.log_radius_ = kInf;
    }
  } else if (const auto* dup = std::get_if<DuplicationLaw>(&spec.law_)) {
    if (dup->length_pmf.empty()) {
      const double s = dup->geo_sigma;
      spec.mean_m_ = 1.0 / s;
      spec.mean_r_ = spec.mean_m_;
      if (s < 1.0) {
        spec.finite_ = false;
        spec.max_m_ = -1;
        spec.log_radius_ = -std::log1p(-s);
      } else {
        spec.finite_ = true;
        spec.max_m_ = 1;
        spec.log_radius_ = kInf;
      }
    } else {
      spec.finite_ = true;
      spec.max_m_ = static_cast<int>(dup->length_pmf.size());
      double mean = 0.0;
      for (std::size_t i = 0; i < dup->length_pmf.size(); ++i) {
        mean += dup->length_pmf[i] * static_cast<double>(i + 1);
      }
      spec.mean_m_ = mean;
      spec.mean_r_ = mean;
      spec.log_radius_ = kInf;
    }
  } else if (const auto* tab = std::get_if<ExplicitTableLaw>(&spec.law_)) {
    spec.finite_ = true;
    int mm = 0;
    double mean_m = 0.0, mean_r = 0.0;
    for (const auto& row : tab->rows) {
      if (row.prob > 0.0 && row.m > mm) mm = row.m;
      mean_m += row.prob * row.m;
      mean_r += row.prob * static_cast<double>(row.r_mask.size());
    }
    spec.max_m_ = mm;
    spec.mean_m_ = mean_m;
    spec.mean_r_ = mean_r;
    spec.log_radius_ = kInf;
  }

  // Tail certificate. Geometric tails: alpha just below the true decay rate,
  // kappa from the closed-form supremum (attained at tau = 1). Finite support:
  // kappa = max_j Pr[M >= j] e^{alpha j}, exact by construction.
  if (!spec.finite_) {
    const double alpha0 = spec.log_radius_;
    const double alpha = kAlphaSafety * alpha0;
    spec.cert_.alpha = alpha;
    spec.cert_.kappa = std::max(1.0, spec.m_tail(1) * std::exp(alpha));
  } else {
    const double alpha = std::log(1e6) / std::max(spec.max_m_, 1);
    double kappa = 1.0;
    for (int j = 1; j <= spec.max_m_; ++j) {
      kappa = std::max(kappa, spec.m_tail(j) * std::exp(alpha * j));
    }
    spec.cert_.alpha = alpha;
    spec.cert_.kappa = kappa;
  }

  spec.validate();
  return spec;
}

double ChannelSpec::m_pmf_at(int j) const {
  if (j < 0) return 0.0;
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> double {
            if (j == 0) return d.q;
            if (j == 1) return 1.0 - d.q;
            return 0.0;
          },
          [&](const GeoInsDelLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            if (j == 0) return s * d;
            return d * s * std::pow(1.0 - s, j) +
                   (1.0 - d) * s * std::pow(1.0 - s, j - 1);
          },
          [&](const GeoInsBeforeLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            if (j == 0) return s * d;
            return d * s * std::pow(1.0 - s, j) +
                   (1.0 - d) * s * std::pow(1.0 - s, j - 1);
          },
          [&](const DuplicationLaw& dup) -> double {
            if (j == 0) return 0.0;
            if (dup.length_pmf.empty()) {
              const double s = dup.geo_sigma;
              return s * std::pow(1.0 - s, j - 1);
            }
            if (j > static_cast<int>(dup.length_pmf.size())) return 0.0;
            return dup.length_pmf[static_cast<std::size_t>(j - 1)];
          },
          [&](const ExplicitTableLaw& t) -> double {
            double p = 0.0;
            for (const auto& row : t.rows) {
              if (row.m == j) p += row.prob;
            }
            return p;
          },
      },
      law_);
}

double ChannelSpec::m_tail(int j) const {
  if (j <= 0) return 1.0;
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> double {
            return j == 1 ? 1.0 - d.q : 0.0;
          },
          [&](const GeoInsDelLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return std::pow(1.0 - s, j - 1) * (1.0 - s * d);
          },
          [&](const GeoInsBeforeLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return std::pow(1.0 - s, j - 1) * (1.0 - s * d);
          },
          [&](const DuplicationLaw& dup) -> double {
            if (dup.length_pmf.empty()) {
              return std::pow(1.0 - dup.geo_sigma, j - 1);
            }
            double t = 0.0;
            for (std::size_t i = static_cast<std::size_t>(j - 1);
                 i < dup.length_pmf.size(); ++i) {
              t += dup.length_pmf[i];
            }
            return t;
          },
          [&](const ExplicitTableLaw& t) -> double {
            double p = 0.0;
            for (const auto& row : t.rows) {
              if (row.m >= j) p += row.prob;
            }
            return p;
          },
      },
      law_);
}

std::vector<double> ChannelSpec::m_pmf(int upto) const {
  if (upto < 0) throw std::invalid_argument("m_pmf: upto must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(upto) + 1);
  for (int j = 0; j <= upto; ++j) p[static_cast<std::size_t>(j)] = m_pmf_at(j);
  return p;
}

double ChannelSpec::log_mgf(double s) const {
  if (!(s < log_radius_)) {
    throw std::domain_error("log_mgf: e^s outside the convergence radius");
  }
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> double {
            // log(q + (1-q) e^s), stable for large s
            if (d.q == 0.0) return s;
            return s + std::log((1.0 - d.q) + d.q * std::exp(-s));
          },
          [&](const GeoInsDelLaw&) -> double {
            const double sg = geo_sigma_eff_, d = geo_delta_eff_;
            const double es = std::exp(s);
            return std::log(sg) + std::log(d + (1.0 - d) * es) -
                   std::log1p(-(1.0 - sg) * es);
          },
          [&](const GeoInsBeforeLaw&) -> double {
            const double sg = geo_sigma_eff_, d = geo_delta_eff_;
            const double es = std::exp(s);
            return std::log(sg) + std::log(d + (1.0 - d) * es) -
                   std::log1p(-(1.0 - sg) * es);
          },
          [&](const DuplicationLaw& dup) -> double {
            if (dup.length_pmf.empty()) {
              const double sg = dup.geo_sigma;
              if (sg >= 1.0) return s;
              return std::log(sg) + s - std::log1p(-(1.0 - sg) * std::exp(s));
            }
            // log-sum-exp over ln p_j + s*(j+1)
            double hi = -kInf;
            for (std::size_t i = 0; i < dup.length_pmf.size(); ++i) {
              if (dup.length_pmf[i] > 0.0) {
                hi = std::max(hi, std::log(dup.length_pmf[i]) +
                                      s * static_cast<double>(i + 1));
              }
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < dup.length_pmf.size(); ++i) {
              if (dup.length_pmf[i] > 0.0) {
                acc += std::exp(std::log(dup.length_pmf[i]) +
                                s * static_cast<double>(i + 1) - hi);
              }
            }
            return hi + std::log(acc);
          },
          [&](const ExplicitTableLaw& t) -> double {
            double hi = -kInf;
            for (const auto& row : t.rows) {
              if (row.prob > 0.0) {
                hi = std::max(hi, std::log(row.prob) + s * row.m);
              }
            }
            double acc = 0.0;
            for (const auto& row : t.rows) {
              if (row.prob > 0.0) {
                acc += std::exp(std::log(row.prob) + s * row.m - hi);
              }
            }
            return hi + std::log(acc);
          },
      },
      law_);
}

double ChannelSpec::repl_prob(int k) const {
  if (k < 1) return 0.0;
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> double {
            return k == 1 ? 1.0 - d.q : 0.0;
          },
          [&](const GeoInsDelLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return (1.0 - d) * s * std::pow(1.0 - s, k - 1);
          },
          [&](const GeoInsBeforeLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return (1.0 - d) * s * std::pow(1.0 - s, k - 1);
          },
          [&](const DuplicationLaw&) -> double { return m_tail(k); },
          [&](const ExplicitTableLaw& t) -> double {
            double p = 0.0;
            for (const auto& row : t.rows) {
              if (std::binary_search(row.r_mask.begin(), row.r_mask.end(), k)) {
                p += row.prob;
              }
            }
            return p;
          },
      },
      law_);
}

ChannelSpec::ReplicationProfile ChannelSpec::replication_profile(int K) const {
  if (K < 1) throw std::invalid_argument("replication_profile: K must be >= 1");
  ReplicationProfile prof;
  prof.r.resize(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    prof.r[static_cast<std::size_t>(k - 1)] = repl_prob(k);
  }
  prof.e_r = mean_r_;
  if (prof.e_r <= 0.0) {
    throw validation_error("replication_profile: E[|R|] = 0");
  }
  prof.tail_remainder = std::visit(
      overloaded{
          [&](const DeletionLaw&) -> double { return 0.0; },
          [&](const GeoInsDelLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return (1.0 - d) * std::pow(1.0 - s, K);
          },
          [&](const GeoInsBeforeLaw&) -> double {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return (1.0 - d) * std::pow(1.0 - s, K);
          },
          [&](const DuplicationLaw& dup) -> double {
            if (dup.length_pmf.empty()) {
              const double s = dup.geo_sigma;
              if (s >= 1.0) return 0.0;
              return std::pow(1.0 - s, K) / s;
            }
            double rem = 0.0;
            for (int k = K + 1; k <= max_m_; ++k) rem += m_tail(k);
            return rem;
          },
          [&](const ExplicitTableLaw&) -> double {
            double rem = 0.0;
            for (int k = K + 1; k <= max_m_; ++k) rem += repl_prob(k);
            return rem;
          },
      },
      law_);
  return prof;
}

std::optional<RationalForm> ChannelSpec::gm_closed_form() const {
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> std::optional<RationalForm> {
            return RationalForm{d.q, 1.0 - d.q, 0.0};
          },
          [&](const GeoInsDelLaw&) -> std::optional<RationalForm> {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return RationalForm{s * d, s * (1.0 - d), 1.0 - s};
          },
          [&](const GeoInsBeforeLaw&) -> std::optional<RationalForm> {
            const double s = geo_sigma_eff_, d = geo_delta_eff_;
            return RationalForm{s * d, s * (1.0 - d), 1.0 - s};
          },
          [&](const DuplicationLaw& dup) -> std::optional<RationalForm> {
            if (dup.length_pmf.empty()) {
              const double s = dup.geo_sigma;
              return RationalForm{0.0, s, 1.0 - s};
            }
            return std::nullopt;
          },
          [&](const ExplicitTableLaw&) -> std::optional<RationalForm> {
            return std::nullopt;
          },
      },
      law_);
}

std::optional<RationalForm> ChannelSpec::gw_closed_form() const {
  return std::visit(
      overloaded{
          [&](const DeletionLaw&) -> std::optional<RationalForm> {
            return RationalForm{1.0, 0.0, 0.0};
          },
          [&](const GeoInsDelLaw&) -> std::optional<RationalForm> {
            const double s = geo_sigma_eff_;
            return RationalForm{s, 0.0, 1.0 - s};
          },
          [&](const GeoInsBeforeLaw&) -> std::optional<RationalForm> {
            const double s = geo_sigma_eff_;
            return RationalForm{s, 0.0, 1.0 - s};
          },
          [&](const DuplicationLaw& dup) -> std::optional<RationalForm> {
            if (dup.length_pmf.empty()) {
              const double s = dup.geo_sigma;
              return RationalForm{s, 0.0, 1.0 - s};
            }
            return std::nullopt;
          },
          [&](const ExplicitTableLaw&) -> std::optional<RationalForm> {
            return std::nullopt;
          },
      },
      law_);
}

int ChannelSpec::quantile(double p) const {
  if (!(p >= 0.0) || !(p < 1.0 + 1e-15)) {
    throw std::invalid_argument("quantile: p must lie in [0, 1)");
  }
  for (int j = 0;; ++j) {
    if (1.0 - m_tail(j + 1) >= p) return j;
    if (j > 100000000) {
      throw convergence_error("quantile: tail does not reach the target");
    }
  }
}

PerBitOutcome ChannelSpec::sample_per_bit(RngStream& rng) const {
  return std::visit(
      overloaded{
          [&](const DeletionLaw& d) -> PerBitOutcome {
            if (rng.next_bool(d.q)) return PerBitOutcome{0, {}};
            return PerBitOutcome{1, {1}};
          },
          [&](const GeoInsDelLaw&) -> PerBitOutcome {
            const int g = sample_geometric0(geo_sigma_eff_, rng);
            const bool kept = rng.next_bool(1.0 - geo_delta_eff_);
            if (kept) return PerBitOutcome{g + 1, {g + 1}};
            return PerBitOutcome{g, {}};
          },
          [&](const GeoInsBeforeLaw&) -> PerBitOutcome {
            const int g = sample_geometric0(geo_sigma_eff_, rng);
            const bool kept = rng.next_bool(1.0 - geo_delta_eff_);
            if (kept) return PerBitOutcome{g + 1, {g + 1}};
            return PerBitOutcome{g, {}};
          },
          [&](const DuplicationLaw& dup) -> PerBitOutcome {
            int m;
            if (dup.length_pmf.empty()) {
              m = 1 + sample_geometric0(dup.geo_sigma, rng);
            } else {
              const double u = rng.next_unit();
              std::size_t i = 0;
              while (i + 1 < cum_.size() && u >= cum_[i]) ++i;
              m = static_cast<int>(i + 1);
            }
            PerBitOutcome o;
            o.m = m;
            o.r_set.resize(static_cast<std::size_t>(m));
            for (int k = 1; k <= m; ++k) o.r_set[static_cast<std::size_t>(k - 1)] = k;
            return o;
          },
          [&](const ExplicitTableLaw& t) -> PerBitOutcome {
            const double u = rng.next_unit();
            std::size_t i = 0;
            while (i + 1 < cum_.size() && u >= cum_[i]) ++i;
            const auto& row = t.rows[i];
            return PerBitOutcome{row.m, row.r_mask};
          },
      },
      law_);
}

Trace ChannelSpec::apply(std::span<const Bit> x, const RngStream& stream) const {
  if (x.empty()) throw std::invalid_argument("apply_channel: empty input");
  Trace out;
  out.symbols.reserve(x.size() * static_cast<std::size_t>(mean_m_ + 2.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    RngStream bit_rng = stream.substream(i);
    const PerBitOutcome o = sample_per_bit(bit_rng);
    std::size_t next_repl = 0;
    for (int j = 1; j <= o.m; ++j) {
      Bit sym;
      if (next_repl < o.r_set.size() && o.r_set[next_repl] == j) {
        ++next_repl;
        sym = bit_rng.next_bool(p_flip_) ? static_cast<Bit>(-x[i]) : x[i];
      } else {
        sym = bit_rng.next_bool(0.5) ? Bit{+1} : Bit{-1};
      }
      out.symbols.push_back(sym);
    }
  }
  return out;
}

void ChannelSpec::validate() const {
  if (!(m_tail(1) > 0.0)) {
    throw validation_error("channel: Pr[M > 0] must be positive");
  }
  if (!(mean_r_ > 0.0)) {
    throw validation_error("channel: Pr[R != {}] must be positive");
  }
  if (!(cert_.kappa >= 1.0) || !(cert_.alpha > 0.0)) {
    throw validation_error("channel: invalid tail certificate");
  }
  const int hi = quantile(1.0 - 1e-12);
  for (int tau = 0; tau <= hi; ++tau) {
    const double bound = cert_.kappa * std::exp(-cert_.alpha * tau);
    if (m_tail(tau) > bound * (1.0 + 1e-9)) {
      throw validation_error("channel: tail certificate violated at tau=" +
                             std::to_string(tau));
    }
  }
}

std::string ChannelSpec::kind() const {
  return std::visit(
      overloaded{
          [](const DeletionLaw&) { return std::string("deletion"); },
          [](const GeoInsDelLaw&) { return std::string("geo_ins_del"); },
          [](const GeoInsBeforeLaw&) { return std::string("geo_ins_before"); },
          [](const DuplicationLaw&) { return std::string("duplication"); },
          [](const ExplicitTableLaw&) { return std::string("explicit_table"); },
      },
      law_);
}

ChannelSpec ChannelSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("channel: invalid JSON: ") + e.what());
  }

  try {
    if (!j.is_object() || !j.contains("law")) {
      throw validation_error("channel: expected {\"p_flip\":..., \"law\":{...}}");
    }
    const double p_flip = j.value("p_flip", 0.0);
    const auto& law = j.at("law");
    const std::string kind = law.at("kind").get<std::string>();
    if (kind == "deletion") {
      return deletion(law.at("q").get<double>(), p_flip);
    }
    if (kind == "geo_ins_del") {
      return geo_ins_del(law.at("sigma").get<double>(),
                         law.at("delta").get<double>(), p_flip);
    }
    if (kind == "geo_ins_before") {
      return geo_ins_before(law.at("sigma").get<double>(),
                            law.at("q").get<double>(), p_flip);
    }
    if (kind == "duplication") {
      if (law.contains("length_pmf")) {
        return duplication(law.at("length_pmf").get<std::vector<double>>(),
                           p_flip);
      }
      return duplication_geometric(law.at("geo_sigma").get<double>(), p_flip);
    }
    if (kind == "explicit_table") {
      std::vector<TableRow> rows;
      for (const auto& r : law.at("rows")) {
        TableRow row;
        row.m = r.at(0).get<int>();
        row.r_mask = r.at(1).get<std::vector<int>>();
        row.prob = r.at(2).get<double>();
        rows.push_back(std::move(row));
      }
      return explicit_table(std::move(rows), p_flip);
    }
    throw validation_error("channel.law.kind: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("channel.law: schema error: ") + e.what());
  }
}

ChannelSpec ChannelSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open channel file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ChannelSpec::to_json_text() const {
  nlohmann::json law = std::visit(
      overloaded{
          [](const DeletionLaw& d) {
            return nlohmann::json{{"kind", "deletion"}, {"q", d.q}};
          },
          [](const GeoInsDelLaw& g) {
            return nlohmann::json{
                {"kind", "geo_ins_del"}, {"sigma", g.sigma}, {"delta", g.delta}};
          },
          [](const GeoInsBeforeLaw& g) {
            return nlohmann::json{
                {"kind", "geo_ins_before"}, {"sigma", g.sigma}, {"q", g.q}};
          },
          [](const DuplicationLaw& d) {
            if (d.length_pmf.empty()) {
              return nlohmann::json{{"kind", "duplication"},
                                    {"geo_sigma", d.geo_sigma}};
            }
            return nlohmann::json{{"kind", "duplication"},
                                  {"length_pmf", d.length_pmf}};
          },
          [](const ExplicitTableLaw& t) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : t.rows) {
              rows.push_back({r.m, r.r_mask, r.prob});
            }
            return nlohmann::json{{"kind", "explicit_table"}, {"rows", rows}};
          },
      },
      law_);
  nlohmann::json j{{"p_flip", p_flip_}, {"law", law}};
  return j.dump();
}

}  // namespace tracelab

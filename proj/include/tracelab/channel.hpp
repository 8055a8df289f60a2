#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tracelab/bits.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

// Sub-exponential tail certificate: Pr[M >= tau] <= kappa * exp(-alpha * tau)
// for all tau >= 0. Validated against the exact tail on construction.
struct TailCertificate {
  double kappa = 1.0;
  double alpha = 1.0;
};

// Built-in per-bit laws for the joint (M, R) distribution.
//
// deletion(q):          (0, {})   w.p. q,  (1, {1}) w.p. 1-q
// geo_ins_del(s, d):    G ~ Geom0(s) uniform bits are prepended, then the
//                       input bit is kept w.p. 1-d. M = G + B, R = {G+1} if
//                       the bit was kept, else {}.
// geo_ins_before(s, q): G ~ Geom0(s) uniform bits are prepended and the whole
//                       block (insertions and input bit) goes through a
//                       deletion channel with rate q. The thinned prefix is
//                       again geometric, so this reduces exactly to
//                       geo_ins_del with sigma' = s / (1 - (1-s) q), delta = q.
// duplication(...):     the input bit is replicated D times, D >= 1 from a
//                       finite length table or a shifted geometric; R = [M].
// explicit_table(rows): arbitrary finite-support joint law.
struct DeletionLaw {
  double q;
};
struct GeoInsDelLaw {
  double sigma;
  double delta;
};
struct GeoInsBeforeLaw {
  double sigma;
  double q;
};
struct DuplicationLaw {
  std::vector<double> length_pmf;  // index 0 <-> length 1; empty => geometric
  double geo_sigma = 0.0;
};
struct TableRow {
  int m = 0;
  std::vector<int> r_mask;  // sorted 1-based positions, subset of [m]
  double prob = 0.0;
};
struct ExplicitTableLaw {
  std::vector<TableRow> rows;
};

using ChannelLaw = std::variant<DeletionLaw, GeoInsDelLaw, GeoInsBeforeLaw,
                                DuplicationLaw, ExplicitTableLaw>;

// One per-bit channel outcome: the block length m and the replication
// positions within the block. Positions not in r_set are insertions of
// uniform random bits.
struct PerBitOutcome {
  int m = 0;
  std::vector<int> r_set;  // sorted, 1-based, subset of [m]
};

struct Trace {
  BitString symbols;  // entries in {-1,+1}
};

// (a + b z) / (1 - c z); covers the generating functions of every builtin
// with a geometric tail.
struct RationalForm {
  double a = 0.0, b = 0.0, c = 0.0;
};

// Immutable description of a replication-insertion channel. Thread-safe to
// share; sampling needs one RngStream per task.
class ChannelSpec {
 public:
  static ChannelSpec make(double p_flip, ChannelLaw law);

  static ChannelSpec deletion(double q, double p_flip = 0.0);
  static ChannelSpec geo_ins_del(double sigma, double delta, double p_flip = 0.0);
  static ChannelSpec geo_ins_before(double sigma, double q, double p_flip = 0.0);
  static ChannelSpec duplication(std::vector<double> length_pmf, double p_flip = 0.0);
  static ChannelSpec duplication_geometric(double sigma, double p_flip = 0.0);
  static ChannelSpec explicit_table(std::vector<TableRow> rows, double p_flip = 0.0);
  static ChannelSpec identity() { return deletion(0.0); }

  // {"p_flip": f, "law": {"kind": ..., ...}}; see README for the schema.
  static ChannelSpec from_json_text(const std::string& text);
  static ChannelSpec from_json_file(const std::string& path);
  std::string to_json_text() const;

  double p_flip() const { return p_flip_; }
  const ChannelLaw& law() const { return law_; }
  const TailCertificate& tail_certificate() const { return cert_; }
  std::string kind() const;

  bool finite_support() const { return finite_; }
  int max_m() const { return max_m_; }  // finite-support laws only
  double mean_m() const { return mean_m_; }
  double mean_r() const { return mean_r_; }

  // ln of the convergence radius of g_M (infinity for finite support).
  double log_radius() const { return log_radius_; }

  // Exact marginals of the block length M.
  double m_pmf_at(int j) const;
  double m_tail(int j) const;  // Pr[M >= j]
  std::vector<double> m_pmf(int upto) const;

  // ln g_M(e^s) = ln E[exp(s M)]; requires s < log_radius().
  double log_mgf(double s) const;

  // Pr[k in R] for k >= 1.
  double repl_prob(int k) const;

  struct ReplicationProfile {
    std::vector<double> r;  // r[k-1] = Pr[k in R], k = 1..K
    double e_r = 0.0;       // E[|R|], exact
    double tail_remainder = 0.0;  // exact sum_{k>K} r(k)
  };
  ReplicationProfile replication_profile(int K) const;

  std::optional<RationalForm> gm_closed_form() const;
  std::optional<RationalForm> gw_closed_form() const;

  // Smallest j with Pr[M <= j] >= p.
  int quantile(double p) const;

  PerBitOutcome sample_per_bit(RngStream& rng) const;

  // Concatenated per-bit blocks; bit i draws from stream.substream(i), with
  // the (m, R) pair first and then the m symbol draws in block order.
  Trace apply(std::span<const Bit> x, const RngStream& stream) const;

  // Re-checks Pr[M>0] > 0, Pr[R != {}] > 0 and the tail certificate on a grid
  // up to the (1 - 1e-12) quantile. Called by make(); throws validation_error.
  void validate() const;

 private:
  ChannelSpec() = default;

  double p_flip_ = 0.0;
  ChannelLaw law_;
  TailCertificate cert_;
  bool finite_ = true;
  int max_m_ = 0;
  double mean_m_ = 0.0;
  double mean_r_ = 0.0;
  double log_radius_ = 0.0;
  // geo_ins_before reduced parameters (sigma', delta'); equal to (sigma,
  // delta) for geo_ins_del.
  double geo_sigma_eff_ = 0.0;
  double geo_delta_eff_ = 0.0;
  std::vector<double> cum_;  // cumulative sampling table for table laws
};

// Free-function aliases matching the operation names used around the library.
inline PerBitOutcome sample_per_bit(const ChannelSpec& spec, RngStream& rng) {
  return spec.sample_per_bit(rng);
}
inline Trace apply_channel(const ChannelSpec& spec, std::span<const Bit> x,
                           const RngStream& stream) {
  return spec.apply(x, stream);
}

}  // namespace tracelab

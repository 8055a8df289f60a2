#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "tracelab/channel.hpp"

namespace tracelab {

struct PgfValue {
  std::complex<double> value;
  double error_bound = 0.0;  // rigorous bound on |value - true value|
};

// Probability generating function with truncation-error accounting.
//
// Coefficients are a (possibly truncated) pmf; `discarded` is the exact mass
// beyond the truncation point. The (kappa, alpha) decay bound
// p_j <= kappa e^{-alpha j} turns the discarded mass into a rigorous
// evaluation error bound away from |z| = 1. Builtins with geometric tails also
// carry a closed rational form which evaluates to machine precision.
class Pgf {
 public:
  Pgf(std::vector<double> coeffs, double discarded, double kappa, double alpha,
      std::optional<RationalForm> form);

  // Lower bound on the convergence radius used for domain checks.
  double radius() const;

  PgfValue eval(std::complex<double> z) const;         // closed form if present
  PgfValue eval_series(std::complex<double> z) const;  // always the series

  double derivative_at_one() const;
  std::complex<double> derivative(std::complex<double> z) const;

  std::size_t truncation_point() const { return coeffs_.size(); }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double discarded_mass() const { return discarded_; }
  const std::optional<RationalForm>& closed_form() const { return form_; }

 private:
  std::vector<double> coeffs_;
  double discarded_;
  double kappa_, alpha_;
  std::optional<RationalForm> form_;
};

// g_M of the channel, truncated so the discarded mass is <= trunc_eps
// (exact, zero discard, for finite-support laws). trunc_eps in (0, 1e-6].
Pgf pgf_of_m(const ChannelSpec& spec, double trunc_eps);

// g_W with W(j) = Pr[j+1 in R] / E[|R|]; throws validation_error when
// E[|R|] = 0.
Pgf pgf_of_w(const ChannelSpec& spec, double trunc_eps);

}  // namespace tracelab

#include "tracelab/pgf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tracelab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Pgf::Pgf(std::vector<double> coeffs, double discarded, double kappa,
         double alpha, std::optional<RationalForm> form)
    : coeffs_(std::move(coeffs)),
      discarded_(discarded),
      kappa_(kappa),
      alpha_(alpha),
      form_(form) {
  if (coeffs_.empty()) throw std::invalid_argument("Pgf: empty coefficients");
}

double Pgf::radius() const {
  if (form_) {
    return form_->c > 1e-300 ? 1.0 / form_->c : kInf;
  }
  if (discarded_ == 0.0) return kInf;  // complete polynomial
  return std::exp(alpha_);
}

PgfValue Pgf::eval(std::complex<double> z) const {
  if (!(std::abs(z) < radius())) {
    throw std::domain_error("Pgf::eval: |z| outside the convergence radius");
  }
  if (form_) {
    const std::complex<double> v =
        (form_->a + form_->b * z) / (1.0 - form_->c * z);
    return {v, 1e-14 * (1.0 + std::abs(v))};
  }
  return eval_series(z);
}

PgfValue Pgf::eval_series(std::complex<double> z) const {
  const double az = std::abs(z);
  std::complex<double> acc = 0.0;
  for (std::size_t j = coeffs_.size(); j-- > 0;) {
    acc = acc * z + coeffs_[j];
  }
  double err;
  if (discarded_ == 0.0) {
    err = 0.0;
  } else if (az <= 1.0) {
    err = discarded_;
  } else {
    // sum_{j >= T} kappa e^{-alpha j} |z|^j, geometric with ratio r < 1
    const double r = az * std::exp(-alpha_);
    if (!(r < 1.0)) {
      throw std::domain_error("Pgf::eval_series: tail bound diverges at |z|");
    }
    const double T = static_cast<double>(coeffs_.size());
    err = kappa_ * std::exp(T * std::log(r)) / (1.0 - r);
  }
  err += 1e-15 * static_cast<double>(coeffs_.size()) * (1.0 + std::abs(acc));
  return {acc, err};
}

double Pgf::derivative_at_one() const {
  if (form_) {
    const double d = 1.0 - form_->c;
    return (form_->b + form_->a * form_->c) / (d * d);
  }
  double acc = 0.0;
  for (std::size_t j = coeffs_.size(); j-- > 1;) {
    acc += static_cast<double>(j) * coeffs_[j];
  }
  return acc;
}

std::complex<double> Pgf::derivative(std::complex<double> z) const {
  if (form_) {
    const std::complex<double> d = 1.0 - form_->c * z;
    return (form_->b + form_->a * form_->c) / (d * d);
  }
  std::complex<double> acc = 0.0;
  for (std::size_t j = coeffs_.size(); j-- > 1;) {
    acc = acc * z + static_cast<double>(j) * coeffs_[j];
  }
  return acc;
}

Pgf pgf_of_m(const ChannelSpec& spec, double trunc_eps) {
  if (!(trunc_eps > 0.0) || !(trunc_eps <= 1e-6)) {
    throw std::invalid_argument("pgf_of_m: trunc_eps must lie in (0, 1e-6]");
  }
  const auto& cert = spec.tail_certificate();
  if (spec.finite_support()) {
    return Pgf(spec.m_pmf(spec.max_m()), 0.0, cert.kappa, cert.alpha,
               spec.gm_closed_form());
  }
  int T = 1;
  while (spec.m_tail(T + 1) > trunc_eps) ++T;
  return Pgf(spec.m_pmf(T), spec.m_tail(T + 1), cert.kappa, cert.alpha,
             spec.gm_closed_form());
}

Pgf pgf_of_w(const ChannelSpec& spec, double trunc_eps) {
  if (!(trunc_eps > 0.0) || !(trunc_eps <= 1e-6)) {
    throw std::invalid_argument("pgf_of_w: trunc_eps must lie in (0, 1e-6]");
  }
  const double e_r = spec.mean_r();
  if (!(e_r > 0.0)) {
    throw validation_error("pgf_of_w: degenerate channel with E[|R|] = 0");
  }
  const auto& cert = spec.tail_certificate();
  // W(j) = r(j+1)/e_r <= Pr[M >= j+1]/e_r <= (kappa e^{-alpha}/e_r) e^{-alpha j}
  const double kappa_w = cert.kappa * std::exp(-cert.alpha) / e_r;

  int K;       // highest replication position retained
  double rem;  // discarded W mass
  if (spec.finite_support()) {
    K = spec.max_m();
    rem = 0.0;
  } else {
    K = 1;
    while (spec.replication_profile(K).tail_remainder / e_r > trunc_eps) ++K;
    rem = spec.replication_profile(K).tail_remainder / e_r;
  }
  const auto prof = spec.replication_profile(K);
  std::vector<double> w(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    w[static_cast<std::size_t>(k - 1)] = prof.r[static_cast<std::size_t>(k - 1)] / e_r;
  }
  return Pgf(std::move(w), rem, kappa_w, cert.alpha, spec.gw_closed_form());
}

}  // namespace tracelab

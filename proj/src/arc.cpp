#include "tracelab/arc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace tracelab {

namespace {

std::complex<double> poly_on_circle(std::span<const int> coeffs, double phi) {
  const std::complex<double> w = std::polar(1.0, phi);
  std::complex<double> acc = 0.0;
  for (std::size_t j = coeffs.size(); j-- > 0;) {
    acc = acc * w + static_cast<double>(coeffs[j]);
  }
  return acc;
}

// One Newton solve of g(z) = target from the given start; empty optional on
// stagnation or when z leaves the safe disk.
std::optional<std::complex<double>> newton_solve(const Pgf& gm,
                                                 std::complex<double> z,
                                                 std::complex<double> target,
                                                 double tol, double z_cap) {
  for (int it = 0; it < 40; ++it) {
    const std::complex<double> f = gm.eval(z).value - target;
    if (std::abs(f) <= tol) return z;
    const std::complex<double> df = gm.derivative(z);
    if (std::abs(df) < 1e-14) return std::nullopt;
    z -= f / df;
    if (!(std::abs(z) < z_cap) || !std::isfinite(z.real()) ||
        !std::isfinite(z.imag())) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

ArcMaxResult arc_max(std::span<const int> coeffs, const ArcSpec& arc) {
  if (!(arc.L > 0.0)) throw std::invalid_argument("arc_max: L must be positive");
  bool nonzero = false;
  for (int a : coeffs) {
    if (a < -1 || a > 1) {
      throw std::invalid_argument("arc_max: coefficients must lie in {-1,0,1}");
    }
    nonzero = nonzero || a != 0;
  }
  if (!nonzero) throw std::invalid_argument("arc_max: all-zero coefficients");

  const double phi_max = std::numbers::pi / arc.L;
  int grid = arc.grid_points > 0
                 ? arc.grid_points
                 : std::max<int>(1024, 64 * static_cast<int>(coeffs.size()));
  if (grid < 16) {
    throw std::invalid_argument("arc_max: grid_points must be >= 16");
  }

  // |A| on the arc is a trigonometric polynomial of degree < coeffs.size();
  // this resolution does not skip peaks at the sizes we handle.
  double best_phi = 0.0;
  double best = -1.0;
  for (int g = 0; g <= grid; ++g) {
    const double phi = -phi_max + 2.0 * phi_max * g / grid;
    const double v = std::abs(poly_on_circle(coeffs, phi));
    if (v > best) {
      best = v;
      best_phi = phi;
    }
  }

  // Local ternary refinement between the grid neighbours of the best point.
  const double h = 2.0 * phi_max / grid;
  double lo = std::max(-phi_max, best_phi - h);
  double hi = std::min(phi_max, best_phi + h);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (std::abs(poly_on_circle(coeffs, m1)) <
        std::abs(poly_on_circle(coeffs, m2))) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const double phi_ref = 0.5 * (lo + hi);
  const double v_ref = std::abs(poly_on_circle(coeffs, phi_ref));
  if (v_ref > best) {
    best = v_ref;
    best_phi = phi_ref;
  }

  return {std::polar(1.0, best_phi), best_phi, best};
}

InversionResult invert_on_arc(const Pgf& gm, double phi, double tol) {
  if (!(tol > 0.0) || !(tol <= 1e-8)) {
    throw std::invalid_argument("invert_on_arc: tol must lie in (0, 1e-8]");
  }
  const double z_cap = std::min(gm.radius() * 0.999, 1e6);

  std::complex<double> z = 1.0;
  if (phi == 0.0) return {z, 0.0, 0};

  // Inner Newton tolerance well below the requested one so the final honest
  // residual check has headroom.
  const double inner_tol = std::max(tol * 1e-2, 5e-15);

  double t = 0.0;
  double h = 1.0;
  int steps = 0;
  int retries = 0;
  while (t < 1.0) {
    const double t_next = std::min(1.0, t + h);
    const auto target = std::polar(1.0, phi * t_next);
    const auto sol = newton_solve(gm, z, target, inner_tol, z_cap);
    if (sol) {
      z = *sol;
      t = t_next;
      ++steps;
      h = std::min(1.0, h * 2.0);
    } else {
      h *= 0.5;
      if (++retries > 60 || h < 1e-9) {
        throw convergence_error(
            "invert_on_arc: Newton continuation exhausted its budget at phi=" +
            std::to_string(phi));
      }
    }
  }

  const auto final_eval = gm.eval(z);
  const double residual =
      std::abs(final_eval.value - std::polar(1.0, phi)) + final_eval.error_bound;
  if (residual > tol) {
    throw convergence_error("invert_on_arc: residual above tolerance at phi=" +
                            std::to_string(phi));
  }
  return {z, residual, steps};
}

InversionResult invert_on_arc(const ChannelSpec& spec, double phi, double tol) {
  const Pgf gm = pgf_of_m(spec, 1e-14);
  return invert_on_arc(gm, phi, tol);
}

ArcBoundReport arc_quadratic_bound_check(const ChannelSpec& spec,
                                         std::span<const double> phis,
                                         double tol) {
  const Pgf gm = pgf_of_m(spec, 1e-14);
  const Pgf gw = pgf_of_w(spec, 1e-14);

  ArcBoundReport report;
  report.gw_min = 1.0;
  report.gw_all_ok = true;
  for (double phi : phis) {
    ArcBoundRow row;
    row.phi = phi;
    const auto inv = invert_on_arc(gm, phi, tol);
    row.z = inv.z;
    row.abs_z = std::abs(inv.z);
    row.residual = inv.residual;
    row.ratio = phi == 0.0 ? 0.0 : (row.abs_z - 1.0) / (phi * phi);
    row.gw_abs = std::abs(gw.eval(inv.z).value);
    report.rows.push_back(row);
    report.fitted_cprime = std::max(report.fitted_cprime, row.ratio);
    report.gw_min = std::min(report.gw_min, row.gw_abs);
    if (row.gw_abs >= 0.5) {
      report.gw_ok_below = std::max(report.gw_ok_below, std::abs(phi));
    } else {
      report.gw_all_ok = false;
    }
  }
  return report;
}

}  // namespace tracelab

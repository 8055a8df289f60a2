#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tracelab/channel.hpp"
#include "tracelab/pgf.hpp"

namespace tracelab {

// The arc {e^{i phi} : |phi| <= pi/L} on the unit circle.
struct ArcSpec {
  double L = 1.0;
  int grid_points = 0;  // 0 => max(1024, 64 * coefficient count)
};

struct ArcMaxResult {
  std::complex<double> w_star;
  double phi_star = 0.0;
  double max_abs = 0.0;
};

// Maximum of |A(w)|, A(w) = sum_j a_j w^j with a_j in {-1,0,1}, over the arc.
// Uniform grid plus local ternary refinement; the reported value is attained
// at w_star, so it never exceeds the true maximum.
ArcMaxResult arc_max(std::span<const int> coeffs, const ArcSpec& arc);

struct InversionResult {
  std::complex<double> z;
  double residual = 0.0;  // |g_M(z) - e^{i phi}| including evaluation error
  int steps = 0;          // accepted continuation steps
};

// Solves g_M(z) = e^{i phi} for the branch continuously connected to z = 1,
// by Newton continuation along the homotopy target e^{i phi t}, t: 0 -> 1,
// with step halving. Throws convergence_error once the step budget is spent.
InversionResult invert_on_arc(const Pgf& gm, double phi, double tol);
InversionResult invert_on_arc(const ChannelSpec& spec, double phi, double tol);

struct ArcBoundRow {
  double phi = 0.0;
  std::complex<double> z;
  double abs_z = 0.0;
  double ratio = 0.0;   // (|z_phi| - 1) / phi^2, 0 at phi = 0
  double gw_abs = 0.0;  // |g_W(z_phi)|
  double residual = 0.0;
};

struct ArcBoundReport {
  std::vector<ArcBoundRow> rows;
  double fitted_cprime = 0.0;  // max ratio over the grid
  double gw_min = 0.0;
  double gw_ok_below = 0.0;  // largest |phi| below which |g_W| >= 1/2 held
  bool gw_all_ok = false;
};

// Checks 1 <= |z_phi| <= 1 + c' phi^2 and |g_W(z_phi)| >= 1/2 on a grid of
// phi values; reports the fitted c' (max ratio) per grid.
ArcBoundReport arc_quadratic_bound_check(const ChannelSpec& spec,
                                         std::span<const double> phis,
                                         double tol = 1e-10);

}  // namespace tracelab

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcbf/simulation.hpp"

// Property checks shared by `pcbf selftest` and the acceptance suite. Every
// oracle here is independent of the code path it checks: brute-force search,
// finite differences, or a conserved quantity.
namespace pcbf::checks {

struct SubsetStats {
  int samples = 0;
  /// H* <= 0 while h > 0.
  int violations = 0;
  int hstar_nonpositive = 0;
  int errors = 0;
  double seconds = 0.0;
};

/// Draws states from the scenario box and tests h > 0 => H* > 0.
SubsetStats subset_property(const Scenario& sc, int samples, std::uint64_t seed);

struct DerivativeStats {
  /// Indexed by CaseLabel.
  std::array<int, 3> checked{};
  std::array<int, 3> failed{};
  int skipped_transition = 0;
  /// Largest |analytic - fd| / max(1e-3, 1e-2 |fd|).
  double worst_ratio = 0.0;
};

/// Compares dH*/dt from the affine derivative with a central difference of H*
/// (step dt) along u = mu + delta, at states taken from logged runs. States
/// within two control steps of a case change are skipped, as are those where
/// the case or the maximizer count differs at t - dt, t, t + dt.
DerivativeStats derivative_oracle(const Scenario& sc, const std::vector<const SimLog*>& logs,
                                  int per_label, double input_scale, std::uint64_t seed,
                                  double dt = 1e-4);

struct QpStats {
  int instances = 0;
  int mismatches = 0;
  double worst_error = 0.0;
};

/// Random feasible instances with m <= 4 inputs and at most 4 rows, some of
/// them slacked, solved by the filter and by a shrinking dense grid.
QpStats qp_oracle(int instances, std::uint64_t seed);

struct PathStats {
  bool identity_exact = true;
  /// Largest ||dp/dtau - f - g mu|| / (1 + ||f||).
  double ode_residual = 0.0;
  /// Largest ||p(tau; t, x) - p(tau; s, p(s; t, x))|| / (1 + ||p||).
  double semigroup = 0.0;
  /// Largest elementwise FD error over max(1e-5, 1e-4 ||dp/dx||); pass is <= 1.
  double sensitivity_ratio = 0.0;
  /// Satellite only: relative energy drift over one orbit of the zero-control path.
  double energy_drift = 0.0;
};

PathStats path_contracts(const Scenario& sc, int samples, std::uint64_t seed);

/// Brute-force solution of min |u - mu|^2 + sum_soft w s^2. A dense grid
/// that recentres and shrinks searches the multipliers l >= 0 of the dual,
/// and u = mu - A^T l / 2 is recovered from the best grid point.
ControlVector grid_search_qp(const ControlVector& mu, const std::vector<AffineConstraint>& rows);

}  // namespace pcbf::checks

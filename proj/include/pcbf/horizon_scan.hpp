#pragma once

#include <memory>
#include <vector>

#include "pcbf/path.hpp"

namespace pcbf {

/// Number of fine sub-intervals per coarse interval in the second scan level.
inline constexpr int kFineFactor = 50;

/// Samples of h along p(.; t, x) at tau_j = t + j T / N, j = 0..N.
struct HorizonGrid {
  double t = 0.0;
  double horizon = 0.0;
  int intervals = 0;
  std::vector<PathEvaluation> samples;
  std::shared_ptr<const PathFlow> flow;
  std::shared_ptr<const ConstraintFunction> constraint;

  double spacing() const { return horizon / intervals; }
  double end_time() const { return t + horizon; }
};

/// One element of the maximizer set M(t, x) paired with R(tau; t, x).
struct MaximizerEntry {
  double tau = 0.0;
  double h_value = 0.0;
  double dh_dtau = 0.0;
  bool at_start = false;
  bool at_end = false;
  double root_eta = 0.0;
  bool root_is_self = true;
  /// h(t, x) > 0 and no upcrossing precedes tau; root_eta is then t.
  bool already_unsafe = false;
};

/// M(t, x): nonempty, strictly increasing in tau. The first entry is M*.
struct MaximizerSet {
  std::vector<MaximizerEntry> entries;

  std::size_t cardinality() const { return entries.size(); }
  const MaximizerEntry& first() const { return entries.front(); }
};

struct RootSearch {
  double eta = 0.0;
  bool already_unsafe = false;
};

HorizonGrid scan(const PathFunction& path, std::shared_ptr<const ConstraintFunction> h, double t,
                 const StateVector& x, double horizon, int intervals);

HorizonGrid scan(std::shared_ptr<const PathFlow> flow, std::shared_ptr<const ConstraintFunction> h,
                 double horizon, int intervals);

/// Extracts local maximizers of h along the path: interior grid maxima refined by
/// golden-section search, first-of-plateau times, and the horizon endpoints
/// when h is nonincreasing into them. Each entry gets its preceding root.
MaximizerSet find_maximizers(const HorizonGrid& grid, double refine_tol, double root_tol);

/// R(tau; t, x): tau itself when h(tau, p(tau)) <= 0, otherwise the last
/// upcrossing zero of h at or before tau.
RootSearch find_root_before(const HorizonGrid& grid, double tau, double root_tol);

}  // namespace pcbf

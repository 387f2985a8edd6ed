#include "pcbf/horizon_scan.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcbf/scalar_search.hpp"

namespace pcbf {

namespace {

double sample_time(double t, double horizon, int intervals, int j) {
  if (j == intervals) return t + horizon;
  return t + horizon * static_cast<double>(j) / static_cast<double>(intervals);
}

bool plateau_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

struct Sample {
  double tau;
  double h;
};

class HAlong {
 public:
  explicit HAlong(const HorizonGrid& grid) : grid_(grid) {}
  double operator()(double tau) const {
    return grid_.constraint->value(tau, grid_.flow->state(tau));
  }

 private:
  const HorizonGrid& grid_;
};

// Fine samples strictly inside (a, b), kFineFactor - 1 of them.
void append_fine(const HAlong& h, double a, double b, std::vector<Sample>& out) {
  for (int i = 1; i < kFineFactor; ++i) {
    const double tau = a + (b - a) * static_cast<double>(i) / kFineFactor;
    out.push_back({tau, h(tau)});
  }
}

}  // namespace

HorizonGrid scan(const PathFunction& path, std::shared_ptr<const ConstraintFunction> h, double t,
                 const StateVector& x, double horizon, int intervals) {
  return scan(path.flow(t, x), std::move(h), horizon, intervals);
}

HorizonGrid scan(std::shared_ptr<const PathFlow> flow, std::shared_ptr<const ConstraintFunction> h,
                 double horizon, int intervals) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("scan: horizon must be positive, got " + std::to_string(horizon));
  }
  if (intervals < 50) {
    throw ConfigError("scan: need at least 50 grid intervals, got " + std::to_string(intervals));
  }
  if (!flow || !h) throw ConfigError("scan: null flow or constraint");
  HorizonGrid grid;
  grid.t = flow->start_time();
  grid.horizon = horizon;
  grid.intervals = intervals;
  grid.flow = std::move(flow);
  grid.constraint = std::move(h);
  grid.samples.reserve(static_cast<std::size_t>(intervals) + 1);
  for (int j = 0; j <= intervals; ++j) {
    grid.samples.push_back(
        evaluate_along(*grid.flow, *grid.constraint, sample_time(grid.t, horizon, intervals, j)));
  }
  return grid;
}

RootSearch find_root_before(const HorizonGrid& grid, double tau, double /*root_tol*/) {
  if (!(tau >= grid.t) || tau > grid.end_time()) {
    throw DomainError("root search: tau outside the horizon");
  }
  const HAlong h(grid);
  const double h_tau = h(tau);
  if (h_tau <= 0.0) return {tau, false};

  const double near = 0.5 * grid.constraint->h_max();
  Sample right{tau, h_tau};
  // Walk back over the coarse grid. Intervals near zero are re-sampled so
  // that a short negative dip between two positive samples is not missed.
  for (int j = grid.intervals; j >= 0; --j) {
    const PathEvaluation& s = grid.samples[static_cast<std::size_t>(j)];
    if (s.tau >= right.tau) continue;
    const Sample left{s.tau, s.h_value};
    std::vector<Sample> seq;
    if (left.h < 0.0 || std::abs(left.h) <= near || std::abs(right.h) <= near) {
      seq.push_back(left);
      append_fine(h, left.tau, right.tau, seq);
      seq.push_back(right);
      for (std::size_t i = seq.size() - 1; i > 0; --i) {
        if (seq[i - 1].h < 0.0 && seq[i].h >= 0.0) {
          // Bisection runs to machine precision, which meets root_tol unless
          // the crossing is so steep that no double does.
          const ScalarPoint root = bisect_upcrossing(h, seq[i - 1].tau, seq[i].tau, seq[i].h);
          return {root.x, false};
        }
      }
    }
    right = left;
  }
  return {grid.t, true};
}

MaximizerSet find_maximizers(const HorizonGrid& grid, double refine_tol, double root_tol) {
  const HAlong h(grid);
  const double near = 0.5 * grid.constraint->h_max();
  const int n = grid.intervals;
  const auto& coarse = grid.samples;
  auto hc = [&](int j) { return coarse[static_cast<std::size_t>(j)].h_value; };

  // Coarse intervals to re-sample: both sides of every coarse local maximum
  // candidate and of every sample close to the safe-set boundary.
  std::vector<char> refine(static_cast<std::size_t>(n), 0);
  for (int j = 0; j <= n; ++j) {
    const bool left_ok = j == 0 || hc(j - 1) <= hc(j);
    const bool right_ok = j == n || hc(j + 1) <= hc(j);
    if ((left_ok && right_ok) || std::abs(hc(j)) <= near) {
      if (j > 0) refine[static_cast<std::size_t>(j - 1)] = 1;
      if (j < n) refine[static_cast<std::size_t>(j)] = 1;
    }
  }
  std::vector<Sample> seq;
  seq.reserve(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    seq.push_back({coarse[static_cast<std::size_t>(j)].tau, hc(j)});
    if (j < n && refine[static_cast<std::size_t>(j)]) {
      append_fine(h, coarse[static_cast<std::size_t>(j)].tau,
                  coarse[static_cast<std::size_t>(j + 1)].tau, seq);
    }
  }

  const double t0 = grid.t;
  const double t1 = grid.end_time();
  const std::size_t last = seq.size() - 1;
  std::vector<MaximizerEntry> found;
  std::size_t a = 0;
  while (a <= last) {
    std::size_t b = a;
    while (b < last && plateau_equal(seq[b + 1].h, seq[a].h)) ++b;
    const bool lower_left = a == 0 || seq[a - 1].h < seq[a].h;
    const bool lower_right = b == last || seq[b + 1].h < seq[b].h;
    if (lower_left && lower_right) {
      MaximizerEntry e;
      if (a != b) {
        // First-of-plateau.
        e.tau = seq[a].tau;
        e.h_value = seq[a].h;
        e.at_start = a == 0;
      } else if (a == 0) {
        if (coarse.front().dh_dtau > 0.0) {
          // h rises out of t but the first sample is already past the peak.
          const ScalarPoint p = golden_section_maximize(h, t0, seq[1].tau, refine_tol);
          e.tau = p.x;
          e.h_value = p.fx;
        } else {
          e.tau = t0;
          e.h_value = seq[0].h;
          e.at_start = true;
        }
      } else if (a == last) {
        if (coarse.back().dh_dtau < 0.0) {
          const ScalarPoint p = golden_section_maximize(h, seq[last - 1].tau, t1, refine_tol);
          e.tau = p.x;
          e.h_value = p.fx;
        } else {
          e.tau = t1;
          e.h_value = seq[last].h;
          e.at_end = true;
        }
      } else {
        const ScalarPoint p =
            golden_section_maximize(h, seq[a - 1].tau, seq[a + 1].tau, refine_tol);
        if (p.fx >= seq[a].h) {
          e.tau = p.x;
          e.h_value = p.fx;
        } else {
          e.tau = seq[a].tau;
          e.h_value = seq[a].h;
        }
      }
      found.push_back(e);
    }
    a = b + 1;
  }

  std::sort(found.begin(), found.end(),
            [](const MaximizerEntry& l, const MaximizerEntry& r) { return l.tau < r.tau; });
  MaximizerSet out;
  for (const MaximizerEntry& e : found) {
    if (!out.entries.empty() && e.tau - out.entries.back().tau <= refine_tol) continue;
    out.entries.push_back(e);
  }
  for (MaximizerEntry& e : out.entries) {
    e.dh_dtau = evaluate_along(*grid.flow, *grid.constraint, e.tau).dh_dtau;
    const RootSearch r = find_root_before(grid, e.tau, root_tol);
    e.root_eta = r.eta;
    e.already_unsafe = r.already_unsafe;
    e.root_is_self = !r.already_unsafe && r.eta == e.tau;
  }
  return out;
}

}  // namespace pcbf

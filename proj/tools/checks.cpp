#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace pcbf::checks {

SubsetStats subset_property(const Scenario& sc, int samples, std::uint64_t seed) {
  const PcbfContext ctx = make_pcbf_context(sc);
  std::mt19937_64 rng(seed);
  SubsetStats st;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < samples; ++i) {
    const StateSample s = sample_state(sc, rng);
    ++st.samples;
    try {
      const PcbfValue v = eval_pcbf(s.t, s.x, ctx);
      const double h = sc.constraint->value(s.t, s.x);
      if (v.h_star <= 0.0) ++st.hstar_nonpositive;
      if (v.h_star <= 0.0 && h > 0.0) ++st.violations;
    } catch (const Error&) {
      ++st.errors;
    }
  }
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

namespace {

struct Probe {
  double h_star;
  CaseLabel label;
  std::size_t count;
};

Probe probe(const PcbfContext& ctx, double t, const StateVector& x) {
  const PcbfValue v = eval_pcbf(t, x, ctx);
  return {v.h_star, v.case_label, v.maximizers.cardinality()};
}

int label_index(CaseLabel c) { return static_cast<int>(c); }

}  // namespace

DerivativeStats derivative_oracle(const Scenario& sc, const std::vector<const SimLog*>& logs,
                                  int per_label, double input_scale, std::uint64_t seed,
                                  double dt) {
  const PcbfContext ctx = make_pcbf_context(sc);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DerivativeStats st;

  for (const SimLog* log : logs) {
    const auto& recs = log->records;
    if (recs.size() < 5) continue;
    std::vector<CaseLabel> labels(recs.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
      labels[k] = probe(ctx, recs[k].t, recs[k].x).label;
    }
    std::vector<std::size_t> order(recs.size() - 4);
    std::iota(order.begin(), order.end(), std::size_t{2});
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t k : order) {
      const CaseLabel label = labels[k];
      if (st.checked[label_index(label)] >= per_label) continue;
      bool steady = true;
      for (std::size_t j = k - 2; j <= k + 2; ++j) steady = steady && labels[j] == label;
      if (!steady) {
        ++st.skipped_transition;
        continue;
      }
      const double t = recs[k].t;
      const StateVector& x = recs[k].x;
      const PcbfValue v = eval_pcbf(t, x, ctx);
      const AffineDerivative d = derivative_affine(v.maximizers.first(), v, t, x, ctx);
      const ControlVector mu = ctx.path->nominal_control(t, x);
      ControlVector u = mu;
      for (int i = 0; i < u.size(); ++i) u(i) += input_scale * normal(rng);

      const Probe plus = probe(ctx, t + dt, rk4_step(*sc.model, t, x, u, dt));
      const Probe minus = probe(ctx, t - dt, rk4_step(*sc.model, t, x, u, -dt));
      if (plus.label != label || minus.label != label ||
          plus.count != v.maximizers.cardinality() || minus.count != v.maximizers.cardinality()) {
        ++st.skipped_transition;
        continue;
      }
      const double analytic = d.constant + d.row.dot(u - mu);
      const double fd = (plus.h_star - minus.h_star) / (2.0 * dt);
      const double ratio = std::abs(analytic - fd) / std::max(1e-3, 1e-2 * std::abs(fd));
      st.worst_ratio = std::max(st.worst_ratio, ratio);
      ++st.checked[label_index(label)];
      if (ratio > 1.0) ++st.failed[label_index(label)];
    }
  }
  return st;
}

ControlVector grid_search_qp(const ControlVector& mu, const std::vector<AffineConstraint>& rows) {
  constexpr int kPoints = 11;
  const int k = static_cast<int>(rows.size());
  const int m = static_cast<int>(mu.size());
  if (k == 0) return mu;
  Eigen::MatrixXd A(k, m);
  Eigen::VectorXd b(k), soft(k);
  for (int r = 0; r < k; ++r) {
    A.row(r) = rows[static_cast<std::size_t>(r)].row;
    b(r) = rows[static_cast<std::size_t>(r)].bound;
    const auto& w = rows[static_cast<std::size_t>(r)].slack_weight;
    soft(r) = w ? 1.0 / (4.0 * *w) : 0.0;
  }
  const Eigen::VectorXd lin = A * mu - b;
  // g(l) = -|A^T l|^2 / 4 + l . (A mu - b) - sum l_i^2 / (4 w_i), maximized over l >= 0.
  auto dual = [&](const Eigen::VectorXd& l) {
    return -0.25 * (A.transpose() * l).squaredNorm() + l.dot(lin) - l.dot(soft.cwiseProduct(l));
  };

  Eigen::VectorXd best = Eigen::VectorXd::Zero(k);
  double best_value = dual(best);
  double half = 1.0;
  std::vector<int> idx(static_cast<std::size_t>(k));
  Eigen::VectorXd l(k);
  for (int round = 0; round < 2000 && half > 1e-9; ++round) {
    const Eigen::VectorXd center = best;
    const double cell = 2.0 * half / (kPoints - 1);
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      for (int i = 0; i < k; ++i) {
        l(i) = std::max(0.0, center(i) + cell * (idx[static_cast<std::size_t>(i)] - (kPoints - 1) / 2));
      }
      const double v = dual(l);
      if (v > best_value) {
        best_value = v;
        best = l;
      }
      int i = 0;
      while (i < k && ++idx[static_cast<std::size_t>(i)] == kPoints) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == k) break;
    }
    const double moved = (best - center).cwiseAbs().maxCoeff();
    if (moved <= 0.5 * half) {
      half *= 0.5;
    } else if (moved >= 0.99 * half) {
      half *= 2.0;
    }
  }
  return mu - 0.5 * A.transpose() * best;
}

QpStats qp_oracle(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QpStats st;
  for (int n = 0; n < instances; ++n) {
    const int m = dim(rng);
    const int k = dim(rng);
    ControlVector mu(m), feasible(m);
    for (int i = 0; i < m; ++i) {
      mu(i) = 2.0 * normal(rng);
      feasible(i) = normal(rng);
    }
    std::vector<AffineConstraint> rows;
    for (int r = 0; r < k; ++r) {
      AffineConstraint c;
      c.row = ControlRow(m);
      for (int i = 0; i < m; ++i) c.row(i) = normal(rng);
      c.bound = c.row.dot(feasible) + 0.05 + 0.45 * unit(rng);
      if (r > 0 && unit(rng) < 0.3) c.slack_weight = 1.0 + 99.0 * unit(rng);
      rows.push_back(c);
    }
    std::stable_partition(rows.begin(), rows.end(), [](const AffineConstraint& c) { return c.hard(); });

    const FilterResult solved = solve_min_deviation(mu, rows);
    const ControlVector brute = grid_search_qp(mu, rows);
    const double err = solved.feasible ? (solved.u - brute).cwiseAbs().maxCoeff()
                                       : std::numeric_limits<double>::infinity();
    st.worst_error = std::max(st.worst_error, err);
    ++st.instances;
    if (!(err <= 2e-3)) ++st.mismatches;
  }
  return st;
}

PathStats path_contracts(const Scenario& sc, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const PathFunction& path = *sc.path;
  const DynamicsModel& model = *sc.model;
  const double T = sc.cfg.horizon;
  PathStats st;

  for (int n = 0; n < samples; ++n) {
    const StateSample s = sample_state(sc, rng);
    const auto flow = path.flow(s.t, s.x);
    const int dim = static_cast<int>(s.x.size());
    if (!(flow->state(s.t).array() == s.x.array()).all()) st.identity_exact = false;
    if (!flow->sensitivity(s.t).isIdentity(0.0)) st.identity_exact = false;

    const double tau = s.t + T * unit(rng);
    const StateVector p = flow->state(tau);
    const StateVector f = model.drift(tau, p);
    const StateVector field = f + model.input_matrix(tau, p) * path.nominal_control(tau, p);
    st.ode_residual =
        std::max(st.ode_residual, (flow->tau_derivative(tau) - field).norm() / (1.0 + f.norm()));

    const double sigma = s.t + (tau - s.t) * unit(rng);
    const StateVector split = path.evaluate(tau, sigma, flow->state(sigma));
    st.semigroup = std::max(st.semigroup, (p - split).norm() / (1.0 + p.norm()));

    if (n < 20) {
      const StateMatrix phi = flow->sensitivity(tau);
      const double tol = std::max(1e-5, 1e-4 * phi.norm());
      for (int j = 0; j < dim; ++j) {
        const double eps = 1e-6 * std::max(1.0, std::abs(s.x(j)));
        StateVector xp = s.x, xm = s.x;
        xp(j) += eps;
        xm(j) -= eps;
        const StateVector col = (path.evaluate(tau, s.t, xp) - path.evaluate(tau, s.t, xm)) / (2.0 * eps);
        st.sensitivity_ratio =
            std::max(st.sensitivity_ratio, (col - phi.col(j)).cwiseAbs().maxCoeff() / tol);
      }
    }
  }

  if (sc.cfg.scenario == ScenarioId::Satellite) {
    const double mu = sc.cfg.mu_grav;
    const double e0 = orbital_energy(sc.x0, mu);
    const double a = -mu / (2.0 * e0);
    const double period = 2.0 * std::numbers::pi * std::sqrt(a * a * a / mu);
    const auto flow = path.flow(0.0, sc.x0);
    for (int k = 1; k <= 100; ++k) {
      const StateVector p = flow->state(period * k / 100.0);
      st.energy_drift = std::max(st.energy_drift, std::abs(orbital_energy(p, mu) - e0) / std::abs(e0));
    }
  }
  return st;
}

}  // namespace pcbf::checks

#include "pcbf/safety_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcbf {

AffineConstraint build_cbf_constraint(double h_value, const AffineDerivative& deriv,
                                      const ClassKFunction& alpha, const ControlVector& mu,
                                      std::optional<double> slack_weight) {
  AffineConstraint c;
  c.row = deriv.row;
  c.bound = alpha(-h_value) - deriv.constant + deriv.row.dot(mu.transpose());
  c.slack_weight = slack_weight;
  return c;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// min 1/2 z' diag(hdiag) z + c' z  subject to  normals.col(i)' z >= rhs(i).
struct DiagonalQp {
  VectorXd hdiag;
  VectorXd c;
  MatrixXd normals;
  VectorXd rhs;
};

struct QpSolution {
  VectorXd z;
  std::vector<int> active;
  VectorXd multipliers;  // aligned with `active`
  bool feasible = false;
};

// Dual active-set method of Goldfarb and Idnani. It starts from the
// unconstrained minimizer and adds the lowest-index violated constraint at
// each outer step, so no feasible starting point is needed.
QpSolution solve_dual_active_set(const DiagonalQp& qp) {
  const int nz = static_cast<int>(qp.hdiag.size());
  const int nc = static_cast<int>(qp.normals.cols());
  const VectorXd hinv = qp.hdiag.cwiseInverse();
  const double inf = std::numeric_limits<double>::infinity();

  QpSolution sol;
  sol.z = -hinv.cwiseProduct(qp.c);
  std::vector<int>& act = sol.active;
  std::vector<double> lam;

  for (int outer = 0; outer <= 4 * nc + 4; ++outer) {
    int p = -1;
    for (int i = 0; i < nc; ++i) {
      const double slack = qp.normals.col(i).dot(sol.z) - qp.rhs(i);
      if (slack < -1e-12 * (1.0 + std::abs(qp.rhs(i)))) {
        p = i;
        break;
      }
    }
    if (p < 0) {
      sol.multipliers = Eigen::Map<const VectorXd>(lam.data(), static_cast<int>(lam.size()));
      sol.feasible = true;
      return sol;
    }
    const VectorXd np = qp.normals.col(p);
    double lam_p = 0.0;
    bool added = false;
    for (int inner = 0; inner <= nc + 1 && !added; ++inner) {
      const int q = static_cast<int>(act.size());
      VectorXd dz = hinv.cwiseProduct(np);
      VectorXd r = VectorXd::Zero(q);
      if (q > 0) {
        MatrixXd n_act(nz, q);
        for (int j = 0; j < q; ++j) n_act.col(j) = qp.normals.col(act[static_cast<std::size_t>(j)]);
        const MatrixXd hinv_n = hinv.asDiagonal() * n_act;
        const MatrixXd gram = n_act.transpose() * hinv_n;
        r = gram.ldlt().solve(hinv_n.transpose() * np);
        dz -= hinv_n * r;
      }

      double t1 = inf;
      int drop = -1;
      for (int j = 0; j < q; ++j) {
        if (r(j) > 1e-14) {
          const double ratio = lam[static_cast<std::size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      double t2 = inf;
      const double curvature = dz.dot(np);
      if (dz.norm() > 1e-13 * (1.0 + hinv.cwiseProduct(np).norm()) && curvature > 0.0) {
        t2 = -(np.dot(sol.z) - qp.rhs(p)) / curvature;
      }
      if (t1 == inf && t2 == inf) {
        sol.feasible = false;
        return sol;
      }
      const double step = std::min(t1, t2);
      if (t2 < inf) sol.z += step * dz;
      for (int j = 0; j < q; ++j) lam[static_cast<std::size_t>(j)] -= step * r(j);
      lam_p += step;
      if (t2 <= t1) {
        act.push_back(p);
        lam.push_back(lam_p);
        added = true;
      } else {
        act.erase(act.begin() + drop);
        lam.erase(lam.begin() + drop);
      }
    }
    if (!added) break;
  }
  sol.feasible = false;
  return sol;
}

bool hard_rows_hold(const std::vector<AffineConstraint>& cs, const ControlVector& u) {
  for (const AffineConstraint& c : cs) {
    if (c.hard() && c.row.dot(u.transpose()) > c.bound + 1e-9 * (1.0 + std::abs(c.bound))) {
      return false;
    }
  }
  return true;
}

FilterResult infeasible_result(const ControlVector& mu, std::size_t slacks) {
  FilterResult r;
  r.u = mu;
  r.feasible = false;
  r.slack_values.assign(slacks, 0.0);
  return r;
}

}  // namespace

FilterResult solve_min_deviation(const ControlVector& mu,
                                 const std::vector<AffineConstraint>& constraints) {
  const int m = static_cast<int>(mu.size());
  std::size_t n_soft = 0;
  bool seen_soft = false;
  for (const AffineConstraint& c : constraints) {
    if (c.row.size() != m) throw DomainError("filter: constraint row has wrong dimension");
    if (c.hard() && seen_soft) throw DomainError("filter: hard constraints must precede slacked ones");
    if (!c.hard()) {
      if (!(*c.slack_weight > 0.0)) throw ConfigError("filter: slack weight must be positive");
      seen_soft = true;
      ++n_soft;
    }
  }

  FilterResult res;
  if (constraints.size() == 1 && n_soft == 0) {
    const AffineConstraint& c = constraints.front();
    const double excess = c.row.dot(mu.transpose()) - c.bound;
    res.u = mu;
    if (excess > 0.0) {
      const double nrm2 = c.row.squaredNorm();
      if (nrm2 == 0.0) return infeasible_result(mu, 0);
      res.u = mu - c.row.transpose() * (excess / nrm2);
      res.active_set.push_back(0);
      res.kkt_residual = 0.0;
    }
    res.deviation = (res.u - mu).norm();
    return res;
  }

  const int nc = static_cast<int>(constraints.size());
  const int nz = m + static_cast<int>(n_soft);
  DiagonalQp qp;
  qp.hdiag = VectorXd::Ones(nz);
  qp.c = VectorXd::Zero(nz);
  qp.c.head(m) = -mu;
  qp.normals = MatrixXd::Zero(nz, nc);
  qp.rhs = VectorXd::Zero(nc);
  int soft_index = 0;
  for (int i = 0; i < nc; ++i) {
    const AffineConstraint& c = constraints[static_cast<std::size_t>(i)];
    qp.normals.col(i).head(m) = -c.row.transpose();
    qp.rhs(i) = -c.bound;
    if (!c.hard()) {
      qp.hdiag(m + soft_index) = *c.slack_weight;
      qp.normals(m + soft_index, i) = 1.0;
      ++soft_index;
    }
  }

  const QpSolution sol = solve_dual_active_set(qp);
  if (!sol.feasible) return infeasible_result(mu, n_soft);
  res.u = sol.z.head(m);
  if (!hard_rows_hold(constraints, res.u)) return infeasible_result(mu, n_soft);
  res.slack_values.resize(n_soft);
  for (std::size_t j = 0; j < n_soft; ++j) res.slack_values[j] = sol.z(m + static_cast<int>(j));
  res.active_set = sol.active;
  std::sort(res.active_set.begin(), res.active_set.end());

  VectorXd stationarity = qp.hdiag.cwiseProduct(sol.z) + qp.c;
  for (std::size_t j = 0; j < sol.active.size(); ++j) {
    stationarity -= sol.multipliers(static_cast<int>(j)) * qp.normals.col(sol.active[j]);
  }
  res.kkt_residual = stationarity.cwiseAbs().maxCoeff();
  res.deviation = (res.u - mu).norm();
  return res;
}

EcbfFilter::EcbfFilter(std::shared_ptr<const DynamicsModel> model,
                       std::shared_ptr<const ConstraintFunction> h, double k1, double k2)
    : model_(std::move(model)), h_(std::move(h)), k1_(k1), k2_(k2) {
  if (!model_ || !h_) throw ConfigError("ecbf: null model or constraint");
  if (!(k1 > 0.0) || !(k2 > 0.0) || k1 * k1 < 4.0 * k2) {
    throw ConfigError("ecbf: gains must give real negative characteristic roots");
  }
}

double EcbfFilter::psi(double t, const StateVector& x) const {
  return h_->grad_t(t, x) + h_->grad_x(t, x).dot(model_->drift(t, x).transpose());
}

AffineConstraint EcbfFilter::constraint(double t, const StateVector& x) const {
  const int n = static_cast<int>(x.size());
  StateRow grad_psi(n);
  StateVector xp = x;
  for (int i = 0; i < n; ++i) {
    const double dx = std::max(1e-6, 1e-7 * std::abs(x(i)));
    xp(i) = x(i) + dx;
    const double up = psi(t, xp);
    xp(i) = x(i) - dx;
    const double dn = psi(t, xp);
    xp(i) = x(i);
    grad_psi(i) = (up - dn) / (2.0 * dx);
  }
  const double dt = 1e-5 * std::max(1.0, std::abs(t));
  const double psi_t = (psi(t + dt, x) - psi(t - dt, x)) / (2.0 * dt);
  const double psi_0 = psi(t, x);

  AffineConstraint c;
  c.row = grad_psi * model_->input_matrix(t, x);
  c.bound = -(psi_t + grad_psi.dot(model_->drift(t, x).transpose()) + k1_ * psi_0 +
              k2_ * h_->value(t, x));
  return c;
}

FilterResult EcbfFilter::filter(double t, const StateVector& x, const ControlVector& mu) const {
  return solve_min_deviation(mu, {constraint(t, x)});
}

}  // namespace pcbf

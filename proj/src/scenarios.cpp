#include "pcbf/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pcbf/horizon_scan.hpp"

namespace pcbf {

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::IntersectionCross:
      return "intersection_cross";
    case ScenarioId::IntersectionLeftTurn:
      return "intersection_left_turn";
    case ScenarioId::Satellite:
      return "satellite";
  }
  return "?";
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Pcbf:
      return "pcbf";
    case ControllerKind::Ecbf:
      return "ecbf";
    case ControllerKind::None:
      return "none";
    case ControllerKind::Nominal:
      return "nominal";
  }
  return "?";
}

ScenarioId parse_scenario_id(const std::string& s) {
  for (ScenarioId id :
       {ScenarioId::IntersectionCross, ScenarioId::IntersectionLeftTurn, ScenarioId::Satellite}) {
    if (s == to_string(id)) return id;
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

ControllerKind parse_controller_kind(const std::string& s) {
  for (ControllerKind k :
       {ControllerKind::Pcbf, ControllerKind::Ecbf, ControllerKind::None, ControllerKind::Nominal}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown controller '" + s + "'");
}

// ---------------------------------------------------------------------------
// Lanes

namespace {

class StraightLane final : public Lane {
 public:
  StraightLane(Eigen::Vector2d origin, Eigen::Vector2d direction)
      : origin_(std::move(origin)), dir_(std::move(direction)) {}
  Eigen::Vector2d position(double s) const override { return origin_ + s * dir_; }
  Eigen::Vector2d tangent(double) const override { return dir_; }

 private:
  Eigen::Vector2d origin_;
  Eigen::Vector2d dir_;
};

class LeftTurnLane final : public Lane {
 public:
  explicit LeftTurnLane(double w)
      : w_(w), radius_(3.0 * w), center_(-2.0 * w, -2.0 * w), arc_len_(radius_ * std::numbers::pi / 2) {}

  Eigen::Vector2d position(double s) const override {
    if (s < 0.0) return {w_, -2.0 * w_ + s};
    if (s <= arc_len_) {
      const double th = s / radius_;
      return center_ + radius_ * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    return {-2.0 * w_ - (s - arc_len_), w_};
  }

  Eigen::Vector2d tangent(double s) const override {
    if (s < 0.0) return {0.0, 1.0};
    if (s <= arc_len_) {
      const double th = s / radius_;
      return {-std::sin(th), std::cos(th)};
    }
    return {-1.0, 0.0};
  }

 private:
  double w_;
  double radius_;
  Eigen::Vector2d center_;
  double arc_len_;
};

}  // namespace

std::shared_ptr<const Lane> straight_lane(const Eigen::Vector2d& origin,
                                          const Eigen::Vector2d& direction) {
  return std::make_shared<StraightLane>(origin, direction);
}

std::shared_ptr<const Lane> left_turn_lane(double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("left-turn lane: half width must be positive");
  return std::make_shared<LeftTurnLane>(half_width);
}

std::vector<double> conflict_arc_lengths(ScenarioId id, double w) {
  switch (id) {
    case ScenarioId::IntersectionCross:
      // Car 1 on y = -w eastbound, car 2 on x = w northbound.
      return {w, -w};
    case ScenarioId::IntersectionLeftTurn:
      // The arc meets y = -w where sin(theta) = 1/3.
      return {w * (2.0 * std::sqrt(2.0) - 2.0), 3.0 * w * std::asin(1.0 / 3.0)};
    case ScenarioId::Satellite:
      break;
  }
  throw ConfigError("conflict arc lengths requested for a non-intersection scenario");
}

void validate_lane(const Lane& lane, double s_lo, double s_hi) {
  constexpr int kSamples = 400;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / kSamples;
    const Eigen::Vector2d tan = lane.tangent(s);
    if (std::abs(tan.norm() - 1.0) > 1e-9) {
      throw ConfigError("lane is not unit-speed at s = " + std::to_string(s));
    }
    const double ds = 1e-6;
    const Eigen::Vector2d fd = (lane.position(s + ds) - lane.position(s - ds)) / (2.0 * ds);
    if ((fd - tan).norm() > 1e-5) {
      throw ConfigError("lane tangent does not match its position at s = " + std::to_string(s));
    }
  }
}

// ---------------------------------------------------------------------------
// Cars

StateVector CarPairModel::drift(double, const StateVector& x) const {
  StateVector f(4);
  f << x(1), 0.0, x(3), 0.0;
  return f;
}

InputMatrix CarPairModel::input_matrix(double, const StateVector&) const {
  InputMatrix g = InputMatrix::Zero(4, 2);
  g(1, 0) = 1.0;
  g(3, 1) = 1.0;
  return g;
}

LaneSeparation::LaneSeparation(std::shared_ptr<const Lane> l1, std::shared_ptr<const Lane> l2,
                               double rho)
    : l1_(std::move(l1)), l2_(std::move(l2)), rho_(rho) {
  if (!(rho > 0.0)) throw ConfigError("lane separation: rho must be positive");
}

double LaneSeparation::value(double, const StateVector& x) const {
  return rho_ - (l1_->position(x(0)) - l2_->position(x(2))).norm();
}

double LaneSeparation::grad_t(double, const StateVector&) const { return 0.0; }

StateRow LaneSeparation::grad_x(double, const StateVector& x) const {
  const Eigen::Vector2d d = l1_->position(x(0)) - l2_->position(x(2));
  const double r = d.norm();
  StateRow g = StateRow::Zero(4);
  if (r == 0.0) return g;
  const Eigen::Vector2d n = d / r;
  g(0) = -n.dot(l1_->tangent(x(0)));
  g(2) = n.dot(l2_->tangent(x(2)));
  return g;
}

// ---------------------------------------------------------------------------
// Two-body

TwoBodyModel::TwoBodyModel(double mu_grav) : mu_grav_(mu_grav) {
  if (!(mu_grav > 0.0)) throw ConfigError("two-body: gravitational parameter must be positive");
}

StateVector TwoBodyModel::drift(double, const StateVector& x) const {
  const Eigen::Vector3d r = x.head<3>();
  const double rn = r.norm();
  StateVector f(6);
  f.head<3>() = x.segment<3>(3);
  f.tail<3>() = -mu_grav_ / (rn * rn * rn) * r;
  return f;
}

InputMatrix TwoBodyModel::input_matrix(double, const StateVector&) const {
  InputMatrix g = InputMatrix::Zero(6, 3);
  g.bottomRows<3>().setIdentity();
  return g;
}

double orbital_energy(const StateVector& x, double mu_grav) {
  return 0.5 * x.segment<3>(3).squaredNorm() - mu_grav / x.head<3>().norm();
}

StateVector rk4_step(const DynamicsModel& model, double t, const StateVector& x,
                     const ControlVector& u, double h) {
  const StateVector k1 = model.vector_field(t, x, u);
  const StateVector k2 = model.vector_field(t + 0.5 * h, x + 0.5 * h * k1, u);
  const StateVector k3 = model.vector_field(t + 0.5 * h, x + 0.5 * h * k2, u);
  const StateVector k4 = model.vector_field(t + h, x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

DebrisEphemeris::DebrisEphemeris(double mu_grav, const StateVector& state, double t_ref,
                                 double t_lo, double t_hi) {
  if (!(t_lo <= t_ref && t_ref <= t_hi)) throw ConfigError("debris: t_ref outside the table");
  const TwoBodyModel model(mu_grav);
  const ControlVector zero = ControlVector::Zero(3);
  const int back = static_cast<int>(std::ceil(t_ref - t_lo));
  const int fwd = static_cast<int>(std::ceil(t_hi - t_ref));
  t_lo_ = t_ref - back;
  t_hi_ = t_ref + fwd;
  pos_.resize(static_cast<std::size_t>(back + fwd + 1));
  vel_.resize(pos_.size());
  auto store = [&](int k, const StateVector& x) {
    pos_[static_cast<std::size_t>(k)] = x.head<3>();
    vel_[static_cast<std::size_t>(k)] = x.segment<3>(3);
  };
  store(back, state);
  StateVector x = state;
  for (int k = 1; k <= fwd; ++k) {
    x = rk4_step(model, t_ref + (k - 1), x, zero, 1.0);
    store(back + k, x);
  }
  x = state;
  for (int k = 1; k <= back; ++k) {
    x = rk4_step(model, t_ref - (k - 1), x, zero, -1.0);
    store(back - k, x);
  }
}

std::size_t DebrisEphemeris::segment(double t) const {
  if (!(t >= t_lo_ && t <= t_hi_)) {
    throw DomainError("debris ephemeris queried at t = " + std::to_string(t) + " outside [" +
                      std::to_string(t_lo_) + ", " + std::to_string(t_hi_) + "]");
  }
  const auto k = static_cast<std::size_t>(std::floor(t - t_lo_));
  return std::min(k, pos_.size() - 2);
}

Eigen::Vector3d DebrisEphemeris::position(double t) const {
  const std::size_t k = segment(t);
  const double s = t - (t_lo_ + static_cast<double>(k));
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * pos_[k] + (s3 - 2 * s2 + s) * vel_[k] +
         (-2 * s3 + 3 * s2) * pos_[k + 1] + (s3 - s2) * vel_[k + 1];
}

Eigen::Vector3d DebrisEphemeris::velocity(double t) const {
  const std::size_t k = segment(t);
  const double s = t - (t_lo_ + static_cast<double>(k));
  const double s2 = s * s;
  return (6 * s2 - 6 * s) * pos_[k] + (3 * s2 - 4 * s + 1) * vel_[k] +
         (-6 * s2 + 6 * s) * pos_[k + 1] + (3 * s2 - 2 * s) * vel_[k + 1];
}

DebrisSeparation::DebrisSeparation(std::shared_ptr<const DebrisEphemeris> debris, double rho)
    : debris_(std::move(debris)), rho_(rho) {
  if (!(rho > 0.0)) throw ConfigError("debris separation: rho must be positive");
}

double DebrisSeparation::value(double t, const StateVector& x) const {
  return rho_ - (x.head<3>() - debris_->position(t)).norm();
}

double DebrisSeparation::grad_t(double t, const StateVector& x) const {
  const Eigen::Vector3d d = x.head<3>() - debris_->position(t);
  const double r = d.norm();
  if (r == 0.0) return 0.0;
  return d.dot(debris_->velocity(t)) / r;
}

StateRow DebrisSeparation::grad_x(double t, const StateVector& x) const {
  const Eigen::Vector3d d = x.head<3>() - debris_->position(t);
  const double r = d.norm();
  StateRow g = StateRow::Zero(6);
  if (r > 0.0) g.head<3>() = -d.transpose() / r;
  return g;
}

// ---------------------------------------------------------------------------
// Assembly

Scenario build_intersection(const ScenarioConfig& cfg) {
  if (cfg.scenario == ScenarioId::Satellite) throw ConfigError("not an intersection scenario");
  const double w = cfg.lane_half_width;
  if (!(w > 0.0)) throw ConfigError("lane_half_width must be positive");
  auto l1 = straight_lane({0.0, -w}, {1.0, 0.0});
  auto l2 = cfg.scenario == ScenarioId::IntersectionCross ? straight_lane({w, 0.0}, {0.0, 1.0})
                                                          : left_turn_lane(w);
  const double reach = std::abs(cfg.z1) + std::abs(cfg.z2) +
                       (std::max(cfg.speed1, cfg.speed2) + 1.0) * (cfg.duration + cfg.horizon);
  validate_lane(*l1, -reach, reach);
  validate_lane(*l2, -reach, reach);

  Scenario s;
  s.cfg = cfg;
  s.model = std::make_shared<CarPairModel>();
  s.constraint = std::make_shared<LaneSeparation>(l1, l2, cfg.rho);
  s.path = analytic_car_path(cfg.gain, {cfg.speed1, cfg.speed2});
  auto path = s.path;
  s.mu = [path](double t, const StateVector& x) { return path->nominal_control(t, x); };
  s.x0 = StateVector(4);
  s.x0 << cfg.z1, cfg.zdot1, cfg.z2, cfg.zdot2;
  s.conflict_arc = conflict_arc_lengths(cfg.scenario, w);
  return s;
}

namespace {

Eigen::Vector3d rotate(const Eigen::Vector3d& v, const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()) * v;
}

}  // namespace

Scenario build_satellite(const ScenarioConfig& cfg) {
  if (cfg.scenario != ScenarioId::Satellite) throw ConfigError("not a satellite scenario");
  if (!(cfg.orbit_radius > 0.0)) throw ConfigError("orbit_radius must be positive");
  if (!(cfg.conjunction_time > 0.0 && cfg.conjunction_time <= cfg.duration)) {
    throw ConfigError("conjunction_time must lie in (0, duration]");
  }
  auto model = std::make_shared<TwoBodyModel>(cfg.mu_grav);
  StateVector x0(6);
  x0 << cfg.orbit_radius, 0.0, 0.0, 0.0, std::sqrt(cfg.mu_grav / cfg.orbit_radius), 0.0;

  // Satellite state at the conjunction, using the simulation's own stepping.
  const ControlVector zero = ControlVector::Zero(3);
  StateVector x = x0;
  double t = 0.0;
  const auto n_steps = static_cast<long>(std::floor(cfg.conjunction_time / cfg.step + 1e-9));
  for (long k = 0; k < n_steps; ++k) {
    x = rk4_step(*model, t, x, zero, cfg.step);
    t = static_cast<double>(k + 1) * cfg.step;
  }
  if (t < cfg.conjunction_time) x = rk4_step(*model, t, x, zero, cfg.conjunction_time - t);

  const Eigen::Vector3d r1 = x.head<3>();
  const Eigen::Vector3d v1 = x.segment<3>(3);
  const Eigen::Vector3d radial = r1.normalized();
  StateVector debris_state(6);
  debris_state.head<3>() = r1 + cfg.miss_distance * radial;
  debris_state.segment<3>(3) = cfg.speed_ratio * rotate(v1, radial, cfg.crossing_angle);
  auto debris = std::make_shared<DebrisEphemeris>(cfg.mu_grav, debris_state, cfg.conjunction_time,
                                                  -2.0, cfg.duration + cfg.horizon + 2.0);

  Scenario s;
  s.cfg = cfg;
  s.model = model;
  s.constraint = std::make_shared<DebrisSeparation>(debris, cfg.rho);
  s.mu = [](double, const StateVector&) { return ControlVector::Zero(3).eval(); };
  s.path = ode_path(model, s.mu, cfg.path_step);
  s.x0 = x0;
  s.debris = debris;

  // The scenario is only meaningful if doing nothing is clearly unsafe.
  double worst = -std::numeric_limits<double>::infinity();
  x = x0;
  for (long k = 0;; ++k) {
    const double tk = static_cast<double>(k) * cfg.step;
    if (tk > cfg.duration + 1e-9) break;
    worst = std::max(worst, s.constraint->value(tk, x));
    x = rk4_step(*model, tk, x, zero, cfg.step);
  }
  if (!(worst > 0.5 * cfg.rho)) {
    throw ConfigError("satellite: zero-control run never comes within rho/2 of the debris (max h = " +
                      std::to_string(worst) + ")");
  }
  return s;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  return cfg.scenario == ScenarioId::Satellite ? build_satellite(cfg) : build_intersection(cfg);
}

StateSample sample_state(const Scenario& sc, std::mt19937_64& rng) {
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const ScenarioConfig& cfg = sc.cfg;
  StateSample s;
  if (cfg.scenario == ScenarioId::Satellite) {
    s.t = uniform(cfg.conjunction_time - cfg.horizon, cfg.conjunction_time + 10.0);
    const Eigen::Vector3d r = sc.debris->position(s.t);
    const Eigen::Vector3d v = sc.debris->velocity(s.t);
    s.x = StateVector(6);
    for (int i = 0; i < 3; ++i) s.x(i) = r(i) + uniform(-1.5, 1.5);
    for (int i = 0; i < 3; ++i) s.x(3 + i) = v(i) + uniform(-0.5, 0.5);
    return s;
  }
  s.t = uniform(0.0, cfg.duration);
  s.x = StateVector(4);
  s.x(0) = sc.conflict_arc[0] + uniform(-20.0, 10.0);
  s.x(1) = uniform(0.0, 1.5 * cfg.speed1);
  s.x(2) = sc.conflict_arc[1] + uniform(-20.0, 10.0);
  s.x(3) = uniform(0.0, 1.5 * cfg.speed2);
  return s;
}

double estimate_gamma(const Scenario& sc, int starts) {
  const ScenarioConfig& cfg = sc.cfg;
  double rate = 0.0;
  StateVector x = sc.x0;
  double t = 0.0;
  const auto total = static_cast<long>(std::llround(cfg.duration / cfg.step));
  const long stride = std::max<long>(1, total / std::max(1, starts));
  for (long k = 0; k <= total; ++k) {
    t = static_cast<double>(k) * cfg.step;
    if (k % stride == 0) {
      const HorizonGrid grid = scan(*sc.path, sc.constraint, t, x, cfg.horizon, cfg.intervals);
      for (const PathEvaluation& e : grid.samples) rate = std::max(rate, e.dh_dtau);
    }
    x = rk4_step(*sc.model, t, x, sc.mu(t, x), cfg.step);
  }
  return 2.0 * rate;
}

}  // namespace pcbf

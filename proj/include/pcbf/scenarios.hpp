#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcbf/path.hpp"

namespace pcbf {

enum class ScenarioId { IntersectionCross, IntersectionLeftTurn, Satellite };
enum class ControllerKind { Pcbf, Ecbf, None, Nominal };

std::string to_string(ScenarioId id);
std::string to_string(ControllerKind kind);
ScenarioId parse_scenario_id(const std::string& s);
ControllerKind parse_controller_kind(const std::string& s);

/// Everything needed to reproduce one run. Units: m and s for the
/// intersection, km and s for the satellite.
struct ScenarioConfig {
  ScenarioId scenario = ScenarioId::IntersectionLeftTurn;
  ControllerKind controller = ControllerKind::Pcbf;

  // [horizon]
  double horizon = 10.0;
  // [grid]
  int intervals = 200;
  double refine_tol = 1e-7;
  double root_tol = 1e-10;
  // [margin]
  double h_max = 4.0;
  // [alpha]
  double gamma = 16.0;
  // [dynamics], shared
  double rho = 4.0;
  // [dynamics], intersection
  double gain = 1.0;
  double speed1 = 5.0;
  double speed2 = 5.0;
  double lane_half_width = 2.0;
  double z1 = 0.0;
  double zdot1 = 5.0;
  double z2 = 0.0;
  double zdot2 = 5.0;
  // [dynamics], satellite
  double mu_grav = 398600.4418;
  double orbit_radius = 6778.0;
  double conjunction_time = 1600.0;
  double miss_distance = 0.05;
  double speed_ratio = 1.01;
  double crossing_angle = 0.06;
  // [sim]
  double duration = 30.0;
  double step = 0.05;
  double path_step = 0.05;
  double slack_weight = 1e3;
  double ecbf_k1 = 2.0;
  double ecbf_k2 = 1.0;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Arc-length parameterized planar lane.
class Lane {
 public:
  virtual ~Lane() = default;
  virtual Eigen::Vector2d position(double s) const = 0;
  virtual Eigen::Vector2d tangent(double s) const = 0;
};

std::shared_ptr<const Lane> straight_lane(const Eigen::Vector2d& origin,
                                          const Eigen::Vector2d& direction);

/// Northbound at x = w, quarter-circle left turn of radius 3w starting at
/// (w, -2w), then westbound at y = w. s = 0 is the start of the arc.
std::shared_ptr<const Lane> left_turn_lane(double half_width);

/// Lane arc lengths {s1, s2} at which the two lanes of an intersection scenario cross.
std::vector<double> conflict_arc_lengths(ScenarioId id, double half_width);

/// Throws ConfigError unless |tangent| = 1 and tangent = d position / ds on [s_lo, s_hi].
void validate_lane(const Lane& lane, double s_lo, double s_hi);

/// Two double-integrator cars: x = [z1, zdot1, z2, zdot2], u = [zddot1, zddot2].
class CarPairModel final : public DynamicsModel {
 public:
  int state_dim() const override { return 4; }
  int input_dim() const override { return 2; }
  StateVector drift(double t, const StateVector& x) const override;
  InputMatrix input_matrix(double t, const StateVector& x) const override;
};

/// h = rho - |l1(z1) - l2(z2)|.
class LaneSeparation final : public ConstraintFunction {
 public:
  LaneSeparation(std::shared_ptr<const Lane> l1, std::shared_ptr<const Lane> l2, double rho);
  double value(double t, const StateVector& x) const override;
  double grad_t(double t, const StateVector& x) const override;
  StateRow grad_x(double t, const StateVector& x) const override;
  double h_max() const override { return rho_; }

 private:
  std::shared_ptr<const Lane> l1_;
  std::shared_ptr<const Lane> l2_;
  double rho_;
};

/// Controlled satellite under two-body gravity with acceleration input.
class TwoBodyModel final : public DynamicsModel {
 public:
  explicit TwoBodyModel(double mu_grav);
  int state_dim() const override { return 6; }
  int input_dim() const override { return 3; }
  StateVector drift(double t, const StateVector& x) const override;
  InputMatrix input_matrix(double t, const StateVector& x) const override;
  double mu_grav() const { return mu_grav_; }

 private:
  double mu_grav_;
};

double orbital_energy(const StateVector& x, double mu_grav);

/// One fixed RK4 step of xdot = f + g u with u held constant.
StateVector rk4_step(const DynamicsModel& model, double t, const StateVector& x,
                     const ControlVector& u, double h);

/// Debris trajectory tabulated on 1 s knots by RK4 and interpolated with
/// cubic Hermite polynomials.
class DebrisEphemeris {
 public:
  DebrisEphemeris(double mu_grav, const StateVector& state, double t_ref, double t_lo,
                  double t_hi);

  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity(double t) const;
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

 private:
  std::size_t segment(double t) const;

  double t_lo_;
  double t_hi_;
  std::vector<Eigen::Vector3d> pos_;
  std::vector<Eigen::Vector3d> vel_;
};

/// h = rho - |r1 - r2(t)|.
class DebrisSeparation final : public ConstraintFunction {
 public:
  DebrisSeparation(std::shared_ptr<const DebrisEphemeris> debris, double rho);
  double value(double t, const StateVector& x) const override;
  double grad_t(double t, const StateVector& x) const override;
  StateRow grad_x(double t, const StateVector& x) const override;
  double h_max() const override { return rho_; }

 private:
  std::shared_ptr<const DebrisEphemeris> debris_;
  double rho_;
};

/// A fully assembled scenario.
struct Scenario {
  ScenarioConfig cfg;
  std::shared_ptr<const DynamicsModel> model;
  std::shared_ptr<const ConstraintFunction> constraint;
  std::shared_ptr<const PathFunction> path;
  ControlLaw mu;
  StateVector x0;
  /// Intersection only: lane arc length of the conflict point per car.
  std::vector<double> conflict_arc;
  /// Satellite only.
  std::shared_ptr<const DebrisEphemeris> debris;
};

Scenario build_intersection(const ScenarioConfig& cfg);
Scenario build_satellite(const ScenarioConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg);

struct StateSample {
  double t = 0.0;
  StateVector x;
};

/// Uniform draw from the scenario's test box (docs/config_schema.md).
/// Intersection: t in [0, duration], z_i within [-20, +10] m of the conflict
/// point, zdot_i in [0, 1.5 v_i]. Satellite: t in [t_c - T, t_c + 10] and the
/// state within 1.5 km and 0.5 km/s per axis of the debris.
StateSample sample_state(const Scenario& scenario, std::mt19937_64& rng);

/// 2 x the largest d/dtau h seen on horizon scans from `starts` points of the
/// nominal closed-loop run.
double estimate_gamma(const Scenario& scenario, int starts);

}  // namespace pcbf

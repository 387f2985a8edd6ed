#include "pcbf/core_model.hpp"

#include <cmath>
#include <string>

namespace pcbf {

MarginFunction::MarginFunction(double h_max, double horizon) : h_max_(h_max), horizon_(horizon) {
  if (!(h_max > 0.0) || !std::isfinite(h_max)) {
    throw ConfigError("margin: h_max must be positive and finite, got " + std::to_string(h_max));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("margin: horizon must be positive and finite, got " +
                      std::to_string(horizon));
  }
}

double MarginFunction::value(double lambda) const {
  const double r = lambda / horizon_;
  return h_max_ * r * r;
}

double MarginFunction::derivative(double lambda) const {
  return 2.0 * h_max_ * lambda / (horizon_ * horizon_);
}

MarginFunction make_default_margin(double h_max, double horizon) {
  return MarginFunction(h_max, horizon);
}

ClassKFunction::ClassKFunction(double sqrt_gain, double linear_gain)
    : sqrt_gain_(sqrt_gain), linear_gain_(linear_gain) {
  if (!(sqrt_gain >= 0.0) || !(linear_gain >= 0.0) || sqrt_gain + linear_gain <= 0.0) {
    throw ConfigError("class-K: gains must be nonnegative and not both zero");
  }
}

double ClassKFunction::value(double s) const {
  const double a = std::abs(s);
  const double v = std::max(sqrt_gain_ * std::sqrt(a), linear_gain_ * a);
  return s < 0.0 ? -v : v;
}

ClassKFunction make_compatible_alpha(const MarginFunction& margin, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("alpha: gamma must be nonnegative and finite");
  }
  const double horizon = margin.horizon();
  const double h_max = margin.h_max();
  // alpha(m(l)) = (2/T) sqrt(h_max * h_max l^2 / T^2) = 2 h_max l / T^2 = m'(l)
  const double sqrt_gain = 2.0 * std::sqrt(h_max) / horizon;
  const double linear_gain = gamma / margin.value(horizon);
  return ClassKFunction(sqrt_gain, linear_gain);
}

}  // namespace pcbf

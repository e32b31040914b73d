#include "chom/scale_config.hpp"

#include "chom/errors.hpp"

#include <cmath>
#include <string>

namespace chom {

void ScaleConfig::validate() const {
  if (n != 2 && n != 3) throw ConfigError("dimension must be 2 or 3, got " + std::to_string(n));
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (!(C0 > 0.0)) throw ConfigError("C0 must be positive");
  if (n == 2) {
    if (!(alpha != 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be nonzero");
    if (!(l0 > 0.0 && l0 < 0.5)) throw ConfigError("l0 must lie in (0, 1/2)");
  }
  if (!(l > 0.0)) throw ConfigError("l must be positive");
  if (!(height > 0.0)) throw ConfigError("height must be positive");
  const ScaleParams p = scale_params(*this);
  if (!(p.a_eps < eps / 4.0)) {
    throw ConfigError("obstacles do not fit their cells: a_eps >= eps/4");
  }
}

ScaleParams scale_params(const ScaleConfig& cfg) {
  ScaleParams p;
  if (cfg.n == 2) {
    const double a2 = cfg.alpha * cfg.alpha;
    p.log_beta = a2 / cfg.eps;
    p.beta = std::exp(p.log_beta);
    p.a_eps = cfg.C0 * cfg.eps * std::exp(-p.log_beta);
  } else {
    const double k = double(cfg.n - 1) / double(cfg.n - 2);
    p.k = k;
    p.a_eps = cfg.C0 * std::pow(cfg.eps, k);
    p.beta = std::pow(cfg.eps, -k);
    p.log_beta = -k * std::log(cfg.eps);
  }
  return p;
}

} // namespace chom

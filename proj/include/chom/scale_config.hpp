#pragma once

#include <optional>

namespace chom {

/// Geometry and critical-scaling parameters of one epsilon-problem.
struct ScaleConfig {
  int n = 2;             ///< space dimension, 2 or 3
  double eps = 0.25;     ///< period of the obstacle array
  double C0 = 1.0;       ///< obstacle size constant
  double alpha = 0.70710678118654752;  ///< n = 2 only; alpha^2 = 1/2 by default
  double l0 = 0.25;      ///< n = 2 only; half-length of the unit obstacle, in (0, 1/2)
  double l = 1.0;        ///< half-width of Gamma_1
  double height = 1.0;   ///< rectangle height

  /// Throws ConfigError when a parameter is out of range.
  void validate() const;
};

/// Critical scales derived from a ScaleConfig.
struct ScaleParams {
  double a_eps = 0.0;    ///< obstacle size
  double beta = 0.0;     ///< reaction scaling of the kinetic term
  double log_beta = 0.0; ///< natural log of beta, kept separately for large alpha^2/eps
  std::optional<double> k;  ///< (n-1)/(n-2); absent for n = 2
};

/// n = 3: a = C0 eps^k, beta = eps^-k, k = 2.
/// n = 2: a = C0 eps exp(-alpha^2/eps), beta = exp(alpha^2/eps).
ScaleParams scale_params(const ScaleConfig& cfg);

} // namespace chom

#include "chom/sources.hpp"

#include "chom/errors.hpp"

#include <cmath>
#include <string>

namespace chom {

namespace {

double parse_amplitude(std::string_view rest, double fallback) {
  if (rest.empty()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(rest), &used);
    if (used != rest.size() || !std::isfinite(v)) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad source amplitude '" + std::string(rest) + "'");
  }
}

} // namespace

SourcePreset parse_source(std::string_view spec, const fem::RectDomain& domain) {
  const auto colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : spec.substr(colon + 1);
  SourcePreset out;
  out.name = std::string(spec);
  if (head == "zero") {
    if (!rest.empty()) throw ConfigError("zero source takes no parameter");
    out.f = [](double, double) { return 0.0; };
    out.nonnegative = true;
  } else if (head == "constant") {
    const double c = parse_amplitude(rest, 1.0);
    out.f = [c](double, double) { return c; };
    out.nonnegative = c >= 0.0;
  } else if (head == "bump") {
    const double a = parse_amplitude(rest, 1.0);
    const double yc = 0.5 * domain.height;
    out.f = [a, yc](double x, double y) {
      return a * std::exp(-20.0 * (x * x + (y - yc) * (y - yc)));
    };
    out.nonnegative = a >= 0.0;
  } else if (head == "sign-changing") {
    const double a = parse_amplitude(rest, 1.0);
    // Ricker profile in x: positive core, negative ring, decays before the corners.
    const double s2 = 0.15 * 0.15 * domain.l * domain.l;
    out.f = [a, s2](double x, double) {
      const double q = x * x / s2;
      return a * (1.0 - 2.0 * q) * std::exp(-q);
    };
  } else {
    throw ConfigError("unknown source preset '" + std::string(spec) + "'");
  }
  return out;
}

} // namespace chom

#pragma once

#include "chom/fem/assembly.hpp"
#include "chom/fem/mesh.hpp"

#include <string>
#include <string_view>

namespace chom {

/// Named right-hand side on the rectangle [-l, l] x [0, height].
struct SourcePreset {
  std::string name;
  fem::Source f;
  bool nonnegative = false;
};

/// "zero", "constant[:c]" (c = 1), "bump[:a]" (a exp(-20 |x - (0, height / 2)|^2), a = 1)
/// or "sign-changing[:a]" (a (1 - 2 q) exp(-q), q = (x / 0.15 l)^2, a = 1).
SourcePreset parse_source(std::string_view spec, const fem::RectDomain& domain);

} // namespace chom

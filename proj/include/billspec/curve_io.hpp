#pragma once

#include "billspec/curve.hpp"

#include <string>

namespace billspec {

// Decimal literals are parsed from their source text at this precision so
// that coefficients such as 0.1 are not routed through binary doubles.
inline constexpr int kCurveDefinitionBits = 4096;

FourierCurve parse_curve_json(const std::string& text);
FourierCurve parse_curve_toml(const std::string& text);
// Chooses the format from the extension (.toml, otherwise JSON).
FourierCurve load_curve(const std::string& path);

std::string curve_to_json(const FourierCurve& curve);

}  // namespace billspec

#pragma once

#include "billspec/curve.hpp"
#include "billspec/curve_io.hpp"

namespace fixtures {

inline billspec::Real dec(const char* s) {
    billspec::PrecisionScope scope(billspec::kCurveDefinitionBits);
    return billspec::Real(std::string_view(s));
}

// ρ = 1 + 0.1 cos 3φ
inline billspec::FourierCurve perturbed_circle() {
    return billspec::FourierCurve(dec("1"), {{3, dec("0.1"), dec("0")}});
}

inline billspec::FourierCurve circle_unit_perimeter() {
    billspec::PrecisionScope scope(billspec::kCurveDefinitionBits);
    return billspec::FourierCurve::circle(1 / billspec::two_pi());
}

}  // namespace fixtures

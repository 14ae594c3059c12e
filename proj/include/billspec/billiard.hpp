#pragma once

#include "billspec/curve.hpp"
#include "billspec/real.hpp"

#include <stdexcept>
#include <string>

namespace billspec {

struct SolverError : std::runtime_error {
    SolverError(const std::string& what, Real residual_)
        : std::runtime_error(what + " (residual " + residual_.str(6) + ")"), residual(std::move(residual_)) {}
    Real residual;
};

// Inner billiard phase point: arclength s and angle r ∈ (0, π) between the
// outgoing chord and the tangent.
struct BirkhoffPoint {
    Real s;
    Real r;
};

// Outer billiard phase point: the point z = m(α) − r·e(α) on the tangent line
// at α, a distance r > 0 behind the tangency. Its image lies at m(α) + r·e(α).
struct EnvelopePoint {
    Real alpha;
    Real r;
};

struct Jacobian2 {
    Real a11, a12, a21, a22;   // ∂(out1, out2)/∂(in1, in2)
    Real det() const { return a11 * a22 - a12 * a21; }
};

// r below this value is still stepped but flagged as glancing.
Real glancing_threshold();

struct InnerStep {
    Real phi1;
    Real r1;
    Real chord;          // |m(φ1) − m(φ)|
    Jacobian2 jac;       // ∂(φ1, r1)/∂(φ, r)
    int iterations = 0;
    Real residual;
    bool glancing = false;
};

// One inner step in tangent-angle variables; φ1 is lifted (φ < φ1 < φ + 2π).
// r ∈ (−π, 0) continues the map analytically through the boundary: the chord
// leaves backwards and φ1 < φ.
InnerStep inner_step_phi(const FourierCurve& curve, const Real& phi, const Real& r, const RealContext& ctx);

BirkhoffPoint billiard_step(const FourierCurve& curve, const BirkhoffPoint& p, const RealContext& ctx);

Real chord_length(const FourierCurve& curve, const Real& s, const Real& s1);
// (∂₁h, ∂₂h) = (−cos r, cos r₁) for h = chord length in arclength variables.
std::pair<Real, Real> chord_gradient(const FourierCurve& curve, const Real& s, const Real& s1);
// (r, r₁): angles of the chord with the tangents at its two ends.
std::pair<Real, Real> incidence_angles(const FourierCurve& curve, const Real& s, const Real& s1);
// ∂r(s, s₁)/∂s₁
Real incidence_twist(const FourierCurve& curve, const Real& s, const Real& s1);

struct DualStep {
    Real alpha1;
    Real r1;
    Jacobian2 jac;       // ∂(α1, r1)/∂(α, r)
    int iterations = 0;
    Real residual;
};

Vec2 envelope_point(const FourierCurve& curve, const EnvelopePoint& p);
DualStep dual_step_ex(const FourierCurve& curve, const Real& alpha, const Real& r, const RealContext& ctx);
EnvelopePoint dual_step(const FourierCurve& curve, const EnvelopePoint& p, const RealContext& ctx);

// (1/sin δ) ∫₀^δ sin v ρ(α+v) dv by quadrature, δ = α1 − α ∈ [0, π).
// This is the distance from the tangency at α1 to the corner where the
// tangents at α and α1 meet.
Real dual_r(const FourierCurve& curve, const Real& alpha, const Real& alpha1);
// Area between the two tangent segments and the arc, δ ∈ (0, π).
Real dual_lagrangian(const FourierCurve& curve, const Real& alpha, const Real& alpha1);

// Generating-function data of one link (a → b) in angle variables.
struct LinkDerivatives {
    Real L;
    Real d1, d2;          // ∂L/∂φa, ∂L/∂φb
    Real h11, h12, h22;   // second derivatives
};

// L = −|m(φb) − m(φa)|
LinkDerivatives inner_link(const CurvePoint& a, const CurvePoint& b, bool with_hessian = true);
// L = area cut off between the tangents at α and α1; with_value = false
// skips the sector integral.
LinkDerivatives outer_link(const FourierCurve& curve, const CurvePoint& a, const CurvePoint& b,
                           bool with_value = true, bool with_hessian = true);

}  // namespace billspec

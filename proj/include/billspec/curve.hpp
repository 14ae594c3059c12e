#pragma once

#include "billspec/real.hpp"
#include "billspec/trig_series.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace billspec {

struct Vec2 {
    Real x;
    Real y;

    Vec2() = default;
    Vec2(Real x_, Real y_) : x(std::move(x_)), y(std::move(y_)) {}

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Real norm() const { return hypot(x, y); }
    Real norm2() const { return x * x + y * y; }
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(const Real& s, const Vec2& a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(const Vec2& a, const Real& s) { return {s * a.x, s * a.y}; }
inline Real dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline Real cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

struct Harmonic {
    int k = 2;
    Real a;
    Real b;
};

// Everything the billiard kernels need at one tangent angle.
struct CurvePoint {
    Real phi;
    Vec2 m;        // position
    Vec2 e;        // unit tangent (cos φ, sin φ)
    Real rho;      // radius of curvature
    Real drho;     // dρ/dφ
};

// Analytic strictly convex curve given by the Fourier series of its radius of
// curvature in the tangent angle φ. The k = 1 harmonic cannot be expressed, so
// every curve closes. Anchored at m(0) = 0 with the tangent along +x.
class FourierCurve {
public:
    FourierCurve(Real c0, std::vector<Harmonic> harmonics);

    static FourierCurve circle(const Real& radius);
    static FourierCurve make_constant_width(const Real& c0, std::vector<Harmonic> odd_harmonics);
    // Ellipse with semi-axes a (along the tangent at φ = 0) and b, its
    // curvature series truncated where the coefficients drop below tail.
    static FourierCurve ellipse(const Real& a, const Real& b, const Real& tail);

    const Real& c0() const;
    const std::vector<Harmonic>& harmonics() const;
    int max_harmonic() const;
    bool is_circle() const { return harmonics().empty(); }

    Real rho(const Real& phi) const;
    Real drho(const Real& phi) const;
    Real curvature(const Real& phi) const { return 1 / rho(phi); }
    Vec2 position(const Real& phi) const;
    static Vec2 tangent(const Real& phi);
    CurvePoint point(const Real& phi) const;

    Real arclength(const Real& phi) const;
    Real total_length() const;
    Real phi_from_arclength(const Real& s) const;

    // ∫κ^e ds = ∫₀^{2π} ρ^{1-e} dφ
    Real curvature_power_integral(const Real& e) const;
    Real enclosed_area() const;
    // ∫_{φ0}^{φ1} m × m' dψ in closed form.
    Real sector_integral(const Real& phi0, const Real& phi1) const;

    FourierCurve rotated(const Real& shift) const;   // ρ(φ + shift)
    FourierCurve scaled(const Real& lambda) const;

    // Precision at which the defining coefficients are held.
    int definition_bits() const;
    std::string canonical_string() const;

private:
    struct Tables;
    struct Data;
    std::shared_ptr<const Tables> tables() const;

    std::shared_ptr<Data> data_;
};

struct CurveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Check ρ > 0: fast coefficient bound, otherwise a dense grid.
bool is_strictly_convex(const Real& c0, const std::vector<Harmonic>& harmonics, int grid = 4096);

}  // namespace billspec

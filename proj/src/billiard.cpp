#include "billspec/billiard.hpp"

#include "billspec/quadrature.hpp"

namespace billspec {

namespace {

Real step_tolerance() { return ldexp(Real(1), -Real::working_bits() + 6); }

}  // namespace

Real glancing_threshold() { return pi() * Real(1e-6); }

InnerStep inner_step_phi(const FourierCurve& curve, const Real& phi, const Real& r, const RealContext& ctx) {
    (void)ctx;
    const Real pi_ = pi();
    if (!(abs(r) < pi_) || r.is_zero()) throw std::invalid_argument("inner_step_phi: r must lie in (-pi, 0) or (0, pi)");
    const bool forward = r > 0;
    const CurvePoint p0 = curve.point(phi);
    const Vec2 dir = FourierCurve::tangent(phi + r);
    // D(u) = (m(φ+u) − m(φ)) × e(φ+r) has one root in (r, r+π), where it
    // decreases; for r < 0 the root lies in (r−π, r) and D increases there
    Real lo = forward ? r : r - pi_, hi = forward ? r + pi_ : r;
    Real u = 2 * r;
    if (!(u > lo && u < hi)) u = (lo + hi) / 2;
    const Real tol = step_tolerance();
    InnerStep out;
    bool converged = false;
    Real D;
    for (int it = 0; it < 300; ++it) {
        CurvePoint pu = curve.point(phi + u);
        D = cross(pu.m - p0.m, dir);
        Real Dp = pu.rho * cross(pu.e, dir);
        if ((D > 0) == forward) lo = u;
        else hi = u;
        out.iterations = it + 1;
        Real step = D / Dp;
        // at the roundoff floor of D the Newton step stops shrinking for small r
        const Real floor = 4 * epsilon() * (p0.m.norm() + pu.m.norm());
        if (abs(D) <= floor) {
            if (step.is_finite() && u - step > lo && u - step < hi) u -= step;
            converged = true;
            break;
        }
        if (D.is_zero() || (step.is_finite() && abs(step) <= tol * max(abs(u), Real(1)))) {
            if (!D.is_zero()) u -= step;
            converged = true;
            break;
        }
        Real next = u - step;
        if (!(next >= lo && next <= hi) || !step.is_finite()) next = (lo + hi) / 2;
        u = std::move(next);
        if (hi - lo <= tol) {
            converged = true;
            break;
        }
    }
    const CurvePoint p1 = curve.point(phi + u);
    out.residual = abs(cross(p1.m - p0.m, dir));
    if (!converged) throw SolverError("inner_step_phi: no convergence", out.residual);
    out.phi1 = phi + u;
    out.r1 = u - r;
    out.glancing = abs(r) < glancing_threshold() || abs(out.r1) < glancing_threshold();
    Vec2 d = p1.m - p0.m;
    out.chord = d.norm();
    const Real sin_r = cross(p0.e, dir);
    const Real sin_r1 = cross(dir, p1.e);
    const Real denom = p1.rho * sin_r1;
    const Real u_r = out.chord / denom;
    const Real u_phi = (out.chord - denom - p0.rho * sin_r) / denom;
    out.jac.a11 = 1 + u_phi;
    out.jac.a12 = u_r;
    out.jac.a21 = u_phi;
    out.jac.a22 = u_r - 1;
    return out;
}

BirkhoffPoint billiard_step(const FourierCurve& curve, const BirkhoffPoint& p, const RealContext& ctx) {
    const Real phi = curve.phi_from_arclength(p.s);
    InnerStep st = inner_step_phi(curve, phi, p.r, ctx);
    const Real L = curve.total_length();
    Real s1 = curve.arclength(st.phi1);
    s1 -= floor(s1 / L) * L;
    return {std::move(s1), std::move(st.r1)};
}

Real chord_length(const FourierCurve& curve, const Real& s, const Real& s1) {
    return (curve.position(curve.phi_from_arclength(s1)) - curve.position(curve.phi_from_arclength(s))).norm();
}

namespace {

struct ChordFrame {
    CurvePoint a, b;
    Vec2 u;
    Real ell;
};

ChordFrame chord_frame(const FourierCurve& curve, const Real& s, const Real& s1) {
    ChordFrame f{curve.point(curve.phi_from_arclength(s)), curve.point(curve.phi_from_arclength(s1)), {}, {}};
    Vec2 d = f.b.m - f.a.m;
    f.ell = d.norm();
    if (f.ell.is_zero()) throw std::invalid_argument("chord endpoints coincide");
    f.u = Vec2(d.x / f.ell, d.y / f.ell);
    return f;
}

}  // namespace

std::pair<Real, Real> chord_gradient(const FourierCurve& curve, const Real& s, const Real& s1) {
    ChordFrame f = chord_frame(curve, s, s1);
    return {-dot(f.a.e, f.u), dot(f.b.e, f.u)};
}

std::pair<Real, Real> incidence_angles(const FourierCurve& curve, const Real& s, const Real& s1) {
    ChordFrame f = chord_frame(curve, s, s1);
    return {atan2(cross(f.a.e, f.u), dot(f.a.e, f.u)), atan2(cross(f.u, f.b.e), dot(f.u, f.b.e))};
}

Real incidence_twist(const FourierCurve& curve, const Real& s, const Real& s1) {
    ChordFrame f = chord_frame(curve, s, s1);
    return cross(f.u, f.b.e) / f.ell;
}

Vec2 envelope_point(const FourierCurve& curve, const EnvelopePoint& p) {
    CurvePoint c = curve.point(p.alpha);
    return c.m - p.r * c.e;
}

DualStep dual_step_ex(const FourierCurve& curve, const Real& alpha, const Real& r, const RealContext& ctx) {
    (void)ctx;
    if (!(r > 0)) throw std::invalid_argument("dual_step: r must be positive");
    const Real pi_ = pi();
    const CurvePoint p0 = curve.point(alpha);
    const Vec2 zp = p0.m + r * p0.e;
    // D(β) = (z' − m(β)) × e(β): positive just after α, negative at α + π
    auto eval = [&](const Real& beta, Real& D, Real& Dp) {
        CurvePoint pb = curve.point(beta);
        Vec2 w = zp - pb.m;
        D = cross(w, pb.e);
        Dp = dot(w, pb.e);
    };
    Real beta = alpha + 2 * atan(r / p0.rho);
    if (!(beta < alpha + pi_)) beta = alpha + pi_ * Real(0.99);
    Real D, Dp;
    Real offset = (beta - alpha) / 4;
    Real lo = alpha + offset;
    for (int i = 0; i < 400; ++i) {
        eval(lo, D, Dp);
        if (D > 0) break;
        offset /= 2;
        lo = alpha + offset;
    }
    if (!(D > 0)) throw SolverError("dual_step: cannot bracket the tangency", abs(D));
    Real hi = alpha + pi_;
    if (!(beta > lo && beta < hi)) beta = (lo + hi) / 2;
    const Real tol = step_tolerance();
    DualStep out;
    bool converged = false;
    for (int it = 0; it < 300; ++it) {
        eval(beta, D, Dp);
        if (D > 0) lo = beta;
        else hi = beta;
        out.iterations = it + 1;
        Real step = D / Dp;
        if (D.is_zero() || (step.is_finite() && abs(step) <= tol * max(abs(beta), Real(1)))) {
            if (!D.is_zero()) beta -= step;
            converged = true;
            break;
        }
        Real next = beta - step;
        if (!(next >= lo && next <= hi) || !step.is_finite()) next = (lo + hi) / 2;
        beta = std::move(next);
        if (hi - lo <= tol) {
            converged = true;
            break;
        }
    }
    const CurvePoint pb = curve.point(beta);
    out.residual = abs(cross(zp - pb.m, pb.e));
    if (!converged) throw SolverError("dual_step: no convergence", out.residual);
    out.alpha1 = beta;
    out.r1 = dot(pb.m - zp, pb.e);
    const Real S = cross(p0.e, pb.e);
    const Real C = dot(p0.e, pb.e);
    const Real db_dr = S / out.r1;
    const Real db_da = (p0.rho * S - r * C) / out.r1;
    out.jac.a11 = db_da;
    out.jac.a12 = db_dr;
    out.jac.a21 = -p0.rho * C - r * S + pb.rho * db_da;
    out.jac.a22 = -C + pb.rho * db_dr;
    return out;
}

EnvelopePoint dual_step(const FourierCurve& curve, const EnvelopePoint& p, const RealContext& ctx) {
    DualStep st = dual_step_ex(curve, p.alpha, p.r, ctx);
    Real a1 = st.alpha1 - floor(st.alpha1 / two_pi()) * two_pi();
    return {std::move(a1), std::move(st.r1)};
}

Real dual_r(const FourierCurve& curve, const Real& alpha, const Real& alpha1) {
    const Real delta = alpha1 - alpha;
    if (delta.is_zero()) return Real(0);
    if (!(delta > 0 && delta < pi())) throw std::invalid_argument("dual_r: need 0 <= alpha1 - alpha < pi");
    const Real tol = ldexp(Real(1), -Real::working_bits() + 8);
    Real integral = integrate([&](const Real& v) { return sin(v) * curve.rho(alpha + v); }, Real(0), delta, tol);
    return integral / sin(delta);
}

Real dual_lagrangian(const FourierCurve& curve, const Real& alpha, const Real& alpha1) {
    const Real delta = alpha1 - alpha;
    if (!(delta > 0 && delta < pi())) throw std::invalid_argument("dual_lagrangian: need 0 < alpha1 - alpha < pi");
    return outer_link(curve, curve.point(alpha), curve.point(alpha1), true, false).L;
}

LinkDerivatives inner_link(const CurvePoint& a, const CurvePoint& b, bool with_hessian) {
    LinkDerivatives out;
    Vec2 d = b.m - a.m;
    Real ell = d.norm();
    Vec2 u(d.x / ell, d.y / ell);
    Vec2 ta = a.rho * a.e;
    Vec2 tb = b.rho * b.e;
    Real ca = dot(ta, u);
    Real cb = dot(tb, u);
    out.L = -ell;
    out.d1 = ca;
    out.d2 = -cb;
    if (!with_hessian) return out;
    Vec2 acc_a = a.drho * a.e + a.rho * a.e.perp();
    Vec2 acc_b = b.drho * b.e + b.rho * b.e.perp();
    out.h11 = dot(acc_a, u) - (ta.norm2() - ca * ca) / ell;
    out.h12 = (dot(ta, tb) - ca * cb) / ell;
    out.h22 = -dot(acc_b, u) - (tb.norm2() - cb * cb) / ell;
    return out;
}

LinkDerivatives outer_link(const FourierCurve& curve, const CurvePoint& a, const CurvePoint& b, bool with_value,
                           bool with_hessian) {
    LinkDerivatives out;
    const Real S = cross(a.e, b.e);
    const Real C = dot(a.e, b.e);
    const Vec2 d = b.m - a.m;
    const Real r0 = cross(d, b.e) / S;
    const Real r1 = cross(a.e, d) / S;
    if (with_value) {
        Real segment = curve.sector_integral(a.phi, b.phi) + cross(b.m, a.m);
        out.L = (r0 * r1 * S - segment) / 2;
    }
    out.d1 = -(r0 * r0) / 2;
    out.d2 = (r1 * r1) / 2;
    if (!with_hessian) return out;
    const Real dr0_da = -a.rho + r0 * C / S;
    const Real dr0_db = (dot(d, b.e) - r0 * C) / S;
    const Real dr1_db = b.rho - r1 * C / S;
    out.h11 = -r0 * dr0_da;
    out.h12 = -r0 * dr0_db;
    out.h22 = r1 * dr1_db;
    return out;
}

}  // namespace billspec

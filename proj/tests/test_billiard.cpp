#include <doctest.h>

#include "fixtures.hpp"

#include "billspec/billiard.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <random>

using namespace billspec;
using fixtures::dec;

namespace {

Real wrap_diff(const Real& a, const Real& b, const Real& period) {
    Real d = a - b;
    d -= round(d / period) * period;
    return abs(d);
}

}  // namespace

TEST_CASE("billiard: circle of perimeter one advances s by r/pi") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::circle_unit_perimeter();
    for (const char* s : {"0", "0.3", "0.95"}) {
        for (const char* r : {"0.01", "1", "3"}) {
            BirkhoffPoint p{Real(s), Real(r)};
            BirkhoffPoint q = billiard_step(c, p, ctx);
            CHECK(wrap_diff(q.s, p.s + p.r / pi(), Real(1)) < ldexp(Real(1), -240));
            CHECK(abs(q.r - p.r) < ldexp(Real(1), -240));
        }
    }
}

TEST_CASE("billiard: perpendicular chords of a constant width curve") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = FourierCurve::make_constant_width(dec("1"), {{3, dec("0.2"), dec("0")}});
    for (const char* phi : {"0", "0.4", "2"}) {
        InnerStep st = inner_step_phi(c, Real(phi), pi() / 2, ctx);
        CHECK(abs(st.phi1 - Real(phi) - pi()) < ldexp(Real(1), -240));
        CHECK(abs(st.r1 - pi() / 2) < ldexp(Real(1), -240));
        CHECK(abs(st.chord - 2) < ldexp(Real(1), -240));
    }
}

TEST_CASE("billiard: time reversal") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    for (const char* r : {"0.05", "0.8", "2.9"}) {
        BirkhoffPoint p{Real("1.7"), Real(r)};
        BirkhoffPoint q = billiard_step(c, p, ctx);
        BirkhoffPoint back = billiard_step(c, {q.s, pi() - q.r}, ctx);
        CHECK(wrap_diff(back.s, p.s, c.total_length()) <= ctx.solver_tol());
        CHECK(abs(back.r - (pi() - p.r)) <= ctx.solver_tol());
    }
}

TEST_CASE("billiard: chord length and gradient") {
    PrecisionScope scope(256);
    Real R("0.8");
    auto circ = FourierCurve::circle(R);
    Real theta("1.2");
    CHECK(abs(chord_length(circ, Real("0.3"), Real("0.3") + R * theta) - 2 * R * sin(theta / 2)) < 1e-70);

    auto c = fixtures::perturbed_circle();
    Real s("0.9"), s1("3.3");
    CHECK(abs(chord_length(c, s, s1) - chord_length(c, s1, s)) < 1e-70);
    CHECK(abs(chord_length(c, s, s1) - (c.position(c.phi_from_arclength(s1)) - c.position(c.phi_from_arclength(s))).norm()) < 1e-70);

    // finite differences with step eps^{1/3}
    Real h = cbrt(epsilon());
    auto [g1, g2] = chord_gradient(c, s, s1);
    Real fd1 = (chord_length(c, s + h, s1) - chord_length(c, s - h, s1)) / (2 * h);
    Real fd2 = (chord_length(c, s, s1 + h) - chord_length(c, s, s1 - h)) / (2 * h);
    CHECK(abs(g1 - fd1) < 1e-40);
    CHECK(abs(g2 - fd2) < 1e-40);
    auto [b1, b2] = chord_gradient(c, s1, s);
    CHECK(abs(g1 - b2) < 1e-70);
    CHECK(abs(g2 - b1) < 1e-70);

    // circle: h = 2R sin((s1 − s)/2R)
    auto [c1, c2] = chord_gradient(circ, Real(0), R * theta);
    CHECK(abs(c2 - cos(theta / 2)) < 1e-70);
    CHECK(abs(c1 + cos(theta / 2)) < 1e-70);

    // closed (1, 7) circle orbit: the gradient of the total length vanishes at every vertex
    const int q = 7;
    Real L = circ.total_length();
    for (int j = 0; j < q; ++j) {
        Real sj = L * j / q;
        Real prev = sj - L / q, next = sj + L / q;
        Real g = chord_gradient(circ, prev, sj).second + chord_gradient(circ, sj, next).first;
        CHECK(abs(g) < 1e-70);
    }
}

TEST_CASE("billiard: twist and boundary twist limit") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> Us(0, 6.28), Ur(0.05, 3.05);
    Real h = ldexp(Real(1), -60);
    for (int i = 0; i < 100; ++i) {
        Real s(Us(rng)), r(Ur(rng));
        Real up = billiard_step(c, {s, r + h}, ctx).s;
        Real dn = billiard_step(c, {s, r - h}, ctx).s;
        Real diff = up - dn;
        diff -= round(diff / c.total_length()) * c.total_length();
        CHECK(diff > 0);
    }
    for (const char* sv : {"0.3", "2.0", "5.1"}) {
        Real s(sv);
        Real v1 = incidence_twist(c, s, s + Real("1e-2"));
        Real v2 = incidence_twist(c, s, s + Real("1e-3"));
        Real v3 = incidence_twist(c, s, s + Real("1e-4"));
        // v(h) = κ/2 + c1 h + c2 h² + ...: eliminate h and h² with ratios 10
        Real r1 = (10 * v2 - v1) / 9;
        Real r2 = (10 * v3 - v2) / 9;
        Real limit = (100 * r2 - r1) / 99;
        Real kappa = 1 / c.rho(c.phi_from_arclength(s));
        CHECK(abs(limit - kappa / 2) / (kappa / 2) <= 1e-6);
    }
}

TEST_CASE("billiard: total action gradient is the telescoped chord gradient") {
    PrecisionScope scope(256);
    auto c = fixtures::perturbed_circle();
    std::vector<Real> s = {Real("0.2"), Real("1.4"), Real("2.3"), Real("3.9"), Real("5.0")};
    const Real L = c.total_length();
    const int q = static_cast<int>(s.size());
    auto total = [&](const std::vector<Real>& v) {
        Real w;
        for (int j = 0; j < q; ++j) w += chord_length(c, v[j], j + 1 < q ? v[j + 1] : v[0] + L);
        return w;
    };
    Real h = cbrt(epsilon());
    for (int j = 0; j < q; ++j) {
        Real prev = j > 0 ? s[j - 1] : s[q - 1] - L;
        Real next = j + 1 < q ? s[j + 1] : s[0] + L;
        Real g = chord_gradient(c, prev, s[j]).second + chord_gradient(c, s[j], next).first;
        auto up = s, dn = s;
        up[j] += h;
        dn[j] -= h;
        Real fd = (total(up) - total(dn)) / (2 * h);
        CHECK(abs(g - fd) <= 1000 * pow(epsilon(), Real(2) / 3));
    }
}

TEST_CASE("billiard: inner step Jacobian and link derivatives against finite differences") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    Real phi("0.7"), r("1.1");
    Real h = ldexp(Real(1), -80);
    InnerStep st = inner_step_phi(c, phi, r, ctx);
    InnerStep sp = inner_step_phi(c, phi + h, r, ctx), sm = inner_step_phi(c, phi - h, r, ctx);
    InnerStep rp = inner_step_phi(c, phi, r + h, ctx), rm = inner_step_phi(c, phi, r - h, ctx);
    CHECK(abs(st.jac.a11 - (sp.phi1 - sm.phi1) / (2 * h)) < 1e-40);
    CHECK(abs(st.jac.a21 - (sp.r1 - sm.r1) / (2 * h)) < 1e-40);
    CHECK(abs(st.jac.a12 - (rp.phi1 - rm.phi1) / (2 * h)) < 1e-40);
    CHECK(abs(st.jac.a22 - (rp.r1 - rm.r1) / (2 * h)) < 1e-40);
    // area preservation of sin r dφ... in φ variables: ρ(φ1) sin r1 det = ρ(φ) sin r
    CHECK(abs(c.rho(st.phi1) * sin(st.r1) * st.jac.det() - c.rho(phi) * sin(r)) < 1e-60);

    Real a("0.4"), b("2.6");
    auto L = [&](const Real& x, const Real& y) { return inner_link(c.point(x), c.point(y)).L; };
    LinkDerivatives ld = inner_link(c.point(a), c.point(b));
    CHECK(abs(ld.L + (c.position(b) - c.position(a)).norm()) < 1e-70);
    CHECK(abs(ld.d1 - (L(a + h, b) - L(a - h, b)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.d2 - (L(a, b + h) - L(a, b - h)) / (2 * h)) < 1e-40);
    auto D1 = [&](const Real& x, const Real& y) { return inner_link(c.point(x), c.point(y)).d1; };
    auto D2 = [&](const Real& x, const Real& y) { return inner_link(c.point(x), c.point(y)).d2; };
    CHECK(abs(ld.h11 - (D1(a + h, b) - D1(a - h, b)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.h12 - (D1(a, b + h) - D1(a, b - h)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.h22 - (D2(a, b + h) - D2(a, b - h)) / (2 * h)) < 1e-40);
}

TEST_CASE("billiard: dual_r formula") {
    PrecisionScope scope(256);
    Real R("1.3");
    auto circ = FourierCurve::circle(R);
    Real delta("0.9");
    CHECK(abs(dual_r(circ, Real("0.2"), Real("0.2") + delta) - R * tan(delta / 2)) < 1e-70);
    CHECK(dual_r(circ, Real(1), Real(1)).is_zero());

    auto c = fixtures::perturbed_circle();
    // ∂₂r(α, α) = ρ(α)/2
    Real alpha("0.6");
    Real eta("1e-20");
    CHECK(abs(dual_r(c, alpha, alpha + eta) / eta - c.rho(alpha) / 2) < 1e-18);

    // quadrature oracle at 50 digits
    using big = boost::multiprecision::cpp_bin_float_50;
    big I = boost::math::quadrature::gauss_kronrod<big, 61>::integrate(
        [](big v) { return sin(v) * (1 + big("0.1") * cos(3 * v)); }, big(0), big(1), 10, big("1e-48"));
    big oracle = I / sin(big(1));
    CHECK(abs(dual_r(c, Real(0), Real(1)) - Real(oracle.str(50))) < 1e-45);

    // the same number is the distance from m(α1) to the corner of the two tangents
    Real a0("0.3"), a1("1.5");
    CurvePoint p0 = c.point(a0), p1 = c.point(a1);
    Real r1 = cross(p0.e, p1.m - p0.m) / cross(p0.e, p1.e);
    CHECK(abs(dual_r(c, a0, a1) - r1) < 1e-70);
    CHECK_THROWS(dual_r(c, Real(0), pi()));
}

TEST_CASE("billiard: dual step") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    Real R("0.9");
    auto circ = FourierCurve::circle(R);
    for (const char* rv : {"0.001", "0.5", "4"}) {
        Real r(rv);
        EnvelopePoint p{Real("0.4"), r};
        EnvelopePoint q = dual_step(circ, p, ctx);
        CHECK(abs(q.alpha - (p.alpha + 2 * atan(r / R))) < 1e-70);
        CHECK(abs(q.r - r) < 1e-70);
        EnvelopePoint q2 = dual_step(circ, q, ctx);
        CHECK(wrap_diff(q2.alpha, p.alpha + 4 * atan(r / R), two_pi()) < 1e-70);
    }

    auto c = fixtures::perturbed_circle();
    Real alpha("2.2"), r("0.7");
    DualStep st = dual_step_ex(c, alpha, r, ctx);
    // the image is the reflection of z through m(α) and lies behind the tangency at α1
    Vec2 z = envelope_point(c, {alpha, r});
    Vec2 zimg = envelope_point(c, {st.alpha1, st.r1});
    Vec2 mid = c.position(alpha);
    CHECK((Vec2(2 * mid.x, 2 * mid.y) - z - zimg).norm() < 1e-70);
    CHECK(((Vec2(2 * mid.x, 2 * mid.y) - zimg) - z).norm() < 1e-70);

    Real h = ldexp(Real(1), -80);
    DualStep ap = dual_step_ex(c, alpha + h, r, ctx), am = dual_step_ex(c, alpha - h, r, ctx);
    DualStep rp = dual_step_ex(c, alpha, r + h, ctx), rm = dual_step_ex(c, alpha, r - h, ctx);
    Jacobian2 J{(ap.alpha1 - am.alpha1) / (2 * h), (rp.alpha1 - rm.alpha1) / (2 * h), (ap.r1 - am.r1) / (2 * h),
                (rp.r1 - rm.r1) / (2 * h)};
    CHECK(abs(J.a11 - st.jac.a11) < 1e-40);
    CHECK(abs(J.a12 - st.jac.a12) < 1e-40);
    CHECK(abs(J.a21 - st.jac.a21) < 1e-40);
    CHECK(abs(J.a22 - st.jac.a22) < 1e-40);
    // r dα∧dr is preserved
    CHECK(abs(st.r1 * J.det() - r) < 1e-40);
}

TEST_CASE("billiard: dual lagrangian") {
    PrecisionScope scope(256);
    Real R("1.1");
    auto circ = FourierCurve::circle(R);
    Real delta("1.3");
    CHECK(abs(dual_lagrangian(circ, Real("0.5"), Real("0.5") + delta) - R * R * (tan(delta / 2) - delta / 2)) < 1e-70);

    // regular circumscribed (1, q) polygon is critical
    const int q = 9;
    Real step = two_pi() / q;
    Real a0(0), h = ldexp(Real(1), -80);
    auto pair = [&](const Real& a) { return dual_lagrangian(circ, a - step, a) + dual_lagrangian(circ, a, a + step); };
    CHECK(abs((pair(a0 + h) - pair(a0 - h)) / (2 * h)) < 1e-40);

    auto c = fixtures::perturbed_circle();
    Real a("0.3"), b("1.9");
    auto L = [&](const Real& x, const Real& y) { return dual_lagrangian(c, x, y); };
    LinkDerivatives ld = outer_link(c, c.point(a), c.point(b));
    CHECK(abs(ld.L - L(a, b)) < 1e-70);
    CHECK(abs(ld.d1 - (L(a + h, b) - L(a - h, b)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.d2 - (L(a, b + h) - L(a, b - h)) / (2 * h)) < 1e-40);
    auto D1 = [&](const Real& x, const Real& y) { return outer_link(c, c.point(x), c.point(y), false).d1; };
    auto D2 = [&](const Real& x, const Real& y) { return outer_link(c, c.point(x), c.point(y), false).d2; };
    CHECK(abs(ld.h11 - (D1(a + h, b) - D1(a - h, b)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.h12 - (D1(a, b + h) - D1(a, b - h)) / (2 * h)) < 1e-40);
    CHECK(abs(ld.h22 - (D2(a, b + h) - D2(a, b - h)) / (2 * h)) < 1e-40);
    CHECK(L(a, b) > 0);
}

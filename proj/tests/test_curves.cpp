#include <doctest.h>

#include "fixtures.hpp"

#include "billspec/curve.hpp"
#include "billspec/curve_io.hpp"
#include "billspec/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <random>

using namespace billspec;
using fixtures::dec;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

big rho_big(const big& phi) { return 1 + big("0.1") * cos(3 * phi); }

}  // namespace

TEST_CASE("curves: circle position, arclength, inversion") {
    PrecisionScope scope(256);
    auto c = FourierCurve::circle(Real(1));
    Real phi("1.3");
    Vec2 m = c.position(phi);
    CHECK(abs(m.x - sin(phi)) < ldexp(Real(1), -250));
    CHECK(abs(m.y - (1 - cos(phi))) < ldexp(Real(1), -250));
    CHECK(abs(c.total_length() - two_pi()) < ldexp(Real(1), -250));
    CHECK(abs(c.arclength(pi() / 2) - pi() / 2) < ldexp(Real(1), -250));
    CHECK(abs(c.phi_from_arclength(pi()) - pi()) < ldexp(Real(1), -248));
}

TEST_CASE("curves: closure and total length of the perturbed circle") {
    PrecisionScope scope(256);
    auto c = fixtures::perturbed_circle();
    Vec2 d = c.position(two_pi()) - c.position(Real(0));
    CHECK(d.norm() <= 10 * epsilon() * c.total_length());
    CHECK(abs(c.total_length() - two_pi()) < ldexp(Real(1), -250));
}

TEST_CASE("curves: position agrees with a 50-digit quadrature of rho e^{i psi}") {
    PrecisionScope scope(256);
    auto c = fixtures::perturbed_circle();
    boost::math::quadrature::tanh_sinh<big> ts;
    for (const char* s : {"1", "2.5", "4.1"}) {
        big phi(s);
        big x = ts.integrate([](big t) { return rho_big(t) * cos(t); }, big(0), phi);
        big y = ts.integrate([](big t) { return rho_big(t) * sin(t); }, big(0), phi);
        Vec2 m = c.position(Real(s));
        CHECK(abs(m.x - Real(x.str(50))) < 1e-45);
        CHECK(abs(m.y - Real(y.str(50))) < 1e-45);
    }
}

TEST_CASE("curves: phi_from_arclength matches bisection and round trips") {
    PrecisionScope scope(200);
    auto c = fixtures::perturbed_circle();
    Real s("2.2");
    Real lo(0), hi = two_pi();
    for (int i = 0; i < 200; ++i) {
        Real mid = (lo + hi) / 2;
        if (c.arclength(mid) < s) lo = mid;
        else hi = mid;
    }
    CHECK(abs(c.phi_from_arclength(s) - lo) < ldexp(Real(1), -190));
    RealContext ctx(200);
    for (const char* p : {"0.1", "3", "6.2"}) {
        Real phi(p);
        CHECK(abs(c.phi_from_arclength(c.arclength(phi)) - phi) <= ctx.solver_tol());
    }
}

TEST_CASE("curves: derivative of arclength is rho at random angles") {
    PrecisionScope scope(256);
    auto c = fixtures::perturbed_circle();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 6.283);
    Real h = ldexp(Real(1), -80);
    for (int i = 0; i < 64; ++i) {
        Real phi(U(rng));
        Real fd = (c.arclength(phi + h) - c.arclength(phi - h)) / (2 * h);
        CHECK(abs(fd - c.rho(phi)) / c.rho(phi) <= 1000 * epsilon() + h * h);
        Real fd2 = (c.rho(phi + h) - c.rho(phi - h)) / (2 * h);
        CHECK(abs(fd2 - c.drho(phi)) < ldexp(Real(1), -150));
    }
}

TEST_CASE("curves: convexity grid and k = 1 exclusion") {
    PrecisionScope scope(128);
    auto c = fixtures::perturbed_circle();
    for (int i = 0; i < 4096; ++i) CHECK_FALSE(c.rho(two_pi() * i / 4096) <= 0);
    CHECK_THROWS_AS(FourierCurve(dec("1"), {{1, dec("0.1"), dec("0")}}), CurveError);
    CHECK_THROWS_AS(FourierCurve(dec("1"), {{2, dec("1.5"), dec("0")}}), CurveError);
    CHECK_THROWS_AS(FourierCurve(dec("-1"), {}), CurveError);
}

TEST_CASE("curves: curvature power integrals") {
    PrecisionScope scope(256);
    Real R("0.7");
    auto circ = FourierCurve::circle(R);
    CHECK(abs(circ.curvature_power_integral(Real(2) / 3) - two_pi() * cbrt(R)) < 1e-70);
    CHECK(abs(circ.curvature_power_integral(Real(1) / 3) - two_pi() * cbrt(R * R)) < 1e-70);

    auto c = fixtures::perturbed_circle();
    Real value = c.curvature_power_integral(Real(2) / 3);
    // independent oracle: adaptive Gauss-Kronrod at 50 digits
    big oracle = boost::math::quadrature::gauss_kronrod<big, 61>::integrate(
        [](big t) { return boost::multiprecision::cbrt(rho_big(t)); }, big(0),
        2 * boost::math::constants::pi<big>(), 15, big("1e-48"));
    CHECK(abs(value - Real(oracle.str(50))) < 1e-44);
}

TEST_CASE("curves: constant width construction") {
    RealContext ctx(256);
    // evaluated with guard bits so that only the construction is tested
    PrecisionScope scope(ctx.mantissa_bits + 64);
    auto c = FourierCurve::make_constant_width(dec("1"), {{3, dec("0.2"), dec("0")}, {5, dec("0.03"), dec("0.01")}});
    for (int i = 0; i < 128; ++i) {
        Real phi = two_pi() * i / 128;
        CHECK(abs(c.rho(phi) + c.rho(phi + pi()) - 2) <= ctx.eps());
    }
    auto round = FourierCurve::make_constant_width(dec("1.5"), {});
    CHECK(round.is_circle());
    CHECK_THROWS_AS(FourierCurve::make_constant_width(dec("1"), {{4, dec("0.1"), dec("0")}}), CurveError);
}

TEST_CASE("curves: enclosed area and sector integral") {
    PrecisionScope scope(256);
    auto circ = FourierCurve::circle(Real(2));
    CHECK(abs(circ.enclosed_area() - 4 * pi()) < 1e-70);
    auto c = fixtures::perturbed_circle();
    // area = (1/2)∫ m × m' over a period; compare with a quadrature of the same integrand
    Real direct = integrate_periodic(
        [&](const Real& t) {
            CurvePoint p = c.point(t);
            return cross(p.m, p.rho * p.e) / 2;
        },
        Real(0), two_pi(), ldexp(Real(1), -200));
    CHECK(abs(c.enclosed_area() - direct) < 1e-70);
    Real a("0.4"), b("2.9");
    Real part = integrate([&](const Real& t) {
        CurvePoint p = c.point(t);
        return cross(p.m, p.rho * p.e);
    }, a, b, ldexp(Real(1), -220));
    CHECK(abs(c.sector_integral(a, b) - part) < 1e-60);
}

TEST_CASE("curves: file formats keep decimal literals exact") {
    auto j = parse_curve_json(R"({"c0": 1.0, "harmonics": [{"k": 3, "a": 0.1, "b": 0.0}]})");
    auto t = parse_curve_toml("c0 = 1.0\n[[harmonics]]\nk = 3\na = 0.1\nb = 0.0\n");
    auto ref = fixtures::perturbed_circle();
    CHECK(j.canonical_string() == ref.canonical_string());
    CHECK(t.canonical_string() == ref.canonical_string());
    auto inline_toml = parse_curve_toml("c0 = 1\nharmonics = [{k = 3, a = 0.1, b = 0}]\n");
    CHECK(inline_toml.canonical_string() == ref.canonical_string());
    auto back = parse_curve_json(curve_to_json(ref));
    CHECK(back.canonical_string() == ref.canonical_string());
    CHECK_THROWS_AS(parse_curve_json(R"({"harmonics": []})"), CurveError);
    CHECK_THROWS_AS(parse_curve_json(R"({"c0": 1, "harmonics": [{"k": 1, "a": 0.1}]})"), CurveError);
}

TEST_CASE("curves: rotation and scaling") {
    PrecisionScope scope(256);
    auto c = fixtures::perturbed_circle();
    Real shift("0.37");
    auto r = c.rotated(shift);
    Real phi("1.1");
    CHECK(abs(r.rho(phi) - c.rho(phi + shift)) < 1e-70);
    auto s = c.scaled(Real(3));
    CHECK(abs(s.total_length() - 3 * c.total_length()) < 1e-70);
}

#include <doctest.h>

#include "billspec/quadrature.hpp"
#include "billspec/real.hpp"
#include "billspec/trig_series.hpp"

#include <thread>

using namespace billspec;

TEST_CASE("real: precision scope is per thread and copies keep precision") {
    PrecisionScope scope(300);
    Real a(1);
    CHECK(a.bits() == 300);
    {
        PrecisionScope inner(128);
        Real b = a;
        CHECK(b.bits() == 300);
        Real c = a + a;
        CHECK(c.bits() == 128);
    }
    int other_bits = 0;
    std::thread t([&] { other_bits = Real().bits(); });
    t.join();
    CHECK(other_bits == 256);
    CHECK(Real::working_bits() == 300);
}

TEST_CASE("real: decimal round trip and constants") {
    PrecisionScope scope(256);
    Real x("0.1");
    CHECK(Real(x.str()) == x);
    CHECK(abs(sin(pi())) < ldexp(Real(1), -250));
    CHECK(abs(pi().to_double() - 3.141592653589793) < 1e-15);
    CHECK_THROWS_AS(Real("0.1x"), std::invalid_argument);
    CHECK_THROWS_AS(RealContext(32), std::invalid_argument);
    RealContext ctx(256);
    CHECK(ctx.eps() < ctx.solver_tol());
    CHECK(ctx.solver_tol() < 1);
}

TEST_CASE("real: mixed arithmetic does not truncate doubles") {
    PrecisionScope scope(128);
    Real x(2);
    CHECK(x * 0.5 == 1);
    CHECK(x + 0.25 == 2.25);
    CHECK(0.5 * x == 1);
}

TEST_CASE("quadrature: gauss-legendre and periodic trapezoid") {
    PrecisionScope scope(256);
    // ∫₀¹ e^x = e - 1
    Real v = integrate([](const Real& x) { return exp(x); }, Real(0), Real(1), ldexp(Real(1), -240));
    CHECK(abs(v - (exp(Real(1)) - 1)) < ldexp(Real(1), -235));
    // ∫₀^{2π} 1/(2 + cos φ) = 2π/√3
    Real w = integrate_periodic([](const Real& x) { return 1 / (2 + cos(x)); }, Real(0), two_pi(),
                                ldexp(Real(1), -200));
    CHECK(abs(w - two_pi() / sqrt(Real(3))) < ldexp(Real(1), -240));
}

TEST_CASE("trig series: fit reproduces a trigonometric polynomial and its integral") {
    PrecisionScope scope(192);
    auto f = [](const Real& x) { return 1 + cos(2 * x) / 3 - sin(5 * x) / 7; };
    TrigSeries t = TrigSeries::fit(f, ldexp(Real(1), -180));
    Real x("0.7");
    CHECK(abs(t(x) - f(x)) < ldexp(Real(1), -180));
    CHECK(abs(t.derivative(x) - (-2 * sin(2 * x) / 3 - 5 * cos(5 * x) / 7)) < ldexp(Real(1), -175));
    Real exact = x + sin(2 * x) / 6 + (cos(5 * x) - 1) / 35;
    CHECK(abs(t.integral(x) - exact) < ldexp(Real(1), -180));
}

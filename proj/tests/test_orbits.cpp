#include <doctest.h>

#include "fixtures.hpp"

#include "billspec/orbits.hpp"

#include <cstdlib>

using namespace billspec;
using fixtures::dec;

namespace {

Problem inner(const FourierCurve& c) { return {c, Table::Inner}; }
Problem outer(const FourierCurve& c) { return {c, Table::Outer}; }

}  // namespace

TEST_CASE("orbits: Birkhoff ordering predicate") {
    PrecisionScope scope(128);
    const Real P = two_pi();
    std::vector<Real> rot;
    for (int j = 0; j < 5; ++j) rot.push_back(P * 2 * j / 5);
    CHECK(is_birkhoff_ordered(rot, 2, P));
    CHECK_FALSE(is_birkhoff_ordered(rot, 1, P));
    std::vector<Real> wiggle(rot);
    wiggle[1] += Real("0.3");
    CHECK(is_birkhoff_ordered(wiggle, 2, P));
    wiggle[1] += Real("2");
    CHECK_FALSE(is_birkhoff_ordered(wiggle, 2, P));
}

TEST_CASE("orbits: circle constrained minimum is the rigid rotation") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    Real R("0.8");
    auto pr = inner(FourierCurve::circle(R));
    for (int q : {3, 7}) {
        for (const char* s : {"0", "0.4"}) {
            auto cm = constrained_minimum(pr, 1, q, Real(s), ctx);
            for (int j = 0; j < q; ++j) CHECK(abs(cm.angles[j] - Real(s) - two_pi() * j / q) < 1e-70);
            CHECK(abs(action_from_F(pr, cm.F) - 2 * q * R * sin(pi() / q)) < 1e-70);
            CHECK(cm.grad_norm <= ctx.solver_tol() * q);
        }
    }
}

TEST_CASE("orbits: two-periodic orbits of a constant width table") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto pr = inner(FourierCurve::make_constant_width(dec("1"), {{3, dec("0.2"), dec("0")}}));
    for (const char* s : {"0", "0.3", "1.7"}) {
        auto cm = constrained_minimum(pr, 1, 2, Real(s), ctx);
        CHECK(abs(action_from_F(pr, cm.F) - 4) < 1e-60);
        CHECK(abs(cm.angles[1] - cm.angles[0] - pi()) < 1e-60);
    }
}

TEST_CASE("orbits: reduced action derivatives match finite differences") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    for (Table t : {Table::Inner, Table::Outer}) {
        Problem pr{c, t};
        Real t0("0.21"), h = ldexp(Real(1), -60);
        auto cm = constrained_minimum(pr, 1, 5, t0, ctx);
        auto plus = constrained_minimum(pr, 1, 5, t0 + h, ctx);
        auto minus = constrained_minimum(pr, 1, 5, t0 - h, ctx);
        CHECK(abs(cm.dF - (plus.F - minus.F) / (2 * h)) < 1e-30);
        CHECK(abs(cm.d2F - (plus.dF - minus.dF) / (2 * h)) < 1e-30);
        for (int j = 1; j < 5; ++j) CHECK(abs(cm.dx[j] - (plus.angles[j] - minus.angles[j]) / (2 * h)) < 1e-30);
    }
}

TEST_CASE("orbits: circle pair is flagged at the precision floor") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    Real R("1.3");
    for (Table t : {Table::Inner, Table::Outer}) {
        Problem pr{FourierCurve::circle(R), t};
        auto pair = find_orbit_pair(pr, 1, 6, ctx);
        CHECK(pair.precision_floor);
        CHECK(pair.delta.is_zero());
        Real expect = t == Table::Inner ? 12 * R * sin(pi() / 6) : R * R * (6 * tan(pi() / 6) - pi());
        CHECK(abs(pair.min.action - expect) < 1e-60);
    }
}

TEST_CASE("orbits: perturbed circle pair is critical, ordered and reproducible") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    for (Table t : {Table::Inner, Table::Outer}) {
        Problem pr{c, t};
        for (int q : {3, 4, 7}) {
            PairOptions coarse;
            coarse.grid = 32;
            PairOptions fine;
            fine.grid = 64;
            auto a = find_orbit_pair(pr, 1, q, ctx, coarse);
            auto b = find_orbit_pair(pr, 1, q, ctx, fine);
            CHECK_FALSE(a.precision_floor);
            CHECK(a.delta > 0);
            CHECK(abs(a.delta - b.delta) <= Real("1e-6") * a.delta);
            for (const auto* o : {&a.min, &a.minimax}) {
                CHECK(o->grad_norm <= ctx.solver_tol() * q);
                CHECK(is_birkhoff_ordered(o->angles, 1, two_pi()));
            }
            // the inner minimizing orbit is the longest one, the outer one has the least area
            const bool expected_order = t == Table::Inner ? a.min.action > a.minimax.action : a.min.action < a.minimax.action;
            CHECK(expected_order);
        }
    }
}

TEST_CASE("orbits: actions are invariant under a shift of the parametrization") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    auto r = c.rotated(Real("0.37"));
    for (Table t : {Table::Inner, Table::Outer}) {
        auto a = find_orbit_pair({c, t}, 1, 5, ctx);
        auto b = find_orbit_pair({r, t}, 1, 5, ctx);
        CHECK(abs(a.min.action - b.min.action) <= 10 * ctx.solver_tol());
        CHECK(abs(a.minimax.action - b.minimax.action) <= 10 * ctx.solver_tol());
    }
}

TEST_CASE("orbits: higher rotation numbers on a constant width table") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto pr = inner(fixtures::perturbed_circle());
    auto pair = find_orbit_pair(pr, 2, 5, ctx);
    CHECK(is_birkhoff_ordered(pair.min.angles, 2, two_pi()));
    CHECK(is_birkhoff_ordered(pair.minimax.angles, 2, two_pi()));
    CHECK(pair.delta > 0);
    // lifted arclengths wind twice around the table
    CHECK(pair.min.points.back() < 2 * pr.curve.total_length());
}

TEST_CASE("orbits: outer action is the polygon area minus the table area") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    auto pair = find_orbit_pair(outer(c), 1, 5, ctx);
    const auto& a = pair.min.angles;
    std::vector<Vec2> corners;
    for (int j = 0; j < 5; ++j) {
        CurvePoint p0 = c.point(a[j]);
        CurvePoint p1 = c.point(j + 1 < 5 ? a[j + 1] : a[0]);
        Real r0 = cross(p1.m - p0.m, p1.e) / cross(p0.e, p1.e);
        corners.push_back(p0.m + r0 * p0.e);
    }
    Real shoelace(0);
    for (int j = 0; j < 5; ++j) shoelace += cross(corners[j], corners[(j + 1) % 5]);
    shoelace /= 2;
    CHECK(abs(pair.min.action - (shoelace - c.enclosed_area())) < 1e-60);
}

TEST_CASE("orbits: spectrum contract and precision escalation") {
    PrecisionScope scope(128);
    RealContext ctx(128);
    auto pr = inner(fixtures::perturbed_circle());
    CHECK(delta_spectrum(pr, 1, {}, ctx).empty());
    CHECK_THROWS_AS(delta_spectrum(pr, 2, {4}, ctx), std::invalid_argument);
    SpectrumOptions opts;
    opts.bits_cap = 512;
    auto recs = delta_spectrum(pr, 1, {4, 16}, ctx, opts);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].ok);
    CHECK(recs[1].ok);
    // Δ(1,4) ≈ 1.3e-5 stays above 2^-32, Δ(1,16) ≈ 2.5e-19 needs 256 bits
    CHECK(recs[0].bits == 128);
    CHECK(recs[1].bits == 256);
    CHECK(recs[1].delta > ldexp(Real(1), -64));
    auto circ = delta_spectrum(inner(FourierCurve::circle(Real(1))), 1, {5}, ctx, opts);
    CHECK(circ[0].precision_floor);
    CHECK(circ[0].bits == 512);
}

TEST_CASE("orbits: SPECTRAL_BITS_CAP overrides the escalation cap") {
    PrecisionScope scope(128);
    RealContext ctx(128);
    setenv("SPECTRAL_BITS_CAP", "256", 1);
    auto recs = delta_spectrum(inner(FourierCurve::circle(Real(1))), 1, {5}, ctx);
    unsetenv("SPECTRAL_BITS_CAP");
    CHECK(recs[0].bits == 256);
}

TEST_CASE("orbits: serial and parallel kernels agree exactly") {
    PrecisionScope scope(192);
    RealContext ctx(192);
    auto pr = inner(fixtures::perturbed_circle());
    PairOptions s, p;
    s.exec = Exec::Serial;
    p.exec = Exec::Parallel;
    auto a = find_orbit_pair(pr, 1, 7, ctx, s);
    auto b = find_orbit_pair(pr, 1, 7, ctx, p);
    CHECK(a.delta == b.delta);
    CHECK(a.min.action == b.min.action);
    SpectrumOptions ss, sp;
    ss.exec = Exec::Serial;
    sp.exec = Exec::Parallel;
    auto r1 = delta_spectrum(pr, 1, {5, 7, 8}, ctx, ss);
    auto r2 = delta_spectrum(pr, 1, {5, 7, 8}, ctx, sp);
    for (size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].delta == r2[i].delta);
    auto g1 = graph_pair(pr, 1, 5, ctx, 40, Exec::Serial);
    auto g2 = graph_pair(pr, 1, 5, ctx, 40, Exec::Parallel);
    CHECK(g1.area == g2.area);
}

TEST_CASE("orbits: graph pair of the circle") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    Real R("0.9");
    auto g = graph_pair(inner(FourierCurve::circle(R)), 2, 7, ctx, 32);
    for (size_t i = 0; i < g.xi.size(); ++i) {
        CHECK(abs(g.zeta[i] - pi() * 2 / 7) <= ctx.solver_tol());
        CHECK(abs(g.zeta_hat[i] - g.zeta[i]) <= ctx.solver_tol());
    }
    CHECK(g.area <= 1e-60);
    auto go = graph_pair(outer(FourierCurve::circle(R)), 1, 5, ctx, 32);
    CHECK(abs(go.zeta[3] - R * tan(pi() / 5)) <= ctx.solver_tol());
    CHECK(go.area <= 1e-60);
}

TEST_CASE("orbits: action gap is bounded by the area between the graphs") {
    PrecisionScope scope(256);
    RealContext ctx(256);
    auto c = fixtures::perturbed_circle();
    for (Table t : {Table::Inner, Table::Outer}) {
        Problem pr{c, t};
        for (int q : {4, 5}) {
            auto pair = find_orbit_pair(pr, 1, q, ctx);
            auto g = graph_pair(pr, 1, q, ctx);
            CHECK(pair.delta <= g.area);
            CHECK(graph_deviation(pr, pair.min, ctx) <= ctx.solver_tol());
            CHECK(graph_deviation(pr, pair.minimax, ctx) <= ctx.solver_tol());
        }
    }
}

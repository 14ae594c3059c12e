#include "billspec/spectra.hpp"

#include "billspec/billiard.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace billspec {

LineFit fit_line(const std::vector<Real>& x, const std::vector<Real>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2 || y.size() != x.size()) throw FitError("fit_line: need at least two points");
    Real mx(0), my(0);
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    Real sxx(0), sxy(0), syy(0);
    for (int i = 0; i < n; ++i) {
        Real dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx.is_zero()) throw FitError("fit_line: abscissae coincide");
    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    Real ssr(0);
    for (int i = 0; i < n; ++i) {
        Real e = y[i] - f.intercept - f.slope * x[i];
        ssr += e * e;
    }
    f.r_squared = syy.is_zero() ? Real(1) : 1 - ssr / syy;
    return f;
}

namespace {

template <class Abscissa>
ExponentialFit fit_records(const std::vector<SpectrumRecord>& records, Abscissa xi) {
    std::vector<Real> xs, ys;
    ExponentialFit out;
    for (const auto& r : records) {
        if (!r.ok || r.precision_floor || !(r.delta > 0)) continue;
        Real x = xi(r);
        if (!x.is_finite()) continue;
        xs.push_back(std::move(x));
        ys.push_back(log(r.delta));
        out.q_used.push_back(r.q);
    }
    if (xs.size() < 4) throw FitError("fit_exponential: fewer than 4 records above the precision floor");
    out.line = fit_line(xs, ys);
    out.alpha = -out.line.slope / two_pi();
    out.logK = out.line.intercept;
    out.r_squared = out.line.r_squared;
    return out;
}

}  // namespace

ExponentialFit fit_exponential(const std::vector<SpectrumRecord>& records, int p) {
    if (p < 1) throw std::invalid_argument("fit_exponential: p must be positive");
    return fit_records(records, [p](const SpectrumRecord& r) { return Real(r.q) / p; });
}

ExponentialFit fit_exponential_resonant(const std::vector<SpectrumRecord>& records, int m, int n) {
    return fit_records(records, [m, n](const SpectrumRecord& r) {
        const long d = std::labs(static_cast<long>(n) * r.p - static_cast<long>(m) * r.q);
        return d == 0 ? Real(1) / Real(0) : Real(r.q) / d;
    });
}

Real richardson_even(const std::vector<Real>& values) {
    if (values.empty()) throw std::invalid_argument("richardson_even: no values");
    std::vector<Real> t(values);
    Real factor(1);
    for (size_t level = 1; level < values.size(); ++level) {
        factor *= 4;
        for (size_t i = 0; i + level < values.size(); ++i) t[i] = (factor * t[i + 1] - t[i]) / (factor - 1);
    }
    return t[0];
}

namespace {

void check_doubling(const std::vector<int>& q_list) {
    if (q_list.size() < 2) throw std::invalid_argument("Richardson extrapolation needs at least two q values");
    for (size_t i = 1; i < q_list.size(); ++i)
        if (q_list[i] != 2 * q_list[i - 1]) throw std::invalid_argument("q values must double: q, 2q, 4q, ...");
}

}  // namespace

Real marvizi_melrose_l1(const FourierCurve& curve, int p) {
    Real I = p * curve.curvature_power_integral(Real(2) / 3);
    return -(I * I * I) / 24;
}

Real l1_empirical(const FourierCurve& curve, int p, const std::vector<int>& q_list, const RealContext& ctx) {
    check_doubling(q_list);
    const Real length = curve.total_length();
    std::vector<Real> t;
    for (int q : q_list) {
        auto pair = find_orbit_pair({curve, Table::Inner}, p, q, ctx);
        t.push_back(Real(q) * q * (pair.min.action - p * length));
    }
    return richardson_even(t);
}

A1Value tabachnikov_a1(const FourierCurve& curve) {
    Real I = curve.curvature_power_integral(Real(1) / 3);
    return {I * I * I / 24, I / 24};
}

Real a1_empirical(const FourierCurve& curve, const std::vector<int>& q_list, const RealContext& ctx) {
    check_doubling(q_list);
    std::vector<Real> t;
    for (int q : q_list) {
        auto pair = find_orbit_pair({curve, Table::Outer}, 1, q, ctx);
        t.push_back(Real(q) * q * pair.min.action);
    }
    return richardson_even(t);
}

// ---------------------------------------------------------------------------
// Coordinates

namespace {

// Solves k·I(φ) = x for φ with I' = f > 0.
Real invert_primitive(const TrigSeries& f, const Real& k, const Real& x) {
    Real phi = two_pi() * x;
    const Real tol = ldexp(Real(1), 4 - Real::working_bits());
    bool small = false;
    for (int it = 0; it < 100; ++it) {
        Real step = (k * f.integral(phi) - x) / (k * f(phi));
        phi -= step;
        if (small) return phi;
        if (abs(step) <= tol * max(Real(1), abs(phi))) small = true;
    }
    throw std::runtime_error("coordinate inverse: Newton did not converge");
}

}  // namespace

LazutkinCoordinates::LazutkinCoordinates(const FourierCurve& curve) : curve_(curve) {
    cbrt_rho_ = TrigSeries::fit([&](const Real& phi) { return cbrt(curve_.rho(phi)); }, 64 * epsilon());
    k_ = 1 / (two_pi() * cbrt_rho_.mean());
}

Real LazutkinCoordinates::x_of_phi(const Real& phi) const { return k_ * cbrt_rho_.integral(phi); }

Real LazutkinCoordinates::phi_of_x(const Real& x) const { return invert_primitive(cbrt_rho_, k_, x); }

std::pair<Real, Real> LazutkinCoordinates::to_xy(const Real& s, const Real& r) const {
    Real phi = curve_.phi_from_arclength(s);
    return {x_of_phi(phi), 4 * k_ * cbrt(curve_.rho(phi)) * sin(r / 2)};
}

std::pair<Real, Real> LazutkinCoordinates::from_xy(const Real& x, const Real& y) const {
    Real phi = phi_of_x(x);
    return {curve_.arclength(phi), 2 * asin(y / (4 * k_ * cbrt(curve_.rho(phi))))};
}

std::pair<Real, Real> LazutkinCoordinates::map(const Real& x, const Real& y, const RealContext& ctx) const {
    Real phi = phi_of_x(x);
    Real r = 2 * asin(y / (4 * k_ * cbrt(curve_.rho(phi))));
    InnerStep st = inner_step_phi(curve_, phi, r, ctx);
    Real x1 = x + (x_of_phi(st.phi1) - x_of_phi(phi));
    Real y1 = 4 * k_ * cbrt(curve_.rho(st.phi1)) * sin(st.r1 / 2);
    return {std::move(x1), std::move(y1)};
}

TabachnikovCoordinates::TabachnikovCoordinates(const FourierCurve& curve) : curve_(curve) {
    rho23_ = TrigSeries::fit([&](const Real& a) { Real c = cbrt(curve_.rho(a)); return c * c; }, 64 * epsilon());
    k_ = 1 / (two_pi() * rho23_.mean());
}

std::pair<Real, Real> TabachnikovCoordinates::to_xy(const Real& alpha, const Real& r) const {
    return {k_ * rho23_.integral(alpha), 2 * k_ * r / cbrt(curve_.rho(alpha))};
}

std::pair<Real, Real> TabachnikovCoordinates::from_xy(const Real& x, const Real& y) const {
    Real alpha = invert_primitive(rho23_, k_, x);
    Real r = y * cbrt(curve_.rho(alpha)) / (2 * k_);
    return {std::move(alpha), std::move(r)};
}

// ---------------------------------------------------------------------------
// Billiard map series

BilliardSeries billiard_map_series(const FourierCurve& curve, int J_max, int K_max, const RealContext& ctx,
                                   const MapSeriesOptions& opts) {
    if (J_max < 2 || K_max < 0) throw std::invalid_argument("billiard_map_series: need J_max >= 2, K_max >= 0");
    const int bits = ctx.mantissa_bits;
    const int m = 2;
    const int top = m + J_max + 1;
    int nc = opts.nodes > 0 ? opts.nodes : top + 2 + bits / 4;
    nc += nc % 2;   // even count keeps y = 0 off the nodes
    const int nx = opts.nx > 0 ? opts.nx : std::max(64, 4 * K_max);
    // the monomial conversion amplifies sample noise by up to (1 + √2)^nc
    RealContext gctx = ctx;
    gctx.mantissa_bits = bits + (13 * nc) / 10 + 32;
    const int gbits = gctx.mantissa_bits;
    PrecisionScope scope(gbits);
    const Real b = opts.radius.rounded_to(gbits);
    LazutkinCoordinates lz(curve);

    std::vector<Real> ynode(nc);
    for (int n = 0; n < nc; ++n) ynode[n] = b * cos(pi() * (2 * n + 1) / (2 * nc));
    std::vector<std::vector<Real>> a1(nx, std::vector<Real>(nc)), a2 = a1;
    BILLSPEC_PARALLEL_FOR(true)
    for (int i = 0; i < nx; ++i) {
        PrecisionScope inner(gbits);
        Real x = Real(i) / nx;
        for (int n = 0; n < nc; ++n) {
            auto [x1, y1] = lz.map(x, ynode[n], gctx);
            a1[i][n] = x1 - x - ynode[n];
            a2[i][n] = y1 - ynode[n];
        }
    }
    // Chebyshev polynomials of t = y/b in monomials
    std::vector<std::vector<Real>> cheb(nc, std::vector<Real>(nc, Real(0)));
    cheb[0][0] = 1;
    if (nc > 1) cheb[1][1] = 1;
    for (int l = 2; l < nc; ++l)
        for (int j = 0; j < nc; ++j) {
            Real v = -cheb[l - 2][j];
            if (j > 0) v += 2 * cheb[l - 1][j - 1];
            cheb[l][j] = v;
        }
    std::vector<std::vector<Real>> ccos(nc, std::vector<Real>(nc));
    for (int l = 0; l < nc; ++l)
        for (int n = 0; n < nc; ++n) ccos[l][n] = cos(pi() * l * (2 * n + 1) / (2 * nc));
    std::vector<Real> binv(nc + 1);
    binv[0] = 1;
    for (int j = 1; j <= nc; ++j) binv[j] = binv[j - 1] / b;

    FourierTaylorSeries T1(K_max, top), T2(K_max, top);
    auto taylor = [&](const std::vector<Complex>& vals, FourierTaylorSeries& out, int k) {
        std::vector<Complex> c(nc);
        for (int l = 0; l < nc; ++l) {
            Complex s(Real(0), Real(0));
            for (int n = 0; n < nc; ++n) s += vals[n] * ccos[l][n];
            c[l] = s * (Real(l == 0 ? 1 : 2) / nc);
        }
        for (int j = 0; j <= top && j < nc; ++j) {
            Complex s(Real(0), Real(0));
            for (int l = j; l < nc; ++l)
                if (!cheb[l][j].is_zero()) s += c[l] * cheb[l][j];
            out.set(k, j, s * binv[j]);
        }
    };
    for (int k = 0; k <= K_max; ++k) {
        std::vector<Complex> w(nx);
        for (int i = 0; i < nx; ++i) w[i] = expi(-two_pi() * k * i / nx);
        std::vector<Complex> v1(nc), v2(nc);
        for (int n = 0; n < nc; ++n) {
            Complex s1(Real(0), Real(0)), s2(Real(0), Real(0));
            for (int i = 0; i < nx; ++i) {
                s1 += w[i] * a1[i][n];
                s2 += w[i] * a2[i][n];
            }
            v1[n] = s1 / Real(nx);
            v2[n] = s2 / Real(nx);
        }
        taylor(v1, T1, k);
        taylor(v2, T2, k);
    }

    auto round = [bits](const Complex& z) { return Complex(z.re.rounded_to(bits), z.im.rounded_to(bits)); };
    auto round_abs = [bits](const Complex& z) { return z.modulus().rounded_to(bits); };
    BilliardSeries out;
    {
        PrecisionScope outer(bits);
        out.map = MapSeries::integrable(m, K_max, J_max);
    }
    for (int k = 0; k <= K_max; ++k)
        for (int j = 0; j <= J_max; ++j) {
            out.map.g1.set(k, j, round(T1.coeff(k, j + m)));
            out.map.g2.set(k, j, round(T2.coeff(k, j + m + 1)));
        }
    out.leading = (1 + T1.coeff(0, 1).re).rounded_to(bits);
    out.order2_angular = Real(0).rounded_to(bits);
    out.order3_angular = out.order2_angular;
    out.lower_radial = out.order2_angular;
    for (int k = 0; k <= K_max; ++k) {
        out.order2_angular = max(out.order2_angular, round_abs(T1.coeff(k, 2)));
        out.order3_angular = max(out.order3_angular, round_abs(T1.coeff(k, 3)));
        for (int j = 0; j <= 3; ++j) out.lower_radial = max(out.lower_radial, round_abs(T2.coeff(k, j)));
    }

    PrecisionScope outer(bits);
    const Real br = b.rounded_to(bits);
    out.tail = out.map.tail(br);
    out.fit_residual = Real(0);
    for (int i = 0; i < 8; ++i) {
        Real x = (Real(i) + Real("0.37")) / 8;
        Real y = br * (Real("-0.93") + Real("0.26") * i);
        auto [x1, y1] = lz.map(x, y, ctx);
        auto [xs, ys] = out.map(Complex(x, Real(0)), Complex(y, Real(0)));
        out.fit_residual = max(out.fit_residual, max(abs(x1 - xs.re), abs(y1 - ys.re)));
    }
    if (out.fit_residual > 10 * out.tail + 10000 * ctx.eps())
        throw FitError("billiard_map_series: fit residual " + out.fit_residual.str(3) + " above the tail estimate " +
                       out.tail.str(3) + "; raise K_max");
    return out;
}

std::vector<AveragingStep> averaging_ladder(const MapSeries& F, int target_order, const GridOptions& grid) {
    std::vector<AveragingStep> steps;
    const MapSeries* cur = &F;
    while (cur->m < target_order) {
        steps.push_back(averaging_step(*cur, grid));
        cur = &steps.back().next;
    }
    return steps;
}

namespace {

OrderCheck finish(OrderCheck c) {
    std::vector<Real> ly, la, lr;
    for (size_t i = 0; i < c.y.size(); ++i) {
        ly.push_back(log(abs(c.y[i])));
        la.push_back(log(c.angular[i]));
        lr.push_back(log(c.radial[i]));
    }
    c.angular_slope = fit_line(ly, la).slope;
    c.radial_slope = fit_line(ly, lr).slope;
    return c;
}

}  // namespace

OrderCheck ladder_order_check(const FourierCurve& curve, const std::vector<AveragingStep>& steps,
                              const std::vector<Real>& y_values, const RealContext& ctx) {
    PrecisionScope scope(ctx.mantissa_bits);
    LazutkinCoordinates lz(curve);
    OrderCheck c;
    for (const Real& y : y_values) {
        Real ang(0), rad(0);
        for (int i = 0; i < 16; ++i) {
            Real x = (Real(i) + Real("0.5")) / 16;
            std::pair<Complex, Complex> z{Complex(x, Real(0)), Complex(y, Real(0))};
            for (auto it = steps.rbegin(); it != steps.rend(); ++it) z = it->change(z.first, z.second);
            auto [X, Y] = lz.map(z.first.re, z.second.re, ctx);
            z = {Complex(X, Real(0)), Complex(Y, Real(0))};
            for (const auto& st : steps) z = st.change.inverse(z.first, z.second);
            ang = max(ang, abs(z.first.re - x - y));
            rad = max(rad, abs(z.second.re - y));
        }
        c.y.push_back(y);
        c.angular.push_back(ang);
        c.radial.push_back(rad);
    }
    return finish(std::move(c));
}

OrderCheck series_order_check(const MapSeries& F, const std::vector<Real>& y_values) {
    OrderCheck c;
    for (const Real& y : y_values) {
        Real ang(0), rad(0);
        for (int i = 0; i < 16; ++i) {
            Real x = (Real(i) + Real("0.5")) / 16;
            auto [X, Y] = F(Complex(x, Real(0)), Complex(y, Real(0)));
            ang = max(ang, abs(X.re - x - y));
            rad = max(rad, abs(Y.re - y));
        }
        c.y.push_back(y);
        c.angular.push_back(ang);
        c.radial.push_back(rad);
    }
    return finish(std::move(c));
}

}  // namespace billspec

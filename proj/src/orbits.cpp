#include "billspec/orbits.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace billspec {

const char* to_string(Table t) { return t == Table::Inner ? "inner" : "outer"; }
const char* to_string(OrbitKind k) { return k == OrbitKind::Minimizing ? "minimizing" : "minimax"; }

namespace {

// Largest advance of the configuration variable in one step.
Real max_advance(Table t) { return t == Table::Inner ? two_pi() : pi(); }

LinkDerivatives link(const Problem& pr, const CurvePoint& a, const CurvePoint& b, bool with_hessian) {
    if (pr.table == Table::Inner) return inner_link(a, b, with_hessian);
    return outer_link(pr.curve, a, b, true, with_hessian);
}

void check_rotation(const Problem& pr, int p, int q) {
    if (q < 2 || p < 1) throw std::invalid_argument("need p >= 1 and q >= 2");
    if (std::gcd(p, q) != 1) throw std::invalid_argument("p and q must be coprime");
    if (pr.table == Table::Inner && p >= q) throw std::invalid_argument("inner table needs p < q");
    if (pr.table == Table::Outer && 2 * p >= q) throw std::invalid_argument("outer table needs p/q < 1/2");
}

// Solves the symmetric tridiagonal system (diag, off) y = rhs in place.
void thomas(std::vector<Real> diag, const std::vector<Real>& off, std::vector<Real>& rhs) {
    const size_t n = diag.size();
    std::vector<Real> c(n);
    for (size_t i = 0; i < n; ++i) {
        if (i > 0) {
            Real w = off[i - 1] / diag[i - 1];
            diag[i] -= w * c[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        if (diag[i].is_zero()) throw SolverError("singular reduced Hessian", Real(0));
        if (i + 1 < n) c[i] = off[i];
    }
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) {
        rhs[i] -= c[i] * rhs[i + 1];
        rhs[i] /= diag[i];
    }
}

struct LinkSet {
    std::vector<LinkDerivatives> links;
};

LinkSet evaluate_links(const Problem& pr, const std::vector<Real>& x, const Real& xq, bool with_hessian) {
    const size_t q = x.size();
    std::vector<CurvePoint> pts(q + 1);
    for (size_t j = 0; j < q; ++j) pts[j] = pr.curve.point(x[j]);
    pts[q] = pts[0];
    pts[q].phi = xq;
    LinkSet s;
    s.links.reserve(q);
    for (size_t j = 0; j < q; ++j) s.links.push_back(link(pr, pts[j], pts[j + 1], with_hessian));
    return s;
}

bool ordered_steps(const std::vector<Real>& x, const Real& xq, const Real& cap) {
    const size_t q = x.size();
    for (size_t j = 0; j < q; ++j) {
        Real d = (j + 1 < q ? x[j + 1] : xq) - x[j];
        if (!(d > 0 && d < cap)) return false;
    }
    return true;
}

Real floor_of(int q, const Real& F) { return Real(1024) * q * epsilon() * (abs(F) + 1); }

Real max_circular_gap(const std::vector<Real>& angles) {
    const Real tp = two_pi();
    std::vector<Real> a;
    for (const auto& x : angles) a.push_back(x - floor(x / tp) * tp);
    std::sort(a.begin(), a.end());
    Real gap = a.front() + tp - a.back();
    for (size_t i = 1; i < a.size(); ++i) gap = max(gap, a[i] - a[i - 1]);
    return gap;
}

std::vector<Real> shifted(const std::vector<Real>& x, const Real& t) {
    std::vector<Real> out;
    out.reserve(x.size());
    for (const auto& v : x) out.push_back(v + t);
    return out;
}

PeriodicOrbit make_orbit(const Problem& pr, int p, int q, const ConstrainedMinimum& cm, OrbitKind kind) {
    PeriodicOrbit o;
    o.p = p;
    o.q = q;
    o.angles = cm.angles;
    o.points.reserve(cm.angles.size());
    for (const auto& a : cm.angles) o.points.push_back(pr.table == Table::Inner ? pr.curve.arclength(a) : a);
    o.action = action_from_F(pr, cm.F);
    o.kind = kind;
    o.grad_norm = cm.grad_norm;
    return o;
}

int sign_of(const Real& v) { return v.sign(); }

}  // namespace

bool is_birkhoff_ordered(const std::vector<Real>& lifted, int p, const Real& period) {
    const int q = static_cast<int>(lifted.size());
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            for (int n = -p - 1; n <= p + 1; ++n) {
                const long want = static_cast<long>(i - j) * p - static_cast<long>(n) * q;
                const int s = sign_of(lifted[i] - lifted[j] - n * period);
                const int w = want > 0 ? 1 : (want < 0 ? -1 : 0);
                if (s != w) return false;
            }
    return true;
}

Real action_from_F(const Problem& problem, const Real& F) { return problem.table == Table::Inner ? -F : F; }

ConstrainedMinimum constrained_minimum(const Problem& pr, int p, int q, const Real& phi0, const RealContext& ctx,
                                       const std::vector<Real>* seed) {
    (void)ctx;
    check_rotation(pr, p, q);
    const Real period = two_pi();
    const Real cap = max_advance(pr.table);
    const Real xq = phi0 + period * p;
    std::vector<Real> x(q);
    x[0] = phi0;
    for (int j = 1; j < q; ++j) {
        if (seed && static_cast<int>(seed->size()) == q) x[j] = (*seed)[j];
        else x[j] = phi0 + period * p * j / q;
    }
    if (!ordered_steps(x, xq, cap))
        for (int j = 1; j < q; ++j) x[j] = phi0 + period * p * j / q;
    const int n = q - 1;
    const Real tolx = ldexp(Real(1), -Real::working_bits() / 2);
    ConstrainedMinimum out;
    bool last = false;
    LinkSet ls;
    for (int it = 0;; ++it) {
        ls = evaluate_links(pr, x, xq, true);
        out.iterations = it + 1;
        if (last) break;
        if (it == 100) throw SolverError("constrained_minimum: no convergence", Real(0));
        std::vector<Real> g(n), diag(n), off(n > 1 ? n - 1 : 0);
        for (int i = 1; i <= n; ++i) {
            const auto& l0 = ls.links[i - 1];
            const auto& l1 = ls.links[i];
            g[i - 1] = -(l0.d2 + l1.d1);
            diag[i - 1] = l0.h22 + l1.h11;
            if (i < n) off[i - 1] = l1.h12;
        }
        thomas(diag, off, g);
        Real step_max(0);
        for (const auto& v : g) step_max = max(step_max, abs(v));
        if (step_max.is_zero()) break;
        Real scale(1);
        std::vector<Real> trial(x);
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            for (int i = 1; i <= n; ++i) trial[i] = x[i] + scale * g[i - 1];
            if (ordered_steps(trial, xq, cap)) {
                accepted = true;
                break;
            }
            scale /= 2;
        }
        if (!accepted) throw SolverError("constrained_minimum: Birkhoff ordering lost", step_max);
        x.swap(trial);
        // one more step after the quadratic phase is reached
        if (step_max <= tolx && scale == 1) last = true;
    }
    out.F = Real(0);
    for (const auto& l : ls.links) out.F += l.L;
    out.grad_norm = Real(0);
    std::vector<Real> diag(n), off(n > 1 ? n - 1 : 0), b(n, Real(0));
    for (int i = 1; i <= n; ++i) {
        const auto& l0 = ls.links[i - 1];
        const auto& l1 = ls.links[i];
        out.grad_norm = max(out.grad_norm, abs(l0.d2 + l1.d1));
        diag[i - 1] = l0.h22 + l1.h11;
        if (i < n) off[i - 1] = l1.h12;
    }
    const auto& first = ls.links.front();
    const auto& lastl = ls.links.back();
    out.dF = first.d1 + lastl.d2;
    b[0] += first.h12;
    b[n - 1] += lastl.h12;
    std::vector<Real> y(b);
    thomas(diag, off, y);
    out.d2F = first.h11 + lastl.h22;
    for (int i = 0; i < n; ++i) out.d2F -= b[i] * y[i];
    out.dx.assign(q, Real(0));
    out.dx[0] = Real(1);
    for (int i = 1; i <= n; ++i) out.dx[i] = -y[i - 1];
    out.angles = std::move(x);
    return out;
}

namespace {

struct Scanner {
    const Problem& pr;
    int p, q;
    const RealContext& ctx;
    int evaluations = 0;

    ConstrainedMinimum eval(const Real& t, const ConstrainedMinimum& near, const Real& t_near) {
        ++evaluations;
        // first-order prediction along the family of constrained minima
        std::vector<Real> seed(near.angles.size());
        const Real dt = t - t_near;
        for (size_t j = 0; j < seed.size(); ++j) seed[j] = near.angles[j] + dt * near.dx[j];
        return constrained_minimum(pr, p, q, t, ctx, &seed);
    }

    // Root of F' in [lo, hi] where F' has sign sign_at_lo at lo, or Newton
    // from a starting point only when no bracket is known.
    std::pair<Real, ConstrainedMinimum> refine(Real lo, Real hi, Real t, ConstrainedMinimum cm, bool bracketed,
                                               const Real& width) {
        const Real tol = ldexp(width, -Real::working_bits() / 2);
        bool final = false;
        for (int it = 0; it < 200; ++it) {
            if (bracketed) {
                if (sign_of(cm.dF) == sign_at_lo) lo = t;
                else hi = t;
            }
            if (final || cm.dF.is_zero()) return {t, std::move(cm)};
            Real step = cm.dF / cm.d2F;
            Real next = t - step;
            if (bracketed) {
                if (!step.is_finite() || !(next > lo && next < hi)) next = (lo + hi) / 2;
            } else if (!step.is_finite() || abs(step) > width / 4) {
                throw SolverError("refine: Newton left the neighbourhood of the hint", abs(step));
            }
            if (abs(next - t) <= tol || (bracketed && hi - lo <= tol)) final = true;
            ConstrainedMinimum nx = eval(next, cm, t);
            t = std::move(next);
            cm = std::move(nx);
        }
        throw SolverError("refine: no convergence", abs(cm.dF));
    }

    int sign_at_lo = 0;
};

}  // namespace

OrbitPair find_orbit_pair(const Problem& pr, int p, int q, const RealContext& ctx, const PairOptions& opts) {
    check_rotation(pr, p, q);
    const int bits = Real::working_bits();
    Scanner sc{pr, p, q, ctx};
    ConstrainedMinimum c0 = constrained_minimum(pr, p, q, Real(0), ctx);
    ++sc.evaluations;
    const Real gap = max_circular_gap(c0.angles);

    struct Candidate {
        Real t;
        ConstrainedMinimum cm;
    };
    std::optional<Candidate> best_min, best_max;
    bool flat = false;

    auto consider = [&](Real t, ConstrainedMinimum cm) {
        if (cm.d2F > 0) {
            if (!best_min || cm.F < best_min->cm.F) best_min = Candidate{t, cm};
        } else {
            if (!best_max || cm.F > best_max->cm.F) best_max = Candidate{t, cm};
        }
    };

    bool hinted = false;
    if (opts.hint) {
        try {
            for (const Real* h : {&opts.hint->first, &opts.hint->second}) {
                ConstrainedMinimum cm = sc.eval(*h, c0, Real(0));
                auto [t, r] = sc.refine(Real(0), Real(0), *h, std::move(cm), false, gap);
                consider(std::move(t), std::move(r));
            }
            hinted = best_min && best_max;
        } catch (const SolverError&) {
            hinted = false;
        }
        if (!hinted) {
            best_min.reset();
            best_max.reset();
        }
    }

    if (!hinted) {
        const int N = std::max(opts.grid, 4);
        const Real start = -gap / 20;
        const Real width = gap * 11 / 10;
        std::vector<Real> nodes(N);
        for (int i = 0; i < N; ++i) nodes[i] = start + width * i / (N - 1);
        std::vector<std::optional<ConstrainedMinimum>> res(N);
        std::vector<std::string> errs(N);
        const bool par = opts.exec == Exec::Parallel;
        BILLSPEC_PARALLEL_FOR(par)
        for (int i = 0; i < N; ++i) {
            PrecisionScope scope(bits);
            try {
                std::vector<Real> seed = shifted(c0.angles, nodes[i]);
                res[i] = constrained_minimum(pr, p, q, nodes[i], ctx, &seed);
            } catch (const std::exception& e) {
                errs[i] = e.what();
            }
        }
        for (int i = 0; i < N; ++i)
            if (!res[i]) throw SolverError("scan node failed: " + errs[i], Real(0));
        sc.evaluations += N;
        Real fmin = res[0]->F, fmax = res[0]->F;
        int imin = 0, imax = 0;
        for (int i = 1; i < N; ++i) {
            if (res[i]->F < fmin) { fmin = res[i]->F; imin = i; }
            if (res[i]->F > fmax) { fmax = res[i]->F; imax = i; }
        }
        if (fmax - fmin <= floor_of(q, fmin)) {
            flat = true;
            best_min = Candidate{nodes[imin], *res[imin]};
            best_max = Candidate{nodes[imax], *res[imax]};
        } else {
            for (int i = 0; i + 1 < N; ++i) {
                const int s0 = sign_of(res[i]->dF), s1 = sign_of(res[i + 1]->dF);
                if (s0 == s1 || s0 == 0) continue;
                sc.sign_at_lo = s0;
                Real mid = (nodes[i] + nodes[i + 1]) / 2;
                ConstrainedMinimum cm = sc.eval(mid, *res[i], nodes[i]);
                auto [t, r] = sc.refine(nodes[i], nodes[i + 1], mid, std::move(cm), true, gap);
                // a sign change from − to + is a minimum of F
                if (s0 < 0) {
                    if (!best_min || r.F < best_min->cm.F) best_min = Candidate{t, r};
                } else {
                    if (!best_max || r.F > best_max->cm.F) best_max = Candidate{t, r};
                }
            }
            if (!best_min) best_min = Candidate{nodes[imin], *res[imin]};
            if (!best_max) best_max = Candidate{nodes[imax], *res[imax]};
        }
    }

    OrbitPair out;
    out.bits = bits;
    out.min = make_orbit(pr, p, q, best_min->cm, OrbitKind::Minimizing);
    out.minimax = make_orbit(pr, p, q, best_max->cm, OrbitKind::Minimax);
    out.floor = floor_of(q, best_min->cm.F);
    Real d = best_max->cm.F - best_min->cm.F;
    if (flat || d <= out.floor) {
        out.delta = Real(0);
        out.precision_floor = true;
    } else {
        out.delta = d;
    }
    out.evaluations = sc.evaluations;
    return out;
}

int bits_cap_from_env(int fallback) {
    if (const char* v = std::getenv("SPECTRAL_BITS_CAP")) {
        char* end = nullptr;
        long b = std::strtol(v, &end, 10);
        if (end != v && b >= 64) return static_cast<int>(b);
    }
    return fallback;
}

std::vector<SpectrumRecord> delta_spectrum(const Problem& pr, int p, const std::vector<int>& q_list,
                                           const RealContext& ctx, const SpectrumOptions& opts) {
    for (int q : q_list) check_rotation(pr, p, q);
    const int cap = bits_cap_from_env(opts.bits_cap);
    std::vector<SpectrumRecord> out(q_list.size());
    const bool par = opts.exec == Exec::Parallel;
    const int n = static_cast<int>(q_list.size());
    BILLSPEC_PARALLEL_FOR(par)
    for (int i = 0; i < n; ++i) {
        SpectrumRecord& rec = out[i];
        rec.p = p;
        rec.q = q_list[i];
        int bits = ctx.mantissa_bits;
        std::optional<std::pair<Real, Real>> hint;
        try {
            for (;;) {
                PrecisionScope scope(bits);
                RealContext local(bits);
                PairOptions po;
                po.exec = Exec::Serial;
                po.hint = hint;
                OrbitPair pair = find_orbit_pair(pr, p, rec.q, local, po);
                rec.bits = bits;
                rec.action_min = pair.min.action;
                rec.action_minimax = pair.minimax.action;
                rec.delta = pair.delta;
                rec.precision_floor = pair.precision_floor;
                rec.evaluations += pair.evaluations;
                rec.residual = max(pair.min.grad_norm, pair.minimax.grad_norm);
                rec.ok = true;
                const bool small = pair.delta < ldexp(Real(1), -bits / 4);
                if (opts.keep_orbits) rec.pair = pair;
                if (!small || 2 * bits > cap) break;
                if (!pair.precision_floor) hint = std::make_pair(pair.min.angles[0], pair.minimax.angles[0]);
                else hint.reset();
                bits *= 2;
            }
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    }
    return out;
}

GraphPoint graph_point(const Problem& pr, int p, int q, const Real& xi, const RealContext& ctx, const Real* seed) {
    check_rotation(pr, p, q);
    const bool inner = pr.table == Table::Inner;
    const Real target = xi + two_pi() * p;
    Real lo(0), hi = inner ? pi() : Real(0);
    bool hi_known = inner;
    Real r = seed ? *seed : (inner ? pi() * p / q : pr.curve.c0() * tan(pi() * p / q));
    const Real tol = ldexp(Real(1), -Real::working_bits() / 2);
    GraphPoint out;
    bool final = false;
    for (int it = 0; it < 200; ++it) {
        Real x = xi, rr = r, a(0), b(1);
        for (int k = 0; k < q; ++k) {
            if (inner) {
                InnerStep st = inner_step_phi(pr.curve, x, rr, ctx);
                Real na = st.jac.a11 * a + st.jac.a12 * b;
                Real nb = st.jac.a21 * a + st.jac.a22 * b;
                a = std::move(na), b = std::move(nb);
                x = std::move(st.phi1), rr = std::move(st.r1);
            } else {
                DualStep st = dual_step_ex(pr.curve, x, rr, ctx);
                Real na = st.jac.a11 * a + st.jac.a12 * b;
                Real nb = st.jac.a21 * a + st.jac.a22 * b;
                a = std::move(na), b = std::move(nb);
                x = std::move(st.alpha1), rr = std::move(st.r1);
            }
        }
        out.iterations = it + 1;
        out.zeta = r;
        out.zeta_hat = rr;
        if (final) return out;
        Real G = x - target;
        if (G.is_zero()) return out;
        if (G > 0) {
            hi = r;
            hi_known = true;
        } else {
            lo = r;
        }
        Real step = G / a;
        Real next = r - step;
        if (!step.is_finite() || !(next > lo) || (hi_known && !(next < hi)))
            next = hi_known ? (lo + hi) / 2 : 2 * r;
        if (abs(next - r) <= tol * max(abs(r), Real(1))) final = true;
        r = std::move(next);
    }
    throw SolverError("graph_point: no convergence", abs(r));
}

GraphPair graph_pair(const Problem& pr, int p, int q, const RealContext& ctx, int samples, Exec exec) {
    check_rotation(pr, p, q);
    const int N = samples > 0 ? samples : std::max(64, 8 * q);
    const int bits = Real::working_bits();
    GraphPair out;
    out.xi.resize(N);
    out.zeta.resize(N);
    out.zeta_hat.resize(N);
    std::vector<std::string> errs(N);
    for (int i = 0; i < N; ++i) out.xi[i] = two_pi() * i / N;
    const bool par = exec == Exec::Parallel;
    BILLSPEC_PARALLEL_FOR(par)
    for (int i = 0; i < N; ++i) {
        PrecisionScope scope(bits);
        try {
            GraphPoint g = graph_point(pr, p, q, out.xi[i], ctx);
            out.zeta[i] = std::move(g.zeta);
            out.zeta_hat[i] = std::move(g.zeta_hat);
        } catch (const std::exception& e) {
            errs[i] = e.what();
        }
    }
    for (int i = 0; i < N; ++i)
        if (!errs[i].empty()) throw SolverError("graph_pair sample failed: " + errs[i], Real(0));
    Real sum(0);
    for (int i = 0; i < N; ++i) {
        if (pr.table == Table::Inner)
            sum += abs(cos(out.zeta[i]) - cos(out.zeta_hat[i])) * pr.curve.rho(out.xi[i]);
        else
            sum += abs(out.zeta_hat[i] * out.zeta_hat[i] - out.zeta[i] * out.zeta[i]) / 2;
    }
    out.area = sum * two_pi() / N;
    return out;
}

std::vector<Real> orbit_radial(const Problem& pr, const PeriodicOrbit& orbit) {
    const int q = static_cast<int>(orbit.angles.size());
    std::vector<Real> r(q);
    for (int j = 0; j < q; ++j) {
        const Real next = j + 1 < q ? orbit.angles[j + 1] : orbit.angles[0] + two_pi() * orbit.p;
        CurvePoint a = pr.curve.point(orbit.angles[j]);
        CurvePoint b = pr.curve.point(next);
        if (pr.table == Table::Inner) {
            Vec2 u = b.m - a.m;
            r[j] = atan2(cross(a.e, u), dot(a.e, u));
        } else {
            r[j] = cross(b.m - a.m, b.e) / cross(a.e, b.e);
        }
    }
    return r;
}

Real graph_deviation(const Problem& pr, const PeriodicOrbit& orbit, const RealContext& ctx) {
    std::vector<Real> r = orbit_radial(pr, orbit);
    Real dev(0);
    for (size_t j = 0; j < r.size(); ++j) {
        GraphPoint g = graph_point(pr, orbit.p, orbit.q, orbit.angles[j], ctx, &r[j]);
        dev = max(dev, abs(g.zeta - r[j]));
    }
    return dev;
}

}  // namespace billspec

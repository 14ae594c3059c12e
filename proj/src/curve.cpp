#include "billspec/curve.hpp"

#include "billspec/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

namespace billspec {

struct FourierCurve::Tables {
    int bits = 0;
    Real c0;
    std::vector<int> k;
    std::vector<Real> a, b;
    // m(φ) = Σ_n P[n - nmin] (e^{inφ} - 1)
    int nmin = 0, nmax = 0;
    std::vector<Complex> P;
    // conj(m) m' = Σ_f D[f + fmax] e^{ifψ}
    int fmax = 0;
    std::vector<Complex> D;
    int kmax = 0;
};

struct FourierCurve::Data {
    Real c0;
    std::vector<Harmonic> harmonics;
    int kmax = 0;
    int definition_bits = 0;
    mutable std::mutex mu;
    mutable std::map<int, std::shared_ptr<const Tables>> cache;
};

bool is_strictly_convex(const Real& c0, const std::vector<Harmonic>& harmonics, int grid) {
    if (!(c0 > 0)) return false;
    PrecisionScope scope(128);
    Real bound;
    for (const auto& h : harmonics) bound += abs(h.a) + abs(h.b);
    if (bound < c0) return true;
    const Real step = two_pi() / grid;
    for (int i = 0; i < grid; ++i) {
        Real phi = step * i;
        Real r = c0;
        for (const auto& h : harmonics) {
            Real s, c;
            sincos(phi * h.k, s, c);
            r += h.a * c + h.b * s;
        }
        if (!(r > 0)) return false;
    }
    return true;
}

FourierCurve::FourierCurve(Real c0, std::vector<Harmonic> harmonics) : data_(std::make_shared<Data>()) {
    if (!(c0 > 0)) throw CurveError("c0 must be positive");
    std::sort(harmonics.begin(), harmonics.end(), [](const Harmonic& x, const Harmonic& y) { return x.k < y.k; });
    for (size_t i = 0; i < harmonics.size(); ++i) {
        if (harmonics[i].k < 2) throw CurveError("harmonic index must be >= 2");
        if (i > 0 && harmonics[i].k == harmonics[i - 1].k) throw CurveError("duplicate harmonic index");
    }
    harmonics.erase(std::remove_if(harmonics.begin(), harmonics.end(),
                                   [](const Harmonic& h) { return h.a.is_zero() && h.b.is_zero(); }),
                    harmonics.end());
    if (!is_strictly_convex(c0, harmonics)) throw CurveError("radius of curvature is not positive");
    int bits = c0.bits();
    for (const auto& h : harmonics) bits = std::max({bits, h.a.bits(), h.b.bits()});
    data_->definition_bits = bits;
    data_->c0 = std::move(c0);
    data_->kmax = harmonics.empty() ? 0 : harmonics.back().k;
    data_->harmonics = std::move(harmonics);
}

const Real& FourierCurve::c0() const { return data_->c0; }
const std::vector<Harmonic>& FourierCurve::harmonics() const { return data_->harmonics; }
int FourierCurve::max_harmonic() const { return data_->kmax; }
int FourierCurve::definition_bits() const { return data_->definition_bits; }

FourierCurve FourierCurve::circle(const Real& radius) { return FourierCurve(radius, {}); }

FourierCurve FourierCurve::make_constant_width(const Real& c0, std::vector<Harmonic> odd_harmonics) {
    for (const auto& h : odd_harmonics) {
        if (h.k % 2 == 0) throw CurveError("constant width curves carry only odd harmonics");
        if (h.k < 3) throw CurveError("harmonic index must be >= 3");
    }
    return FourierCurve(c0, std::move(odd_harmonics));
}

FourierCurve FourierCurve::ellipse(const Real& a, const Real& b, const Real& tail) {
    if (!(a > 0 && b > 0)) throw CurveError("ellipse semi-axes must be positive");
    const long tail_bits = std::max<long>(64, -tail.exponent2());
    const int work = static_cast<int>(tail_bits + 128);
    std::vector<Harmonic> hs;
    Real c0;
    {
        PrecisionScope scope(work);
        const Real A = a.rounded_to(work), B = b.rounded_to(work);
        const Real a2b2 = A * A * B * B;
        // ρ = a²b² / (a² sin²φ + b² cos²φ)^{3/2}; its coefficients decay geometrically
        const Real c = (A * A - B * B) / (A * A + B * B);
        const Real lam = abs(c).is_zero() ? Real(0) : (1 - sqrt(1 - c * c)) / abs(c);
        int n = 64;
        if (!lam.is_zero())
            while (n < (1 << 14) && pow(lam, Real(n / 4)) > ldexp(tail, -64)) n *= 2;
        std::vector<Real> f(n);
        const Real h = two_pi() / n;
        for (int j = 0; j < n; ++j) {
            Real s, co;
            sincos(h * j, s, co);
            Real d = A * A * s * s + B * B * co * co;
            f[j] = a2b2 / (d * sqrt(d));
        }
        TrigSeries t = TrigSeries::from_samples(f);
        c0 = t.a[0];
        for (int k = 2; k <= t.degree(); k += 2)
            if (abs(t.a[k]) > tail) hs.push_back({k, t.a[k], Real(0).rounded_to(work)});
    }
    return FourierCurve(std::move(c0), std::move(hs));
}

std::shared_ptr<const FourierCurve::Tables> FourierCurve::tables() const {
    const int bits = Real::working_bits();
    {
        std::lock_guard<std::mutex> lock(data_->mu);
        auto it = data_->cache.find(bits);
        if (it != data_->cache.end()) return it->second;
    }
    auto t = std::make_shared<Tables>();
    t->bits = bits;
    t->c0 = data_->c0.rounded_to(bits);
    t->kmax = data_->kmax;
    for (const auto& h : data_->harmonics) {
        t->k.push_back(h.k);
        t->a.push_back(h.a.rounded_to(bits));
        t->b.push_back(h.b.rounded_to(bits));
    }
    // ρ e^{iφ} = c0 e^{iφ} + Σ (a-ib)/2 e^{i(k+1)φ} + (a+ib)/2 e^{-i(k-1)φ}
    t->nmax = data_->kmax + 1;
    t->nmin = data_->kmax > 0 ? -(data_->kmax - 1) : 1;
    std::vector<Complex> C(t->nmax - t->nmin + 1, Complex(Real(0), Real(0)));
    C[1 - t->nmin].re += t->c0;
    for (size_t i = 0; i < t->k.size(); ++i) {
        int k = t->k[i];
        C[k + 1 - t->nmin] += Complex(t->a[i] / 2, -t->b[i] / 2);
        C[-(k - 1) - t->nmin] += Complex(t->a[i] / 2, t->b[i] / 2);
    }
    t->P.assign(C.size(), Complex(Real(0), Real(0)));
    for (int n = t->nmin; n <= t->nmax; ++n) {
        const Complex& c = C[n - t->nmin];
        if (c.re.is_zero() && c.im.is_zero()) continue;
        // c / (i n) = (c.im - i c.re) / n
        t->P[n - t->nmin] = Complex(c.im / n, -c.re / n);
    }
    // conj(z) z' with conj(z) = Z0 + Σ conj(P_n) e^{-inψ}, z' = Σ C_n e^{inψ}
    t->fmax = std::max(t->nmax - t->nmin, std::max(t->nmax, -t->nmin));
    t->D.assign(2 * t->fmax + 1, Complex(Real(0), Real(0)));
    Complex Z0(Real(0), Real(0));
    for (const auto& p : t->P) Z0 -= p.conj();
    for (int n2 = t->nmin; n2 <= t->nmax; ++n2) {
        const Complex& c = C[n2 - t->nmin];
        if (c.re.is_zero() && c.im.is_zero()) continue;
        t->D[n2 + t->fmax] += Z0 * c;
        for (int n1 = t->nmin; n1 <= t->nmax; ++n1) {
            const Complex& p = t->P[n1 - t->nmin];
            if (p.re.is_zero() && p.im.is_zero()) continue;
            t->D[n2 - n1 + t->fmax] += p.conj() * c;
        }
    }
    std::lock_guard<std::mutex> lock(data_->mu);
    auto [it, inserted] = data_->cache.emplace(bits, std::move(t));
    return it->second;
}

Real FourierCurve::rho(const Real& phi) const {
    auto t = tables();
    Real r = t->c0;
    if (t->k.empty()) return r;
    std::vector<Complex> w;
    unit_powers(phi, t->kmax, w);
    for (size_t i = 0; i < t->k.size(); ++i) r += t->a[i] * w[t->k[i]].re + t->b[i] * w[t->k[i]].im;
    return r;
}

Real FourierCurve::drho(const Real& phi) const {
    auto t = tables();
    Real r;
    if (t->k.empty()) return r;
    std::vector<Complex> w;
    unit_powers(phi, t->kmax, w);
    for (size_t i = 0; i < t->k.size(); ++i) {
        const int k = t->k[i];
        r += k * (t->b[i] * w[k].re - t->a[i] * w[k].im);
    }
    return r;
}

Vec2 FourierCurve::tangent(const Real& phi) {
    Vec2 e;
    sincos(phi, e.y, e.x);
    return e;
}

namespace {

Vec2 eval_position(const std::vector<Complex>& P, int nmin, int nmax, const std::vector<Complex>& w) {
    Real x, y;
    for (int n = nmin; n <= nmax; ++n) {
        const Complex& p = P[n - nmin];
        if (p.re.is_zero() && p.im.is_zero()) continue;
        // p (w^n - 1), with w^{-n} = conj(w^n)
        const Complex& wn = w[n >= 0 ? n : -n];
        Real wr = wn.re - 1;
        Real wi = n >= 0 ? wn.im : -wn.im;
        x += p.re * wr - p.im * wi;
        y += p.re * wi + p.im * wr;
    }
    return {std::move(x), std::move(y)};
}

}  // namespace

Vec2 FourierCurve::position(const Real& phi) const {
    auto t = tables();
    std::vector<Complex> w;
    unit_powers(phi, std::max(t->nmax, -t->nmin), w);
    return eval_position(t->P, t->nmin, t->nmax, w);
}

CurvePoint FourierCurve::point(const Real& phi) const {
    auto t = tables();
    std::vector<Complex> w;
    unit_powers(phi, std::max(t->nmax, -t->nmin), w);
    CurvePoint cp;
    cp.phi = phi;
    cp.m = eval_position(t->P, t->nmin, t->nmax, w);
    cp.e = Vec2(w[1].re, w[1].im);
    cp.rho = t->c0;
    for (size_t i = 0; i < t->k.size(); ++i) {
        const int k = t->k[i];
        cp.rho += t->a[i] * w[k].re + t->b[i] * w[k].im;
        cp.drho += k * (t->b[i] * w[k].re - t->a[i] * w[k].im);
    }
    return cp;
}

Real FourierCurve::arclength(const Real& phi) const {
    auto t = tables();
    Real s = t->c0 * phi;
    if (t->k.empty()) return s;
    std::vector<Complex> w;
    unit_powers(phi, t->kmax, w);
    for (size_t i = 0; i < t->k.size(); ++i) {
        const int k = t->k[i];
        s += (t->a[i] * w[k].im - t->b[i] * (w[k].re - 1)) / k;
    }
    return s;
}

Real FourierCurve::total_length() const { return two_pi() * tables()->c0; }

Real FourierCurve::phi_from_arclength(const Real& s_in) const {
    const Real L = total_length();
    Real turns = floor(s_in / L);
    Real s = s_in - turns * L;
    Real lo(0), hi = two_pi();
    Real phi = s / tables()->c0;
    const Real tol = ldexp(Real(1), -Real::working_bits() + 3);
    for (int it = 0; it < 200; ++it) {
        Real f = arclength(phi) - s;
        if (f.is_zero()) return phi + turns * two_pi();
        if (f > 0) hi = phi;
        else lo = phi;
        Real next = phi - f / rho(phi);
        if (!(next >= lo && next <= hi)) next = (lo + hi) / 2;
        Real dphi = abs(next - phi);
        phi = std::move(next);
        if (dphi <= tol * max(abs(phi), Real(1))) return phi + turns * two_pi();
    }
    throw CurveError("phi_from_arclength: no convergence");
}

Real FourierCurve::curvature_power_integral(const Real& e) const {
    auto t = tables();
    if (t->k.empty()) return two_pi() * pow(t->c0, 1 - e);
    const Real tol = 10 * sqrt(epsilon());
    Real ex = 1 - e;
    return integrate_periodic([&](const Real& phi) { return pow(rho(phi), ex); }, Real(0), two_pi(), tol);
}

Real FourierCurve::sector_integral(const Real& phi0, const Real& phi1) const {
    auto t = tables();
    const int fmax = t->fmax;
    std::vector<Complex> w0, w1;
    unit_powers(phi0, fmax, w0);
    unit_powers(phi1, fmax, w1);
    Real total = t->D[fmax].im * (phi1 - phi0);
    for (int f = -fmax; f <= fmax; ++f) {
        if (f == 0) continue;
        const Complex& d = t->D[f + fmax];
        if (d.re.is_zero() && d.im.is_zero()) continue;
        const int af = f > 0 ? f : -f;
        Real dr = w1[af].re - w0[af].re;
        Real di = w1[af].im - w0[af].im;
        if (f < 0) di = -di;
        // Im(d (dr + i di) / (i f)) = -Re(d (dr + i di)) / f
        total -= (d.re * dr - d.im * di) / f;
    }
    return total;
}

Real FourierCurve::enclosed_area() const {
    auto t = tables();
    return t->D[t->fmax].im * pi();
}

FourierCurve FourierCurve::rotated(const Real& shift) const {
    PrecisionScope scope(data_->definition_bits);
    std::vector<Harmonic> hs;
    for (const auto& h : data_->harmonics) {
        Real s, c;
        sincos(shift * h.k, s, c);
        hs.push_back({h.k, h.a * c + h.b * s, h.b * c - h.a * s});
    }
    return FourierCurve(data_->c0, std::move(hs));
}

FourierCurve FourierCurve::scaled(const Real& lambda) const {
    PrecisionScope scope(data_->definition_bits);
    std::vector<Harmonic> hs;
    for (const auto& h : data_->harmonics) hs.push_back({h.k, h.a * lambda, h.b * lambda});
    return FourierCurve(data_->c0 * lambda, std::move(hs));
}

std::string FourierCurve::canonical_string() const {
    std::ostringstream os;
    os << "c0=" << data_->c0.str();
    for (const auto& h : data_->harmonics) os << ";k=" << h.k << ",a=" << h.a.str() << ",b=" << h.b.str();
    return os.str();
}

}  // namespace billspec

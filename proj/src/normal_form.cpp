#include "billspec/normal_form.hpp"

#include "parallel.hpp"

#include <gmp.h>
#include <json.hpp>

#include <algorithm>
#include <mutex>

namespace billspec {

namespace {

// Complex kernels on raw MPFR values; t is scratch at working precision.
void cmul(Complex& out, const Complex& a, const Complex& b, Real& t, Real& u) {
    mpfr_mul(t.raw(), a.im.raw(), b.im.raw(), MPFR_RNDN);
    mpfr_fms(t.raw(), a.re.raw(), b.re.raw(), t.raw(), MPFR_RNDN);
    mpfr_mul(u.raw(), a.im.raw(), b.re.raw(), MPFR_RNDN);
    mpfr_fma(out.im.raw(), a.re.raw(), b.im.raw(), u.raw(), MPFR_RNDN);
    mpfr_set(out.re.raw(), t.raw(), MPFR_RNDN);
}

void cfma(Complex& acc, const Complex& a, const Complex& b, Real& t) {
    mpfr_fma(acc.re.raw(), a.re.raw(), b.re.raw(), acc.re.raw(), MPFR_RNDN);
    mpfr_mul(t.raw(), a.im.raw(), b.im.raw(), MPFR_RNDN);
    mpfr_sub(acc.re.raw(), acc.re.raw(), t.raw(), MPFR_RNDN);
    mpfr_fma(acc.im.raw(), a.re.raw(), b.im.raw(), acc.im.raw(), MPFR_RNDN);
    mpfr_fma(acc.im.raw(), a.im.raw(), b.re.raw(), acc.im.raw(), MPFR_RNDN);
}

// e^{2πikx} for k = −K..K, index k + K
std::vector<Complex> fourier_powers(const Complex& x, int K) {
    std::vector<Complex> w(2 * K + 1);
    w[K] = Complex(Real(1), Real(0));
    if (K == 0) return w;
    const Real tp = two_pi();
    Complex e = expi(tp * x.re);
    Real damp = exp(-tp * x.im);
    Complex up = e * damp;
    Complex down = e.conj() / damp;
    Real t, u;
    for (int k = 1; k <= K; ++k) {
        w[K + k] = w[K + k - 1];
        cmul(w[K + k], w[K + k], up, t, u);
        w[K - k] = w[K - k + 1];
        cmul(w[K - k], w[K - k], down, t, u);
    }
    return w;
}

Complex two_pi_i_k(int k) { return Complex(Real(0), two_pi() * k); }

int round_up4(int n) { return (n + 3) / 4 * 4; }

// Exact Bernoulli numbers (B_1 = −1/2), cached.
class Bernoulli {
public:
    Real get(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        extend(n);
        Real out;
        mpfr_set_q(out.raw(), values_[n].q, MPFR_RNDN);
        return out;
    }

private:
    struct Q {
        mpq_t q;
        Q() { mpq_init(q); }
        Q(const Q& o) { mpq_init(q); mpq_set(q, o.q); }
        ~Q() { mpq_clear(q); }
    };

    void extend(int n) {
        while (static_cast<int>(values_.size()) <= n) {
            const int m = static_cast<int>(values_.size());
            Q b;
            if (m == 0) {
                mpq_set_ui(b.q, 1, 1);
            } else {
                // Σ_{j=0}^{m} C(m+1, j) B_j = 0
                mpq_t acc, term;
                mpz_t binom;
                mpq_init(acc);
                mpq_init(term);
                mpz_init(binom);
                for (int j = 0; j < m; ++j) {
                    mpz_bin_uiui(binom, m + 1, j);
                    mpq_set_z(term, binom);
                    mpq_mul(term, term, values_[j].q);
                    mpq_add(acc, acc, term);
                }
                mpq_set_si(term, -1, m + 1);
                mpq_mul(b.q, acc, term);
                mpq_clear(acc);
                mpq_clear(term);
                mpz_clear(binom);
            }
            values_.push_back(b);
        }
    }

    std::mutex mutex_;
    std::vector<Q> values_;
};

Bernoulli& bernoulli() {
    static Bernoulli b;
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// FourierTaylorSeries

FourierTaylorSeries::FourierTaylorSeries(int K, int J, bool real) : K_(K), J_(J), real_(real) {
    if (K < 0 || J < 0) throw std::invalid_argument("series truncation must be non-negative");
    c_.assign(static_cast<size_t>(2 * K + 1) * (J + 1), Complex(Real(0), Real(0)));
}

size_t FourierTaylorSeries::index(int k, int j) const {
    if (k < -K_ || k > K_ || j < 0 || j > J_) throw std::out_of_range("series coefficient out of range");
    return static_cast<size_t>(k + K_) * (J_ + 1) + j;
}

void FourierTaylorSeries::set(int k, int j, const Complex& v) {
    if (!real_) {
        c_[index(k, j)] = v;
        return;
    }
    if (k == 0) {
        c_[index(0, j)] = Complex(v.re, Real(0));
        return;
    }
    c_[index(k, j)] = v;
    c_[index(-k, j)] = v.conj();
}

void FourierTaylorSeries::add_to(int k, int j, const Complex& v) {
    if (real_ && k < 0) {
        add_to(-k, j, v.conj());
        return;
    }
    set(k, j, c_[index(k, j)] + v);
}

Complex FourierTaylorSeries::operator()(const Complex& x, const Complex& y) const {
    auto w = fourier_powers(x, K_);
    Complex out(Real(0), Real(0)), h;
    Real t, u;
    for (int k = -K_; k <= K_; ++k) {
        h = c_[index(k, J_)];
        for (int j = J_ - 1; j >= 0; --j) {
            cmul(h, h, y, t, u);
            h += c_[index(k, j)];
        }
        cfma(out, w[k + K_], h, t);
    }
    return out;
}

Real FourierTaylorSeries::eval_real(const Real& x, const Real& y) const {
    return (*this)(Complex(x, Real(0)), Complex(y, Real(0))).re;
}

FourierTaylorSeries::Jet FourierTaylorSeries::jet(const Complex& x, const Complex& y) const {
    auto w = fourier_powers(x, K_);
    Jet out{Complex(Real(0), Real(0)), Complex(Real(0), Real(0)), Complex(Real(0), Real(0))};
    Complex h, hp, wk;
    Real t, u;
    const Real tp = two_pi();
    for (int k = -K_; k <= K_; ++k) {
        h = c_[index(k, J_)];
        hp = Complex(Real(0), Real(0));
        for (int j = J_ - 1; j >= 0; --j) {
            cmul(hp, hp, y, t, u);
            hp += h;
            cmul(h, h, y, t, u);
            h += c_[index(k, j)];
        }
        cmul(wk, w[k + K_], h, t, u);
        out.f += wk;
        out.fx += Complex(-wk.im * (tp * k), wk.re * (tp * k));
        cfma(out.fy, w[k + K_], hp, t);
    }
    return out;
}

std::vector<Complex> FourierTaylorSeries::harmonic(int k) const {
    std::vector<Complex> out(J_ + 1, Complex(Real(0), Real(0)));
    if (k < -K_ || k > K_) return out;
    for (int j = 0; j <= J_; ++j) out[j] = c_[index(k, j)];
    return out;
}

FourierTaylorSeries FourierTaylorSeries::slice(int j) const {
    FourierTaylorSeries out(K_, 0, real_);
    if (j < 0 || j > J_) return out;
    for (int k = -K_; k <= K_; ++k) out.c_[out.index(k, 0)] = c_[index(k, j)];
    return out;
}

FourierTaylorSeries FourierTaylorSeries::derivative_x() const {
    FourierTaylorSeries out(*this);
    for (int k = -K_; k <= K_; ++k) {
        Complex f = two_pi_i_k(k);
        for (int j = 0; j <= J_; ++j) out.c_[index(k, j)] = c_[index(k, j)] * f;
    }
    return out;
}

FourierTaylorSeries FourierTaylorSeries::antiderivative_x() const {
    FourierTaylorSeries out(K_, J_, real_);
    for (int k = -K_; k <= K_; ++k) {
        if (k == 0) continue;
        Complex f = two_pi_i_k(k);
        for (int j = 0; j <= J_; ++j) out.c_[index(k, j)] = c_[index(k, j)] / f;
    }
    return out;
}

FourierTaylorSeries FourierTaylorSeries::resized(int K, int J) const {
    FourierTaylorSeries out(K, J, real_);
    for (int k = -std::min(K, K_); k <= std::min(K, K_); ++k)
        for (int j = 0; j <= std::min(J, J_); ++j) out.c_[out.index(k, j)] = c_[index(k, j)];
    return out;
}

FourierTaylorSeries& FourierTaylorSeries::operator+=(const FourierTaylorSeries& o) {
    if (o.K_ > K_ || o.J_ > J_) *this = resized(std::max(K_, o.K_), std::max(J_, o.J_));
    real_ = real_ && o.real_;
    for (int k = -o.K_; k <= o.K_; ++k)
        for (int j = 0; j <= o.J_; ++j) c_[index(k, j)] += o.c_[o.index(k, j)];
    return *this;
}

FourierTaylorSeries& FourierTaylorSeries::operator-=(const FourierTaylorSeries& o) {
    if (o.K_ > K_ || o.J_ > J_) *this = resized(std::max(K_, o.K_), std::max(J_, o.J_));
    real_ = real_ && o.real_;
    for (int k = -o.K_; k <= o.K_; ++k)
        for (int j = 0; j <= o.J_; ++j) c_[index(k, j)] -= o.c_[o.index(k, j)];
    return *this;
}

FourierTaylorSeries& FourierTaylorSeries::operator*=(const Real& s) {
    for (auto& c : c_) c *= s;
    return *this;
}

Real FourierTaylorSeries::max_abs() const {
    Real m(0);
    for (const auto& c : c_) m = max(m, c.modulus());
    return m;
}

bool FourierTaylorSeries::is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Complex& c) { return c.re.is_zero() && c.im.is_zero(); });
}

FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a += b; }
FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a -= b; }

// ---------------------------------------------------------------------------
// Norms

Real fourier_norm(const FourierTaylorSeries& g, const Real& a, const Real& b) {
    if (!(a >= 0) || !(b > 0)) throw std::invalid_argument("fourier_norm: need a >= 0 and b > 0");
    Real total(0);
    const Real tp = two_pi();
    for (int k = -g.K(); k <= g.K(); ++k) {
        Real s(0), bj(1);
        for (int j = 0; j <= g.J(); ++j) {
            s += g.coeff(k, j).modulus() * bj;
            bj *= b;
        }
        if (!s.is_zero()) total += s * exp(tp * std::abs(k) * a);
    }
    return total;
}

Real sup_norm_grid(const FourierTaylorSeries& g, const Real& a, const Real& b, int nx, int ny) {
    Real best(0);
    for (int side : {-1, 1}) {
        for (int i = 0; i < nx; ++i) {
            Complex x(Real(i) / nx, a * side);
            for (int m = 0; m < ny; ++m) {
                Complex y = expi(two_pi() * m / ny) * b;
                best = max(best, g(x, y).modulus());
            }
        }
    }
    return best;
}

std::pair<FourierTaylorSeries, FourierTaylorSeries> k_cutoff(const FourierTaylorSeries& g, int K) {
    if (K < 1) throw std::invalid_argument("k_cutoff: K must be at least 1");
    FourierTaylorSeries low(g.K(), g.J(), g.is_real()), high(g.K(), g.J(), g.is_real());
    for (int k = -g.K(); k <= g.K(); ++k) {
        if (g.is_real() && k < 0) continue;
        auto& dst = std::abs(k) < K ? low : high;
        for (int j = 0; j <= g.J(); ++j) dst.set(k, j, g.coeff(k, j));
    }
    return {std::move(low), std::move(high)};
}

Real truncation_tail(const FourierTaylorSeries& g, const Real& b) {
    auto order_sum = [&](int j) {
        Real s(0);
        for (int k = -g.K(); k <= g.K(); ++k) s += g.coeff(k, j).modulus();
        return s * pow(b, j);
    };
    // the last two orders, so that series in even or odd powers only are covered
    const int J = g.J();
    Real last = order_sum(J);
    if (J > 0) last = max(last, order_sum(J - 1));
    if (last.is_zero()) return last;
    Real theta(0);
    for (int j = J; j >= 2 && j >= J - 1; --j) {
        Real a = order_sum(j), c = order_sum(j - 2);
        if (!c.is_zero()) theta = max(theta, sqrt(a / c));
    }
    if (theta.is_zero() || theta > 0.5) theta = Real(0.5);
    return last / (1 - theta);
}

// ---------------------------------------------------------------------------
// MapSeries

std::pair<Complex, Complex> MapSeries::operator()(const Complex& x, const Complex& y) const {
    Complex ym(Real(1), Real(0));
    for (int i = 0; i < m; ++i) ym = ym * y;
    Complex x1 = x + y + ym * g1(x, y);
    Complex y1 = y + ym * y * g2(x, y);
    return {x1, y1};
}

Real MapSeries::tail(const Real& b) const {
    return max(truncation_tail(g1, b) * pow(b, m), truncation_tail(g2, b) * pow(b, m + 1));
}

MapSeries MapSeries::integrable(int m, int K, int J) {
    return {m, FourierTaylorSeries(K, J), FourierTaylorSeries(K, J)};
}

Real fourier_norm(const MapSeries& F, const Real& a, const Real& b) {
    return max(fourier_norm(F.g1, a, b), fourier_norm(F.g2, a, b));
}

MapSeries pi_star(const MapSeries& F) {
    MapSeries out = MapSeries::integrable(F.m, F.K(), F.J());
    out.g2 = FourierTaylorSeries(F.g2.K(), F.g2.J(), F.g2.is_real());
    for (int j = 0; j <= F.g2.J(); ++j) out.g2.set(0, j, F.g2.coeff(0, j));
    return out;
}

MapSeries pi_bullet(const MapSeries& F) {
    MapSeries out = F;
    for (int j = 0; j <= F.g2.J(); ++j) out.g2.set(0, j, Complex(Real(0), Real(0)));
    return out;
}

// ---------------------------------------------------------------------------
// Homological equation

std::vector<Complex> divisor_series(int k, int order) {
    if (k == 0) throw std::invalid_argument("divisor_series: k must be nonzero");
    std::vector<Complex> d(order + 1);
    const Complex z = two_pi_i_k(k);
    Complex zp = Complex(Real(1), Real(0)) / z;   // (2πik)^{n−1}
    Real fact(1);
    for (int n = 0; n <= order; ++n) {
        if (n > 0) fact *= n;
        d[n] = zp * (bernoulli().get(n) / fact);
        zp = zp * z;
    }
    return d;
}

namespace {

std::vector<Complex> cauchy_product(const std::vector<Complex>& a, const std::vector<Complex>& b, int order) {
    std::vector<Complex> out(order + 1, Complex(Real(0), Real(0)));
    Real t;
    for (int i = 0; i < static_cast<int>(a.size()) && i <= order; ++i) {
        if (a[i].re.is_zero() && a[i].im.is_zero()) continue;
        for (int j = 0; j < static_cast<int>(b.size()) && i + j <= order; ++j) cfma(out[i + j], a[i], b[j], t);
    }
    return out;
}

}  // namespace

HomologicalSolution solve_homological(const FourierTaylorSeries& g, int K, const Real& b) {
    if (K < 1) throw std::invalid_argument("solve_homological: K must be at least 1");
    if (!((K - 1) * b < 1)) throw HomologicalError("solve_homological: (K-1)*b >= 1, divisor expansion diverges");
    for (int j = 0; j <= g.J(); ++j) {
        const Complex& c = g.coeff(0, j);
        if (!c.re.is_zero() || !c.im.is_zero())
            throw HomologicalError("this equation can not be solved: the zero harmonic of g is not zero");
    }
    const int Kout = std::min(K - 1, g.K());
    const int J = g.J();
    const int extra = 2 * J + 40;
    HomologicalSolution out{FourierTaylorSeries(Kout, J, g.is_real()), Real(0)};
    for (int k = -Kout; k <= Kout; ++k) {
        if (k == 0 || (g.is_real() && k < 0)) continue;
        auto gk = g.harmonic(k);
        auto d = divisor_series(k, extra);
        auto t = cauchy_product(d, gk, extra);
        for (int j = 0; j <= J; ++j) out.psi.set(k, j, t[j]);
        // |e^{2πiky} − 1| ≤ e^{2π|k|b} − 1 on |y| ≤ b
        Real bn = pow(b, J + 1), tail(0);
        for (int n = J + 1; n <= extra; ++n) {
            tail += t[n].modulus() * bn;
            bn *= b;
        }
        Real ratio = std::abs(k) * b;
        tail += t[extra].modulus() * pow(b, extra) * ratio / (1 - ratio);
        tail *= expm1(two_pi() * std::abs(k) * b);
        out.tail += g.is_real() ? 2 * tail : tail;
    }
    return out;
}

FourierTaylorSeries shift_series(const FourierTaylorSeries& psi) {
    FourierTaylorSeries out(psi.K(), psi.J(), psi.is_real());
    const int J = psi.J();
    Real t;
    for (int k = -psi.K(); k <= psi.K(); ++k) {
        if (psi.is_real() && k < 0) continue;
        // e^{2πiky} = Σ (2πik)^n y^n / n!
        std::vector<Complex> e(J + 1);
        e[0] = Complex(Real(1), Real(0));
        const Complex z = two_pi_i_k(k);
        for (int n = 1; n <= J; ++n) e[n] = e[n - 1] * z / Real(n);
        auto prod = cauchy_product(e, psi.harmonic(k), J);
        for (int j = 0; j <= J; ++j) out.set(k, j, prod[j]);
    }
    return out;
}

HomologicalResidual homological_residual(const FourierTaylorSeries& psi, const FourierTaylorSeries& g, int K,
                                         const Real& b, int nx, int ny) {
    auto low = k_cutoff(g, K).first;
    // y·g^{<K} within the truncation of ψ
    FourierTaylorSeries yg(std::max(psi.K(), low.K()), psi.J(), low.is_real());
    for (int k = -low.K(); k <= low.K(); ++k) {
        if (low.is_real() && k < 0) continue;
        for (int j = 1; j <= psi.J() && j - 1 <= low.J(); ++j) yg.set(k, j, low.coeff(k, j - 1));
    }
    FourierTaylorSeries alg = shift_series(psi) - psi - yg;
    HomologicalResidual out{Real(0), Real(0)};
    for (int i = 0; i < nx; ++i) {
        Real x = Real(i) / nx;
        for (int m = 0; m < ny; ++m) {
            Real y = -b + 2 * b * m / (ny - 1);
            Complex cx(x, Real(0)), cy(y, Real(0));
            out.algebraic = max(out.algebraic, alg(cx, cy).modulus());
            Complex f = psi(Complex(x + y, Real(0)), cy) - psi(cx, cy) - cy * low(cx, cy);
            out.functional = max(out.functional, f.modulus());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Near-identity changes and conjugation

namespace {

Complex cpow(const Complex& y, int p) {
    Complex out(Real(1), Real(0));
    for (int i = 0; i < p; ++i) out = out * y;
    return out;
}

}  // namespace

std::pair<Complex, Complex> NearIdentity::operator()(const Complex& x, const Complex& y) const {
    return {x + cpow(y, p1) * u(x, y), y + cpow(y, p2) * v(x, y)};
}

std::pair<Complex, Complex> NearIdentity::inverse(const Complex& X, const Complex& Y) const {
    Complex x = X, y = Y;
    const Real tol = ldexp(Real(1), 8 - Real::working_bits());
    bool small = false;
    for (int it = 0; it < 80; ++it) {
        auto ju = u.jet(x, y);
        auto jv = v.jet(x, y);
        Complex yp1 = cpow(y, p1), yp2 = cpow(y, p2);
        Complex yq1 = p1 > 0 ? cpow(y, p1 - 1) * Real(p1) : Complex(Real(0), Real(0));
        Complex yq2 = p2 > 0 ? cpow(y, p2 - 1) * Real(p2) : Complex(Real(0), Real(0));
        Complex F1 = x + yp1 * ju.f - X;
        Complex F2 = y + yp2 * jv.f - Y;
        Complex a11 = Complex(Real(1), Real(0)) + yp1 * ju.fx;
        Complex a12 = yq1 * ju.f + yp1 * ju.fy;
        Complex a21 = yp2 * jv.fx;
        Complex a22 = Complex(Real(1), Real(0)) + yq2 * jv.f + yp2 * jv.fy;
        Complex det = a11 * a22 - a12 * a21;
        Complex dx = (F1 * a22 - F2 * a12) / det;
        Complex dy = (F2 * a11 - F1 * a21) / det;
        x -= dx;
        y -= dy;
        if (small) return {x, y};
        Real scale = max(Real(1), max(x.modulus(), y.modulus()));
        if (dx.modulus() + dy.modulus() <= tol * scale) small = true;
    }
    throw std::runtime_error("NearIdentity::inverse: Newton did not converge");
}

namespace {

struct Expansion {
    FourierTaylorSeries a1, a2;   // Φ⁻¹∘F∘Φ − A, from order 0
};

Expansion expand_conjugate(const MapSeries& F, const NearIdentity& phi, const GridOptions& grid) {
    if (!F.g1.is_real() || !F.g2.is_real() || !phi.u.is_real() || !phi.v.is_real())
        throw std::invalid_argument("conjugate: series must be real");
    const int K = F.K();
    const int top = F.top_order() + 1;
    const int nx = grid.nx > 0 ? grid.nx : std::max(64, 4 * K);
    // aliasing from order n + ny is damped by (radius / R)^ny, R the radius of
    // convergence in y; one sample per 3 bits assumes R ≥ 8 radius
    const int ny = grid.ny > 0 ? grid.ny : round_up4(2 * (top + 1) + Real::working_bits() / 3);
    if (ny <= top) throw TruncationError("conjugate: y grid too small for the requested order");
    const Real r = grid.radius;
    const int bits = Real::working_bits();
    const int half = ny / 2;
    // values[i][m] for m = 0..ny/2; the rest follow from real symmetry
    std::vector<std::vector<std::pair<Complex, Complex>>> values(nx, std::vector<std::pair<Complex, Complex>>(half + 1));
    BILLSPEC_PARALLEL_FOR(true)
    for (int i = 0; i < nx; ++i) {
        PrecisionScope scope(bits);
        Complex x(Real(i) / nx, Real(0));
        for (int m = 0; m <= half; ++m) {
            Complex y = expi(two_pi() * m / ny) * r;
            auto [xs, ys] = phi(x, y);
            auto [X, Y] = F(xs, ys);
            auto [x1, y1] = phi.inverse(X, Y);
            values[i][m] = {x1 - x - y, y1 - y};
        }
    }
    // DFT over the y circle, then over x
    std::vector<std::vector<Complex>> B1(nx, std::vector<Complex>(top + 1)), B2 = B1;
    std::vector<Complex> roots(ny);
    for (int m = 0; m < ny; ++m) roots[m] = expi(-two_pi() * m / ny);
    Real t;
    for (int i = 0; i < nx; ++i) {
        for (int n = 0; n <= top; ++n) {
            Complex s1(Real(0), Real(0)), s2(Real(0), Real(0));
            for (int m = 0; m < ny; ++m) {
                const auto& v = m <= half ? values[i][m] : values[i][ny - m];
                Complex v1 = m <= half ? v.first : v.first.conj();
                Complex v2 = m <= half ? v.second : v.second.conj();
                const Complex& w = roots[(static_cast<long>(m) * n) % ny];
                cfma(s1, v1, w, t);
                cfma(s2, v2, w, t);
            }
            B1[i][n] = s1 / Real(ny);
            B2[i][n] = s2 / Real(ny);
        }
    }
    Expansion out{FourierTaylorSeries(K, top), FourierTaylorSeries(K, top)};
    std::vector<Real> rn(top + 1);
    rn[0] = Real(1);
    for (int n = 1; n <= top; ++n) rn[n] = rn[n - 1] * r;
    for (int k = 0; k <= K; ++k) {
        std::vector<Complex> wx(nx);
        for (int i = 0; i < nx; ++i) wx[i] = expi(-two_pi() * k * i / nx);
        for (int n = 0; n <= top; ++n) {
            Complex s1(Real(0), Real(0)), s2(Real(0), Real(0));
            for (int i = 0; i < nx; ++i) {
                cfma(s1, B1[i][n], wx[i], t);
                cfma(s2, B2[i][n], wx[i], t);
            }
            out.a1.set(k, n, s1 / (rn[n] * nx));
            out.a2.set(k, n, s2 / (rn[n] * nx));
        }
    }
    return out;
}

Conjugation reslice(const FourierTaylorSeries& a1, const FourierTaylorSeries& a2, int m_out, int top) {
    const int J = top - m_out;
    if (J < 0) throw TruncationError("conjugate: order exceeds the resolved top order");
    Conjugation out{MapSeries::integrable(m_out, a1.K(), J), Real(0)};
    for (int k = 0; k <= a1.K(); ++k) {
        for (int n = 0; n <= a1.J(); ++n) {
            if (n < m_out) out.dropped = max(out.dropped, a1.coeff(k, n).modulus());
            else if (n - m_out <= J) out.map.g1.set(k, n - m_out, a1.coeff(k, n));
        }
        for (int n = 0; n <= a2.J(); ++n) {
            if (n < m_out + 1) out.dropped = max(out.dropped, a2.coeff(k, n).modulus());
            else if (n - m_out - 1 <= J) out.map.g2.set(k, n - m_out - 1, a2.coeff(k, n));
        }
    }
    return out;
}

// F − A as series from order 0
Expansion expand_identity(const MapSeries& F) {
    const int top = F.top_order() + 1;
    Expansion out{FourierTaylorSeries(F.K(), top), FourierTaylorSeries(F.K(), top)};
    for (int k = 0; k <= F.K(); ++k)
        for (int j = 0; j <= F.J(); ++j) {
            out.a1.set(k, j + F.m, F.g1.coeff(k, j));
            out.a2.set(k, j + F.m + 1, F.g2.coeff(k, j));
        }
    return out;
}

}  // namespace

Conjugation conjugate(const MapSeries& F, const NearIdentity& phi, int m_out, const GridOptions& grid) {
    Expansion e = phi.is_identity() ? expand_identity(F) : expand_conjugate(F, phi, grid);
    return reslice(e.a1, e.a2, m_out, F.top_order());
}

// ---------------------------------------------------------------------------
// Averaging and the iterative step

AveragingStep averaging_step(const MapSeries& F, const GridOptions& grid) {
    const int l = F.m;
    if (l < 2) throw std::invalid_argument("averaging_step: order must be at least 2");
    if (F.J() < 2) throw TruncationError("averaging_step: J_max too small to represent the composition");
    AveragingStep out;
    FourierTaylorSeries h1 = F.g1.slice(0), h2 = F.g2.slice(0);
    out.h1_star = h1.average(0).re;
    out.h2_star = h2.average(0).re;
    FourierTaylorSeries psi2 = h2.antiderivative_x();
    psi2.add_to(0, 0, Complex(-out.h1_star, Real(0)));
    FourierTaylorSeries psi1 = (psi2 + h1).antiderivative_x();
    out.change = NearIdentity{l - 1, l, std::move(psi1), std::move(psi2)};
    Expansion e = out.change.is_identity() ? expand_identity(F) : expand_conjugate(F, out.change, grid);
    out.k1_residual = Real(0);
    out.k2_deviation = Real(0);
    for (int k = 0; k <= e.a1.K(); ++k) {
        out.k1_residual = max(out.k1_residual, e.a1.coeff(k, l).modulus());
        Complex c = e.a2.coeff(k, l + 1);
        if (k == 0) c -= Complex(out.h2_star, Real(0));
        out.k2_deviation = max(out.k2_deviation, c.modulus());
    }
    // order l+1 radial term is the constant h2*, reported and not carried
    FourierTaylorSeries a2 = e.a2;
    a2.set(0, l + 1, Complex(Real(0), Real(0)));
    for (int k = 1; k <= a2.K(); ++k) a2.set(k, l + 1, Complex(Real(0), Real(0)));
    out.next = reslice(e.a1, a2, l + 1, F.top_order()).map;
    return out;
}

NeishtadtStep neishtadt_step(const MapSeries& F, const Real& a, const Real& b, const Real& s, const GridOptions& grid) {
    const int m = F.m;
    if (m < 6) throw std::invalid_argument("neishtadt_step: order must be at least 6");
    if (!(s > 0 && s < 1)) throw std::invalid_argument("neishtadt_step: s must lie in (0, 1)");
    if (!(b > 0) || !(a - 6 * b > 0)) throw std::invalid_argument("neishtadt_step: need b > 0 and a > 6b");
    NeishtadtStep out;
    Real ratio = s / b;
    out.K = static_cast<int>(floor(ratio).to_long());
    if (Real(out.K) < ratio) ++out.K;
    out.K = std::max(out.K, 1);

    auto zero_mean = [](FourierTaylorSeries g) {
        for (int j = 0; j <= g.J(); ++j) g.set(0, j, Complex(Real(0), Real(0)));
        return g;
    };
    FourierTaylorSeries g1_star(0, F.J());
    for (int j = 0; j <= F.J(); ++j) g1_star.set(0, j, F.g1.coeff(0, j));
    FourierTaylorSeries rhs2 = zero_mean(k_cutoff(F.g2, out.K).first);
    FourierTaylorSeries psi2 = solve_homological(rhs2, out.K, b).psi;
    psi2 -= g1_star;
    FourierTaylorSeries low1 = k_cutoff(F.g1, out.K).first;
    FourierTaylorSeries rhs1 = psi2 + low1;
    rhs1 = zero_mean(rhs1);
    FourierTaylorSeries psi1 = solve_homological(rhs1, out.K, b).psi;
    out.residual = max(homological_residual(psi1, rhs1, out.K, b).algebraic,
                       homological_residual(psi2 + g1_star, rhs2, out.K, b).algebraic);
    out.change = NearIdentity{m - 1, m, psi1.resized(F.K(), F.J()), psi2.resized(F.K(), F.J())};
    out.next = conjugate(F, out.change, m, grid).map;
    MapSeries before = pi_bullet(F), after = pi_bullet(out.next);
    out.bullet_before = fourier_norm(before, a, b);
    out.bullet_before_shrunk = fourier_norm(before, a - 6 * b, b);
    out.bullet_after = fourier_norm(after, a - 6 * b, b);
    return out;
}

// ---------------------------------------------------------------------------
// Bound constants

Real omega_bound(const Real& s) {
    if (!(s >= 0 && s < 1)) throw std::invalid_argument("omega_bound: s must lie in [0, 1)");
    const Real tp = two_pi();
    if (s.is_zero()) return 1 / tp;
    const Real R = tp * s;
    auto f = [&](const Real& theta) {
        Complex z = expi(theta) * R;
        return R / (cexp(z) - Complex(Real(1), Real(0))).modulus();
    };
    // |z/(e^z − 1)| is symmetric under conjugation: θ ∈ [0, π]
    const int n = 512;
    const Real P = pi();
    int best = 0;
    Real fbest = f(Real(0));
    for (int i = 1; i <= n; ++i) {
        Real v = f(P * i / n);
        if (v > fbest) {
            fbest = v;
            best = i;
        }
    }
    Real lo = P * std::max(0, best - 1) / n, hi = P * std::min(n, best + 1) / n;
    const Real g = (sqrt(Real(5)) - 1) / 2;
    Real c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    Real fc = f(c), fd = f(d);
    const Real tol = ldexp(Real(1), -Real::working_bits() / 2);
    while (hi - lo > tol) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    return max(fbest, max(fc, fd)) / tp;
}

Real Omega_bound(const Real& s) {
    Real w = omega_bound(s);
    return (w + 1) * max(Real(1), w);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json series_json(const FourierTaylorSeries& g) {
    nlohmann::json j;
    j["K"] = g.K();
    j["J"] = g.J();
    j["real"] = g.is_real();
    auto& list = j["coefficients"] = nlohmann::json::array();
    for (int k = g.is_real() ? 0 : -g.K(); k <= g.K(); ++k)
        for (int p = 0; p <= g.J(); ++p) {
            const Complex& c = g.coeff(k, p);
            if (c.re.is_zero() && c.im.is_zero()) continue;
            list.push_back({{"k", k}, {"j", p}, {"re", c.re.str()}, {"im", c.im.str()}});
        }
    return j;
}

FourierTaylorSeries series_from(const nlohmann::json& j) {
    FourierTaylorSeries g(j.at("K").get<int>(), j.at("J").get<int>(), j.at("real").get<bool>());
    for (const auto& c : j.at("coefficients")) {
        Real re(std::string_view(c.at("re").get<std::string>()));
        Real im(std::string_view(c.at("im").get<std::string>()));
        g.set(c.at("k").get<int>(), c.at("j").get<int>(), Complex(re, im));
    }
    return g;
}

}  // namespace

std::string to_json(const FourierTaylorSeries& g) { return series_json(g).dump(); }

FourierTaylorSeries series_from_json(const std::string& text) { return series_from(nlohmann::json::parse(text)); }

std::string to_json(const MapSeries& F) {
    nlohmann::json j;
    j["m"] = F.m;
    j["g1"] = series_json(F.g1);
    j["g2"] = series_json(F.g2);
    return j.dump();
}

}  // namespace billspec

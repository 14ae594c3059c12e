#include "billspec/real.hpp"

#include <climits>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace billspec {

namespace {

thread_local int g_working_bits = 256;

constexpr mpfr_rnd_t RN = MPFR_RNDN;

struct PiCache {
    int bits = 0;
    std::unique_ptr<Real> value;
};
thread_local PiCache g_pi;

}  // namespace

int Real::working_bits() { return g_working_bits; }

void Real::set_working_bits(int bits) {
    if (bits < MPFR_PREC_MIN || bits > 1 << 20) throw std::invalid_argument("unsupported precision");
    g_working_bits = bits;
}

Real::Real() {
    mpfr_init2(v_, g_working_bits);
    mpfr_set_zero(v_, 1);
}
Real::Real(int v) {
    mpfr_init2(v_, g_working_bits);
    mpfr_set_si(v_, v, RN);
}
Real::Real(long v) {
    mpfr_init2(v_, g_working_bits);
    mpfr_set_si(v_, v, RN);
}
Real::Real(double v) {
    mpfr_init2(v_, g_working_bits);
    mpfr_set_d(v_, v, RN);
}
Real::Real(std::string_view decimal) {
    mpfr_init2(v_, g_working_bits);
    std::string s(decimal);
    char* end = nullptr;
    if (mpfr_strtofr(v_, s.c_str(), &end, 10, RN), end == s.c_str() || *end != '\0') {
        mpfr_clear(v_);
        throw std::invalid_argument("not a decimal number: " + s);
    }
}

Real::Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, RN);
}

Real::Real(Real&& o) noexcept {
    v_[0] = o.v_[0];
    o.v_[0]._mpfr_d = nullptr;
}

Real& Real::operator=(const Real& o) {
    if (this == &o) return *this;
    if (v_[0]._mpfr_d == nullptr) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
    } else if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_)) {
        mpfr_set_prec(v_, mpfr_get_prec(o.v_));
    }
    mpfr_set(v_, o.v_, RN);
    return *this;
}

Real& Real::operator=(Real&& o) noexcept {
    if (this != &o) std::swap(v_[0], o.v_[0]);
    return *this;
}

Real::~Real() {
    if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
}

Real Real::rounded_to(int bits) const {
    PrecisionScope scope(bits);
    Real r;
    mpfr_set(r.v_, v_, RN);
    return r;
}

std::string Real::str() const {
    // digits enough to round-trip: ceil(bits * log10(2)) + 1
    int digits = static_cast<int>(std::ceil(bits() * 0.30102999566398120)) + 1;
    return str(digits);
}

std::string Real::str(int digits) const {
    if (mpfr_nan_p(v_)) return "nan";
    if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
    if (mpfr_zero_p(v_)) return "0";
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Re", digits - 1, v_);
    std::string out(buf);
    mpfr_free_str(buf);
    return out;
}

long Real::exponent2() const {
    if (mpfr_zero_p(v_)) return LONG_MIN;
    return mpfr_get_exp(v_);
}

Real& Real::operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, RN); return *this; }
Real& Real::operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, RN); return *this; }
Real& Real::operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, RN); return *this; }
Real& Real::operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, RN); return *this; }
Real& Real::operator+=(long o) { mpfr_add_si(v_, v_, o, RN); return *this; }
Real& Real::operator-=(long o) { mpfr_sub_si(v_, v_, o, RN); return *this; }
Real& Real::operator*=(long o) { mpfr_mul_si(v_, v_, o, RN); return *this; }
Real& Real::operator/=(long o) { mpfr_div_si(v_, v_, o, RN); return *this; }
Real& Real::mul_2si(long e) { mpfr_mul_2si(v_, v_, e, RN); return *this; }

Real Real::operator-() const {
    Real r;
    mpfr_neg(r.v_, v_, RN);
    return r;
}

#define BILLSPEC_BINOP(op, fn)                                                  \
    Real operator op(const Real& a, const Real& b) {                           \
        Real r;                                                                \
        fn(r.raw(), a.raw(), b.raw(), RN);                                     \
        return r;                                                              \
    }

BILLSPEC_BINOP(+, mpfr_add)
BILLSPEC_BINOP(-, mpfr_sub)
BILLSPEC_BINOP(*, mpfr_mul)
BILLSPEC_BINOP(/, mpfr_div)
#undef BILLSPEC_BINOP

Real operator+(const Real& a, long b) { Real r; mpfr_add_si(r.raw(), a.raw(), b, RN); return r; }
Real operator-(const Real& a, long b) { Real r; mpfr_sub_si(r.raw(), a.raw(), b, RN); return r; }
Real operator*(const Real& a, long b) { Real r; mpfr_mul_si(r.raw(), a.raw(), b, RN); return r; }
Real operator/(const Real& a, long b) { Real r; mpfr_div_si(r.raw(), a.raw(), b, RN); return r; }
Real operator+(long a, const Real& b) { return b + a; }
Real operator-(long a, const Real& b) { Real r; mpfr_si_sub(r.raw(), a, b.raw(), RN); return r; }
Real operator*(long a, const Real& b) { return b * a; }
Real operator/(long a, const Real& b) { Real r; mpfr_si_div(r.raw(), a, b.raw(), RN); return r; }
Real operator+(const Real& a, double b) { return a + Real(b); }
Real operator-(const Real& a, double b) { return a - Real(b); }
Real operator*(const Real& a, double b) { return a * Real(b); }
Real operator/(const Real& a, double b) { return a / Real(b); }

std::ostream& operator<<(std::ostream& os, const Real& x) {
    auto p = os.precision();
    return os << x.str(p > 0 ? static_cast<int>(p) : 17);
}

#define BILLSPEC_UNARY(name, fn)      \
    Real name(const Real& x) {        \
        Real r;                       \
        fn(r.raw(), x.raw(), RN);     \
        return r;                     \
    }

BILLSPEC_UNARY(abs, mpfr_abs)
BILLSPEC_UNARY(sqrt, mpfr_sqrt)
BILLSPEC_UNARY(cbrt, mpfr_cbrt)
BILLSPEC_UNARY(sin, mpfr_sin)
BILLSPEC_UNARY(cos, mpfr_cos)
BILLSPEC_UNARY(tan, mpfr_tan)
BILLSPEC_UNARY(asin, mpfr_asin)
BILLSPEC_UNARY(acos, mpfr_acos)
BILLSPEC_UNARY(atan, mpfr_atan)
BILLSPEC_UNARY(sinh, mpfr_sinh)
BILLSPEC_UNARY(cosh, mpfr_cosh)
BILLSPEC_UNARY(acosh, mpfr_acosh)
BILLSPEC_UNARY(exp, mpfr_exp)
BILLSPEC_UNARY(expm1, mpfr_expm1)
BILLSPEC_UNARY(log, mpfr_log)
BILLSPEC_UNARY(log1p, mpfr_log1p)
#undef BILLSPEC_UNARY

void sincos(const Real& x, Real& s, Real& c) {
    if (s.bits() != Real::working_bits()) s = Real();
    if (c.bits() != Real::working_bits()) c = Real();
    mpfr_sin_cos(s.raw(), c.raw(), x.raw(), RN);
}

Real atan2(const Real& y, const Real& x) { Real r; mpfr_atan2(r.raw(), y.raw(), x.raw(), RN); return r; }
Real pow(const Real& x, const Real& y) { Real r; mpfr_pow(r.raw(), x.raw(), y.raw(), RN); return r; }
Real pow(const Real& x, long n) { Real r; mpfr_pow_si(r.raw(), x.raw(), n, RN); return r; }
Real hypot(const Real& x, const Real& y) { Real r; mpfr_hypot(r.raw(), x.raw(), y.raw(), RN); return r; }
Real floor(const Real& x) { Real r; mpfr_floor(r.raw(), x.raw()); return r; }
Real round(const Real& x) { Real r; mpfr_round(r.raw(), x.raw()); return r; }
Real fmod(const Real& x, const Real& y) { Real r; mpfr_fmod(r.raw(), x.raw(), y.raw(), RN); return r; }
Real min(const Real& a, const Real& b) { return a < b ? a : b; }
Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real ldexp(const Real& x, long e) { Real r; mpfr_mul_2si(r.raw(), x.raw(), e, RN); return r; }

Real pi() {
    if (g_pi.bits != g_working_bits) {
        g_pi.value = std::make_unique<Real>();
        mpfr_const_pi(g_pi.value->raw(), RN);
        g_pi.bits = g_working_bits;
    }
    return *g_pi.value;
}

Real two_pi() { return ldexp(pi(), 1); }

Real epsilon() {
    Real r(1);
    return r.mul_2si(-g_working_bits);
}

Real factorial(long n) {
    Real r;
    mpfr_fac_ui(r.raw(), static_cast<unsigned long>(n), RN);
    return r;
}

PrecisionScope::PrecisionScope(int bits) : saved_(g_working_bits) { Real::set_working_bits(bits); }
PrecisionScope::~PrecisionScope() { g_working_bits = saved_; }

RealContext::RealContext(int bits) : mantissa_bits(bits) {
    if (bits < 64) throw std::invalid_argument("mantissa_bits must be at least 64");
}

Real RealContext::eps() const {
    PrecisionScope s(mantissa_bits);
    return ldexp(Real(1), -mantissa_bits);
}

Real RealContext::solver_tol() const {
    PrecisionScope s(mantissa_bits);
    return ldexp(Real(1), -mantissa_bits / 2);
}

int RealContext::decimal_digits() const {
    return static_cast<int>(std::floor(mantissa_bits * 0.30102999566398120));
}

Complex& Complex::operator*=(const Complex& o) {
    Real r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
}

Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
Complex operator*(const Complex& a, const Complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
Complex operator*(const Complex& a, const Real& s) { return {a.re * s, a.im * s}; }
Complex operator*(const Real& s, const Complex& a) { return {a.re * s, a.im * s}; }
Complex operator/(const Complex& a, const Complex& b) {
    Real d = b.norm2();
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
Complex operator/(const Complex& a, const Real& s) { return {a.re / s, a.im / s}; }

Complex expi(const Real& theta) {
    Complex z;
    sincos(theta, z.im, z.re);
    return z;
}

Complex cexp(const Complex& z) {
    Complex w = expi(z.im);
    Real m = exp(z.re);
    return {w.re * m, w.im * m};
}

}  // namespace billspec

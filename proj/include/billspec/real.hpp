#pragma once

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

namespace billspec {

// Multiprecision real backed by MPFR. New values are created at the calling
// thread's working precision; copies keep the precision of their source.
class Real {
public:
    Real();
    Real(int v);
    Real(long v);
    Real(double v);
    explicit Real(std::string_view decimal);

    Real(const Real& o);
    Real(Real&& o) noexcept;
    Real& operator=(const Real& o);
    Real& operator=(Real&& o) noexcept;
    ~Real();

    static int working_bits();
    static void set_working_bits(int bits);

    int bits() const { return static_cast<int>(mpfr_get_prec(v_)); }
    Real rounded_to(int bits) const;

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    long to_long() const { return mpfr_get_si(v_, MPFR_RNDZ); }
    // Shortest decimal that rounds back to the same value at this precision.
    std::string str() const;
    std::string str(int digits) const;

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }
    long exponent2() const;

    Real& operator+=(const Real& o);
    Real& operator-=(const Real& o);
    Real& operator*=(const Real& o);
    Real& operator/=(const Real& o);
    Real& operator+=(long o);
    Real& operator-=(long o);
    Real& operator*=(long o);
    Real& operator/=(long o);
    Real operator-() const;

    Real& mul_2si(long e);

    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend std::partial_ordering operator<=>(const Real& a, const Real& b) {
        if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
        int c = mpfr_cmp(a.v_, b.v_);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }
    friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) == 0; }
    friend std::partial_ordering operator<=>(const Real& a, long b) {
        int c = mpfr_cmp_si(a.v_, b);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }
    friend bool operator==(const Real& a, int b) { return mpfr_cmp_si(a.v_, b) == 0; }
    friend std::partial_ordering operator<=>(const Real& a, int b) { return a <=> static_cast<long>(b); }
    friend bool operator==(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) == 0; }
    friend std::partial_ordering operator<=>(const Real& a, double b) {
        int c = mpfr_cmp_d(a.v_, b);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }

private:
    mpfr_t v_;
};

Real operator+(const Real& a, const Real& b);
Real operator-(const Real& a, const Real& b);
Real operator*(const Real& a, const Real& b);
Real operator/(const Real& a, const Real& b);
Real operator+(const Real& a, long b);
Real operator-(const Real& a, long b);
Real operator*(const Real& a, long b);
Real operator/(const Real& a, long b);
Real operator+(long a, const Real& b);
Real operator-(long a, const Real& b);
Real operator*(long a, const Real& b);
Real operator/(long a, const Real& b);
Real operator+(const Real& a, double b);
Real operator-(const Real& a, double b);
Real operator*(const Real& a, double b);
Real operator/(const Real& a, double b);
inline Real operator+(double a, const Real& b) { return b + a; }
inline Real operator-(double a, const Real& b) { return -(b - a); }
inline Real operator*(double a, const Real& b) { return b * a; }
inline Real operator/(double a, const Real& b) { return Real(a) / b; }
inline Real operator+(const Real& a, int b) { return a + static_cast<long>(b); }
inline Real operator-(const Real& a, int b) { return a - static_cast<long>(b); }
inline Real operator*(const Real& a, int b) { return a * static_cast<long>(b); }
inline Real operator/(const Real& a, int b) { return a / static_cast<long>(b); }
inline Real operator+(int a, const Real& b) { return static_cast<long>(a) + b; }
inline Real operator-(int a, const Real& b) { return static_cast<long>(a) - b; }
inline Real operator*(int a, const Real& b) { return static_cast<long>(a) * b; }
inline Real operator/(int a, const Real& b) { return static_cast<long>(a) / b; }

std::ostream& operator<<(std::ostream& os, const Real& x);

Real abs(const Real& x);
Real sqrt(const Real& x);
Real cbrt(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real tan(const Real& x);
void sincos(const Real& x, Real& s, Real& c);
Real asin(const Real& x);
Real acos(const Real& x);
Real atan(const Real& x);
Real atan2(const Real& y, const Real& x);
Real sinh(const Real& x);
Real cosh(const Real& x);
Real acosh(const Real& x);
Real exp(const Real& x);
Real expm1(const Real& x);
Real log(const Real& x);
Real log1p(const Real& x);
Real pow(const Real& x, const Real& y);
Real pow(const Real& x, long n);
Real hypot(const Real& x, const Real& y);
Real floor(const Real& x);
Real round(const Real& x);
Real fmod(const Real& x, const Real& y);
Real min(const Real& a, const Real& b);
Real max(const Real& a, const Real& b);
Real ldexp(const Real& x, long e);

Real pi();
Real two_pi();
Real epsilon();       // 2^-bits at the working precision
Real factorial(long n);

// Sets the working precision for the lifetime of the scope (per thread).
class PrecisionScope {
public:
    explicit PrecisionScope(int bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    int saved_;
};

struct RealContext {
    int mantissa_bits = 256;

    RealContext() = default;
    explicit RealContext(int bits);

    Real eps() const;
    Real solver_tol() const;
    int decimal_digits() const;
};

struct Complex {
    Real re;
    Real im;

    Complex() = default;
    Complex(Real r) : re(std::move(r)), im(0) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}

    Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
    Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
    Complex& operator*=(const Complex& o);
    Complex& operator*=(const Real& s) { re *= s; im *= s; return *this; }
    Complex operator-() const { return {-re, -im}; }
    Complex conj() const { return {re, -im}; }
    Real norm2() const { return re * re + im * im; }
    Real modulus() const { return hypot(re, im); }
};

Complex operator+(const Complex& a, const Complex& b);
Complex operator-(const Complex& a, const Complex& b);
Complex operator*(const Complex& a, const Complex& b);
Complex operator*(const Complex& a, const Real& s);
Complex operator*(const Real& s, const Complex& a);
Complex operator/(const Complex& a, const Complex& b);
Complex operator/(const Complex& a, const Real& s);
Complex expi(const Real& theta);
Complex cexp(const Complex& z);

}  // namespace billspec

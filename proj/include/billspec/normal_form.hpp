#pragma once

#include "billspec/real.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace billspec {

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HomologicalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// g(x, y) = Σ_{|k|≤K} Σ_{j≤J} c_{k,j} e^{2πikx} y^j.
// A real series stores both c_{k,j} and c_{−k,j} = conj(c_{k,j}); set()
// keeps the pair consistent and drops the imaginary part of k = 0.
class FourierTaylorSeries {
public:
    FourierTaylorSeries() = default;
    FourierTaylorSeries(int K, int J, bool real = true);

    int K() const { return K_; }
    int J() const { return J_; }
    bool is_real() const { return real_; }

    const Complex& coeff(int k, int j) const { return c_[index(k, j)]; }
    void set(int k, int j, const Complex& v);
    void add_to(int k, int j, const Complex& v);

    Complex operator()(const Complex& x, const Complex& y) const;
    Real eval_real(const Real& x, const Real& y) const;

    // Value and first partial derivatives in one pass.
    struct Jet {
        Complex f, fx, fy;
    };
    Jet jet(const Complex& x, const Complex& y) const;

    // ĝ_k(y) as Taylor coefficients.
    std::vector<Complex> harmonic(int k) const;
    // x-average of the y^j coefficient (real part for real series).
    Complex average(int j) const { return coeff(0, j); }
    // The coefficient of y^j as a function of x (J = 0 series).
    FourierTaylorSeries slice(int j) const;

    FourierTaylorSeries derivative_x() const;
    // Termwise antiderivative in x with zero mean; the k = 0 part is ignored.
    FourierTaylorSeries antiderivative_x() const;
    // Same coefficients, embedded in a larger truncation.
    FourierTaylorSeries resized(int K, int J) const;

    FourierTaylorSeries& operator+=(const FourierTaylorSeries& o);
    FourierTaylorSeries& operator-=(const FourierTaylorSeries& o);
    FourierTaylorSeries& operator*=(const Real& s);

    Real max_abs() const;
    bool is_zero() const;

private:
    size_t index(int k, int j) const;

    int K_ = 0, J_ = 0;
    bool real_ = true;
    std::vector<Complex> c_;
};

FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b);
FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b);

// Σ_k (Σ_j |c_{k,j}| b^j) e^{2π|k|a}
Real fourier_norm(const FourierTaylorSeries& g, const Real& a, const Real& b);
// max |g| over the distinguished boundary |Im x| = a, |y| = b
Real sup_norm_grid(const FourierTaylorSeries& g, const Real& a, const Real& b, int nx = 64, int ny = 16);
// (g^{<K}, g^{≥K}) split by |k|
std::pair<FourierTaylorSeries, FourierTaylorSeries> k_cutoff(const FourierTaylorSeries& g, int K);
// M / (1 − θ) with M the larger of the order J and J − 1 sums Σ_k |c_{k,j}| b^j
// and θ the per-order ratio estimated two orders apart, capped at 1/2.
Real truncation_tail(const FourierTaylorSeries& g, const Real& b);

// F(x, y) = (x + y + y^m g1(x, y), y + y^{m+1} g2(x, y))
struct MapSeries {
    int m = 2;
    FourierTaylorSeries g1, g2;

    int K() const { return g1.K(); }
    int J() const { return g1.J(); }
    // Highest power of y resolved in the angular component.
    int top_order() const { return m + J(); }

    std::pair<Complex, Complex> operator()(const Complex& x, const Complex& y) const;
    Real tail(const Real& b) const;

    static MapSeries integrable(int m, int K, int J);
};

// max(‖g1‖, ‖g2‖)
Real fourier_norm(const MapSeries& F, const Real& a, const Real& b);
// π* keeps (0, y^{m+1} g2*(y)) with g2* the x-average of g2; π• is the rest.
MapSeries pi_star(const MapSeries& F);
MapSeries pi_bullet(const MapSeries& F);

// Divisor expansion y/(e^{2πiky} − 1) = Σ_n B_n (2πik)^{n−1} y^n / n!.
std::vector<Complex> divisor_series(int k, int order);

struct HomologicalSolution {
    FourierTaylorSeries psi;
    Real tail;               // bound for the grid residual of the functional equation
};

// Solves ψ(x + y, y) − ψ(x, y) = y g^{<K}(x, y) harmonic by harmonic. Refuses
// when (K − 1)·b ≥ 1, where some divisor expansion leaves its disk, or when
// ĝ_0 ≠ 0.
HomologicalSolution solve_homological(const FourierTaylorSeries& g, int K, const Real& b);

// ψ(x + y, y) expanded in y and truncated to the order of ψ.
FourierTaylorSeries shift_series(const FourierTaylorSeries& psi);

struct HomologicalResidual {
    Real algebraic;          // truncated-algebra residual on the grid
    Real functional;         // residual of the exact shift on the grid
};
// Grid of nx points in x ∈ [0, 1) and ny points in y ∈ [−b, b].
HomologicalResidual homological_residual(const FourierTaylorSeries& psi, const FourierTaylorSeries& g, int K,
                                         const Real& b, int nx = 64, int ny = 16);

// Φ(x, y) = (x + y^{p1} u(x, y), y + y^{p2} v(x, y))
struct NearIdentity {
    int p1 = 1, p2 = 2;
    FourierTaylorSeries u, v;

    std::pair<Complex, Complex> operator()(const Complex& x, const Complex& y) const;
    std::pair<Complex, Complex> inverse(const Complex& X, const Complex& Y) const;
    bool is_identity() const { return u.is_zero() && v.is_zero(); }
};

// Sampling grid of the conjugation: nx points in x, ny on |y| = radius.
struct GridOptions {
    Real radius{"0.0625"};
    int nx = 0;              // 0: max(64, 4 K)
    int ny = 0;              // 0: 2 (top order + 1) + bits/3, a multiple of 4
};

struct Conjugation {
    MapSeries map;
    // Largest coefficient below the declared order that was discarded.
    Real dropped;
};

// Φ⁻¹ ∘ F ∘ Φ re-expanded with order m_out and the same top order. F and Φ
// must be real; Φ⁻¹ is evaluated pointwise by Newton.
Conjugation conjugate(const MapSeries& F, const NearIdentity& phi, int m_out, const GridOptions& grid = {});

struct AveragingStep {
    NearIdentity change;     // (x + y^{l−1} ψ1(x), y + y^l ψ2(x))
    MapSeries next;          // order l + 1
    Real h1_star, h2_star;
    Real k1_residual;        // largest order-l angular coefficient after the step
    Real k2_deviation;       // largest |order-(l+1) radial coefficient − h2*|
};

AveragingStep averaging_step(const MapSeries& F, const GridOptions& grid = {});

struct NeishtadtStep {
    NearIdentity change;     // (y^{m−1} ψ1, y^m ψ2)
    MapSeries next;
    int K = 1;
    Real bullet_before;      // ‖π• G‖ at (a, b)
    Real bullet_before_shrunk;   // ‖π• G‖ at (a − 6b, b)
    Real bullet_after;       // ‖π• G̃‖ at (a − 6b, b)
    Real residual;           // truncated-algebra residual of the linear equation
};

NeishtadtStep neishtadt_step(const MapSeries& F, const Real& a, const Real& b, const Real& s,
                             const GridOptions& grid = {});

// ω(s) = (1/2π) max_{|z| ≤ 2πs} |z / (e^z − 1)|, maximized on the circle
// |z| = 2πs, and Ω(s) = (ω(s) + 1) max(1, ω(s)). Bound constants only.
Real omega_bound(const Real& s);
Real Omega_bound(const Real& s);

std::string to_json(const FourierTaylorSeries& g);
FourierTaylorSeries series_from_json(const std::string& text);
std::string to_json(const MapSeries& F);

}  // namespace billspec

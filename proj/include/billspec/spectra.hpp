#pragma once

#include "billspec/curve.hpp"
#include "billspec/normal_form.hpp"
#include "billspec/orbits.hpp"
#include "billspec/real.hpp"
#include "billspec/trig_series.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace billspec {

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LineFit {
    Real slope, intercept, r_squared;
    int n = 0;
};

// Least squares y = intercept + slope·x in working precision.
LineFit fit_line(const std::vector<Real>& x, const std::vector<Real>& y);

struct ExponentialFit {
    Real alpha, logK, r_squared;
    LineFit line;                 // log Δ against the abscissa
    std::vector<int> q_used;
};

// log Δ = log K − 2πα·ξ with ξ = q/p. Records at the precision floor or
// failed are skipped; fewer than 4 usable records is an error.
ExponentialFit fit_exponential(const std::vector<SpectrumRecord>& records, int p);
// Resonant variant around an (m, n)-resonant curve: ξ = q/|n p − m q|.
ExponentialFit fit_exponential_resonant(const std::vector<SpectrumRecord>& records, int m, int n);

// l₁ = −(1/24)(p ∫κ^{2/3} ds)³
Real marvizi_melrose_l1(const FourierCurve& curve, int p);
// Richardson extrapolation of q²(L^(p,q) − p·Length) over q, 2q, 4q, ...
Real l1_empirical(const FourierCurve& curve, int p, const std::vector<int>& q_list, const RealContext& ctx);

struct A1Value {
    Real cubed;                   // (1/24)(∫κ^{1/3} ds)³, matches the circle
    Real printed;                 // (1/24)∫κ^{1/3} ds
};
A1Value tabachnikov_a1(const FourierCurve& curve);
Real a1_empirical(const FourierCurve& curve, const std::vector<int>& q_list, const RealContext& ctx);

// Richardson table for T(q) = c + Σ d_k q^{-2k} with q doubling at each entry.
Real richardson_even(const std::vector<Real>& values);

// x = k ∫₀^s ρ^{−2/3}, y = 4k ρ^{1/3}(s) sin(r/2), k^{-1} = ∫₀^L ρ^{−2/3}.
// Internally in the tangent angle: x = k ∫₀^φ ρ^{1/3} dφ. Negative r is
// accepted and follows the backward chord.
class LazutkinCoordinates {
public:
    explicit LazutkinCoordinates(const FourierCurve& curve);

    const Real& k() const { return k_; }
    // lifted x of the tangent angle
    Real x_of_phi(const Real& phi) const;
    Real phi_of_x(const Real& x) const;

    std::pair<Real, Real> to_xy(const Real& s, const Real& r) const;
    std::pair<Real, Real> from_xy(const Real& x, const Real& y) const;

    // The billiard map in (x, y) with x lifted: x1 − x ≈ y.
    std::pair<Real, Real> map(const Real& x, const Real& y, const RealContext& ctx) const;

private:
    FourierCurve curve_;
    TrigSeries cbrt_rho_;
    Real k_;
};

// x = k ∫₀^α κ^{−2/3}, y = 2k κ^{1/3}(α) r, k^{-1} = ∫₀^{2π} ρ^{2/3} dα.
class TabachnikovCoordinates {
public:
    explicit TabachnikovCoordinates(const FourierCurve& curve);

    const Real& k() const { return k_; }
    std::pair<Real, Real> to_xy(const Real& alpha, const Real& r) const;
    std::pair<Real, Real> from_xy(const Real& x, const Real& y) const;

private:
    FourierCurve curve_;
    TrigSeries rho23_;
    Real k_;
};

struct MapSeriesOptions {
    Real radius{"0.0625"};        // Chebyshev nodes on [−radius, radius]
    int nodes = 0;                // 0: enough for the working precision
    int nx = 0;                   // 0: max(64, 4 K)
};

struct BilliardSeries {
    MapSeries map;                // order 2
    Real leading;                 // coefficient of y in x1 − x, k = 0
    Real order2_angular;          // max |coefficient of y²| in x1 − x − y
    Real order3_angular;          // max |coefficient of y³|
    Real lower_radial;            // max |coefficient of y^j|, j ≤ 3, in y1 − y
    Real fit_residual;            // off-node check against the exact map
    Real tail;                    // truncation tail at the radius
};

// Fourier–Taylor coefficients of the billiard map in Lazutkin coordinates,
// fitted from the exact map: DFT in x, Chebyshev interpolation in y. Throws
// FitError when the off-node residual exceeds ten times the tail, which
// usually means K_max is too small.
BilliardSeries billiard_map_series(const FourierCurve& curve, int J_max, int K_max, const RealContext& ctx,
                                   const MapSeriesOptions& opts = {});

// Averaging steps from the order of F up to the target order.
std::vector<AveragingStep> averaging_ladder(const MapSeries& F, int target_order, const GridOptions& grid = {});

struct OrderCheck {
    std::vector<Real> y, angular, radial;   // max over x of |F_m − A| components
    Real angular_slope, radial_slope;
};

// Conjugates the exact billiard map by the ladder changes and measures the
// remainder at the given y values (16 points in x each).
OrderCheck ladder_order_check(const FourierCurve& curve, const std::vector<AveragingStep>& steps,
                              const std::vector<Real>& y_values, const RealContext& ctx);
// The same measurement on a series map.
OrderCheck series_order_check(const MapSeries& F, const std::vector<Real>& y_values);

}  // namespace billspec

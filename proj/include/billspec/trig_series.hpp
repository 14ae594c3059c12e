#pragma once

#include "billspec/real.hpp"

#include <functional>
#include <vector>

namespace billspec {

// f(φ) = a[0] + Σ_{k≥1} a[k] cos kφ + b[k] sin kφ  (b[0] unused)
struct TrigSeries {
    std::vector<Real> a;
    std::vector<Real> b;

    int degree() const { return static_cast<int>(a.size()) - 1; }

    Real operator()(const Real& phi) const;
    Real derivative(const Real& phi) const;
    // ∫₀^φ f, lifted (includes the secular term a[0]·φ).
    Real integral(const Real& phi) const;
    Real mean() const { return a.empty() ? Real(0) : a[0]; }

    // Samples f on n uniform nodes of [0, 2π) and returns the trigonometric
    // interpolant truncated to degree n/2 - 1.
    static TrigSeries from_samples(const std::vector<Real>& samples);
    // Doubles the sample count until the top quarter of the spectrum falls
    // below tol · max|coefficient|.
    static TrigSeries fit(const std::function<Real(const Real&)>& f, const Real& tol, int min_nodes = 32,
                          int max_nodes = 1 << 14);
};

// e^{ikφ} for k = 0..n from one sincos and a multiplication recurrence.
void unit_powers(const Real& phi, int n, std::vector<Complex>& out);

}  // namespace billspec

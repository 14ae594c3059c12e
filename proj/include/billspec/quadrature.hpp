#pragma once

#include "billspec/real.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace billspec {

using RealFn = std::function<Real(const Real&)>;

struct GaussRule {
    std::vector<Real> nodes;    // on [-1, 1]
    std::vector<Real> weights;
};

// Cached per (n, working precision).
std::shared_ptr<const GaussRule> gauss_legendre_rule(int n);

Real gauss_legendre(const RealFn& f, const Real& a, const Real& b, int n, int panels = 1);

// Composite Gauss-Legendre with panel doubling until two successive results
// agree to rel_tol (relative to max(|I|, 1)).
Real integrate(const RealFn& f, const Real& a, const Real& b, const Real& rel_tol, int max_doublings = 14);

// Trapezoid rule over one full period, doubling the node count until
// successive results agree to rel_tol; one extra doubling is then applied.
Real integrate_periodic(const RealFn& f, const Real& start, const Real& period, const Real& rel_tol,
                        int min_nodes = 16, int max_nodes = 1 << 16);

}  // namespace billspec

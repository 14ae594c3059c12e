#pragma once

#include "billspec/billiard.hpp"
#include "billspec/curve.hpp"
#include "billspec/real.hpp"

#include <optional>
#include <string>
#include <vector>

namespace billspec {

enum class Table { Inner, Outer };
enum class OrbitKind { Minimizing, Minimax };
enum class Exec { Serial, Parallel };

const char* to_string(Table t);
const char* to_string(OrbitKind k);

struct Problem {
    FourierCurve curve;
    Table table = Table::Inner;
};

// Both tables use the tangent angle as configuration variable. The internal
// Lagrangian is −chord length (inner) or the cut-off area (outer), so the
// minimizing orbit of the inner table is the one of maximal length.
// Reported actions are always positive: total length or total area.
struct PeriodicOrbit {
    int p = 1, q = 2;
    std::vector<Real> angles;   // lifted φ_j (α_j), j = 0..q-1, φ_{j+q} = φ_j + 2πp
    std::vector<Real> points;   // s_j (inner, lifted arclength) or α_j (outer)
    Real action;
    OrbitKind kind = OrbitKind::Minimizing;
    Real grad_norm;
};

// Lifted sequence x_0..x_{q-1} with x_{j+q} = x_j + p·period is ordered like
// the rigid rotation by p/q.
bool is_birkhoff_ordered(const std::vector<Real>& lifted, int p, const Real& period);

struct ConstrainedMinimum {
    std::vector<Real> angles;   // x_0 pinned, x_1..x_{q-1} free
    Real F;                     // Σ Lagrangian at the constrained critical point
    Real dF, d2F;               // derivatives of F with respect to x_0
    std::vector<Real> dx;       // ∂x_j/∂x_0
    Real grad_norm;             // max |∂W/∂x_j| over the free points
    int iterations = 0;
};

// Newton on the free points with the first point pinned at phi0. The seed is
// the rigid rotation unless one is supplied.
ConstrainedMinimum constrained_minimum(const Problem& problem, int p, int q, const Real& phi0, const RealContext& ctx,
                                       const std::vector<Real>* seed = nullptr);

Real action_from_F(const Problem& problem, const Real& F);

struct OrbitPair {
    PeriodicOrbit min, minimax;
    Real delta;
    bool precision_floor = false;
    Real floor;                 // resolvable action difference at this precision
    int evaluations = 0;        // constrained minima computed
    int bits = 0;
};

struct PairOptions {
    int grid = 32;
    Exec exec = Exec::Parallel;
    // Pinned angles of a previous solve: skips the scan and only refines.
    std::optional<std::pair<Real, Real>> hint;
};

OrbitPair find_orbit_pair(const Problem& problem, int p, int q, const RealContext& ctx, const PairOptions& opts = {});

struct SpectrumRecord {
    int p = 1, q = 2;
    Real action_min, action_minimax, delta;
    int bits = 0;
    bool precision_floor = false;
    bool ok = false;
    std::string error;
    int evaluations = 0;
    Real residual;              // largest grad_norm of the two orbits
    std::optional<OrbitPair> pair;
};

struct SpectrumOptions {
    int bits_cap = 1024;        // SPECTRAL_BITS_CAP overrides when set
    Exec exec = Exec::Parallel;
    bool keep_orbits = false;
};

int bits_cap_from_env(int fallback);

std::vector<SpectrumRecord> delta_spectrum(const Problem& problem, int p, const std::vector<int>& q_list,
                                           const RealContext& ctx, const SpectrumOptions& opts = {});

// Rotation-condition graphs: ζ(ξ) is the radial coordinate whose q-th iterate
// lands at ξ + 2πp, ζ̂(ξ) is the radial coordinate of that iterate.
struct GraphPoint {
    Real zeta, zeta_hat;
    int iterations = 0;
};

GraphPoint graph_point(const Problem& problem, int p, int q, const Real& xi, const RealContext& ctx,
                       const Real* seed = nullptr);

struct GraphPair {
    std::vector<Real> xi, zeta, zeta_hat;
    Real area;                  // ∫|ζ̂ − ζ| in the invariant area form
};

GraphPair graph_pair(const Problem& problem, int p, int q, const RealContext& ctx, int samples = 0,
                     Exec exec = Exec::Parallel);

// Radial coordinates of the orbit points (incidence angle or tangent distance).
std::vector<Real> orbit_radial(const Problem& problem, const PeriodicOrbit& orbit);
// max_j |r_j − ζ(x_j)|
Real graph_deviation(const Problem& problem, const PeriodicOrbit& orbit, const RealContext& ctx);

}  // namespace billspec

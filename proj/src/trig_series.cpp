#include "billspec/trig_series.hpp"

#include <stdexcept>

namespace billspec {

void unit_powers(const Real& phi, int n, std::vector<Complex>& out) {
    out.resize(n + 1);
    out[0] = Complex(Real(1), Real(0));
    if (n == 0) return;
    out[1] = expi(phi);
    for (int k = 2; k <= n; ++k) {
        // alternate squaring to limit error growth
        if (k % 2 == 0) out[k] = out[k / 2] * out[k / 2];
        else out[k] = out[k - 1] * out[1];
    }
}

Real TrigSeries::operator()(const Real& phi) const {
    if (a.empty()) return Real(0);
    std::vector<Complex> w;
    unit_powers(phi, degree(), w);
    Real s = a[0];
    for (int k = 1; k <= degree(); ++k) s += a[k] * w[k].re + b[k] * w[k].im;
    return s;
}

Real TrigSeries::derivative(const Real& phi) const {
    if (a.size() < 2) return Real(0);
    std::vector<Complex> w;
    unit_powers(phi, degree(), w);
    Real s;
    for (int k = 1; k <= degree(); ++k) s += k * (b[k] * w[k].re - a[k] * w[k].im);
    return s;
}

Real TrigSeries::integral(const Real& phi) const {
    if (a.empty()) return Real(0);
    std::vector<Complex> w;
    unit_powers(phi, degree(), w);
    Real s = a[0] * phi;
    for (int k = 1; k <= degree(); ++k) s += (a[k] * w[k].im - b[k] * (w[k].re - 1)) / k;
    return s;
}

TrigSeries TrigSeries::from_samples(const std::vector<Real>& f) {
    const int n = static_cast<int>(f.size());
    if (n < 4 || n % 2) throw std::invalid_argument("TrigSeries::from_samples: need an even count >= 4");
    std::vector<Real> c(n), s(n);
    const Real h = two_pi() / n;
    for (int j = 0; j < n; ++j) sincos(h * j, s[j], c[j]);
    const int deg = n / 2 - 1;
    TrigSeries t;
    t.a.assign(deg + 1, Real(0));
    t.b.assign(deg + 1, Real(0));
    Real mean;
    for (int j = 0; j < n; ++j) mean += f[j];
    t.a[0] = mean / n;
    for (int k = 1; k <= deg; ++k) {
        Real ak, bk;
        for (int j = 0; j < n; ++j) {
            int idx = static_cast<int>((static_cast<long>(k) * j) % n);
            ak += f[j] * c[idx];
            bk += f[j] * s[idx];
        }
        t.a[k] = ak * 2 / n;
        t.b[k] = bk * 2 / n;
    }
    return t;
}

TrigSeries TrigSeries::fit(const std::function<Real(const Real&)>& f, const Real& tol, int min_nodes,
                           int max_nodes) {
    for (int n = min_nodes; n <= max_nodes; n *= 2) {
        std::vector<Real> samples(n);
        const Real h = two_pi() / n;
        for (int j = 0; j < n; ++j) samples[j] = f(h * j);
        TrigSeries t = from_samples(samples);
        Real scale = abs(t.a[0]);
        for (int k = 1; k <= t.degree(); ++k) scale = max(scale, max(abs(t.a[k]), abs(t.b[k])));
        Real top;
        for (int k = (3 * t.degree()) / 4; k <= t.degree(); ++k) top = max(top, max(abs(t.a[k]), abs(t.b[k])));
        if (top <= tol * scale) {
            // drop the negligible tail
            int deg = t.degree();
            while (deg > 0 && abs(t.a[deg]) <= tol * scale && abs(t.b[deg]) <= tol * scale) --deg;
            t.a.resize(deg + 1);
            t.b.resize(deg + 1);
            return t;
        }
    }
    throw std::runtime_error("TrigSeries::fit: spectrum does not decay");
}

}  // namespace billspec

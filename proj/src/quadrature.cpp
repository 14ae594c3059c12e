#include "billspec/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace billspec {

namespace {

std::mutex g_rule_mutex;
std::map<std::pair<int, int>, std::shared_ptr<const GaussRule>> g_rules;

std::shared_ptr<GaussRule> build_rule(int n) {
    auto rule = std::make_shared<GaussRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    const Real pi_ = pi();
    const Real tol = ldexp(Real(1), -Real::working_bits() + 4);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real x = cos(pi_ * (4 * i + 3) / (4 * n + 2));
        Real dp;
        for (int it = 0; it < 100; ++it) {
            Real p0(1), p1 = x;
            for (int k = 2; k <= n; ++k) {
                Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = std::move(p1);
                p1 = std::move(p2);
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            Real dx = p1 / dp;
            x -= dx;
            if (abs(dx) <= tol) {
                if (it > 0) break;
            }
        }
        Real p0(1), p1 = x;
        for (int k = 2; k <= n; ++k) {
            Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = std::move(p1);
            p1 = std::move(p2);
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        Real w = 2 / ((1 - x * x) * dp * dp);
        rule->nodes[i] = -x;
        rule->nodes[n - 1 - i] = x;
        rule->weights[i] = w;
        rule->weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule->nodes[n / 2] = Real(0);
    return rule;
}

}  // namespace

std::shared_ptr<const GaussRule> gauss_legendre_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_rule: n must be positive");
    const auto key = std::make_pair(n, Real::working_bits());
    {
        std::lock_guard<std::mutex> lock(g_rule_mutex);
        auto it = g_rules.find(key);
        if (it != g_rules.end()) return it->second;
    }
    auto rule = build_rule(n);
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto [it, inserted] = g_rules.emplace(key, std::move(rule));
    return it->second;
}

Real gauss_legendre(const RealFn& f, const Real& a, const Real& b, int n, int panels) {
    auto rule = gauss_legendre_rule(n);
    Real h = (b - a) / panels;
    Real half = h / 2;
    Real total;
    for (int p = 0; p < panels; ++p) {
        Real mid = a + h * p + half;
        Real s;
        for (int i = 0; i < n; ++i) s += rule->weights[i] * f(mid + half * rule->nodes[i]);
        total += s * half;
    }
    return total;
}

Real integrate(const RealFn& f, const Real& a, const Real& b, const Real& rel_tol, int max_doublings) {
    const int n = 24;
    int panels = 1;
    Real prev = gauss_legendre(f, a, b, n, panels);
    for (int d = 0; d < max_doublings; ++d) {
        panels *= 2;
        Real cur = gauss_legendre(f, a, b, n, panels);
        if (abs(cur - prev) <= rel_tol * max(abs(cur), Real(1))) return cur;
        prev = std::move(cur);
    }
    throw std::runtime_error("integrate: no convergence");
}

Real integrate_periodic(const RealFn& f, const Real& start, const Real& period, const Real& rel_tol,
                        int min_nodes, int max_nodes) {
    int n = min_nodes;
    auto sum_at = [&](int count, int stride_offset) {
        Real s;
        Real h = period / count;
        for (int j = 0; j < count; ++j) {
            Real x = start + h * j;
            if (stride_offset) x += h / 2;
            s += f(x);
        }
        return s;
    };
    Real sum = sum_at(n, 0);
    Real prev = sum * period / n;
    bool converged = false;
    while (n < max_nodes) {
        sum += sum_at(n, 1);
        n *= 2;
        Real cur = sum * period / n;
        bool ok = abs(cur - prev) <= rel_tol * max(abs(cur), Real(1));
        prev = std::move(cur);
        if (converged) return prev;
        if (ok) converged = true;
    }
    if (converged) return prev;
    throw std::runtime_error("integrate_periodic: no convergence");
}

}  // namespace billspec

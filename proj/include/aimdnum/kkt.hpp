#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "aimdnum/core.hpp"

namespace aimdnum {

struct KktSolution {
    SimplexPoint point;
    double multiplier = 0.0; // mu*
    double residual = 0.0;   // derivative consensus spread at the point
};

struct PFixedPoint {
    SimplexPoint point;
    double gamma_f = 0.0; // common value x_i lambda_i(x_i)
};

namespace detail {

inline constexpr int kBisectionIters = 200;

// Root of a strictly increasing g on [lo, hi]; assumes g(lo) <= 0 <= g(hi).
template <typename F>
double bisect_increasing(F&& g, double lo, double hi, double tol) {
    for (int it = 0; it < kBisectionIters && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Inverse of f' at mu on [0,1]; f' is strictly increasing with f'(0) = 0.
inline double invert_derivative(const CostFunction& f, double mu, double tol) {
    if (mu <= 0.0) return 0.0;
    if (f.derivative(1.0) <= mu) return 1.0;
    return bisect_increasing([&](double r) { return f.derivative(r) - mu; }, 0.0, 1.0, tol);
}

// Unique root of r * lambda(r) = g on [0,1]; increasing by (A2), and the
// clamp preserves monotonicity (floor * r and r are both increasing).
inline double invert_rate(const ProbabilityRule& rule, double g, double tol) {
    if (g <= 0.0) return 0.0;
    if (1.0 * rule(1.0) <= g) return 1.0;
    return bisect_increasing([&](double r) { return r * rule(r) - g; }, 0.0, 1.0, tol);
}

} // namespace detail

inline double consensus_residual(const std::vector<CostFunction>& costs, const Vec& x) {
    if (costs.size() != x.size()) throw std::invalid_argument("consensus_residual: size mismatch");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        const double d = costs[i].derivative(x[i]);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo;
}

// Solve min sum f_i(x_i) s.t. sum x_i = 1, x >= 0 by derivative consensus:
// outer bisection on the multiplier mu, inner bisection inverting each f'.
// Sum x_i(mu) is continuous and nondecreasing in mu, so the bracket is safe.
inline KktSolution solve_kkt(const std::vector<CostFunction>& costs, double C = 1.0,
                             double tol = 1e-12) {
    if (costs.empty()) throw std::invalid_argument("solve_kkt: no costs");
    if (std::abs(C - 1.0) > kSimplexTol)
        throw std::invalid_argument("solve_kkt: capacity must be normalized to 1");
    const std::size_t n = costs.size();

    double mu_hi = 0.0;
    for (const auto& f : costs) mu_hi = std::max(mu_hi, f.derivative(1.0));
    if (!(mu_hi > 0.0)) throw std::invalid_argument("solve_kkt: infeasible bracket (f' vanishes)");

    const auto total = [&](double mu) {
        double s = 0.0;
        for (const auto& f : costs) s += detail::invert_derivative(f, mu, tol);
        return s;
    };
    // total(0) = 0 < C <= total(mu_hi); no sign change would mean a degenerate
    // cost set, which the constructor already excludes.
    if (total(mu_hi) < C - kSimplexTol)
        throw std::runtime_error("solve_kkt: no sign change on multiplier bracket");

    const double mu = detail::bisect_increasing([&](double m) { return total(m) - C; }, 0.0,
                                                mu_hi, tol);
    Vec x(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = detail::invert_derivative(costs[i], mu, tol);
        sum += x[i];
    }
    for (auto& v : x) v *= C / sum; // absorb the last bisection gap
    KktSolution sol{SimplexPoint(x, C), mu, consensus_residual(costs, x)};
    return sol;
}

// Fixed point of the averaged map P: the unique x with x_i lambda_i(x_i)
// constant across agents and sum x_i = 1 (outer bisection on that constant).
inline PFixedPoint solve_p_fixed_point(const std::vector<ProbabilityRule>& rules, double C = 1.0,
                                       double tol = 1e-12) {
    if (rules.empty()) throw std::invalid_argument("solve_p_fixed_point: no rules");
    if (std::abs(C - 1.0) > kSimplexTol)
        throw std::invalid_argument("solve_p_fixed_point: capacity must be normalized to 1");
    const std::size_t n = rules.size();

    double g_hi = std::numeric_limits<double>::infinity();
    for (const auto& r : rules) g_hi = std::min(g_hi, 1.0 * r(1.0));

    const auto total = [&](double g) {
        double s = 0.0;
        for (const auto& r : rules) s += detail::invert_rate(r, g, tol);
        return s;
    };
    if (total(g_hi) < C - kSimplexTol)
        throw std::runtime_error("solve_p_fixed_point: bracket failure, sum(x(g_max)) < C");

    const double gf = detail::bisect_increasing([&](double g) { return total(g) - C; }, 0.0,
                                                g_hi, tol * g_hi);
    Vec x(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = detail::invert_rate(rules[i], gf, tol);
        sum += x[i];
    }
    for (auto& v : x) v *= C / sum;
    return PFixedPoint{SimplexPoint(x, C), gf};
}

} // namespace aimdnum

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "aimdnum/random.hpp"

namespace aimdnum {

inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kDefaultLambdaFloor = 1e-6;
inline constexpr std::size_t kGridResolution = 10000;

/// The four polynomial cost families plus nothing else: keeping the set
/// closed under these forms makes convexity and monotonicity checkable.
enum class CostKind {
    poly2,   // a r^2
    poly23,  // a r^2 + b r^3
    poly234, // a r^2 + b r^3 + c r^4
    poly246, // a r^2 + b r^4 + c r^6
};

inline std::size_t cost_kind_arity(CostKind kind) {
    return kind == CostKind::poly2 ? 1u : (kind == CostKind::poly23 ? 2u : 3u);
}

inline const char* cost_kind_name(CostKind kind) {
    switch (kind) {
    case CostKind::poly2: return "poly2";
    case CostKind::poly23: return "poly23";
    case CostKind::poly234: return "poly234";
    case CostKind::poly246: return "poly246";
    }
    return "?";
}

/// Strictly convex, strictly increasing polynomial cost on [0,1].
class CostFunction {
public:
    CostFunction(CostKind kind, Vec coefficients)
        : kind_(kind), coeff_(std::move(coefficients)) {
        if (coeff_.size() != cost_kind_arity(kind_))
            throw std::invalid_argument("CostFunction: wrong coefficient count for kind");
        for (double c : coeff_)
            if (!(c > 0.0))
                throw std::invalid_argument("CostFunction: coefficients must be strictly positive");
    }

    CostKind kind() const { return kind_; }
    const Vec& coefficients() const { return coeff_; }

    double operator()(double r) const {
        check_domain(r);
        const double r2 = r * r;
        switch (kind_) {
        case CostKind::poly2: return coeff_[0] * r2;
        case CostKind::poly23: return r2 * (coeff_[0] + coeff_[1] * r);
        case CostKind::poly234: return r2 * (coeff_[0] + r * (coeff_[1] + r * coeff_[2]));
        case CostKind::poly246: return r2 * (coeff_[0] + r2 * (coeff_[1] + r2 * coeff_[2]));
        }
        return 0.0;
    }

    double derivative(double r) const {
        check_domain(r);
        switch (kind_) {
        case CostKind::poly2: return 2.0 * coeff_[0] * r;
        case CostKind::poly23: return r * (2.0 * coeff_[0] + 3.0 * coeff_[1] * r);
        case CostKind::poly234:
            return r * (2.0 * coeff_[0] + r * (3.0 * coeff_[1] + r * 4.0 * coeff_[2]));
        case CostKind::poly246: {
            const double r2 = r * r;
            return r * (2.0 * coeff_[0] + r2 * (4.0 * coeff_[1] + r2 * 6.0 * coeff_[2]));
        }
        }
        return 0.0;
    }

    // f'(r)/r with the symbolic continuous extension at r = 0; every family
    // has lowest monomial degree 2, so the limit is 2a.
    double derivative_over_r(double r) const {
        check_domain(r);
        switch (kind_) {
        case CostKind::poly2: return 2.0 * coeff_[0];
        case CostKind::poly23: return 2.0 * coeff_[0] + 3.0 * coeff_[1] * r;
        case CostKind::poly234:
            return 2.0 * coeff_[0] + r * (3.0 * coeff_[1] + r * 4.0 * coeff_[2]);
        case CostKind::poly246: {
            const double r2 = r * r;
            return 2.0 * coeff_[0] + r2 * (4.0 * coeff_[1] + r2 * 6.0 * coeff_[2]);
        }
        }
        return 0.0;
    }

private:
    static void check_domain(double r) {
        if (!(r >= 0.0) || r > 1.0 + 1e-12)
            throw std::domain_error("CostFunction: argument outside [0,1]");
    }

    CostKind kind_;
    Vec coeff_;
};

inline double eval_cost(const CostFunction& f, double r) { return f(r); }
inline double eval_cost_derivative(const CostFunction& f, double r) { return f.derivative(r); }

/// Back-off probability rule: clamp(gamma * f'(r)/r, floor, 1). The floor
/// keeps the minimum probability positive; clamp activity is observable via
/// clamped().
class ProbabilityRule {
public:
    ProbabilityRule(CostFunction cost, double gamma, double floor = kDefaultLambdaFloor)
        : cost_(std::move(cost)), gamma_(gamma), floor_(floor) {
        if (!(gamma_ > 0.0)) throw std::invalid_argument("ProbabilityRule: gamma must be positive");
        if (!(floor_ > 0.0) || floor_ > 1.0)
            throw std::invalid_argument("ProbabilityRule: floor must be in (0,1]");
    }

    const CostFunction& cost() const { return cost_; }
    double gamma() const { return gamma_; }
    double floor() const { return floor_; }

    // Unclamped gamma * f'(r)/r.
    double raw(double r) const { return gamma_ * cost_.derivative_over_r(r); }

    double operator()(double r) const { return std::clamp(raw(r), floor_, 1.0); }

    bool clamped(double r) const {
        const double v = raw(r);
        return v < floor_ || v > 1.0;
    }

private:
    CostFunction cost_;
    double gamma_;
    double floor_;
};

inline double drop_probability(const ProbabilityRule& rule, double r) { return rule(r); }

/// Nonnegative vector summing to a fixed total (1 by default).
class SimplexPoint {
public:
    explicit SimplexPoint(Vec coords, double total = 1.0) : coords_(std::move(coords)) {
        if (coords_.empty()) throw std::invalid_argument("SimplexPoint: empty");
        double sum = 0.0;
        for (double v : coords_) {
            if (v < -kSimplexTol) throw std::invalid_argument("SimplexPoint: negative coordinate");
            sum += v;
        }
        if (std::abs(sum - total) > kSimplexTol)
            throw std::invalid_argument("SimplexPoint: coordinates do not sum to the total");
    }

    static SimplexPoint uniform(std::size_t n, double total = 1.0) {
        return SimplexPoint(Vec(n, total / static_cast<double>(n)), total);
    }

    const Vec& coords() const { return coords_; }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::size_t size() const { return coords_.size(); }

private:
    Vec coords_;
};

inline double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double linf_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline double l1_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double linf_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

/// Full problem instance. Capacity is kept for user-facing scaling; all
/// internal dynamics run on the unit simplex.
struct NetworkSpec {
    double capacity = 1.0;
    std::vector<ProbabilityRule> rules; // one per agent
    Vec growth;                         // additive-increase rates, positive
    Vec beta;                           // multiplicative-decrease factors in (0,1)

    std::size_t size() const { return rules.size(); }

    // Matrix-model alpha: growth rates normalized onto the simplex.
    Vec alpha() const {
        const double total = std::accumulate(growth.begin(), growth.end(), 0.0);
        Vec a(growth.size());
        for (std::size_t i = 0; i < growth.size(); ++i) a[i] = growth[i] / total;
        return a;
    }

    std::vector<CostFunction> costs() const {
        std::vector<CostFunction> out;
        out.reserve(rules.size());
        for (const auto& r : rules) out.push_back(r.cost());
        return out;
    }
};

// Largest Gamma with Gamma * f'_i(x)/x <= 1 on a uniform grid over (0,C].
inline double gamma_upper_bound(const std::vector<CostFunction>& costs, double C,
                                std::size_t grid = kGridResolution) {
    if (costs.empty()) throw std::invalid_argument("gamma_upper_bound: empty cost list");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : costs) {
        for (std::size_t j = 1; j <= grid; ++j) {
            const double x = C * static_cast<double>(j) / static_cast<double>(grid);
            const double ratio = f.derivative_over_r(x);
            if (ratio > 0.0) best = std::min(best, 1.0 / ratio);
        }
    }
    if (!std::isfinite(best))
        throw std::invalid_argument("gamma_upper_bound: degenerate cost (derivative vanishes)");
    return best;
}

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_network_spec(const NetworkSpec& spec,
                                              std::size_t grid = kGridResolution) {
    ValidationReport report;
    const std::size_t n = spec.size();
    if (n == 0) {
        report.violations.push_back("no agents");
        return report;
    }
    if (spec.growth.size() != n || spec.beta.size() != n) {
        report.violations.push_back("growth/beta length mismatch");
        return report;
    }
    if (!(spec.capacity > 0.0)) report.violations.push_back("capacity not positive");

    for (std::size_t i = 0; i < n; ++i) {
        if (!(spec.growth[i] > 0.0))
            report.violations.push_back("growth not positive for agent " + std::to_string(i));
        if (!(spec.beta[i] > 0.0 && spec.beta[i] < 1.0))
            report.violations.push_back("beta out of (0,1) for agent " + std::to_string(i));
    }

    // (A3) plus the clamp keep lambda in [floor, 1] by construction; a
    // nonpositive floor cannot happen past the constructor, so only the grid
    // properties remain to check.
    const std::size_t monotone_grid = std::min<std::size_t>(grid, kGridResolution);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rule = spec.rules[i];
        double prev = 0.0;
        bool monotone = true;
        for (std::size_t j = 1; j <= monotone_grid; ++j) {
            const double r = static_cast<double>(j) / static_cast<double>(monotone_grid);
            const double v = r * rule(r);
            if (v <= prev) { monotone = false; break; }
            prev = v;
        }
        if (!monotone)
            report.violations.push_back("(A2) violated: r*lambda(r) not strictly increasing for agent " +
                                        std::to_string(i));
    }

    try {
        const double gmax = gamma_upper_bound(spec.costs(), 1.0, grid);
        for (std::size_t i = 0; i < n; ++i) {
            if (spec.rules[i].gamma() > gmax * (1.0 + 1e-12)) {
                report.violations.push_back("Gamma bound exceeded, clamping active (Gamma > " +
                                            std::to_string(gmax) + ")");
                break;
            }
        }
    } catch (const std::exception& e) {
        report.violations.push_back(std::string("Gamma bound check failed: ") + e.what());
    }

    return report;
}

} // namespace aimdnum

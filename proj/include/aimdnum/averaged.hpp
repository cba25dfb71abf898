#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "aimdnum/core.hpp"
#include "aimdnum/kkt.hpp"
#include "aimdnum/random.hpp"

namespace aimdnum {

/// Hilbert projective distance together with its exponential form.
struct HilbertPair {
    double d = 0.0;     // d_H, may be +inf
    double ratio = 1.0; // e^{d_H}

    bool finite() const { return std::isfinite(d); }
};

// d_H(x,y) = max_i log(x_i/y_i) - min_j log(x_j/y_j); +inf when exactly one of
// x_i, y_i vanishes at some index. Indices where both vanish are skipped.
inline HilbertPair hilbert_distance(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("hilbert_distance: size mismatch");
    double max_ratio = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool xz = x[i] <= 0.0, yz = y[i] <= 0.0;
        if (xz && yz) continue;
        if (xz || yz) {
            const double inf = std::numeric_limits<double>::infinity();
            return HilbertPair{inf, inf};
        }
        const double r = x[i] / y[i];
        max_ratio = std::max(max_ratio, r);
        min_ratio = std::min(min_ratio, r);
    }
    const double ratio = max_ratio / min_ratio;
    return HilbertPair{std::log(ratio), ratio};
}

// The averaged map P(x) = Theta(x) (1/lambda_1(x_1), ..., 1/lambda_n(x_n)):
// the ergodic limit of the fixed chain frozen at x, under the constant
// alpha_i/(1-beta_i) convention. Maps into the relative interior.
inline SimplexPoint p_map(const std::vector<ProbabilityRule>& rules, const Vec& x) {
    if (rules.size() != x.size()) throw std::invalid_argument("p_map: size mismatch");
    Vec y(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lam = rules[i](x[i]);
        if (!(lam >= rules[i].floor())) throw std::invalid_argument("p_map: lambda below floor");
        y[i] = 1.0 / lam;
        sum += y[i];
    }
    for (auto& v : y) v /= sum;
    return SimplexPoint(std::move(y));
}

// R_eps(x) = (1-eps) x + eps P(x).
inline SimplexPoint r_eps(const std::vector<ProbabilityRule>& rules, const Vec& x, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("r_eps: eps outside [0,1]");
    const SimplexPoint p = p_map(rules, x);
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (1.0 - eps) * x[i] + eps * p[i];
    return SimplexPoint(std::move(y));
}

/// Either a constant step or the chain-induced schedule
/// eps_k = m / (T + (k+1) m + 1), which is square-summable but not summable.
class EpsSchedule {
public:
    static EpsSchedule constant(double eps) {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("EpsSchedule: constant eps must be in (0,1)");
        EpsSchedule s;
        s.eps_ = eps;
        return s;
    }

    static EpsSchedule chain_induced(long T, long m) {
        if (T < 0 || m < 1) throw std::invalid_argument("EpsSchedule: need T >= 0, m >= 1");
        EpsSchedule s;
        s.T_ = T;
        s.m_ = m;
        return s;
    }

    double operator()(long k) const {
        if (m_ == 0) return eps_;
        return static_cast<double>(m_) / static_cast<double>(T_ + (k + 1) * m_ + 1);
    }

    bool is_constant() const { return m_ == 0; }

private:
    double eps_ = 0.0;
    long T_ = 0, m_ = 0;
};

namespace detail {

// Deterministic quasi-random sample of the simplex: a Kronecker sequence with
// square-root-of-prime increments, pushed through exponential spacings.
inline std::vector<Vec> low_discrepancy_simplex(std::size_t n, std::size_t count) {
    static const double primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                    41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::sqrt(primes[i % 24]) * (1.0 + static_cast<double>(i / 24) * 0.5);
        step[i] = v - std::floor(v);
    }
    std::vector<Vec> out;
    out.reserve(count);
    for (std::size_t s = 1; s <= count; ++s) {
        Vec x(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double u = static_cast<double>(s) * step[i];
            u -= std::floor(u);
            x[i] = -std::log(1.0 - 0.999999 * u);
            sum += x[i];
        }
        for (auto& v : x) v /= sum;
        out.push_back(std::move(x));
    }
    return out;
}

} // namespace detail

/// Sampled stand-in for conv P(Sigma): P evaluated at a deterministic
/// low-discrepancy sample of the simplex. Distances are certified only up to
/// sampling resolution.
class PHull {
public:
    PHull(const std::vector<ProbabilityRule>& rules, std::size_t samples = 512,
          double delta = -1.0) {
        const std::size_t n = rules.size();
        if (samples < n + 1) throw std::invalid_argument("PHull: need samples >= n+1");
        const auto sample = detail::low_discrepancy_simplex(n, samples);
        points_.reserve(samples);
        double min_coord = std::numeric_limits<double>::infinity();
        for (const auto& y : sample) {
            Vec p = p_map(rules, y).coords();
            for (double v : p) min_coord = std::min(min_coord, v);
            points_.push_back(std::move(p));
        }
        // Default ball radius: half the empirical gap to the boundary, which
        // keeps the delta-fattened hull inside the sampled interior.
        delta_ = delta > 0.0 ? delta : 0.5 * min_coord;
        delta_plus_est_ = 0.0;
        for (const auto& y : sample) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : points_) best = std::min(best, l1_distance(y, p));
            delta_plus_est_ = std::max(delta_plus_est_, best);
        }
    }

    const std::vector<Vec>& points() const { return points_; }
    double delta() const { return delta_; }
    double delta_plus_estimate() const { return delta_plus_est_; }

    // dist_1(x, conv(points) + delta-ball), via Frank-Wolfe least squares over
    // convex weights; exact when the sampled image is a single point.
    double distance(const Vec& x, std::size_t iters = 400) const {
        const std::size_t m = points_.size();
        const std::size_t n = x.size();
        Vec w(m, 0.0);
        // Start from the nearest vertex.
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < m; ++s) {
            const double d = l1_distance(points_[s], x);
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        w[best] = 1.0;
        Vec cur = points_[best];

        for (std::size_t t = 0; t < iters; ++t) {
            // grad_s = 2 <points_s, cur - x>; pick the most-improving vertex.
            std::size_t pick = 0;
            double pick_val = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < m; ++s) {
                double g = 0.0;
                for (std::size_t i = 0; i < n; ++i) g += points_[s][i] * (cur[i] - x[i]);
                if (g < pick_val) {
                    pick_val = g;
                    pick = s;
                }
            }
            // Exact line search toward the chosen vertex.
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dir = points_[pick][i] - cur[i];
                num += (x[i] - cur[i]) * dir;
                den += dir * dir;
            }
            if (den <= 1e-30) break;
            const double gamma = std::clamp(num / den, 0.0, 1.0);
            if (gamma <= 1e-16) break;
            for (std::size_t i = 0; i < n; ++i) cur[i] += gamma * (points_[pick][i] - cur[i]);
            for (std::size_t s = 0; s < m; ++s) w[s] *= (1.0 - gamma);
            w[pick] += gamma;
        }
        return std::max(0.0, l1_distance(x, cur) - delta_);
    }

private:
    std::vector<Vec> points_;
    double delta_ = 0.0;
    double delta_plus_est_ = 0.0;
};

inline double dist_to_p_hull(const Vec& x, const std::vector<ProbabilityRule>& rules, double delta,
                             std::size_t samples) {
    return PHull(rules, samples, delta).distance(x);
}

/// Per-step record of the convex-combination iteration.
struct AveragedTrace {
    std::vector<long> steps;
    std::vector<Vec> states;
    std::vector<double> d_hilbert;  // to the fixed point
    std::vector<double> dist_hull;  // to the sampled hull
    std::vector<double> eps;
    Vec fixed_point;

    void write_csv(std::ostream& os) const {
        os << "step,eps,d_hilbert,dist_hull";
        for (std::size_t i = 0; i < fixed_point.size(); ++i) os << ",x" << i;
        os << "\n";
        char buf[128];
        for (std::size_t r = 0; r < steps.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g", steps[r], eps[r],
                          d_hilbert[r], dist_hull[r]);
            os << buf;
            for (double v : states[r]) {
                std::snprintf(buf, sizeof(buf), ",%.17g", v);
                os << buf;
            }
            os << "\n";
        }
    }
};

// x(k+1) = (1-eps_k) x(k) + eps_k P(x(k)), with Hilbert distance to the fixed
// point and 1-norm distance to the sampled hull logged every step.
inline AveragedTrace iterate_averaged(const std::vector<ProbabilityRule>& rules, const Vec& x0,
                                      const EpsSchedule& schedule, long steps,
                                      std::size_t hull_samples = 512, long stride = 1) {
    const PFixedPoint fp = solve_p_fixed_point(rules);
    const PHull hull(rules, std::max<std::size_t>(hull_samples, rules.size() + 1));

    AveragedTrace trace;
    trace.fixed_point = fp.point.coords();
    Vec x = x0;
    const auto log = [&](long k, double e) {
        trace.steps.push_back(k);
        trace.states.push_back(x);
        trace.d_hilbert.push_back(hilbert_distance(x, trace.fixed_point).d);
        trace.dist_hull.push_back(hull.distance(x));
        trace.eps.push_back(e);
    };
    log(0, 0.0);
    for (long k = 0; k < steps; ++k) {
        const double e = schedule(k);
        x = r_eps(rules, x, e).coords();
        if (stride <= 1 || (k + 1) % stride == 0 || k + 1 == steps) log(k + 1, e);
    }
    return trace;
}

/// Strict-decrease audit of d_H under R_eps outside an eta-ball.
struct ContractionReport {
    double eta = 0.0;
    double eps = 0.0;
    std::size_t trials = 0;
    std::size_t samples_used = 0;
    std::size_t violations = 0;
    double min_decrease = 0.0;
    double max_decrease = 0.0;
    double mean_decrease = 0.0;
};

inline ContractionReport check_hilbert_contraction(const std::vector<ProbabilityRule>& rules,
                                                   double eta, double eps, std::size_t trials,
                                                   std::uint64_t seed) {
    if (!(eta > 0.0)) throw std::invalid_argument("check_hilbert_contraction: eta must be > 0");
    if (trials < 1) throw std::invalid_argument("check_hilbert_contraction: trials must be >= 1");
    const PFixedPoint fp = solve_p_fixed_point(rules);
    const Vec& xs = fp.point.coords();

    ContractionReport report;
    report.eta = eta;
    report.eps = eps;
    report.trials = trials;
    report.min_decrease = std::numeric_limits<double>::infinity();
    report.max_decrease = -report.min_decrease;

    Rng rng(seed);
    double total = 0.0;
    std::size_t attempts = 0;
    const std::size_t max_attempts = trials * 1000;
    while (report.samples_used < trials && attempts < max_attempts) {
        ++attempts;
        Vec x = rng.simplex_point(rules.size());
        const double before = hilbert_distance(x, xs).d;
        if (!(before > eta) || !std::isfinite(before)) continue;
        const double after = hilbert_distance(r_eps(rules, x, eps).coords(), xs).d;
        const double decrease = before - after;
        if (!(decrease > 0.0)) ++report.violations;
        report.min_decrease = std::min(report.min_decrease, decrease);
        report.max_decrease = std::max(report.max_decrease, decrease);
        total += decrease;
        ++report.samples_used;
    }
    if (report.samples_used > 0) total /= static_cast<double>(report.samples_used);
    report.mean_decrease = total;
    return report;
}

} // namespace aimdnum

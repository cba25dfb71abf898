#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aimdnum/core.hpp"
#include "aimdnum/matrices.hpp"
#include "aimdnum/random.hpp"
#include "aimdnum/trace.hpp"

namespace aimdnum {

// Independent Bernoulli draws, one per agent in ascending index order. The
// stream order is part of the reproducibility contract.
inline DropPattern sample_drop_pattern(Rng& rng, const Vec& probs) {
    DropPattern p;
    p.drops.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) p.drops[i] = rng.bernoulli(probs[i]) ? 1 : 0;
    return p;
}

// Ergodic limit of the fixed-probability chain: entries proportional to
// alpha_i / (lambda_i (1 - beta_i)).
inline SimplexPoint xi_lambda(const Vec& lambda, const Vec& alpha, const Vec& beta) {
    check_aimd_params(alpha, beta);
    if (lambda.size() != alpha.size()) throw std::invalid_argument("xi_lambda: size mismatch");
    Vec z(lambda.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] > 0.0)) throw std::invalid_argument("xi_lambda: lambda must be positive");
        z[i] = alpha[i] / (lambda[i] * (1.0 - beta[i]));
        sum += z[i];
    }
    for (auto& v : z) v /= sum;
    return SimplexPoint(std::move(z));
}

/// Per-variant mutable state of a chain run. The running average xbar is
/// maintained for every variant; the window buffer only for the finite-window
/// one.
struct ChainState {
    Vec x;
    Vec xbar;
    long events = 0; // k
    std::deque<Vec> window;
    Vec window_sum;
    long renorm_count = 0;
    long clamp_count = 0;

    void reset(Vec x0) {
        x = x0;
        xbar = x0;
        events = 0;
        window.clear();
        window.push_back(x0);
        window_sum = std::move(x0);
        renorm_count = 0;
        clamp_count = 0;
    }
};

namespace detail {

inline void renormalize_if_drifted(ChainState& state) {
    double sum = 0.0;
    for (double v : state.x) sum += v;
    if (std::abs(sum - 1.0) > kSimplexTol) {
        for (auto& v : state.x) v /= sum;
        ++state.renorm_count;
    }
}

// xbar(k+1) = x(k+1)/(k+2) + (k+1) xbar(k)/(k+2), with k the pre-step count.
inline void update_running_average(ChainState& state) {
    const double w = 1.0 / static_cast<double>(state.events + 2);
    for (std::size_t i = 0; i < state.x.size(); ++i)
        state.xbar[i] = w * state.x[i] + (1.0 - w) * state.xbar[i];
}

inline DropPattern advance(ChainState& state, Rng& rng, const Vec& probs, const Vec& alpha,
                           const Vec& beta) {
    DropPattern pattern = sample_drop_pattern(rng, probs);
    apply_aimd_step(alpha, beta, pattern.drops, state.x);
    renormalize_if_drifted(state);
    update_running_average(state);
    ++state.events;
    return pattern;
}

} // namespace detail

inline DropPattern step_fixed_chain(ChainState& state, Rng& rng, const Vec& lambda,
                                    const Vec& alpha, const Vec& beta) {
    return detail::advance(state, rng, lambda, alpha, beta);
}

// Probabilities evaluated per agent at that agent's own window-average
// coordinate; partial averages during warmup (k < T-1).
inline DropPattern step_window_chain(ChainState& state, Rng& rng, const NetworkSpec& spec,
                                     std::size_t T, Vec* probs_out = nullptr,
                                     const Vec* alpha_hint = nullptr) {
    const std::size_t n = spec.size();
    const double m = static_cast<double>(state.window.size());
    Vec probs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double avg = state.window_sum[i] / m;
        if (spec.rules[i].clamped(avg)) ++state.clamp_count;
        probs[i] = spec.rules[i](avg);
    }
    if (probs_out) *probs_out = probs;
    DropPattern pattern =
        detail::advance(state, rng, probs, alpha_hint ? *alpha_hint : spec.alpha(), spec.beta);
    state.window.push_back(state.x);
    for (std::size_t i = 0; i < n; ++i) state.window_sum[i] += state.x[i];
    if (state.window.size() > T) {
        for (std::size_t i = 0; i < n; ++i) state.window_sum[i] -= state.window.front()[i];
        state.window.pop_front();
    }
    return pattern;
}

inline DropPattern step_longterm_chain(ChainState& state, Rng& rng, const NetworkSpec& spec,
                                       Vec* probs_out = nullptr,
                                       const Vec* alpha_hint = nullptr) {
    const std::size_t n = spec.size();
    Vec probs(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.rules[i].clamped(state.xbar[i])) ++state.clamp_count;
        probs[i] = spec.rules[i](state.xbar[i]);
    }
    if (probs_out) *probs_out = probs;
    return detail::advance(state, rng, probs, alpha_hint ? *alpha_hint : spec.alpha(), spec.beta);
}

struct ChainOptions {
    long stride = 1;
    std::optional<Vec> x0;
    bool accumulate_sbar = false; // fixed chain only; gated to n <= 20
};

struct SbarSeries {
    std::vector<long> events;
    std::vector<double> error; // ||Sbar(k) - xi_lambda e^T||_1
};

namespace detail {

inline void log_event(Trace& trace, const ChainState& state, const Vec& probs,
                      const DropPattern& pattern) {
    trace.events.push_back(state.events);
    trace.states.push_back(state.x);
    trace.averages.push_back(state.xbar);
    trace.lambdas.push_back(probs);
    trace.drops.push_back(pattern.drops);
    trace.total_events = state.events;
}

inline bool should_log(long k, long steps, long stride) {
    return stride <= 1 || k % stride == 0 || k == steps;
}

inline void finish_trace(Trace& trace, const ChainState& state) {
    trace.final_x = state.x;
    trace.final_xbar = state.xbar;
    trace.renorm_count = state.renorm_count;
    trace.clamp_count = state.clamp_count;
    trace.total_events = state.events;
}

} // namespace detail

enum class ChainVariant { fixed, window, longterm };

struct ChainRunResult {
    Trace trace;
    SbarSeries sbar; // populated only when requested
};

// IID fixed-probability chain (the lambda vector is constant). When sbar
// accumulation is on, the running matrix average Sbar(k) is compared against
// xi_lambda e^T on a log-spaced event grid.
inline ChainRunResult run_fixed_chain(const NetworkSpec& spec, const Vec& lambda, long steps,
                                      std::uint64_t seed, const ChainOptions& opts = {}) {
    if (steps < 1) throw std::invalid_argument("run_fixed_chain: need steps >= 1");
    const std::size_t n = spec.size();
    const Vec alpha = spec.alpha();
    const bool track_sbar = opts.accumulate_sbar && n <= 20;

    ChainState state;
    state.reset(opts.x0 ? *opts.x0 : Vec(n, 1.0 / static_cast<double>(n)));
    Rng rng(seed);

    ChainRunResult result;
    detail::log_event(result.trace, state, lambda, DropPattern::all(n, false));

    const SimplexPoint xi = xi_lambda(lambda, alpha, spec.beta);
    Matrix prod(n, n), sbar_sum(n, n);
    if (track_sbar) {
        for (std::size_t i = 0; i < n; ++i) prod.at(i, i) = 1.0;
        sbar_sum = prod; // the k=0 summand is the identity
    }
    long next_sbar_log = 1;

    for (long k = 1; k <= steps; ++k) {
        DropPattern pattern = step_fixed_chain(state, rng, lambda, alpha, spec.beta);
        if (detail::should_log(k, steps, opts.stride))
            detail::log_event(result.trace, state, lambda, pattern);
        if (track_sbar) {
            const auto a = build_aimd_matrix(alpha, spec.beta, pattern);
            Matrix next(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t l = 0; l < n; ++l) s += a.m.at(i, l) * prod.at(l, j);
                    next.at(i, j) = s;
                }
            prod = std::move(next);
            for (std::size_t i = 0; i < n * n; ++i) sbar_sum.data[i] += prod.data[i];
            if (k == next_sbar_log || k == steps) {
                double err = 0.0; // induced 1-norm: max column abs sum
                for (std::size_t j = 0; j < n; ++j) {
                    double col = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        col += std::abs(sbar_sum.at(i, j) / static_cast<double>(k + 1) - xi[i]);
                    err = std::max(err, col);
                }
                result.sbar.events.push_back(k);
                result.sbar.error.push_back(err);
                next_sbar_log *= 2;
            }
        }
    }
    detail::finish_trace(result.trace, state);
    return result;
}

inline Trace run_window_chain(const NetworkSpec& spec, std::size_t T, long steps,
                              std::uint64_t seed, const ChainOptions& opts = {}) {
    if (steps < 1 || T < 1) throw std::invalid_argument("run_window_chain: bad steps/T");
    const std::size_t n = spec.size();
    ChainState state;
    state.reset(opts.x0 ? *opts.x0 : Vec(n, 1.0 / static_cast<double>(n)));
    Rng rng(seed);

    Trace trace;
    detail::log_event(trace, state, Vec(n, 0.0), DropPattern::all(n, false));
    const Vec alpha = spec.alpha();
    Vec probs;
    for (long k = 1; k <= steps; ++k) {
        DropPattern pattern = step_window_chain(state, rng, spec, T, &probs, &alpha);
        if (detail::should_log(k, steps, opts.stride)) detail::log_event(trace, state, probs, pattern);
    }
    detail::finish_trace(trace, state);
    return trace;
}

inline Trace run_longterm_chain(const NetworkSpec& spec, long steps, std::uint64_t seed,
                                const ChainOptions& opts = {}) {
    if (steps < 1) throw std::invalid_argument("run_longterm_chain: need steps >= 1");
    const std::size_t n = spec.size();
    ChainState state;
    state.reset(opts.x0 ? *opts.x0 : Vec(n, 1.0 / static_cast<double>(n)));
    Rng rng(seed);

    Trace trace;
    detail::log_event(trace, state, Vec(n, 0.0), DropPattern::all(n, false));
    const Vec alpha = spec.alpha();
    Vec probs;
    for (long k = 1; k <= steps; ++k) {
        DropPattern pattern = step_longterm_chain(state, rng, spec, &probs, &alpha);
        if (detail::should_log(k, steps, opts.stride)) detail::log_event(trace, state, probs, pattern);
    }
    detail::finish_trace(trace, state);
    return trace;
}

} // namespace aimdnum

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aimdnum/chains.hpp"
#include "aimdnum/core.hpp"
#include "aimdnum/matrices.hpp"
#include "aimdnum/random.hpp"
#include "aimdnum/trace.hpp"

namespace aimdnum {

struct AgentState {
    double x = 0.0;      // current claim
    double xbar = 0.0;   // event-indexed long-term average of the claim
    double offset = 0.0; // internal clock offset T_i in [0,h)
    long events_seen = 0;
};

enum class AveragingMode { longterm, window };

/// Discrete-time setup for the per-agent AIMD loop: common step h, optional
/// per-agent offsets, probabilities driven by the chosen averaging mode.
struct SimConfig {
    NetworkSpec spec;
    double h = 1e-3;
    long horizon = 100000; // simulation ticks
    Vec offsets;           // empty = all zero
    AveragingMode mode = AveragingMode::longterm;
    std::size_t window = 1; // window length when mode == window
    std::optional<Vec> x0;  // absolute claims; default C/n each
    long stride = 1;
    long max_events = -1; // stop after this many capacity events (-1 = horizon only)
};

inline bool detect_capacity_event(const std::vector<AgentState>& states, double C) {
    double sum = 0.0;
    for (const auto& s : states) sum += s.x;
    return sum >= C;
}

// Algorithm-1 simulation. Capacity events are detected at the monitor's clock
// (once per tick, before agents act); each raised tick counts as one event k
// and every agent draws independently, ascending index order. Event-indexed
// states are recorded normalized by C so they live on the chain's simplex.
inline Trace run_agent_simulation(const SimConfig& config, std::uint64_t seed) {
    const std::size_t n = config.spec.size();
    if (n == 0) throw std::invalid_argument("run_agent_simulation: empty spec");
    if (!(config.h > 0.0)) throw std::invalid_argument("run_agent_simulation: h must be positive");
    if (!config.offsets.empty()) {
        if (config.offsets.size() != n)
            throw std::invalid_argument("run_agent_simulation: offsets size mismatch");
        for (double t : config.offsets)
            if (t < 0.0 || t >= config.h)
                throw std::invalid_argument("run_agent_simulation: offsets must be in [0,h)");
    }
    const double C = config.spec.capacity;

    std::vector<AgentState> agents(n);
    for (std::size_t i = 0; i < n; ++i) {
        agents[i].x = config.x0 ? (*config.x0)[i] : C / static_cast<double>(n);
        agents[i].xbar = agents[i].x;
        agents[i].offset = config.offsets.empty() ? 0.0 : config.offsets[i];
    }

    // Agents act in ascending offset order within a tick (ties by index).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return agents[a].offset < agents[b].offset;
    });

    // Window-mode history of normalized event states, one row per event.
    std::deque<Vec> window;
    Vec window_sum(n, 0.0);

    Rng rng(seed);
    Trace trace;
    long events = 0;
    Vec probs(n), xnorm(n);

    for (long tick = 0; tick < config.horizon; ++tick) {
        double sum = 0.0;
        for (const auto& a : agents) sum += a.x;
        const bool event = sum >= C;

        if (event) {
            if (sum > C * 1.10) trace.overshoot_warning = true;
            for (std::size_t i = 0; i < n; ++i) xnorm[i] = agents[i].x / C;

            // Event-indexed averages drive the probabilities (normalized by C
            // so the rules see their [0,1] domain).
            if (config.mode == AveragingMode::window) {
                window.push_back(xnorm);
                for (std::size_t i = 0; i < n; ++i) window_sum[i] += xnorm[i];
                if (window.size() > config.window) {
                    for (std::size_t i = 0; i < n; ++i) window_sum[i] -= window.front()[i];
                    window.pop_front();
                }
            }
            const double wk = 1.0 / static_cast<double>(events + 1);
            for (std::size_t i = 0; i < n; ++i) {
                auto& a = agents[i];
                a.xbar = (events == 0) ? xnorm[i] : (wk * xnorm[i] + (1.0 - wk) * a.xbar);
                const double avg = config.mode == AveragingMode::window
                                       ? window_sum[i] / static_cast<double>(window.size())
                                       : a.xbar;
                if (config.spec.rules[i].clamped(avg)) ++trace.clamp_count;
                probs[i] = config.spec.rules[i](avg);
            }

            DropPattern pattern = sample_drop_pattern(rng, probs);
            const bool log = config.stride <= 1 || events % config.stride == 0;
            if (log) {
                trace.events.push_back(events);
                trace.states.push_back(xnorm);
                Vec xbars(n);
                for (std::size_t i = 0; i < n; ++i) xbars[i] = agents[i].xbar;
                trace.averages.push_back(xbars);
                trace.lambdas.push_back(probs);
                trace.drops.push_back(pattern.drops);
                trace.wallclock.push_back(tick);
            }

            for (std::size_t idx : order) {
                auto& a = agents[idx];
                ++a.events_seen;
                if (pattern.drops[idx])
                    a.x *= config.spec.beta[idx];
                else
                    a.x += config.spec.growth[idx] * config.h;
            }
            ++events;
            if (config.max_events > 0 && events >= config.max_events) break;
        } else {
            for (std::size_t idx : order) agents[idx].x += config.spec.growth[idx] * config.h;
        }
    }

    trace.total_events = events;
    trace.final_x.resize(n);
    trace.final_xbar.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        trace.final_x[i] = agents[i].x / C;
        trace.final_xbar[i] = agents[i].xbar;
    }
    return trace;
}

// Runs the simulation and replays the recorded drop decisions through the
// event-indexed matrix chain; the max 1-norm gap over events quantifies the
// O(h) discretization error.
inline double event_to_matrix_residual(const SimConfig& config, std::uint64_t seed, long events) {
    if (events < 1) return 0.0;
    SimConfig cfg = config;
    cfg.max_events = events;
    cfg.stride = 1;
    Trace sim = run_agent_simulation(cfg, seed);
    if (sim.events.empty()) return 0.0;

    const Vec alpha = config.spec.alpha();
    Vec x = sim.states.front();
    double sum = 0.0;
    for (double v : x) sum += v;
    for (auto& v : x) v /= sum;

    double residual = l1_distance(sim.states.front(), x);
    for (std::size_t r = 0; r + 1 < sim.events.size(); ++r) {
        apply_aimd_step(alpha, config.spec.beta, sim.drops[r], x);
        residual = std::max(residual, l1_distance(sim.states[r + 1], x));
    }
    return residual;
}

} // namespace aimdnum

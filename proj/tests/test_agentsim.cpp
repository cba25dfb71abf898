#include <catch2/catch_amalgamated.hpp>

#include "aimdnum/agentsim.hpp"
#include "aimdnum/experiment.hpp"
#include "aimdnum/kkt.hpp"

using namespace aimdnum;

namespace {

CostFunction quad(double a) { return CostFunction(CostKind::poly2, {a}); }

// n=2 symmetric spec whose probability rule is constantly 1 (a = 650 with
// gamma = 1/1300 sits exactly at the clamp boundary). The back-off factor is
// chosen so the regrowth time is not an exact multiple of the tick, keeping
// the capacity overshoot at its generic O(h) size.
NetworkSpec always_drop_spec() {
    NetworkSpec net;
    net.growth = {0.01, 0.01};
    net.beta = {0.843712951077, 0.843712951077};
    net.rules.emplace_back(quad(650.0), 1.0 / 1300.0);
    net.rules.emplace_back(quad(650.0), 1.0 / 1300.0);
    return net;
}

} // namespace

TEST_CASE("capacity detection") {
    std::vector<AgentState> agents(2);
    agents[0].x = 0.6;
    agents[1].x = 0.5;
    CHECK(detect_capacity_event(agents, 1.0));
    agents[0].x = 0.5;
    CHECK(detect_capacity_event(agents, 1.0)); // sum == C counts
    agents[0].x = 0.0;
    agents[1].x = 0.0;
    CHECK_FALSE(detect_capacity_event(agents, 1.0));
}

TEST_CASE("claims only grow between events and only shrink by the back-off factor") {
    SimConfig cfg;
    cfg.spec = generate_random_network(4, 100.0, 1.0 / 1300.0, 61);
    cfg.h = 1e-3;
    cfg.horizon = 20000;
    cfg.stride = 1;
    const Trace trace = run_agent_simulation(cfg, 61);
    REQUIRE(trace.total_events > 10);

    // Replay the recorded transitions: at each event, every agent either
    // jumps to beta*x or adds growth*h; in between it only grows.
    for (std::size_t r = 0; r + 1 < trace.events.size(); ++r) {
        const long gap_ticks = trace.wallclock[r + 1] - trace.wallclock[r];
        REQUIRE(gap_ticks >= 1);
        for (std::size_t i = 0; i < 4; ++i) {
            const double before = trace.states[r][i];
            const double after = trace.states[r + 1][i];
            const double grown =
                before + static_cast<double>(gap_ticks) * cfg.spec.growth[i] * cfg.h;
            const double dropped =
                before * cfg.spec.beta[i] +
                static_cast<double>(gap_ticks - 1) * cfg.spec.growth[i] * cfg.h;
            const bool matches_grow = std::abs(after - grown) <= 1e-12;
            const bool matches_drop = std::abs(after - dropped) <= 1e-12;
            REQUIRE((matches_grow || matches_drop));
            REQUIRE(static_cast<bool>(trace.drops[r][i]) == matches_drop);
        }
    }
}

TEST_CASE("aggregate at events overshoots by at most one tick of growth") {
    SimConfig cfg;
    cfg.spec = generate_random_network(6, 100.0, 1.0 / 1300.0, 62);
    cfg.h = 1e-3;
    cfg.horizon = 20000;
    cfg.stride = 1;
    const Trace trace = run_agent_simulation(cfg, 62);
    double total_growth = 0.0;
    for (double g : cfg.spec.growth) total_growth += g;
    for (std::size_t r = 1; r < trace.events.size(); ++r) {
        double sum = 0.0;
        for (double v : trace.states[r]) sum += v;
        REQUIRE(sum >= 1.0 - 1e-12);
        // An event approached from below (at least one growth-only tick since
        // the previous event) exceeds C by at most one aggregate growth step.
        // Consecutive raised ticks can accumulate further while nobody drops.
        if (trace.wallclock[r] - trace.wallclock[r - 1] >= 2)
            REQUIRE(sum <= 1.0 + total_growth * cfg.h + 1e-12);
    }
    CHECK_FALSE(trace.overshoot_warning);
}

TEST_CASE("always-drop dynamics track repeated all-drop matrix application") {
    SimConfig cfg;
    cfg.spec = always_drop_spec();
    cfg.h = 1e-3;
    cfg.horizon = 2000000;
    const double residual = event_to_matrix_residual(cfg, 63, 100);
    CHECK(residual <= 5.0 * cfg.h);
}

TEST_CASE("discretization error shrinks with the step size") {
    SimConfig cfg;
    cfg.spec = always_drop_spec();
    double prev = std::numeric_limits<double>::infinity();
    for (double h : {1e-2, 1e-3}) {
        cfg.h = h;
        cfg.horizon = static_cast<long>(60.0 * (0.15 / (0.02 * h))) + 1000;
        const double residual = event_to_matrix_residual(cfg, 64, 50);
        REQUIRE(residual < prev);
        prev = residual;
    }
}

TEST_CASE("derivative consensus improves along an averaged agent run") {
    SimConfig cfg;
    cfg.spec = generate_random_network(10, 100.0, 1.0 / 1300.0, 65);
    cfg.h = 1e-3;
    cfg.horizon = 4000000;
    cfg.max_events = 20000;
    cfg.stride = 100;
    const Trace trace = run_agent_simulation(cfg, 65);
    REQUIRE(trace.total_events == 20000);
    const auto costs = cfg.spec.costs();
    const auto clamp01 = [](Vec v) {
        for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
        return v;
    };
    const double early = consensus_residual(costs, clamp01(trace.averages[1]));
    const double late = consensus_residual(costs, clamp01(trace.averages.back()));
    CHECK(late < early);
}

TEST_CASE("window-mode probabilities use the recent event history") {
    SimConfig cfg;
    cfg.spec = always_drop_spec();
    // Replace one rule so probabilities are state-dependent.
    cfg.spec.rules[1] = ProbabilityRule(quad(100.0), 1.0 / 1300.0);
    cfg.h = 1e-3;
    cfg.horizon = 300000;
    cfg.mode = AveragingMode::window;
    cfg.window = 4;
    cfg.stride = 1;
    const Trace trace = run_agent_simulation(cfg, 66);
    REQUIRE(trace.total_events >= 10);
    // Quadratic rules have state-independent probabilities, so the logged
    // lambdas must equal the constants regardless of the averaging window.
    for (std::size_t r = 0; r < trace.lambdas.size(); ++r) {
        REQUIRE(trace.lambdas[r][0] == 1.0);
        REQUIRE(trace.lambdas[r][1] ==
                Catch::Approx(200.0 / 1300.0).epsilon(1e-15));
    }
}

TEST_CASE("offsets must lie inside one tick") {
    SimConfig cfg;
    cfg.spec = always_drop_spec();
    cfg.h = 1e-3;
    cfg.offsets = {0.0, 2e-3};
    CHECK_THROWS_AS(run_agent_simulation(cfg, 67), std::invalid_argument);
    cfg.offsets = {0.0, 0.5e-3};
    cfg.horizon = 1000;
    CHECK_NOTHROW(run_agent_simulation(cfg, 67));
}

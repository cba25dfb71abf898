#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "aimdnum/chains.hpp"
#include "aimdnum/experiment.hpp"

using namespace aimdnum;

namespace {

CostFunction quad(double a) { return CostFunction(CostKind::poly2, {a}); }

// Spec with uniform growth/back-off (constant alpha_i/(1-beta_i) ratio).
NetworkSpec uniform_spec(std::size_t n, double a = 10.0, double gamma = 1.0 / 1300.0) {
    NetworkSpec net;
    net.growth.assign(n, 0.01);
    net.beta.assign(n, 0.85);
    for (std::size_t i = 0; i < n; ++i) net.rules.emplace_back(quad(a), gamma);
    return net;
}

} // namespace

TEST_CASE("drop sampling") {
    Rng rng(41);
    SECTION("degenerate probabilities") {
        CHECK(sample_drop_pattern(rng, {1.0, 1.0, 1.0}).drops ==
              std::vector<std::uint8_t>{1, 1, 1});
        CHECK(sample_drop_pattern(rng, {0.0, 0.0}).drops == std::vector<std::uint8_t>{0, 0});
    }
    SECTION("pattern frequencies match the Bernoulli product") {
        const int draws = 100000;
        int counts[4] = {0, 0, 0, 0};
        for (int t = 0; t < draws; ++t) {
            const auto p = sample_drop_pattern(rng, {0.5, 0.5});
            ++counts[p.drops[0] + 2 * p.drops[1]];
        }
        for (int c : counts)
            CHECK(std::abs(c / static_cast<double>(draws) - 0.25) <= 0.01);
    }
}

TEST_CASE("ergodic limit formula") {
    SECTION("uniform probabilities, constant ratio") {
        const auto xi = xi_lambda({0.4, 0.4, 0.4}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                  {0.85, 0.85, 0.85});
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(xi[i] == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SECTION("constant ratio, unequal probabilities") {
        const auto xi = xi_lambda({0.5, 0.25}, {0.5, 0.5}, {0.6, 0.6});
        CHECK(xi[0] == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
        CHECK(xi[1] == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
    }
    SECTION("unit probabilities reduce to the stationary direction") {
        const auto xi = xi_lambda({1.0, 1.0}, {0.2, 0.8}, {0.5, 0.5});
        CHECK(xi[0] == Catch::Approx(0.2).epsilon(1e-14));
        CHECK(xi[1] == Catch::Approx(0.8).epsilon(1e-14));
    }
    CHECK_THROWS_AS(xi_lambda({0.0, 1.0}, {0.5, 0.5}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("single chain steps") {
    NetworkSpec net = uniform_spec(3);
    const Vec alpha = net.alpha();
    Rng rng(43);
    ChainState state;
    state.reset({0.2, 0.3, 0.5});

    SECTION("zero probabilities leave the state unchanged") {
        step_fixed_chain(state, rng, {0.0, 0.0, 0.0}, alpha, net.beta);
        CHECK(state.x == Vec{0.2, 0.3, 0.5});
    }
    SECTION("unit probabilities apply the all-drop matrix deterministically") {
        const auto a1 = build_aimd_matrix(alpha, net.beta, DropPattern::all(3, true));
        const Vec expect = a1.m.apply(state.x);
        step_fixed_chain(state, rng, {1.0, 1.0, 1.0}, alpha, net.beta);
        CHECK(l1_distance(state.x, expect) <= 1e-14);
    }
    SECTION("mass is conserved") {
        for (int t = 0; t < 1000; ++t)
            step_fixed_chain(state, rng, {0.3, 0.6, 0.9}, alpha, net.beta);
        double sum = 0.0;
        for (double v : state.x) sum += v;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("running average recursion") {
    NetworkSpec net = uniform_spec(2);
    const Vec alpha = net.alpha();
    Rng rng(44);
    ChainState state;
    state.reset({0.5, 0.5});
    const Vec x0 = state.x;
    step_fixed_chain(state, rng, {1.0, 1.0}, alpha, net.beta);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(state.xbar[i] == Catch::Approx(0.5 * (state.x[i] + x0[i])).margin(1e-15));
}

TEST_CASE("running average equals the arithmetic mean of visited states") {
    NetworkSpec net = uniform_spec(4);
    ChainOptions opts;
    opts.stride = 1;
    const Trace trace = run_longterm_chain(net, 10000, 45, opts);
    Vec mean(4, 0.0);
    for (const auto& x : trace.states)
        for (std::size_t i = 0; i < 4; ++i) mean[i] += x[i];
    for (auto& v : mean) v /= static_cast<double>(trace.states.size());
    CHECK(l1_distance(mean, trace.final_xbar) <= 1e-10);
}

TEST_CASE("stationary start stays put in mean") {
    NetworkSpec net;
    net.growth = {0.002, 0.008};
    net.beta = {0.5, 0.5};
    net.rules.emplace_back(quad(10.0), 1.0 / 1300.0);
    net.rules.emplace_back(quad(10.0), 1.0 / 1300.0);
    const Vec perron = perron_vector(net.alpha(), net.beta).coords();
    ChainOptions opts;
    opts.x0 = perron;
    const auto result = run_fixed_chain(net, {1.0, 1.0}, 1, 46, opts);
    CHECK(l1_distance(result.trace.final_xbar, perron) <= 1e-12);
}

TEST_CASE("matrix-average error decays along the run") {
    NetworkSpec net = uniform_spec(3);
    ChainOptions opts;
    opts.accumulate_sbar = true;
    opts.stride = 1000;
    const auto result = run_fixed_chain(net, {0.9, 0.6, 0.3}, 20000, 47, opts);
    REQUIRE(result.sbar.events.size() >= 4);
    CHECK(result.sbar.error.back() < result.sbar.error.front());
}

TEST_CASE("window chain warmup and constant-probability equivalence") {
    SECTION("first step evaluates probabilities at the initial state") {
        NetworkSpec net = uniform_spec(2, 30.0);
        ChainState state;
        state.reset({0.3, 0.7});
        Rng rng(48);
        Vec probs;
        const Vec alpha = net.alpha();
        step_window_chain(state, rng, net, 5, &probs, &alpha);
        CHECK(probs[0] == Catch::Approx(net.rules[0](0.3)).epsilon(1e-15));
        CHECK(probs[1] == Catch::Approx(net.rules[1](0.7)).epsilon(1e-15));
    }
    SECTION("constant-probability rules reproduce the fixed chain path for equal seeds") {
        NetworkSpec net = uniform_spec(3, 20.0); // quadratic => lambda independent of r
        const double lam = net.rules[0](0.5);
        ChainOptions opts;
        opts.stride = 1;
        const Trace wt = run_window_chain(net, 7, 500, 49, opts);
        const auto ft = run_fixed_chain(net, Vec(3, lam), 500, 49, opts);
        REQUIRE(wt.states.size() == ft.trace.states.size());
        for (std::size_t r = 0; r < wt.states.size(); ++r)
            REQUIRE(l1_distance(wt.states[r], ft.trace.states[r]) == 0.0);
    }
}

TEST_CASE("identical seeds give byte-identical traces") {
    NetworkSpec net = uniform_spec(5);
    ChainOptions opts;
    opts.stride = 10;
    const Trace a = run_longterm_chain(net, 2000, 50, opts);
    const Trace b = run_longterm_chain(net, 2000, 50, opts);
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().substr(0, 35) == "event,agent,x,xbar,lambda,dropped\n0");
}

TEST_CASE("simplex drift stays controlled over long runs") {
    NetworkSpec net = uniform_spec(10);
    const Trace t = run_longterm_chain(net, 100000, 51, ChainOptions{.stride = 10000});
    double sum = 0.0;
    for (double v : t.final_x) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(t.total_events == 100000);
}

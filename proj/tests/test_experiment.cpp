#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aimdnum/experiment.hpp"

using namespace aimdnum;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("aimdnum_test_" + tag);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("random network generation") {
    SECTION("deterministic for a fixed seed") {
        const NetworkSpec a = generate_random_network(20, 100.0, 1.0 / 1300.0, 5);
        const NetworkSpec b = generate_random_network(20, 100.0, 1.0 / 1300.0, 5);
        REQUIRE(a.size() == 20);
        for (std::size_t i = 0; i < 20; ++i) {
            REQUIRE(a.rules[i].cost().kind() == b.rules[i].cost().kind());
            REQUIRE(a.rules[i].cost().coefficients() == b.rules[i].cost().coefficients());
        }
    }
    SECTION("single agent gets the whole capacity") {
        const NetworkSpec net = generate_random_network(1, 100.0, 1.0 / 1300.0, 6);
        const auto sol = solve_kkt(net.costs());
        CHECK(sol.point[0] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("cost families are drawn uniformly") {
        const NetworkSpec net = generate_random_network(10000, 100.0, 1.0 / 1300.0, 7);
        std::size_t counts[4] = {0, 0, 0, 0};
        for (const auto& r : net.rules) ++counts[static_cast<int>(r.cost().kind())];
        for (std::size_t c : counts)
            CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);
    }
    SECTION("coefficients lie in (0, coeff_max]") {
        const NetworkSpec net = generate_random_network(500, 100.0, 1.0 / 1300.0, 8);
        for (const auto& r : net.rules)
            for (double c : r.cost().coefficients()) {
                REQUIRE(c > 0.0);
                REQUIRE(c <= 100.0);
            }
    }
}

TEST_CASE("config parsing") {
    const fs::path dir = temp_dir("cfg");
    fs::create_directories(dir);

    SECTION("the bundled benchmark config round-trips") {
        const ExperimentSpec spec = parse_config("configs/benchmark150.cfg");
        CHECK(spec.n == 150);
        CHECK(spec.coeff_max == 100.0);
        CHECK(spec.gamma == Catch::Approx(1.0 / 1300.0).epsilon(1e-15));
        CHECK(spec.growth == 0.01);
        CHECK(spec.beta == 0.85);
        CHECK(spec.variant == Variant::longterm);
        CHECK(spec.events == 200000);
        CHECK(spec.window == 500);
        CHECK(spec.seeds == std::vector<std::uint64_t>{1});
    }
    SECTION("fractions, lists and comments") {
        const fs::path p = dir / "ok.cfg";
        std::ofstream(p) << "[network]\nn = 4\ngamma = 1/8  # fraction\n"
                         << "[run]\nvariant = window\nseeds = 3, 5, 7\nevents = 10\n";
        const ExperimentSpec spec = parse_config(p.string());
        CHECK(spec.n == 4);
        CHECK(spec.gamma == 0.125);
        CHECK(spec.variant == Variant::window);
        CHECK(spec.seeds == std::vector<std::uint64_t>{3, 5, 7});
    }
    SECTION("errors carry the line number") {
        const fs::path p = dir / "bad.cfg";
        std::ofstream(p) << "[network]\nn = 4\nbogus_key = 1\n";
        try {
            parse_config(p.string());
            FAIL("expected a parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        const fs::path q = dir / "bad2.cfg";
        std::ofstream(q) << "n = 4\n";
        CHECK_THROWS_WITH(parse_config(q.string()),
                          Catch::Matchers::ContainsSubstring("line 1"));
        const fs::path r = dir / "bad3.cfg";
        std::ofstream(r) << "[network]\ngamma = abc\n";
        CHECK_THROWS_WITH(parse_config(r.string()),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(parse_config((dir / "nope.cfg").string()), std::runtime_error);
    }
}

TEST_CASE("metric computation") {
    NetworkSpec net = generate_random_network(6, 100.0, 1.0 / 1300.0, 9);
    const auto kkt = solve_kkt(net.costs());
    const Trace trace = run_longterm_chain(net, 2000, 10, ChainOptions{.stride = 100});
    const MetricSeries m = compute_metrics(trace, net.costs(), kkt.point.coords());
    REQUIRE(m.events.size() == trace.events.size());
    for (std::size_t r = 0; r < m.events.size(); ++r) {
        REQUIRE(std::isfinite(m.max_abs_error[r]));
        REQUIRE(std::isfinite(m.consensus_spread[r]));
        REQUIRE(m.per_agent[r].size() == 6);
        double worst = 0.0;
        for (double v : m.per_agent[r]) worst = std::max(worst, v);
        REQUIRE(worst == Catch::Approx(m.max_abs_error[r]).margin(1e-15));
    }
}

TEST_CASE("fixed variant at the balance point is near-stationary") {
    ExperimentSpec spec;
    spec.n = 8;
    spec.network_seed = 11;
    spec.variant = Variant::fixed; // lambda defaults to the rules at x*
    spec.events = 20000;
    spec.seeds = {1, 2};
    spec.stride = 1000;
    const ExperimentResult result = run_experiment(spec);
    for (const auto& sr : result.per_seed)
        CHECK(sr.final_max_abs_error <= 0.05);
}

TEST_CASE("experiment artifacts and reproducibility") {
    const fs::path dir = temp_dir("run");
    ExperimentSpec spec;
    spec.n = 5;
    spec.network_seed = 12;
    spec.variant = Variant::longterm;
    spec.events = 3000;
    spec.seeds = {4, 9};
    spec.stride = 50;
    spec.out_dir = dir.string();

    const ExperimentResult result = run_experiment(spec);
    REQUIRE(fs::exists(dir / "summary.json"));
    for (auto seed : spec.seeds) {
        REQUIRE(fs::exists(dir / ("seed" + std::to_string(seed)) / "trace.csv"));
        REQUIRE(fs::exists(dir / ("seed" + std::to_string(seed)) / "metrics.csv"));
    }
    const auto& summary = result.summary;
    for (const char* key : {"parameters", "per_seed", "final_max_abs_error",
                            "final_consensus_spread", "clamp_fraction", "renorm_count"})
        REQUIRE(summary.contains(key));
    CHECK(summary["parameters"]["n"] == 5);

    // Byte-identical rerun.
    const std::string trace_a = slurp(dir / "seed4" / "trace.csv");
    const std::string summary_a = slurp(dir / "summary.json");
    fs::remove_all(dir);
    run_experiment(spec);
    CHECK(slurp(dir / "seed4" / "trace.csv") == trace_a);
    CHECK(slurp(dir / "summary.json") == summary_a);
    fs::remove_all(dir);
}

TEST_CASE("invalid experiment specs are rejected") {
    ExperimentSpec spec;
    spec.events = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.events = 10;
    spec.seeds.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

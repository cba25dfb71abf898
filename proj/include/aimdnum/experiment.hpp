#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "aimdnum/agentsim.hpp"
#include "aimdnum/chains.hpp"
#include "aimdnum/core.hpp"
#include "aimdnum/kkt.hpp"
#include "aimdnum/random.hpp"
#include "aimdnum/trace.hpp"

namespace aimdnum {

// Random instance in the benchmark style: one of the four cost families per
// agent (uniform), coefficients uniform on (0, coeff_max], identical growth
// and back-off for all agents. Draw order (kind, then coefficients, per agent
// ascending) is part of the reproducibility contract.
inline NetworkSpec generate_random_network(std::size_t n, double coeff_max, double gamma,
                                           std::uint64_t seed, double growth = 0.01,
                                           double beta = 0.85,
                                           double floor = kDefaultLambdaFloor) {
    if (n < 1) throw std::invalid_argument("generate_random_network: n must be >= 1");
    if (!(coeff_max > 0.0))
        throw std::invalid_argument("generate_random_network: coeff_max must be positive");
    Rng rng(seed);
    NetworkSpec spec;
    spec.capacity = 1.0;
    spec.growth.assign(n, growth);
    spec.beta.assign(n, beta);
    spec.rules.reserve(n);
    static const CostKind kinds[4] = {CostKind::poly2, CostKind::poly23, CostKind::poly234,
                                      CostKind::poly246};
    for (std::size_t i = 0; i < n; ++i) {
        const CostKind kind = kinds[rng.index(4)];
        Vec coeff(cost_kind_arity(kind));
        for (auto& c : coeff) c = coeff_max * rng.uniform_pos();
        spec.rules.emplace_back(CostFunction(kind, std::move(coeff)), gamma, floor);
    }
    return spec;
}

enum class Variant { fixed, window, longterm, agent };

inline const char* variant_name(Variant v) {
    switch (v) {
    case Variant::fixed: return "fixed";
    case Variant::window: return "window";
    case Variant::longterm: return "longterm";
    case Variant::agent: return "agent";
    }
    return "?";
}

/// One experiment: a generated network, a chain/simulation variant, a seed
/// fan-out, and output plumbing.
struct ExperimentSpec {
    // Network generator parameters.
    std::size_t n = 150;
    double coeff_max = 100.0;
    double gamma = 1.0 / 1300.0;
    double growth = 0.01;
    double beta = 0.85;
    double lambda_floor = kDefaultLambdaFloor;
    std::uint64_t network_seed = 1;

    // Run parameters.
    Variant variant = Variant::longterm;
    long events = 100000;
    std::size_t window = 500; // window variant only
    std::vector<std::uint64_t> seeds{1};
    long stride = 1;
    std::string out_dir;
    std::optional<Vec> lambda; // fixed variant override; default = rules at x*
    double h = 1e-3;           // agent variant
    long horizon = 0;          // agent variant; 0 = derived from events

    void validate() const {
        if (events < 1) throw std::invalid_argument("ExperimentSpec: events must be >= 1");
        if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: seeds must be nonempty");
        if (variant == Variant::window && window < 1)
            throw std::invalid_argument("ExperimentSpec: window must be >= 1");
        if (stride < 1) throw std::invalid_argument("ExperimentSpec: stride must be >= 1");
    }
};

/// Per-logged-event error summaries against the optimizer x*.
struct MetricSeries {
    std::vector<long> events;
    std::vector<double> max_abs_error;    // ||xbar(k) - x*||_inf
    std::vector<double> consensus_spread; // spread of f_i'(xbar_i(k))
    std::vector<Vec> per_agent;           // |xbar_i(k) - x*_i|

    void write_csv(std::ostream& os) const {
        os << "event,max_abs_error,consensus_spread\n";
        char buf[96];
        for (std::size_t r = 0; r < events.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", events[r], max_abs_error[r],
                          consensus_spread[r]);
            os << buf;
        }
    }
};

inline MetricSeries compute_metrics(const Trace& trace, const std::vector<CostFunction>& costs,
                                    const Vec& x_star) {
    MetricSeries m;
    m.events.reserve(trace.events.size());
    for (std::size_t r = 0; r < trace.events.size(); ++r) {
        const Vec& xbar = trace.averages[r];
        m.events.push_back(trace.events[r]);
        m.max_abs_error.push_back(linf_distance(xbar, x_star));
        Vec xc = xbar; // clamp into the cost domain; drift is within kSimplexTol
        for (auto& v : xc) v = std::clamp(v, 0.0, 1.0);
        m.consensus_spread.push_back(consensus_residual(costs, xc));
        Vec pa(xbar.size());
        for (std::size_t i = 0; i < xbar.size(); ++i) pa[i] = std::abs(xbar[i] - x_star[i]);
        m.per_agent.push_back(std::move(pa));
    }
    return m;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Numbers may be written as plain literals or fractions ("1/1300").
inline double parse_number(const std::string& s, int line) {
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash != std::string::npos) {
            const double num = std::stod(trim(s.substr(0, slash)));
            const double den = std::stod(trim(s.substr(slash + 1)));
            if (den == 0.0) throw std::invalid_argument("zero denominator");
            return num / den;
        }
        const double v = std::stod(s, &used);
        if (trim(s.substr(used)) != "") throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                 ": bad number '" + s + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

// Flat "key = value" text with [network] and [run] sections; '#' comments;
// errors carry the offending line number.
inline ExperimentSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    ExperimentSpec spec;
    spec.seeds.clear();
    std::string section, raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                         ": unterminated section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section != "network" && section != "run")
                throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                         ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                     ": expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        const auto num = [&] { return detail::parse_number(val, line); };

        if (section == "network") {
            if (key == "n") spec.n = static_cast<std::size_t>(num());
            else if (key == "coeff_max") spec.coeff_max = num();
            else if (key == "gamma") spec.gamma = num();
            else if (key == "growth" || key == "alpha") spec.growth = num();
            else if (key == "beta") spec.beta = num();
            else if (key == "lambda_floor") spec.lambda_floor = num();
            else if (key == "seed") spec.network_seed = static_cast<std::uint64_t>(num());
            else
                throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                         ": unknown [network] key '" + key + "'");
        } else if (section == "run") {
            if (key == "variant") {
                if (val == "fixed") spec.variant = Variant::fixed;
                else if (val == "window") spec.variant = Variant::window;
                else if (val == "longterm") spec.variant = Variant::longterm;
                else if (val == "agent") spec.variant = Variant::agent;
                else
                    throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                             ": unknown variant '" + val + "'");
            } else if (key == "events") spec.events = static_cast<long>(num());
            else if (key == "window") spec.window = static_cast<std::size_t>(num());
            else if (key == "stride") spec.stride = static_cast<long>(num());
            else if (key == "out") spec.out_dir = val;
            else if (key == "h") spec.h = num();
            else if (key == "horizon") spec.horizon = static_cast<long>(num());
            else if (key == "seeds") {
                for (const auto& item : detail::split_list(val))
                    spec.seeds.push_back(
                        static_cast<std::uint64_t>(detail::parse_number(item, line)));
            } else if (key == "lambda") {
                Vec lam;
                for (const auto& item : detail::split_list(val))
                    lam.push_back(detail::parse_number(item, line));
                spec.lambda = std::move(lam);
            } else
                throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                         ": unknown [run] key '" + key + "'");
        } else {
            throw std::runtime_error("config parse error, line " + std::to_string(line) +
                                     ": key outside any section");
        }
    }
    if (spec.seeds.empty()) spec.seeds.push_back(1);
    spec.validate();
    return spec;
}

/// Per-seed outcome plus the aggregate JSON written to disk.
struct SeedResult {
    std::uint64_t seed = 0;
    double final_max_abs_error = 0.0;
    double final_consensus_spread = 0.0;
    double clamp_fraction = 0.0;
    long renorm_count = 0;
    long total_events = 0;
    bool overshoot_warning = false;
};

struct ExperimentResult {
    NetworkSpec network;
    Vec x_star;
    std::vector<SeedResult> per_seed;
    nlohmann::json summary;
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
    fn(os);
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline Trace run_variant(const ExperimentSpec& spec, const NetworkSpec& net, const Vec& x_star,
                         std::uint64_t seed) {
    ChainOptions opts;
    opts.stride = spec.stride;
    switch (spec.variant) {
    case Variant::fixed: {
        Vec lam;
        if (spec.lambda) {
            lam = *spec.lambda;
            if (lam.size() != net.size())
                throw std::invalid_argument("run_experiment: lambda length mismatch");
        } else {
            lam.resize(net.size());
            for (std::size_t i = 0; i < net.size(); ++i) lam[i] = net.rules[i](x_star[i]);
        }
        return run_fixed_chain(net, lam, spec.events, seed, opts).trace;
    }
    case Variant::window:
        return run_window_chain(net, spec.window, spec.events, seed, opts);
    case Variant::longterm:
        return run_longterm_chain(net, spec.events, seed, opts);
    case Variant::agent: {
        SimConfig cfg;
        cfg.spec = net;
        cfg.h = spec.h;
        cfg.max_events = spec.events;
        cfg.stride = spec.stride;
        // Worst case one growth step per event plus the approach to capacity.
        cfg.horizon = spec.horizon > 0
                          ? spec.horizon
                          : spec.events + static_cast<long>(1.0 / (spec.h * spec.growth *
                                                                   static_cast<double>(net.size()))) + 16;
        return run_agent_simulation(cfg, seed);
    }
    }
    throw std::logic_error("run_variant: unreachable");
}

} // namespace detail

// Runs every seed (fanned out over a small worker pool), writes per-seed
// trace.csv / metrics.csv under <out>/seed<seed>/, and a summary.json with the
// parameter echo and final diagnostics. Identical spec + seed reproduces the
// files byte for byte.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    result.network = generate_random_network(spec.n, spec.coeff_max, spec.gamma, spec.network_seed,
                                             spec.growth, spec.beta, spec.lambda_floor);
    const auto validation = validate_network_spec(result.network, 1000);
    if (!validation.ok()) {
        std::string msg = "run_experiment: invalid network:";
        for (const auto& v : validation.violations) msg += "\n  - " + v;
        throw std::runtime_error(msg);
    }
    const KktSolution kkt = solve_kkt(result.network.costs());
    result.x_star = kkt.point.coords();
    const std::vector<CostFunction> costs = result.network.costs();

    const bool write = !spec.out_dir.empty();
    const std::filesystem::path root = spec.out_dir;
    if (write) std::filesystem::create_directories(root);

    result.per_seed.resize(spec.seeds.size());
    std::mutex err_mutex;
    std::vector<std::string> errors;

    const auto worker = [&](std::size_t idx) {
        try {
            const std::uint64_t seed = spec.seeds[idx];
            Trace trace = detail::run_variant(spec, result.network, result.x_star, seed);
            MetricSeries metrics = compute_metrics(trace, costs, result.x_star);

            SeedResult sr;
            sr.seed = seed;
            sr.total_events = trace.total_events;
            sr.renorm_count = trace.renorm_count;
            sr.overshoot_warning = trace.overshoot_warning;
            const double evals =
                static_cast<double>(std::max<long>(1, trace.total_events)) *
                static_cast<double>(result.network.size());
            sr.clamp_fraction = static_cast<double>(trace.clamp_count) / evals;
            if (!metrics.events.empty()) {
                sr.final_max_abs_error = metrics.max_abs_error.back();
                sr.final_consensus_spread = metrics.consensus_spread.back();
            }
            result.per_seed[idx] = sr;

            if (write) {
                const auto dir = root / ("seed" + std::to_string(seed));
                std::filesystem::create_directories(dir);
                detail::write_file(dir / "trace.csv", [&](std::ostream& os) { trace.write_csv(os); });
                detail::write_file(dir / "metrics.csv",
                                   [&](std::ostream& os) { metrics.write_csv(os); });
            }
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            errors.push_back("seed " + std::to_string(spec.seeds[idx]) + ": " + e.what());
        }
    };

    const std::size_t pool =
        std::min<std::size_t>(spec.seeds.size(),
                              std::max(1u, std::thread::hardware_concurrency()));
    if (pool <= 1) {
        for (std::size_t i = 0; i < spec.seeds.size(); ++i) worker(i);
    } else {
        std::vector<std::thread> threads;
        std::size_t next = 0;
        std::mutex next_mutex;
        for (std::size_t t = 0; t < pool; ++t)
            threads.emplace_back([&] {
                for (;;) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(next_mutex);
                        if (next >= spec.seeds.size()) return;
                        idx = next++;
                    }
                    worker(idx);
                }
            });
        for (auto& t : threads) t.join();
    }
    if (!errors.empty()) {
        std::string msg = "run_experiment: failures:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::runtime_error(msg);
    }

    nlohmann::json summary;
    summary["parameters"] = {
        {"n", spec.n},
        {"capacity", result.network.capacity},
        {"coeff_max", spec.coeff_max},
        {"gamma", spec.gamma},
        {"growth", spec.growth},
        {"beta", spec.beta},
        {"lambda_floor", spec.lambda_floor},
        {"network_seed", spec.network_seed},
        {"variant", variant_name(spec.variant)},
        {"events", spec.events},
        {"window", spec.window},
        {"stride", spec.stride},
        {"h", spec.h},
        {"seeds", spec.seeds},
    };
    summary["x_star_min"] = *std::min_element(result.x_star.begin(), result.x_star.end());
    summary["x_star_max"] = *std::max_element(result.x_star.begin(), result.x_star.end());
    summary["kkt_multiplier"] = kkt.multiplier;
    auto& seeds_json = summary["per_seed"];
    seeds_json = nlohmann::json::array();
    double worst_err = 0.0, worst_spread = 0.0, clamp_frac = 0.0;
    long renorms = 0;
    for (const auto& sr : result.per_seed) {
        seeds_json.push_back({{"seed", sr.seed},
                              {"total_events", sr.total_events},
                              {"final_max_abs_error", sr.final_max_abs_error},
                              {"final_consensus_spread", sr.final_consensus_spread},
                              {"clamp_fraction", sr.clamp_fraction},
                              {"renorm_count", sr.renorm_count},
                              {"overshoot_warning", sr.overshoot_warning}});
        worst_err = std::max(worst_err, sr.final_max_abs_error);
        worst_spread = std::max(worst_spread, sr.final_consensus_spread);
        clamp_frac = std::max(clamp_frac, sr.clamp_fraction);
        renorms += sr.renorm_count;
    }
    summary["final_max_abs_error"] = worst_err;
    summary["final_consensus_spread"] = worst_spread;
    summary["clamp_fraction"] = clamp_frac;
    summary["renorm_count"] = renorms;
    result.summary = std::move(summary);

    if (write)
        detail::write_file(root / "summary.json",
                           [&](std::ostream& os) { os << result.summary.dump(2) << "\n"; });
    return result;
}

} // namespace aimdnum

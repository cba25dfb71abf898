// Command-line runner for the AIMD network-utility library: KKT solves,
// chain/agent simulations, matrix diagnostics, the deterministic averaged
// iteration, and Hilbert-contraction reports. All artifacts are CSV/JSON and
// byte-reproducible for a fixed seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aimdnum/aimdnum.hpp"

namespace {

using namespace aimdnum;
namespace fs = std::filesystem;
using nlohmann::json;

std::string default_out_dir() {
    if (const char* env = std::getenv("AIMDNUM_OUT")) return env;
    return "out";
}

// Applies CLI overrides on top of an optional config file.
struct CommonOpts {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    long events = 0;
    long stride = 0;
    bool have_seed = false;
};

ExperimentSpec load_spec(const CommonOpts& opts) {
    ExperimentSpec spec;
    if (!opts.config.empty()) spec = parse_config(opts.config);
    if (opts.have_seed) spec.seeds = {opts.seed};
    if (opts.events > 0) spec.events = opts.events;
    if (opts.stride > 0) spec.stride = opts.stride;
    spec.out_dir = !opts.out.empty() ? opts.out : (spec.out_dir.empty() ? default_out_dir()
                                                                        : spec.out_dir);
    return spec;
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << j.dump(2) << "\n";
}

int cmd_kkt(const CommonOpts& opts) {
    ExperimentSpec spec = load_spec(opts);
    NetworkSpec net = generate_random_network(spec.n, spec.coeff_max, spec.gamma,
                                              spec.network_seed, spec.growth, spec.beta,
                                              spec.lambda_floor);
    const KktSolution kkt = solve_kkt(net.costs());
    const PFixedPoint fp = solve_p_fixed_point(net.rules);

    json j;
    j["n"] = net.size();
    j["multiplier"] = kkt.multiplier;
    j["consensus_residual"] = kkt.residual;
    j["gamma_f"] = fp.gamma_f;
    j["x_star"] = kkt.point.coords();
    j["p_fixed_point"] = fp.point.coords();
    j["gap_linf"] = linf_distance(kkt.point.coords(), fp.point.coords());
    write_json(fs::path(spec.out_dir) / "kkt.json", j);
    std::cout << "kkt: n=" << net.size() << " mu=" << kkt.multiplier
              << " gap=" << j["gap_linf"].get<double>() << " -> " << spec.out_dir << "/kkt.json\n";
    return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& variant) {
    ExperimentSpec spec = load_spec(opts);
    if (!variant.empty()) {
        if (variant == "fixed") spec.variant = Variant::fixed;
        else if (variant == "window") spec.variant = Variant::window;
        else if (variant == "longterm") spec.variant = Variant::longterm;
        else if (variant == "agent") spec.variant = Variant::agent;
        else throw std::runtime_error("unknown variant: " + variant);
    }
    ExperimentResult result = run_experiment(spec);
    std::cout << "simulate (" << variant_name(spec.variant) << "): " << spec.seeds.size()
              << " seed(s), final max_abs_error=" << result.summary["final_max_abs_error"]
              << " -> " << spec.out_dir << "/summary.json\n";
    return 0;
}

int cmd_analyze_matrices(const CommonOpts& opts, std::size_t T) {
    ExperimentSpec spec = load_spec(opts);
    NetworkSpec net = generate_random_network(spec.n, spec.coeff_max, spec.gamma,
                                              spec.network_seed, spec.growth, spec.beta,
                                              spec.lambda_floor);
    const Vec alpha = net.alpha();
    const auto report = lifted_contraction_bound_check(alpha, net.beta, T, 512,
                                                       opts.have_seed ? opts.seed : 1);
    json j;
    j["n"] = net.size();
    j["T"] = T;
    j["contraction_factor"] = report.c;
    j["lifted_bound"] = report.bound;
    j["lifted_measured"] = report.measured;
    j["bound_holds"] = report.ok;
    j["perron_vector"] = perron_vector(alpha, net.beta).coords();
    write_json(fs::path(spec.out_dir) / "matrices.json", j);
    std::cout << "analyze-matrices: c=" << report.c << " bound(T=" << T << ")=" << report.bound
              << " measured=" << report.measured << (report.ok ? " OK" : " VIOLATION") << "\n";
    return report.ok ? 0 : 1;
}

int cmd_averaged(const CommonOpts& opts, double eps, long steps) {
    ExperimentSpec spec = load_spec(opts);
    NetworkSpec net = generate_random_network(spec.n, spec.coeff_max, spec.gamma,
                                              spec.network_seed, spec.growth, spec.beta,
                                              spec.lambda_floor);
    Rng rng(opts.have_seed ? opts.seed : 1);
    const Vec x0 = rng.simplex_point(net.size());
    AveragedTrace trace = iterate_averaged(net.rules, x0, EpsSchedule::constant(eps), steps, 512,
                                           spec.stride);
    fs::create_directories(spec.out_dir);
    std::ofstream os(fs::path(spec.out_dir) / "averaged.csv", std::ios::binary);
    trace.write_csv(os);
    std::cout << "averaged: " << steps << " steps, final d_H=" << trace.d_hilbert.back()
              << " -> " << spec.out_dir << "/averaged.csv\n";
    return 0;
}

int cmd_contraction_report(const CommonOpts& opts, double eta, double eps, std::size_t trials) {
    ExperimentSpec spec = load_spec(opts);
    NetworkSpec net = generate_random_network(spec.n, spec.coeff_max, spec.gamma,
                                              spec.network_seed, spec.growth, spec.beta,
                                              spec.lambda_floor);
    const auto report = check_hilbert_contraction(net.rules, eta, eps, trials,
                                                  opts.have_seed ? opts.seed : 1);
    json j;
    j["n"] = net.size();
    j["eta"] = report.eta;
    j["eps"] = report.eps;
    j["trials"] = report.trials;
    j["samples_used"] = report.samples_used;
    j["violations"] = report.violations;
    j["min_decrease"] = report.min_decrease;
    j["max_decrease"] = report.max_decrease;
    j["mean_decrease"] = report.mean_decrease;
    write_json(fs::path(spec.out_dir) / "contraction.json", j);
    std::cout << "contraction-report: " << report.samples_used << " samples, "
              << report.violations << " violation(s), min decrease " << report.min_decrease
              << "\n";
    return report.violations == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AIMD network-utility simulator and diagnostics"};
    app.require_subcommand(1);

    CommonOpts opts;
    long steps = 200;
    double eps = 0.01, eta = 0.5;
    std::size_t trials = 100, lift_T = 2;
    std::string variant;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "experiment config file");
        sub->add_option("--out", opts.out, "output directory (default $AIMDNUM_OUT or ./out)");
        sub->add_option("--seed", opts.seed, "run seed")->each([&](const std::string&) {
            opts.have_seed = true;
        });
        sub->add_option("--events", opts.events, "event horizon override");
        sub->add_option("--stride", opts.stride, "logging stride override");
    };

    auto* kkt = app.add_subcommand("kkt", "solve the allocation problem and the fixed point");
    add_common(kkt);

    auto* sim = app.add_subcommand("simulate", "run a chain or agent simulation");
    add_common(sim);
    sim->add_option("--variant", variant, "fixed | window | longterm | agent");

    auto* mat = app.add_subcommand("analyze-matrices", "contraction and lifted-bound diagnostics");
    add_common(mat);
    mat->add_option("--lift-window", lift_T, "window length of the lifted matrix");

    auto* avg = app.add_subcommand("averaged", "iterate the deterministic averaged map");
    add_common(avg);
    avg->add_option("--eps", eps, "constant step size");
    avg->add_option("--steps", steps, "iteration count");

    auto* con = app.add_subcommand("contraction-report", "audit Hilbert-distance decrease");
    add_common(con);
    con->add_option("--eta", eta, "exclusion radius around the fixed point");
    con->add_option("--eps", eps, "step size");
    con->add_option("--trials", trials, "sample count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (kkt->parsed()) return cmd_kkt(opts);
        if (sim->parsed()) return cmd_simulate(opts, variant);
        if (mat->parsed()) return cmd_analyze_matrices(opts, lift_T);
        if (avg->parsed()) return cmd_averaged(opts, eps, steps);
        if (con->parsed()) return cmd_contraction_report(opts, eta, eps, trials);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

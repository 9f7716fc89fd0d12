#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "rail/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInvariantViolated = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const unsigned long long v = std::stoull(item, &used);
        if (used != item.size()) throw rail::run::ConfigError("--seeds: bad seed '" + item + "'");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw rail::run::ConfigError("--seeds: need at least one seed");
    return seeds;
}

void print_metrics(const std::string& label, const rail::run::MetricsReport& m) {
    std::cout << std::left << std::setw(12) << label << std::right << std::fixed << std::setprecision(2)
              << " succ " << std::setw(6) << m.succ_pct << "  ssucc " << std::setw(6) << m.ssucc_pct << "  col "
              << std::setprecision(4) << std::setw(7) << m.col_pct << std::setprecision(1) << "  horizon "
              << std::setw(6) << m.mean_horizon << std::setprecision(2) << "  interv/ep " << std::setw(6)
              << m.interventions_per_episode << std::setprecision(4) << "  val " << m.validation_mean << " +- "
              << m.validation_std << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set-based safety filter runner"};
    app.require_subcommand(1);

    std::string config, mode = "rail", seeds, out = "out";
    std::size_t episodes = 100, samples = 10000, bench_episodes = 3;
    std::optional<std::size_t> ta, tp, partitions;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    bool geometry = false;

    CLI::App* run = app.add_subcommand("run", "Run a batch of episodes and write reports");
    run->add_option("--config", config, "Scenario JSON")->required();
    run->add_option("--mode", mode, "rail | unfiltered | backup-only");
    run->add_option("--episodes", episodes, "Episodes per (policy, seed)");
    run->add_option("--seeds", seeds, "Comma-separated seed list");
    run->add_option("--horizon-a", ta, "Committed horizon (steps)");
    run->add_option("--horizon-p", tp, "Planning horizon (steps)");
    run->add_option("--partitions", partitions, "Time cells per verification");
    run->add_option("--out", out, "Output directory");
    run->add_option("--workers", workers, "Worker threads");
    run->add_flag("--dump-geometry", geometry, "Write certified occupancy sets");

    CLI::App* verify = app.add_subcommand("verify-swept", "Sampled containment check of the swept sets");
    verify->add_option("--config", config, "Scenario JSON")->required();
    verify->add_option("--samples", samples, "Number of (trajectory, time, point) samples");
    verify->add_option("--seed", seed, "Sampling seed");

    CLI::App* bench = app.add_subcommand("bench", "Validation time per filter step");
    bench->add_option("--config", config, "Scenario JSON")->required();
    bench->add_option("--episodes", bench_episodes, "Episodes per policy");
    bench->add_option("--seed", seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        const rail::run::Scenario scenario = rail::run::load_scenario(config);
        if (run->parsed()) {
            rail::run::RunOptions o;
            try {
                o.mode = rail::parse_mode(mode);
            } catch (const std::invalid_argument& e) {
                throw rail::run::ConfigError(std::string("--mode: ") + e.what());
            }
            o.episodes = episodes;
            if (!seeds.empty()) o.seeds = parse_seeds(seeds);
            o.ta = ta;
            o.tp = tp;
            o.partitions = partitions;
            o.workers = workers;
            const rail::run::BatchResult b = rail::run::run_batch(scenario, o);
            rail::run::write_outputs(b, out, geometry);
            std::cout << b.scenario.name << " [" << rail::to_string(b.mode) << "] " << b.episodes.size()
                      << " episodes -> " << out << '\n';
            for (const auto& [name, m] : b.per_policy) print_metrics(name, m);
            print_metrics("all", b.overall);
            if (b.invariants_violated()) {
                std::cerr << "invariant violated: " << b.overall.violation_transitions
                          << " ground-truth violations or broken metric identities\n";
                return kInvariantViolated;
            }
        } else if (verify->parsed()) {
            const rail::run::SweptCheck c = rail::run::verify_swept(scenario, samples, seed);
            std::cout << scenario.name << ": " << c.samples << " samples, " << c.violations << " violations";
            if (c.violations) std::cout << " (worst excess " << c.worst_excess << ")";
            std::cout << '\n';
            if (c.violations) return kInvariantViolated;
        } else if (bench->parsed()) {
            const rail::run::MetricsReport m = rail::run::bench(scenario, bench_episodes, seed);
            std::cout << std::setprecision(4) << scenario.name << " validation " << m.validation_mean << " +- "
                      << m.validation_std << " s over " << m.validation_samples << " filter steps\n";
            if (m.violation_transitions) return kInvariantViolated;
        }
    } catch (const rail::run::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return kOk;
}

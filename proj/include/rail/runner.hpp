#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rail/environments.hpp"
#include "rail/safety_filter.hpp"

namespace rail::run {

/// Invalid scenario file; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EnvKind { Maze, Arm };

struct Scenario {
    std::string name;
    EnvKind kind = EnvKind::Maze;
    env::MazeSpec maze;
    env::ArmSpec arm;
    std::optional<env::Cell> maze_start;  ///< fixed start cell instead of sampling
    FilterConfig filter;
    std::size_t nominal_horizon_steps = 100;
    double timeout_factor = 4.0;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<env::PolicyKind> policies{env::PolicyKind::Greedy, env::PolicyKind::Waypoint,
                                          env::PolicyKind::Adversarial};

    std::size_t max_steps() const;
};

Scenario load_scenario(const std::string& path);
/// `source` prefixes error messages (usually the file name).
Scenario parse_scenario(const std::string& text, const std::string& source = "config");

/// Everything one episode needs; owned together so the model outlives the loop.
struct EpisodeSetup {
    std::unique_ptr<EnvironmentPort> env;
    std::unique_ptr<PolicyPort> policy;
    std::unique_ptr<SystemModel> model;
    Scene scene;
    State start;
};

/// Deterministic in (scenario, policy, seed, index).
EpisodeSetup make_episode(const Scenario& s, env::PolicyKind policy, std::uint64_t seed, std::size_t index);

struct EpisodeResult {
    env::PolicyKind policy = env::PolicyKind::Greedy;
    std::uint64_t seed = 0;
    std::size_t index = 0;
    State start;
    EpisodeLog log;
};

struct MetricsReport {
    std::size_t episodes = 0;
    std::size_t transitions = 0;
    std::size_t collision_transitions = 0;
    std::size_t limit_transitions = 0;
    std::size_t violation_transitions = 0;  ///< collision or limit
    double succ_pct = 0.0;
    double ssucc_pct = 0.0;
    double col_pct = 0.0;  ///< violation transitions over all transitions
    double mean_horizon = 0.0;
    double interventions_per_episode = 0.0;
    double validation_mean = 0.0;  ///< s per filter step
    double validation_std = 0.0;
    std::size_t validation_samples = 0;
    std::size_t budget_misses = 0;

    /// ssucc <= succ and (col = 0 implies ssucc = succ).
    bool identities_hold() const;
};

MetricsReport compute_metrics(const std::vector<EpisodeResult>& episodes);

struct RunOptions {
    Mode mode = Mode::Rail;
    std::size_t episodes = 100;
    std::vector<std::uint64_t> seeds;             ///< empty: the scenario's seeds
    std::vector<env::PolicyKind> policies;        ///< empty: the scenario's policies
    std::optional<std::size_t> ta, tp, partitions;
    unsigned workers = 1;
};

struct BatchResult {
    Scenario scenario;  ///< with overrides applied
    Mode mode = Mode::Rail;
    std::vector<EpisodeResult> episodes;  ///< sorted by policy, seed, index
    MetricsReport overall;
    std::map<std::string, MetricsReport> per_policy;

    /// Ground-truth violations in a filtered mode, or broken metric identities.
    bool invariants_violated() const;
};

/// Applies overrides, validates, and runs every (policy, seed, index) episode.
BatchResult run_batch(const Scenario& scenario, const RunOptions& options);
EpisodeResult run_episode(const Scenario& scenario, Mode mode, env::PolicyKind policy, std::uint64_t seed,
                          std::size_t index);

/// One JSON line per filter iteration plus a summary line; no wall-clock values.
void write_episode_log(std::ostream& out, const EpisodeResult& e);
void write_report_csv(std::ostream& out, const BatchResult& b);
void write_report_json(std::ostream& out, const BatchResult& b);
/// Writes report.csv, report.json, episodes.jsonl and timing.csv into `dir`
/// (and geometry/ when requested).
void write_outputs(const BatchResult& b, const std::string& dir, bool dump_geometry);

/// Containment check of the swept-volume sets against sampled motion.
struct SweptCheck {
    std::size_t samples = 0;
    std::size_t violations = 0;
    double worst_excess = 0.0;  ///< largest distance outside (maze boxes) or 1 if any point escapes (arm)
};
SweptCheck verify_swept(const Scenario& scenario, std::size_t samples, std::uint64_t seed);

/// Validation time statistics of filter steps over a few rail episodes.
MetricsReport bench(const Scenario& scenario, std::size_t episodes, std::uint64_t seed);

}  // namespace rail::run

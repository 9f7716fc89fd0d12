#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "rail/runner.hpp"

namespace rail::run {

namespace {

std::mt19937_64 episode_rng(std::uint64_t seed, std::size_t index, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), stream};
    return std::mt19937_64(seq);
}

}  // namespace

EpisodeSetup make_episode(const Scenario& s, env::PolicyKind policy, std::uint64_t seed, std::size_t index) {
    // Starts depend on (seed, index) only, so every policy faces the same starts.
    std::mt19937_64 start_rng = episode_rng(seed, index, 0);
    const std::uint64_t policy_seed = episode_rng(seed, index, 1)();
    EpisodeSetup e;
    if (s.kind == EnvKind::Maze) {
        e.start = s.maze_start ? State{env::MazeLayout::center(*s.maze_start), Eigen::Vector2d::Zero()}
                               : env::sample_maze_start(s.maze, start_rng);
        e.env = std::make_unique<env::MazeEnv>(s.maze, e.start);
        e.model = std::make_unique<PointMassModel>(env::maze_model(s.maze));
        e.scene = env::maze_scene(s.maze);
        e.policy = env::make_maze_policy(policy, s.maze, e.start, policy_seed, s.max_steps());
    } else {
        const Eigen::VectorXd q = env::sample_arm_start(s.arm, start_rng);
        e.start = {q, Eigen::VectorXd::Zero(q.size())};
        e.env = std::make_unique<env::ArmEnv>(s.arm, q);
        e.model = std::make_unique<ArmModel>(env::arm_model(s.arm));
        e.scene = env::arm_scene(s.arm);
        e.policy = env::make_arm_policy(policy, s.arm, q, policy_seed, s.max_steps());
    }
    return e;
}

EpisodeResult run_episode(const Scenario& scenario, Mode mode, env::PolicyKind policy, std::uint64_t seed,
                          std::size_t index) {
    EpisodeSetup setup = make_episode(scenario, policy, seed, index);
    FilterConfig cfg = scenario.filter;
    cfg.mode = mode;
    cfg.max_steps = scenario.max_steps();
    EpisodeResult r;
    r.policy = policy;
    r.seed = seed;
    r.index = index;
    r.start = setup.start;
    r.log = rail_loop(*setup.env, *setup.policy, *setup.model, setup.scene, cfg);
    return r;
}

bool MetricsReport::identities_hold() const {
    if (ssucc_pct > succ_pct) return false;
    if (col_pct == 0.0 && ssucc_pct != succ_pct) return false;
    return true;
}

MetricsReport compute_metrics(const std::vector<EpisodeResult>& episodes) {
    MetricsReport m;
    m.episodes = episodes.size();
    if (episodes.empty()) return m;
    std::size_t success = 0, safe_success = 0, interventions = 0;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& e : episodes) {
        const EpisodeLog& log = e.log;
        m.transitions += log.steps;
        m.collision_transitions += log.collision_transitions;
        m.limit_transitions += log.limit_transitions;
        m.violation_transitions += log.events.size();
        m.budget_misses += log.budget_misses;
        interventions += log.interventions;
        if (log.success()) ++success;
        if (log.success() && log.events.empty()) ++safe_success;
        for (double t : log.validation_seconds) {
            sum += t;
            sum2 += t * t;
            ++m.validation_samples;
        }
    }
    const double n = static_cast<double>(m.episodes);
    m.succ_pct = 100.0 * static_cast<double>(success) / n;
    m.ssucc_pct = 100.0 * static_cast<double>(safe_success) / n;
    m.col_pct = m.transitions ? 100.0 * static_cast<double>(m.violation_transitions) / static_cast<double>(m.transitions)
                              : 0.0;
    m.mean_horizon = static_cast<double>(m.transitions) / n;
    m.interventions_per_episode = static_cast<double>(interventions) / n;
    if (m.validation_samples) {
        const double k = static_cast<double>(m.validation_samples);
        m.validation_mean = sum / k;
        m.validation_std = std::sqrt(std::max(0.0, sum2 / k - m.validation_mean * m.validation_mean));
    }
    return m;
}

bool BatchResult::invariants_violated() const {
    if (!overall.identities_hold()) return true;
    for (const auto& [name, m] : per_policy) {
        if (!m.identities_hold()) return true;
    }
    return mode != Mode::Unfiltered && overall.violation_transitions > 0;
}

BatchResult run_batch(const Scenario& scenario, const RunOptions& options) {
    if (options.episodes < 1) throw ConfigError("episodes: must be at least 1");
    BatchResult b;
    b.scenario = scenario;
    b.mode = options.mode;
    Scenario& s = b.scenario;
    if (options.ta) s.filter.ta = *options.ta;
    if (options.tp) s.filter.tp = *options.tp;
    if (options.partitions) s.filter.partitions = *options.partitions;
    if (!options.seeds.empty()) s.seeds = options.seeds;
    if (!options.policies.empty()) s.policies = options.policies;
    try {
        s.filter.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("horizons: ") + e.what());
    }

    struct Job {
        env::PolicyKind policy;
        std::uint64_t seed;
        std::size_t index;
    };
    std::vector<Job> jobs;
    for (auto p : s.policies)
        for (auto seed : s.seeds)
            for (std::size_t i = 0; i < options.episodes; ++i) jobs.push_back({p, seed, i});

    b.episodes.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            try {
                b.episodes[k] = run_episode(s, options.mode, jobs[k].policy, jobs[k].seed, jobs[k].index);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(jobs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    b.overall = compute_metrics(b.episodes);
    for (auto p : s.policies) {
        std::vector<EpisodeResult> mine;
        for (const auto& e : b.episodes)
            if (e.policy == p) mine.push_back(e);
        b.per_policy[env::to_string(p)] = compute_metrics(mine);
    }
    return b;
}

MetricsReport bench(const Scenario& scenario, std::size_t episodes, std::uint64_t seed) {
    RunOptions o;
    o.mode = Mode::Rail;
    o.episodes = episodes;
    o.seeds = {seed};
    return run_batch(scenario, o).overall;
}

}  // namespace rail::run

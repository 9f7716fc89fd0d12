#include "rail/safety_filter.hpp"

#include <chrono>
#include <stdexcept>

namespace rail {

std::vector<Action> Plan::head(std::size_t ta) const {
    const std::size_t n = std::min(ta, actions.size());
    return {actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<Action> Plan::tail(std::size_t ta) const {
    const std::size_t n = std::min(ta, actions.size());
    return {actions.begin() + static_cast<std::ptrdiff_t>(n), actions.end()};
}

void Plan::validate(std::size_t ta, std::size_t tp) const {
    if (ta < 1 || ta > tp) throw std::invalid_argument("Plan: need 1 <= Ta <= Tp");
    if (actions.size() != tp) {
        throw std::invalid_argument("Plan: expected " + std::to_string(tp) + " actions, got " +
                                    std::to_string(actions.size()));
    }
    if (!(dt > 0.0)) throw std::invalid_argument("Plan: dt must be positive");
    for (const auto& a : actions) {
        if (!a.allFinite()) throw std::invalid_argument("Plan: non-finite action");
    }
}

std::vector<State> predict_state(const SystemModel& model, const State& x, const std::vector<Action>& actions) {
    if (actions.empty()) throw std::invalid_argument("predict_state: empty action segment");
    return model.predict(x, actions);
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Rail: return "rail";
        case Mode::Unfiltered: return "unfiltered";
        case Mode::BackupOnly: return "backup-only";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    if (s == "rail") return Mode::Rail;
    if (s == "unfiltered") return Mode::Unfiltered;
    if (s == "backup-only") return Mode::BackupOnly;
    throw std::invalid_argument("unknown mode '" + s + "' (rail|unfiltered|backup-only)");
}

std::string to_string(Source s) {
    switch (s) {
        case Source::Nominal: return "nominal";
        case Source::Backup: return "backup";
        case Source::Fresh: return "fresh";
    }
    return "?";
}

std::string to_string(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Success: return "success";
        case EpisodeStatus::Timeout: return "timeout";
        case EpisodeStatus::Collision: return "collision";
        case EpisodeStatus::Unstartable: return "unstartable";
        case EpisodeStatus::Stalled: return "stalled";
    }
    return "?";
}

BackupOptions FilterConfig::backup_options(double dt) const {
    BackupOptions o;
    o.t_peak = static_cast<double>(ta) * dt;
    o.min_steps = tp;
    o.partitions = partitions;
    o.lattice_per_axis = lattice_per_axis;
    o.max_verified = max_verified;
    return o;
}

void FilterConfig::validate() const {
    if (ta < 1 || ta > tp) throw std::invalid_argument("filter: need 1 <= Ta <= Tp");
    if (partitions < 1) throw std::invalid_argument("filter: need at least one partition");
    if (lattice_per_axis < 1) throw std::invalid_argument("filter: lattice needs at least one value per axis");
    if (max_steps < 1) throw std::invalid_argument("filter: max_steps must be positive");
}

FilterResult filter_step(const State& x, const Plan& nominal, const BackupPlan& stored, const Scene& scene,
                         const SystemModel& model, const FilterConfig& config) {
    nominal.validate(config.ta, config.tp);
    FilterResult out;
    const auto states = predict_state(model, x, nominal.actions);
    const std::vector<State> head_states(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(config.ta) + 1);
    out.head_verdict = model.verify(head_states, scene, config.partitions);
    if (out.head_verdict.safe()) {
        if (auto fresh = solve_backup(states[config.ta], nominal.tail(config.ta), scene, model,
                                      config.backup_options(model.dt()))) {
            out.head = nominal.head(config.ta);
            out.backup = std::move(*fresh);
            out.source = Source::Nominal;
            out.backup_found = true;
            return out;
        }
    }
    auto [head, rest] = stored.split(config.ta, model);
    out.head = std::move(head);
    out.backup = std::move(rest);
    out.source = Source::Backup;
    return out;
}

EpisodeLog rail_loop(EnvironmentPort& env, PolicyPort& policy, const SystemModel& model, const Scene& scene,
                     const FilterConfig& config) {
    config.validate();
    EpisodeLog log;
    const double dt = model.dt();
    const BackupOptions options = config.backup_options(dt);
    if (env.goal_reached()) {
        log.status = EpisodeStatus::Success;
        return log;
    }

    // Executes actions under ground truth; false once the episode is over.
    const auto apply = [&](const std::vector<Action>& actions) {
        for (const Action& a : actions) {
            if (log.steps >= config.max_steps) break;
            const StepEvent ev = env.step(a);
            const std::size_t index = log.steps++;
            if (ev.collision) ++log.collision_transitions;
            if (ev.limit) ++log.limit_transitions;
            if (ev.violation()) {
                log.events.push_back(ev);
                log.event_steps.push_back(index);
            }
            if (ev.collision && config.mode == Mode::Unfiltered) {
                log.status = EpisodeStatus::Collision;
                return false;
            }
            if (env.goal_reached()) {
                log.status = EpisodeStatus::Success;
                return false;
            }
        }
        if (log.steps >= config.max_steps) {
            log.status = EpisodeStatus::Timeout;
            return false;
        }
        return true;
    };
    const auto query = [&](const Observation& o) {
        Plan p = policy.plan(o, dt * static_cast<double>(log.steps), config.tp);
        p.validate(config.ta, config.tp);
        return p;
    };
    const auto record = [&](const State& x, const FilterResult& r) {
        IterationRecord rec;
        rec.iteration = log.records.size();
        rec.step = log.steps;
        rec.state = x;
        rec.source = r.source;
        rec.intervention = r.intervention();
        rec.head_verdict = r.head_verdict;
        rec.backup_found = r.backup_found;
        rec.backup_remaining = r.backup.size();
        rec.committed = r.head;
        if (rec.intervention) ++log.interventions;
        log.records.push_back(std::move(rec));
    };

    if (config.mode == Mode::Unfiltered) {
        for (;;) {
            const State x = env.observe();
            const Plan p = query(x);
            FilterResult r;
            r.head = p.head(config.ta);
            r.source = Source::Nominal;
            record(x, r);
            if (!apply(r.head)) break;
        }
        return log;
    }

    // Backup from the current state; its head is committed without a nominal check.
    BackupPlan backup;
    std::vector<Action> pending;
    const auto restart = [&](EpisodeStatus failure) {
        const State x = env.observe();
        const Plan p = query(x);
        auto fresh = solve_backup(x, p.actions, scene, model, options);
        if (!fresh) {
            log.status = failure;
            return false;
        }
        FilterResult r;
        auto [head, rest] = fresh->split(config.ta, model);
        r.head = std::move(head);
        r.backup = std::move(rest);
        r.source = Source::Fresh;
        r.backup_found = true;
        record(x, r);
        pending = r.head;
        backup = std::move(r.backup);
        return true;
    };

    if (!restart(EpisodeStatus::Unstartable)) return log;
    while (apply(pending)) {
        if (backup.empty()) {
            // stopped safely at the end of a backup
            if (!restart(EpisodeStatus::Stalled)) break;
            continue;
        }
        const State x = env.observe();
        const Plan p = query(x);
        const auto start = std::chrono::steady_clock::now();
        FilterResult r;
        if (config.mode == Mode::Rail) {
            r = filter_step(x, p, backup, scene, model, config);
        } else if (auto fresh = solve_backup(x, p.actions, scene, model, options)) {
            auto [head, rest] = fresh->split(config.ta, model);
            r.head = std::move(head);
            r.backup = std::move(rest);
            r.source = Source::Fresh;
            r.backup_found = true;
        } else {
            auto [head, rest] = backup.split(config.ta, model);
            r.head = std::move(head);
            r.backup = std::move(rest);
            r.source = Source::Backup;
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.validation_seconds.push_back(seconds);
        if (seconds > dt * static_cast<double>(config.ta)) ++log.budget_misses;
        record(x, r);
        pending = r.head;
        backup = std::move(r.backup);
    }
    return log;
}

}  // namespace rail

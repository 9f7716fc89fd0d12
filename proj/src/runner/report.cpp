#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "rail/runner.hpp"

namespace rail::run {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

ordered_json to_json(const State& s) {
    return ordered_json{{"position", to_json(s.position)}, {"velocity", to_json(s.velocity)}};
}

ordered_json to_json(const SafetyVerdict& v) {
    ordered_json j{{"kind", to_string(v.kind)}};
    if (!v.safe()) j["detail"] = v.describe();
    return j;
}

ordered_json to_json(const MetricsReport& m) {
    return ordered_json{{"episodes", m.episodes},
                        {"succ_pct", m.succ_pct},
                        {"ssucc_pct", m.ssucc_pct},
                        {"col_pct", m.col_pct},
                        {"mean_horizon", m.mean_horizon},
                        {"interventions_per_episode", m.interventions_per_episode},
                        {"validation_time_mean_s", m.validation_mean},
                        {"validation_time_std_s", m.validation_std},
                        {"validation_samples", m.validation_samples},
                        {"transitions", m.transitions},
                        {"collision_transitions", m.collision_transitions},
                        {"limit_transitions", m.limit_transitions},
                        {"violation_transitions", m.violation_transitions},
                        {"budget_misses", m.budget_misses},
                        {"identities_hold", m.identities_hold()}};
}

std::string file_stem(const EpisodeResult& e) {
    return env::to_string(e.policy) + "_s" + std::to_string(e.seed) + "_e" + std::to_string(e.index);
}

void dump_geometry(const BatchResult& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Scenario& s = b.scenario;
    for (const auto& e : b.episodes) {
        if (e.index != 0) continue;
        // Certified occupancy of the first backup the loop would set up.
        EpisodeSetup setup = make_episode(s, e.policy, e.seed, e.index);
        const Plan p = setup.policy->plan(setup.env->observe(), 0.0, s.filter.tp);
        BackupOptions opt = s.filter.backup_options(setup.model->dt());
        opt.keep_occupancy = true;
        const auto plan = solve_backup(setup.start, p.actions, setup.scene, *setup.model, opt);
        std::ofstream out(dir / (file_stem(e) + ".txt"));
        out << std::setprecision(17);
        if (!plan) {
            out << "# no certified backup\n";
            continue;
        }
        if (plan->occupancy) {
            out << "# cell link center generators (3-D enclosure zonotopes)\n";
            write_geometry(out, *plan->occupancy);
        } else {
            StateTrajectory traj;
            for (std::size_t k = 0; k < plan->states.size(); ++k) {
                traj.times.push_back(setup.model->dt() * static_cast<double>(k));
                traj.position.push_back(plan->states[k].position);
                traj.velocity.push_back(plan->states[k].velocity);
            }
            out << "# cell lo hi per axis (disc centre boxes, radius " << s.maze.radius << ")\n";
            const auto boxes = point_swept_boxes(traj, s.filter.partitions);
            for (std::size_t c = 0; c < boxes.size(); ++c) {
                out << c;
                for (const auto& iv : boxes[c].interval_hull()) out << ' ' << iv.lo << ' ' << iv.hi;
                out << '\n';
            }
        }
    }
}

}  // namespace

void write_episode_log(std::ostream& out, const EpisodeResult& e) {
    const std::string policy = env::to_string(e.policy);
    for (const auto& r : e.log.records) {
        ordered_json j{{"type", "iteration"},
                       {"policy", policy},
                       {"seed", e.seed},
                       {"episode", e.index},
                       {"iteration", r.iteration},
                       {"step", r.step},
                       {"state", to_json(r.state)},
                       {"source", to_string(r.source)},
                       {"intervention", r.intervention},
                       {"head_verdict", to_json(r.head_verdict)},
                       {"backup_found", r.backup_found},
                       {"backup_remaining", r.backup_remaining}};
        ordered_json committed = ordered_json::array();
        for (const auto& a : r.committed) committed.push_back(to_json(a));
        j["committed"] = std::move(committed);
        out << j.dump() << '\n';
    }
    ordered_json events = ordered_json::array();
    for (std::size_t i = 0; i < e.log.events.size(); ++i) {
        const StepEvent& ev = e.log.events[i];
        events.push_back(ordered_json{{"step", e.log.event_steps[i]},
                                      {"substep", ev.substep},
                                      {"collision", ev.collision},
                                      {"limit", ev.limit},
                                      {"detail", ev.detail}});
    }
    ordered_json summary{{"type", "episode"},
                         {"policy", policy},
                         {"seed", e.seed},
                         {"episode", e.index},
                         {"start", to_json(e.start)},
                         {"status", to_string(e.log.status)},
                         {"steps", e.log.steps},
                         {"collision_transitions", e.log.collision_transitions},
                         {"limit_transitions", e.log.limit_transitions},
                         {"interventions", e.log.interventions},
                         {"events", std::move(events)}};
    out << summary.dump() << '\n';
}

void write_report_csv(std::ostream& out, const BatchResult& b) {
    out << "scene,mode,policy,episodes,succ_pct,ssucc_pct,col_pct,mean_horizon,interventions_per_episode,"
           "validation_time_mean_s,validation_time_std_s,transitions,collision_transitions,limit_transitions,"
           "budget_misses\n";
    const auto row = [&](const std::string& policy, const MetricsReport& m) {
        out << b.scenario.name << ',' << to_string(b.mode) << ',' << policy << ',' << m.episodes << ',' << m.succ_pct
            << ',' << m.ssucc_pct << ',' << m.col_pct << ',' << m.mean_horizon << ',' << m.interventions_per_episode
            << ',' << m.validation_mean << ',' << m.validation_std << ',' << m.transitions << ','
            << m.collision_transitions << ',' << m.limit_transitions << ',' << m.budget_misses << '\n';
    };
    for (const auto& [policy, m] : b.per_policy) row(policy, m);
    row("all", b.overall);
}

void write_report_json(std::ostream& out, const BatchResult& b) {
    ordered_json per = ordered_json::object();
    for (const auto& [policy, m] : b.per_policy) per[policy] = to_json(m);
    std::vector<std::uint64_t> seeds = b.scenario.seeds;
    ordered_json j{{"scene", b.scenario.name},
                   {"mode", to_string(b.mode)},
                   {"ta", b.scenario.filter.ta},
                   {"tp", b.scenario.filter.tp},
                   {"partitions", b.scenario.filter.partitions},
                   {"max_steps", b.scenario.max_steps()},
                   {"seeds", seeds},
                   {"overall", to_json(b.overall)},
                   {"per_policy", std::move(per)},
                   {"invariants_violated", b.invariants_violated()}};
    out << j.dump(2) << '\n';
}

void write_outputs(const BatchResult& b, const std::string& dir, bool geometry) {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    {
        std::ofstream out(root / "report.csv");
        write_report_csv(out, b);
    }
    {
        std::ofstream out(root / "report.json");
        write_report_json(out, b);
    }
    {
        std::ofstream out(root / "episodes.jsonl");
        for (const auto& e : b.episodes) write_episode_log(out, e);
    }
    {
        std::ofstream out(root / "timing.csv");
        out << "policy,seed,episode,filter_step,seconds\n" << std::setprecision(9);
        for (const auto& e : b.episodes) {
            for (std::size_t k = 0; k < e.log.validation_seconds.size(); ++k) {
                out << env::to_string(e.policy) << ',' << e.seed << ',' << e.index << ',' << k << ','
                    << e.log.validation_seconds[k] << '\n';
            }
        }
    }
    if (geometry) dump_geometry(b, root / "geometry");
}

}  // namespace rail::run

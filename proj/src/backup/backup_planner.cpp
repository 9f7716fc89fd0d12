#include "rail/backup_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace rail {

namespace {

constexpr double kStepTol = 1e-9;
constexpr double kRestTol = 1e-9;

void require_shapes(const State& x0, const TrajParam& k) {
    if (x0.position.size() != x0.velocity.size() || x0.position.size() != k.size()) {
        throw std::invalid_argument("failsafe: state and parameter dimensions differ");
    }
}

bool velocity_ok(const State& x, const Scene& scene) {
    if (scene.speed_limit && x.velocity.norm() > *scene.speed_limit + 1e-12) return false;
    for (std::size_t j = 0; j < scene.velocity_limits.size(); ++j) {
        if (!scene.velocity_limits[j].contains(x.velocity[static_cast<Eigen::Index>(j)], 1e-12)) return false;
    }
    return true;
}

struct Candidate {
    TrajParam k;
    double f = 0.0;
    double norm2 = 0.0;
    long index = 0;  // lattice order; the three special candidates use -3..-1
};

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.f != b.f) return a.f < b.f;
    if (a.norm2 != b.norm2) return a.norm2 < b.norm2;
    for (Eigen::Index j = 0; j < a.k.size(); ++j) {
        if (std::abs(a.k[j]) != std::abs(b.k[j])) return std::abs(a.k[j]) < std::abs(b.k[j]);
    }
    return a.index < b.index;
}

double evaluate(const std::vector<Eigen::Vector3d>& quad, const TrajParam& k) {
    double f = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
        const double x = k[static_cast<Eigen::Index>(j)];
        f += quad[j][0] * x * x + quad[j][1] * x + quad[j][2];
    }
    return f;
}

// Best `count` lattice points of a separable objective, by best-first search
// over per-axis rank tuples.
std::vector<Candidate> best_lattice(const std::vector<Eigen::Vector3d>& quad, const Eigen::VectorXd& accel,
                                    std::size_t per_axis, std::size_t count) {
    const std::size_t n = quad.size();
    std::vector<std::vector<double>> values(n);
    std::vector<std::vector<std::size_t>> ranked(n);  // lattice slot by rank
    for (std::size_t j = 0; j < n; ++j) {
        const double a = accel[static_cast<Eigen::Index>(j)];
        for (std::size_t l = 0; l < per_axis; ++l) {
            values[j].push_back(per_axis == 1 ? 0.0 : -a + 2.0 * a * static_cast<double>(l) / static_cast<double>(per_axis - 1));
        }
        ranked[j].resize(per_axis);
        std::iota(ranked[j].begin(), ranked[j].end(), std::size_t{0});
        const auto fj = [&](std::size_t l) {
            const double x = values[j][l];
            return quad[j][0] * x * x + quad[j][1] * x + quad[j][2];
        };
        std::stable_sort(ranked[j].begin(), ranked[j].end(), [&](std::size_t a, std::size_t b) {
            if (fj(a) != fj(b)) return fj(a) < fj(b);
            return std::abs(values[j][a]) < std::abs(values[j][b]);
        });
    }

    const auto make = [&](const std::vector<std::size_t>& ranks) {
        Candidate c;
        c.k.resize(static_cast<Eigen::Index>(n));
        long index = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t slot = ranked[j][ranks[j]];
            c.k[static_cast<Eigen::Index>(j)] = values[j][slot];
            index = index * static_cast<long>(per_axis) + static_cast<long>(slot);
        }
        c.f = evaluate(quad, c.k);
        c.norm2 = c.k.squaredNorm();
        c.index = index;
        return c;
    };
    const auto worse = [](const std::pair<Candidate, std::vector<std::size_t>>& a,
                          const std::pair<Candidate, std::vector<std::size_t>>& b) {
        return candidate_less(b.first, a.first);
    };
    std::priority_queue<std::pair<Candidate, std::vector<std::size_t>>,
                        std::vector<std::pair<Candidate, std::vector<std::size_t>>>, decltype(worse)>
        open(worse);
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::size_t> start(n, 0);
    open.emplace(make(start), start);
    seen.insert(start);
    std::vector<Candidate> out;
    while (!open.empty() && out.size() < count) {
        auto [cand, ranks] = open.top();
        open.pop();
        out.push_back(cand);
        for (std::size_t j = 0; j < n; ++j) {
            if (ranks[j] + 1 >= per_axis) continue;
            auto next = ranks;
            ++next[j];
            if (seen.insert(next).second) open.emplace(make(next), next);
        }
    }
    return out;
}

}  // namespace

State failsafe_state(const State& x0, const TrajParam& k, double t_peak, double t_stop, double t) {
    require_shapes(x0, k);
    if (t <= t_peak) {
        return {x0.position + x0.velocity * t + 0.5 * k * t * t, x0.velocity + k * t};
    }
    const Eigen::VectorXd qp = x0.position + x0.velocity * t_peak + 0.5 * k * t_peak * t_peak;
    const Eigen::VectorXd vp = x0.velocity + k * t_peak;
    const double s = t - t_peak;
    if (s >= t_stop || t >= t_peak + t_stop) return {qp + 0.5 * vp * t_stop, Eigen::VectorXd::Zero(vp.size())};
    const Eigen::VectorXd brake = -vp / t_stop;
    return {qp + vp * s + 0.5 * brake * s * s, vp + brake * s};
}

JointTrajectory param_traj(const State& x0, const TrajParam& k, double t_peak, double t_stop,
                           const Eigen::VectorXd& accel_limits, double dt) {
    require_shapes(x0, k);
    if (!(t_peak > 0.0) || !(t_stop > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("param_traj: t_peak, t_stop and dt must be positive");
    }
    if (accel_limits.size() != k.size()) throw std::invalid_argument("param_traj: accel bound size mismatch");
    const Eigen::ArrayXd bound = accel_limits.array() * (1.0 + 1e-12);
    if ((k.array().abs() > bound).any()) throw InfeasibleParameter("param_traj: |k| exceeds the acceleration bound");
    const Eigen::VectorXd vp = x0.velocity + k * t_peak;
    if ((vp.array().abs() / t_stop > bound).any()) {
        throw InfeasibleParameter("param_traj: braking deceleration exceeds the acceleration bound");
    }
    const auto steps = static_cast<long>(std::ceil((t_peak + t_stop) / dt - kStepTol));
    JointTrajectory traj;
    for (long i = 0; i <= steps; ++i) {
        const double t = dt * static_cast<double>(i);
        // the grid time of the last sample can fall an ulp short of the stop
        const State s = failsafe_state(x0, k, t_peak, t_stop, i == steps ? std::max(t, t_peak + t_stop) : t);
        traj.times.push_back(t);
        traj.q.push_back(s.position);
        traj.qd.push_back(s.velocity);
    }
    return traj;
}

double braking_time(const State& x0, const TrajParam& k, double t_peak, const Eigen::VectorXd& accel_limits,
                    double dt) {
    require_shapes(x0, k);
    const Eigen::VectorXd vp = x0.velocity + k * t_peak;
    const double needed = (vp.array().abs() / accel_limits.array()).maxCoeff();
    return dt * std::max(1.0, std::ceil(needed / dt - kStepTol));
}

std::pair<std::vector<Action>, BackupPlan> BackupPlan::split(std::size_t count, const SystemModel& model) const {
    BackupPlan rest;
    rest.param = param;
    rest.t_peak = t_peak;
    rest.t_stop = t_stop;
    std::vector<Action> head;
    if (count <= actions.size()) {
        head.assign(actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(count));
        rest.actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(count), actions.end());
        rest.states.assign(states.begin() + static_cast<std::ptrdiff_t>(count), states.end());
    } else {
        head = actions;
        const State& end = states.back();
        while (head.size() < count) head.push_back(model.hold_action(end));
        rest.states = {end};
    }
    rest.origin = rest.states.front();
    return {head, rest};
}

std::vector<Eigen::Vector3d> projection_objective(const State& x0, const std::vector<State>& tail_states,
                                                  double t_peak, double dt) {
    const Eigen::Index n = x0.position.size();
    std::vector<Eigen::Vector3d> quad(static_cast<std::size_t>(n), Eigen::Vector3d::Zero());
    const auto phase = static_cast<std::size_t>(std::lround(t_peak / dt));
    const std::size_t overlap = std::min(tail_states.size(), phase);
    for (std::size_t i = 0; i < overlap; ++i) {
        const double t = dt * static_cast<double>(i + 1);
        const double w = 0.5 * t * t;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double base = x0.position[j] + x0.velocity[j] * t - tail_states[i].position[j];
            auto& qj = quad[static_cast<std::size_t>(j)];
            qj[0] += w * w;
            qj[1] += 2.0 * w * base;
            qj[2] += base * base;
        }
    }
    return quad;
}

std::optional<BackupPlan> certify_backup(const State& x0, const TrajParam& k, const Scene& scene,
                                         const SystemModel& model, const BackupOptions& options) {
    const double dt = model.dt();
    const Eigen::VectorXd accel = model.accel_limits();
    const double t_stop = braking_time(x0, k, options.t_peak, accel, dt);
    JointTrajectory traj;
    try {
        traj = param_traj(x0, k, options.t_peak, t_stop, accel, dt);
    } catch (const InfeasibleParameter&) {
        return std::nullopt;
    }
    std::vector<State> samples;
    for (std::size_t i = 0; i < traj.size(); ++i) samples.push_back({traj.q[i], traj.qd[i]});
    std::vector<Action> actions = model.actions_for(samples);

    // Tb >= Tp and a whole number of cells per partition.
    const std::size_t m = std::max<std::size_t>(1, options.partitions);
    std::size_t length = std::max(actions.size(), options.min_steps);
    length = (length + m - 1) / m * m;
    State end = samples.back();
    while (actions.size() < length) actions.push_back(model.hold_action(end));

    BackupPlan plan;
    plan.origin = x0;
    plan.param = k;
    plan.t_peak = options.t_peak;
    plan.t_stop = t_stop;
    plan.states = model.predict(x0, actions);
    plan.actions = std::move(actions);
    if (plan.states.back().velocity.norm() > kRestTol) return std::nullopt;

    SweptOccupancy occupancy;
    const SafetyVerdict verdict =
        model.verify(plan.states, scene, m, options.keep_occupancy ? &occupancy : nullptr);
    if (!verdict.safe()) return std::nullopt;
    if (options.keep_occupancy) plan.occupancy = std::move(occupancy);
    return plan;
}

std::optional<BackupPlan> solve_backup(const State& x0, const std::vector<Action>& tail, const Scene& scene,
                                       const SystemModel& model, const BackupOptions& options, BackupStats* stats) {
    if (!x0.position.allFinite() || !x0.velocity.allFinite()) {
        throw std::invalid_argument("solve_backup: non-finite state");
    }
    const double dt = model.dt();
    const double phase = options.t_peak / dt;
    if (!(options.t_peak > 0.0) || std::abs(phase - std::round(phase)) > kStepTol) {
        throw std::invalid_argument("solve_backup: t_peak must be a positive multiple of dt");
    }
    if (options.lattice_per_axis == 0) throw std::invalid_argument("solve_backup: empty lattice");
    if (!velocity_ok(x0, scene)) return std::nullopt;

    const Eigen::VectorXd accel = model.accel_limits();
    const auto tail_pred = model.predict(x0, tail);
    const std::vector<State> tail_states(tail_pred.begin() + 1, tail_pred.end());
    const auto quad = projection_objective(x0, tail_states, options.t_peak, dt);

    std::vector<Candidate> cands;
    const auto add = [&](TrajParam k, long index) {
        Candidate c;
        c.k = std::move(k);
        c.f = evaluate(quad, c.k);
        c.norm2 = c.k.squaredNorm();
        c.index = index;
        cands.push_back(std::move(c));
    };
    const Eigen::Index n = model.num_axes();
    add(Eigen::VectorXd::Zero(n), -3);
    TrajParam seed = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& qj = quad[static_cast<std::size_t>(j)];
        if (qj[0] > 0.0) seed[j] = std::clamp(-qj[1] / (2.0 * qj[0]), -accel[j], accel[j]);
    }
    add(seed, -2);
    add((-x0.velocity / options.t_peak).cwiseMax(-accel).cwiseMin(accel), -1);
    for (auto& c : best_lattice(quad, accel, options.lattice_per_axis, options.max_verified + 3)) {
        cands.push_back(std::move(c));
    }
    std::stable_sort(cands.begin(), cands.end(), candidate_less);
    std::vector<Candidate> unique;
    for (auto& c : cands) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Candidate& u) { return u.k == c.k; });
        if (!dup) unique.push_back(std::move(c));
    }
    if (stats) stats->ranked = unique.size();

    std::size_t verified = 0;
    for (const Candidate& c : unique) {
        const bool always = c.index == -3 || c.index == -1;
        if (verified >= options.max_verified && !always) continue;
        ++verified;
        if (stats) stats->verified = verified;
        if (auto plan = certify_backup(x0, c.k, scene, model, options)) return plan;
    }
    return std::nullopt;
}

}  // namespace rail

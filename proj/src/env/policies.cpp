#include "rail/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rail::env {

std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::Waypoint: return "waypoint";
        case PolicyKind::Adversarial: return "adversarial";
        case PolicyKind::DemoReplay: return "demo-replay";
    }
    return "?";
}

PolicyKind parse_policy(const std::string& s) {
    if (s == "greedy") return PolicyKind::Greedy;
    if (s == "waypoint") return PolicyKind::Waypoint;
    if (s == "adversarial") return PolicyKind::Adversarial;
    if (s == "demo-replay") return PolicyKind::DemoReplay;
    throw std::invalid_argument("unknown policy '" + s + "' (greedy|waypoint|adversarial|demo-replay)");
}

namespace {

constexpr double kVelocityLag = 0.15;  // s, first-order velocity tracking
constexpr double kApproachGain = 2.0;  // 1/s, speed taper near a target

// Lazily extended Gaussian sequence: entry i does not depend on query order.
class NoiseTape {
public:
    NoiseTape(std::uint64_t seed, Eigen::Index dim, double sigma) : rng_(seed), dim_(dim), dist_(0.0, sigma) {}
    const Eigen::VectorXd& at(std::size_t i) {
        while (tape_.size() <= i) {
            Eigen::VectorXd v(dim_);
            for (Eigen::Index j = 0; j < dim_; ++j) v[j] = dist_(rng_);
            tape_.push_back(v);
        }
        return tape_[i];
    }

private:
    std::mt19937_64 rng_;
    Eigen::Index dim_;
    std::normal_distribution<double> dist_;
    std::vector<Eigen::VectorXd> tape_;
};

std::size_t step_index(double time, double dt) { return static_cast<std::size_t>(std::llround(time / dt)); }

// ---- maze -------------------------------------------------------------------

class MazePolicy : public PolicyPort {
public:
    explicit MazePolicy(const MazeSpec& spec) : spec_(spec), model_(maze_model(spec)) {}

    Plan plan(const Observation& o, double time, std::size_t horizon) override {
        Plan p;
        p.t0 = time;
        p.dt = spec_.dt;
        begin(o, time);
        State s = o;
        for (std::size_t k = 0; k < horizon; ++k) {
            const Action a = clip(next(s, k));
            p.actions.push_back(a);
            s = model_.predict(s, {a}).back();
        }
        return p;
    }

protected:
    virtual void begin(const Observation&, double) {}
    virtual Action next(const State& s, std::size_t k) = 0;

    Action clip(const Action& a) const {
        const double bound = 0.999 * spec_.accel;
        return a.cwiseMax(-bound).cwiseMin(bound);
    }
    Action track(const State& s, const Eigen::Vector2d& target, double speed) const {
        const Eigen::Vector2d d = target - s.position;
        const double dist = d.norm();
        const Eigen::Vector2d v_des =
            dist > 1e-12 ? Eigen::Vector2d(d / dist * std::min(speed, kApproachGain * dist)) : Eigen::Vector2d::Zero();
        // Uniform scaling keeps the heading when the force saturates.
        const Eigen::Vector2d a = (v_des - s.velocity) / kVelocityLag;
        const double peak = a.lpNorm<Eigen::Infinity>(), bound = 0.75 * spec_.accel;
        return peak > bound ? Eigen::Vector2d(a * (bound / peak)) : a;
    }

    MazeSpec spec_;
    PointMassModel model_;
};

class MazeGreedy final : public MazePolicy {
public:
    using MazePolicy::MazePolicy;
    std::string name() const override { return "greedy"; }

protected:
    Action next(const State& s, std::size_t) override {
        return track(s, MazeLayout::center(spec_.goal), spec_.policy_speed);
    }
};

class MazeWaypoint final : public MazePolicy {
public:
    using MazePolicy::MazePolicy;
    std::string name() const override { return "waypoint"; }

protected:
    void begin(const Observation& o, double) override {
        path_ = spec_.layout.shortest_path(MazeLayout::cell_of(o.position), spec_.goal);
        index_ = path_.size() > 1 ? 1 : 0;
    }
    Action next(const State& s, std::size_t) override {
        if (path_.empty()) return track(s, s.position, 0.0);  // off the map: stop
        while (index_ + 1 < path_.size() && (s.position - MazeLayout::center(path_[index_])).norm() < 0.25) ++index_;
        return track(s, MazeLayout::center(path_[index_]), spec_.policy_speed);
    }

private:
    std::vector<Cell> path_;
    std::size_t index_ = 0;
};

class MazeAdversarial final : public MazePolicy {
public:
    using MazePolicy::MazePolicy;
    std::string name() const override { return "adversarial"; }

protected:
    void begin(const Observation& o, double) override {
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < spec_.layout.rows(); ++r) {
            for (int c = 0; c < spec_.layout.cols(); ++c) {
                if (!spec_.layout.wall({r, c})) continue;
                const Eigen::Vector2d lo(c, r), hi(c + 1, r + 1);
                const double d = (o.position - o.position.cwiseMax(lo).cwiseMin(hi)).norm();
                if (d < best) {
                    best = d;
                    target_ = MazeLayout::center({r, c});
                }
            }
        }
    }
    Action next(const State& s, std::size_t) override { return track(s, target_, spec_.speed_limit * 0.95); }

private:
    Eigen::Vector2d target_ = Eigen::Vector2d::Zero();
};

// Open-loop replay of a recorded waypoint rollout with additive force noise.
class MazeDemoReplay final : public MazePolicy {
public:
    MazeDemoReplay(const MazeSpec& spec, const State& start, std::uint64_t seed, std::size_t horizon)
        : MazePolicy(spec), noise_(seed, 2, spec.demo_noise) {
        MazeEnv env(spec, start);
        MazeWaypoint demo(spec);
        for (std::size_t k = 0; k < horizon && !env.goal_reached(); ++k) {
            const Action a = demo.plan(env.observe(), spec.dt * static_cast<double>(k), 1).actions.front();
            record_.push_back(a);
            env.step(a);
        }
    }
    std::string name() const override { return "demo-replay"; }

protected:
    void begin(const Observation&, double time) override { start_ = step_index(time, spec_.dt); }
    Action next(const State& s, std::size_t k) override {
        const std::size_t i = start_ + k;
        const Action base = i < record_.size() ? record_[i] : Action(-s.velocity / spec_.dt);
        return base + noise_.at(i);
    }

private:
    NoiseTape noise_;
    std::vector<Action> record_;
    std::size_t start_ = 0;
};

// ---- arm --------------------------------------------------------------------

class ArmPolicy : public PolicyPort {
public:
    explicit ArmPolicy(const ArmSpec& spec) : spec_(spec), limits_(spec.chain.position_limits()) {}

    Plan plan(const Observation& o, double time, std::size_t horizon) override {
        Plan p;
        p.t0 = time;
        p.dt = spec_.dt;
        begin(o, time);
        State s = o;
        for (std::size_t k = 0; k < horizon; ++k) {
            p.actions.push_back(advance(s, desired_velocity(s, k)));
        }
        return p;
    }

protected:
    virtual void begin(const Observation&, double) {}
    virtual Eigen::VectorXd desired_velocity(const State& s, std::size_t k) = 0;

    /// Velocity toward `error` with an infinity-norm cap and a taper near zero error.
    Eigen::VectorXd toward(const Eigen::VectorXd& error, double speed) const {
        const double n = error.lpNorm<Eigen::Infinity>();
        if (n < 1e-12) return Eigen::VectorXd::Zero(error.size());
        return error / n * std::min(speed, kApproachGain * n);
    }

    /// Acceleration-limited step toward v_des; returns the commanded angles.
    Action advance(State& s, const Eigen::VectorXd& v_des) const {
        const double dv = spec_.policy_accel * spec_.dt;
        const Eigen::VectorXd v = s.velocity + (v_des - s.velocity).cwiseMax(-dv).cwiseMin(dv);
        Eigen::VectorXd q = s.position + v * spec_.dt;
        for (Eigen::Index j = 0; j < q.size(); ++j) {
            const auto& lim = limits_[static_cast<std::size_t>(j)];
            q[j] = std::clamp(q[j], lim.lo, lim.hi);
        }
        s = {q, (q - s.position) / spec_.dt};
        return q;
    }

    ArmSpec spec_;
    std::vector<pz::Interval> limits_;
};

class ArmGreedy final : public ArmPolicy {
public:
    using ArmPolicy::ArmPolicy;
    std::string name() const override { return "greedy"; }

protected:
    Eigen::VectorXd desired_velocity(const State& s, std::size_t) override {
        return toward(spec_.goal - s.position, spec_.policy_speed);
    }
};

class ArmWaypoint final : public ArmPolicy {
public:
    explicit ArmWaypoint(const ArmSpec& spec) : ArmPolicy(spec) {
        if (spec_.via.empty()) spec_.via.push_back(spec_.goal);
    }
    std::string name() const override { return "waypoint"; }

protected:
    void begin(const Observation& o, double) override {
        // Keep the progress of the previous plan if we are on its predicted path.
        for (const auto& [q, index] : trace_) {
            if ((o.position - q).lpNorm<Eigen::Infinity>() < 1e-6) reached_ = std::max(reached_, index);
        }
        while (reached(o.position, reached_)) ++reached_;
        index_ = reached_;
        trace_.clear();
    }
    Eigen::VectorXd desired_velocity(const State& s, std::size_t) override {
        while (reached(s.position, index_)) ++index_;
        trace_.emplace_back(s.position, index_);
        return toward(spec_.via[index_] - s.position, spec_.policy_speed);
    }

private:
    bool reached(const Eigen::VectorXd& q, std::size_t i) const {
        return i + 1 < spec_.via.size() && (q - spec_.via[i]).lpNorm<Eigen::Infinity>() < 0.05;
    }
    std::size_t reached_ = 0;  // persists across plans
    std::size_t index_ = 0;
    std::vector<std::pair<Eigen::VectorXd, std::size_t>> trace_;
};

// Damped least squares on the tool point toward the nearest obstacle centre.
class ArmAdversarial final : public ArmPolicy {
public:
    using ArmPolicy::ArmPolicy;
    std::string name() const override { return "adversarial"; }

protected:
    void begin(const Observation& o, double) override {
        const Eigen::Vector3d tool = arm_tool(spec_, o.position);
        double best = std::numeric_limits<double>::infinity();
        target_ = tool;
        for (const auto& b : spec_.obstacles) {
            const Eigen::Vector3d local = b.rotation.transpose() * (tool - b.center);
            const double d = (local - local.cwiseMax(-b.half).cwiseMin(b.half)).norm();
            if (d < best) {
                best = d;
                target_ = b.center;
            }
        }
    }
    Eigen::VectorXd desired_velocity(const State& s, std::size_t) override {
        const auto frames = arm_frames(spec_.chain, s.position);
        const Eigen::Vector3d tool = frames.back() * spec_.tool;
        Eigen::MatrixXd jac(3, s.position.size());
        for (std::size_t j = 0; j < frames.size(); ++j) {
            const Eigen::Vector3d w = frames[j].linear() * spec_.chain.joint(j).axis.normalized();
            jac.col(static_cast<Eigen::Index>(j)) = w.cross(tool - frames[j].translation());
        }
        const double damping = 0.1;
        const Eigen::Matrix3d jjt = jac * jac.transpose() + damping * damping * Eigen::Matrix3d::Identity();
        const Eigen::VectorXd dq = jac.transpose() * jjt.ldlt().solve(target_ - tool);
        return toward(dq, spec_.policy_speed);
    }

private:
    Eigen::Vector3d target_ = Eigen::Vector3d::Zero();
};

// Tracks a recorded waypoint rollout shifted by a smooth random-walk offset.
class ArmDemoReplay final : public ArmPolicy {
public:
    ArmDemoReplay(const ArmSpec& spec, const Eigen::VectorXd& start, std::uint64_t seed, std::size_t horizon)
        : ArmPolicy(spec), steps_(seed, start.size(), spec.demo_noise) {
        ArmEnv env(spec, start);
        ArmWaypoint demo(spec);
        record_.push_back(start);
        for (std::size_t k = 0; k < horizon && !env.goal_reached(); ++k) {
            const Action a = demo.plan(env.observe(), spec.dt * static_cast<double>(k), 1).actions.front();
            env.step(a);
            record_.push_back(a);
        }
    }
    std::string name() const override { return "demo-replay"; }

protected:
    void begin(const Observation&, double time) override { start_ = step_index(time, spec_.dt); }
    Eigen::VectorXd desired_velocity(const State& s, std::size_t k) override {
        const std::size_t i = start_ + k + 1;
        const Eigen::VectorXd ref = record_[std::min(i, record_.size() - 1)] + offset(i);
        return toward((ref - s.position) / (2.0 * spec_.dt), spec_.policy_speed * 1.2);
    }

private:
    const Eigen::VectorXd& offset(std::size_t i) {
        while (offsets_.size() <= i) {
            offsets_.push_back(offsets_.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(record_.front().size()))
                                                : Eigen::VectorXd(offsets_.back() + steps_.at(offsets_.size())));
        }
        return offsets_[i];
    }
    NoiseTape steps_;
    std::vector<Eigen::VectorXd> record_;
    std::vector<Eigen::VectorXd> offsets_;
    std::size_t start_ = 0;
};

}  // namespace

std::unique_ptr<PolicyPort> make_maze_policy(PolicyKind kind, const MazeSpec& spec, const State& start,
                                             std::uint64_t seed, std::size_t horizon_steps) {
    switch (kind) {
        case PolicyKind::Greedy: return std::make_unique<MazeGreedy>(spec);
        case PolicyKind::Waypoint: return std::make_unique<MazeWaypoint>(spec);
        case PolicyKind::Adversarial: return std::make_unique<MazeAdversarial>(spec);
        case PolicyKind::DemoReplay: return std::make_unique<MazeDemoReplay>(spec, start, seed, horizon_steps);
    }
    throw std::invalid_argument("make_maze_policy: unknown kind");
}

std::unique_ptr<PolicyPort> make_arm_policy(PolicyKind kind, const ArmSpec& spec, const Eigen::VectorXd& start,
                                            std::uint64_t seed, std::size_t horizon_steps) {
    switch (kind) {
        case PolicyKind::Greedy: return std::make_unique<ArmGreedy>(spec);
        case PolicyKind::Waypoint: return std::make_unique<ArmWaypoint>(spec);
        case PolicyKind::Adversarial: return std::make_unique<ArmAdversarial>(spec);
        case PolicyKind::DemoReplay: return std::make_unique<ArmDemoReplay>(spec, start, seed, horizon_steps);
    }
    throw std::invalid_argument("make_arm_policy: unknown kind");
}

}  // namespace rail::env

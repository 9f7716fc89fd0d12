#include "rail/system_model.hpp"

#include <stdexcept>

namespace rail {

ArmModel::ArmModel(kin::KinematicChain chain, double dt, double accel_margin, SweptOptions options)
    : chain_(std::move(chain)), dt_(dt), accel_margin_(accel_margin), options_(options) {
    if (chain_.size() == 0) throw std::invalid_argument("ArmModel: empty chain");
    if (!(dt_ > 0.0)) throw std::invalid_argument("ArmModel: dt must be positive");
}

std::vector<State> ArmModel::predict(const State& x, const std::vector<Action>& actions) const {
    std::vector<State> out{x};
    out.reserve(actions.size() + 1);
    for (const Action& a : actions) {
        if (a.size() != num_axes()) throw std::invalid_argument("ArmModel: action has wrong size");
        out.push_back({a, (a - out.back().position) / dt_});
    }
    return out;
}

std::vector<Action> ArmModel::actions_for(const std::vector<State>& samples) const {
    std::vector<Action> out;
    for (std::size_t k = 1; k < samples.size(); ++k) out.push_back(samples[k].position);
    return out;
}

std::vector<CellBounds> ArmModel::cells_for(const std::vector<State>& states, std::size_t partitions) const {
    if (states.empty()) throw std::invalid_argument("ArmModel: nothing to verify");
    if (partitions == 0) throw std::invalid_argument("ArmModel: need at least one partition");
    std::vector<Eigen::VectorXd> q;
    for (const auto& s : states) q.push_back(s.position);
    if (q.size() == 1) q.push_back(q.front());
    const std::size_t steps = q.size() - 1;

    // Piecewise-linear motion: splitting a step keeps it exact.
    std::size_t parts = 1;
    double delta = dt_;
    if (partitions > steps && partitions % steps == 0) {
        parts = partitions / steps;
        delta = dt_ / static_cast<double>(parts);
    } else if (steps % partitions == 0) {
        delta = dt_ * static_cast<double>(steps / partitions);
    }

    JointTrajectory traj;
    for (std::size_t k = 0; k < steps; ++k) {
        const Eigen::VectorXd v = (q[k + 1] - q[k]) / dt_;
        for (std::size_t p = 0; p < parts; ++p) {
            const double f = static_cast<double>(p) / static_cast<double>(parts);
            traj.times.push_back(dt_ * (static_cast<double>(k) + f));
            traj.q.push_back(q[k] + f * (q[k + 1] - q[k]));
            traj.qd.push_back(v);
        }
    }
    traj.times.push_back(dt_ * static_cast<double>(steps));
    traj.q.push_back(q.back());
    traj.qd.push_back((q[steps] - q[steps - 1]) / dt_);
    return joint_bounds(traj, delta, chain_, accel_margin_);
}

SafetyVerdict ArmModel::verify(const std::vector<State>& states, const Scene& scene, std::size_t partitions,
                               SweptOccupancy* keep) const {
    return verify_chain(cells_for(states, partitions), chain_, scene, options_, keep);
}

PointMassModel::PointMassModel(Eigen::Index axes, double dt, Eigen::VectorXd accel_limits, double radius)
    : axes_(axes), dt_(dt), accel_(std::move(accel_limits)), radius_(radius) {
    if (axes_ < 1) throw std::invalid_argument("PointMassModel: need at least one axis");
    if (!(dt_ > 0.0)) throw std::invalid_argument("PointMassModel: dt must be positive");
    if (accel_.size() != axes_ || !(accel_.array() > 0.0).all()) {
        throw std::invalid_argument("PointMassModel: one positive acceleration bound per axis required");
    }
    if (!(radius_ >= 0.0)) throw std::invalid_argument("PointMassModel: radius must be nonnegative");
}

std::vector<State> PointMassModel::predict(const State& x, const std::vector<Action>& actions) const {
    std::vector<State> out{x};
    out.reserve(actions.size() + 1);
    for (const Action& a : actions) {
        if (a.size() != axes_) throw std::invalid_argument("PointMassModel: action has wrong size");
        const State& s = out.back();
        out.push_back({s.position + s.velocity * dt_ + 0.5 * a * dt_ * dt_, s.velocity + a * dt_});
    }
    return out;
}

std::vector<Action> PointMassModel::actions_for(const std::vector<State>& samples) const {
    std::vector<Action> out;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        out.push_back((samples[k].velocity - samples[k - 1].velocity) / dt_);
    }
    return out;
}

SafetyVerdict PointMassModel::verify(const std::vector<State>& states, const Scene& scene, std::size_t partitions,
                                     SweptOccupancy*) const {
    StateTrajectory traj;
    for (std::size_t k = 0; k < states.size(); ++k) {
        traj.times.push_back(dt_ * static_cast<double>(k));
        traj.position.push_back(states[k].position);
        traj.velocity.push_back(states[k].velocity);
    }
    return check_state_traj(traj, scene, radius_, partitions);
}

}  // namespace rail

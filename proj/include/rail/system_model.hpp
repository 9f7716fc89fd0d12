#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rail/collision.hpp"
#include "rail/kinematics.hpp"
#include "rail/swept_volume.hpp"

namespace rail {

struct State {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity;
};

/// One control-period command: desired joint angles (arm) or acceleration (point mass).
using Action = Eigen::VectorXd;

/// The filter's view of a robot: how actions move the state, how failsafe
/// trajectories become actions, and how a predicted state sequence is verified.
class SystemModel {
public:
    virtual ~SystemModel() = default;

    virtual Eigen::Index num_axes() const = 0;
    virtual double dt() const = 0;
    /// Per-axis acceleration bound available to failsafe maneuvers.
    virtual Eigen::VectorXd accel_limits() const = 0;

    /// states[0] = x, states[k] = state after actions[k-1].
    virtual std::vector<State> predict(const State& x, const std::vector<Action>& actions) const = 0;
    /// Actions that reproduce consecutive samples spaced dt apart (samples[0] is the current state).
    virtual std::vector<Action> actions_for(const std::vector<State>& samples) const = 0;
    /// Action that keeps a resting robot where it is.
    virtual Action hold_action(const State& x) const = 0;
    /// Continuous-time verification of the motion through `states` using
    /// `partitions` time cells; optionally returns the certified occupancy.
    virtual SafetyVerdict verify(const std::vector<State>& states, const Scene& scene, std::size_t partitions,
                                 SweptOccupancy* keep = nullptr) const = 0;
};

/// Serial arm under perfect tracking of desired joint angles: joints move
/// linearly between consecutive commands; the state velocity is the last step's
/// finite difference.
class ArmModel final : public SystemModel {
public:
    ArmModel(kin::KinematicChain chain, double dt, double accel_margin = kAccelMargin, SweptOptions options = {});

    Eigen::Index num_axes() const override { return static_cast<Eigen::Index>(chain_.size()); }
    double dt() const override { return dt_; }
    Eigen::VectorXd accel_limits() const override { return chain_.accel_limits(); }
    std::vector<State> predict(const State& x, const std::vector<Action>& actions) const override;
    std::vector<Action> actions_for(const std::vector<State>& samples) const override;
    Action hold_action(const State& x) const override { return x.position; }
    SafetyVerdict verify(const std::vector<State>& states, const Scene& scene, std::size_t partitions,
                         SweptOccupancy* keep = nullptr) const override;

    const kin::KinematicChain& chain() const { return chain_; }
    /// Cell bounds used by verify (exposed for the geometry dump and verify-swept).
    std::vector<CellBounds> cells_for(const std::vector<State>& states, std::size_t partitions) const;

private:
    kin::KinematicChain chain_;
    double dt_;
    double accel_margin_;
    SweptOptions options_;
};

/// Disc robot with double-integrator dynamics; actions are accelerations held
/// constant over each control period.
class PointMassModel final : public SystemModel {
public:
    PointMassModel(Eigen::Index axes, double dt, Eigen::VectorXd accel_limits, double radius);

    Eigen::Index num_axes() const override { return axes_; }
    double dt() const override { return dt_; }
    Eigen::VectorXd accel_limits() const override { return accel_; }
    std::vector<State> predict(const State& x, const std::vector<Action>& actions) const override;
    std::vector<Action> actions_for(const std::vector<State>& samples) const override;
    Action hold_action(const State& x) const override { return Eigen::VectorXd::Zero(x.position.size()); }
    SafetyVerdict verify(const std::vector<State>& states, const Scene& scene, std::size_t partitions,
                         SweptOccupancy* keep = nullptr) const override;

    double radius() const { return radius_; }

private:
    Eigen::Index axes_;
    double dt_;
    Eigen::VectorXd accel_;
    double radius_;
};

}  // namespace rail

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "rail/collision.hpp"
#include "rail/swept_volume.hpp"
#include "rail/system_model.hpp"

namespace rail {

/// Per-axis acceleration held during the first phase of a failsafe maneuver.
using TrajParam = Eigen::VectorXd;

/// Raised when a parameter needs more braking than the acceleration bound allows.
class InfeasibleParameter : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Closed-form failsafe state at time t: constant acceleration k on [0, t_peak],
/// then constant deceleration reaching zero velocity at t_peak + t_stop, then rest.
State failsafe_state(const State& x0, const TrajParam& k, double t_peak, double t_stop, double t);

/// failsafe_state sampled every dt from 0 until the maneuver has stopped. Throws
/// InfeasibleParameter if |k| or the braking deceleration exceeds accel_limits.
JointTrajectory param_traj(const State& x0, const TrajParam& k, double t_peak, double t_stop,
                           const Eigen::VectorXd& accel_limits, double dt);

/// Shortest multiple of dt (at least dt) that stops every axis within its bound.
double braking_time(const State& x0, const TrajParam& k, double t_peak, const Eigen::VectorXd& accel_limits,
                    double dt);

struct BackupPlan {
    State origin;
    TrajParam param;
    double t_peak = 0.0;
    double t_stop = 0.0;
    std::vector<Action> actions;
    std::vector<State> states;  ///< states[0] = origin, states[k] after actions[k-1]
    std::optional<SweptOccupancy> occupancy;

    std::size_t size() const { return actions.size(); }
    bool empty() const { return actions.empty(); }
    /// The first `count` actions (padded with holds at the resting end state if
    /// the plan is shorter) and the remainder anchored at the state they reach.
    std::pair<std::vector<Action>, BackupPlan> split(std::size_t count, const SystemModel& model) const;
};

struct BackupOptions {
    double t_peak = 0.0;               ///< acceleration phase [s]; must be a positive multiple of dt
    std::size_t min_steps = 1;         ///< Tb lower bound (Tp)
    std::size_t partitions = 16;       ///< time cells used to verify each candidate
    std::size_t lattice_per_axis = 5;  ///< values in linspace(-a, a) per axis
    std::size_t max_verified = 6;      ///< ranked candidates verified before giving up
    bool keep_occupancy = false;
};

struct BackupStats {
    std::size_t ranked = 0;
    std::size_t verified = 0;
};

/// Projection objective: squared position error to the tail plan over the
/// acceleration phase, where the failsafe is affine in k and the sum separates
/// per axis. Returns one quadratic (a, b, c) per axis: f_j(k) = a k^2 + b k + c.
std::vector<Eigen::Vector3d> projection_objective(const State& x0, const std::vector<State>& tail_states,
                                                  double t_peak, double dt);

/// Eq. (1) by ranked sampling: candidates are k = 0, the least-squares projection
/// seed, the brake-to-rest parameter and the best lattice points; they are
/// ordered by (objective, |k|, lattice order) and verified in that order. The
/// zero and brake candidates are always verified. Returns nullopt if none verifies.
std::optional<BackupPlan> solve_backup(const State& x0, const std::vector<Action>& tail, const Scene& scene,
                                       const SystemModel& model, const BackupOptions& options,
                                       BackupStats* stats = nullptr);

/// Verifies a fixed parameter exactly as solve_backup does.
std::optional<BackupPlan> certify_backup(const State& x0, const TrajParam& k, const Scene& scene,
                                         const SystemModel& model, const BackupOptions& options);

}  // namespace rail

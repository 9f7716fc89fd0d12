#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rail/collision.hpp"
#include "rail/kinematics.hpp"
#include "rail/safety_filter.hpp"
#include "rail/system_model.hpp"

namespace rail::env {

using Cell = std::pair<int, int>;  ///< (row, col); cell (r, c) covers [c, c+1] x [r, r+1]

/// ASCII occupancy grid: '#' is a wall, anything else is free. Everything
/// outside the grid counts as wall.
class MazeLayout {
public:
    MazeLayout() = default;
    explicit MazeLayout(std::vector<std::string> rows);

    int rows() const { return static_cast<int>(rows_.size()); }
    int cols() const { return rows_.empty() ? 0 : static_cast<int>(rows_.front().size()); }
    bool wall(const Cell& c) const;
    const std::vector<std::string>& text() const { return rows_; }

    static Eigen::Vector2d center(const Cell& c) { return {c.second + 0.5, c.first + 0.5}; }
    static Cell cell_of(const Eigen::Vector2d& p);
    /// Free cells 4-connected to `from`, in row-major order.
    std::vector<Cell> component(const Cell& from) const;
    /// Shortest 4-connected path (A*, Manhattan heuristic), both ends included; empty if unreachable.
    std::vector<Cell> shortest_path(const Cell& from, const Cell& to) const;
    /// Wall cells merged into maximal horizontal runs, as (min corner, max corner).
    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> wall_runs() const;

private:
    std::vector<std::string> rows_;
};

struct MazeSpec {
    MazeLayout layout;
    Cell goal{1, 1};
    double radius = 0.1;         ///< disc robot [m]
    double dt = 0.05;            ///< control period [s]
    double accel = 4.0;          ///< per-axis force (acceleration) bound [m/s^2]
    double speed_limit = 1.5;    ///< [m/s]
    double goal_tolerance = 0.3; ///< distance to the goal cell centre [m]
    int substeps = 20;
    double policy_speed = 1.0;   ///< cruise speed of the scripted policies [m/s]
    double start_jitter = 0.2;   ///< uniform offset from the start cell centre [m]
    double demo_noise = 0.4;     ///< demo-replay acceleration noise scale [m/s^2]
};

Scene maze_scene(const MazeSpec& spec);
PointMassModel maze_model(const MazeSpec& spec);

class MazeEnv final : public EnvironmentPort {
public:
    MazeEnv(MazeSpec spec, State start);

    Observation observe() const override { return state_; }
    /// Exact double-integrator step; throws std::invalid_argument on a non-finite
    /// or out-of-bounds force.
    StepEvent step(const Action& a) override;
    bool goal_reached() const override;
    const MazeSpec& spec() const { return spec_; }

    /// Ground truth: disc against every wall cell, touching included.
    bool disc_collides(const Eigen::Vector2d& p) const;

private:
    MazeSpec spec_;
    State state_;
};

/// Oriented box obstacle.
struct BoxSpec {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d half = Eigen::Vector3d::Constant(0.1);
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    std::string name;
};

struct ArmSpec {
    kin::KinematicChain chain;
    std::vector<BoxSpec> obstacles;
    Eigen::VectorXd start;                ///< nominal start configuration
    Eigen::VectorXd goal;                 ///< goal configuration; its tool point is the goal
    std::vector<Eigen::VectorXd> via;     ///< waypoint policy via-points, ending at the goal
    Eigen::Vector3d tool = Eigen::Vector3d(0, 0, 0.08);  ///< tool point in the last frame
    double goal_tolerance = 0.1;          ///< [m]
    double dt = 0.05;
    int substeps = 20;
    double start_noise = 0.05;            ///< uniform per-joint start perturbation [rad]
    double policy_speed = 1.0;            ///< [rad/s], infinity norm
    double policy_accel = 3.0;            ///< [rad/s^2]
    double demo_noise = 0.004;            ///< random-walk step of the demo-replay offset [rad]
};

Scene arm_scene(const ArmSpec& spec);
ArmModel arm_model(const ArmSpec& spec);

/// Ground-truth geometry, independent of the set-based checker.
struct Obb {
    Eigen::Vector3d center;
    Eigen::Matrix3d axes;  ///< orthonormal columns
    Eigen::Vector3d half;
};
bool obb_overlap(const Obb& a, const Obb& b);
/// Homogeneous-transform forward kinematics: world pose of every joint frame.
std::vector<Eigen::Isometry3d> arm_frames(const kin::KinematicChain& chain, const Eigen::VectorXd& q);
/// World box of each link (link volumes must be boxes).
std::vector<Obb> arm_link_boxes(const kin::KinematicChain& chain, const Eigen::VectorXd& q);
Eigen::Vector3d arm_tool(const ArmSpec& spec, const Eigen::VectorXd& q);

class ArmEnv final : public EnvironmentPort {
public:
    ArmEnv(ArmSpec spec, Eigen::VectorXd q0);

    Observation observe() const override { return state_; }
    /// Perfect tracking: joints move linearly to the desired angles within the
    /// period. Throws std::invalid_argument on a wrong-size, non-finite or
    /// out-of-limits command.
    StepEvent step(const Action& a) override;
    bool goal_reached() const override;
    const ArmSpec& spec() const { return spec_; }

    /// Index of the first (link, obstacle) pair in contact at q, or -1.
    int first_contact(const Eigen::VectorXd& q) const;

private:
    ArmSpec spec_;
    State state_;
    std::vector<Obb> obstacles_;
};

enum class PolicyKind { Greedy, Waypoint, Adversarial, DemoReplay };
std::string to_string(PolicyKind k);
PolicyKind parse_policy(const std::string& s);

/// Scripted stand-ins for learned policies. `horizon_steps` bounds the demo recording.
std::unique_ptr<PolicyPort> make_maze_policy(PolicyKind kind, const MazeSpec& spec, const State& start,
                                             std::uint64_t seed, std::size_t horizon_steps);
std::unique_ptr<PolicyPort> make_arm_policy(PolicyKind kind, const ArmSpec& spec, const Eigen::VectorXd& start,
                                            std::uint64_t seed, std::size_t horizon_steps);

/// Start uniformly over the goal's connected component (goal cell excluded when
/// possible), jittered inside the cell, at rest.
State sample_maze_start(const MazeSpec& spec, std::mt19937_64& rng);
/// Perturbed nominal start; resampled until the ground truth reports no contact.
Eigen::VectorXd sample_arm_start(const ArmSpec& spec, std::mt19937_64& rng);

}  // namespace rail::env

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "rail/kinematics.hpp"
#include "rail/pz/zonotope.hpp"
#include "rail/swept_volume.hpp"

namespace rail {

struct Obstacle {
    pz::Zonotope shape;
    bool active = true;  ///< inactive obstacles are ignored (e.g. an object being grasped)
    std::string name;
};

/// Static world for one validation call.
struct Scene {
    std::vector<Obstacle> obstacles;
    std::vector<pz::Interval> position_limits;  ///< per joint / axis; empty means unbounded
    std::vector<pz::Interval> velocity_limits;  ///< per joint / axis; empty means unbounded
    std::optional<double> speed_limit;          ///< Euclidean bound on the velocity vector
    pz::Zonotope goal;

    /// Throws on non-finite obstacle data or an empty goal.
    void validate() const;
};

struct SafetyVerdict {
    enum class Kind { Safe, Unsafe, LimitViolation };
    enum class Limit { None, Position, Velocity, Sweep };

    Kind kind = Kind::Safe;
    std::size_t partition = 0;
    std::size_t link = 0;      ///< link (arm) or 0 (point robot)
    std::size_t obstacle = 0;  ///< index into Scene::obstacles
    Limit limit = Limit::None;
    std::size_t axis = 0;      ///< joint / axis of a limit violation

    bool safe() const { return kind == Kind::Safe; }
    static SafetyVerdict unsafe(std::size_t partition, std::size_t link, std::size_t obstacle);
    static SafetyVerdict violation(Limit limit, std::size_t partition, std::size_t axis);
    std::string describe() const;
};

const char* to_string(SafetyVerdict::Kind kind);
const char* to_string(SafetyVerdict::Limit limit);

/// Safe iff every per-partition joint box respects the scene limits and no
/// (partition, link, active obstacle) pair intersects. The first violation in
/// (partition, link, obstacle) order is reported; limits are checked first.
SafetyVerdict check_head(const SweptOccupancy& swept, const Scene& scene);

/// Same verdict as check_head(swept_occupancy(cells, chain, options), scene),
/// but builds partitions lazily and stops at the first violation. When `keep`
/// is given and the verdict is safe it receives the full occupancy.
SafetyVerdict verify_chain(const std::vector<CellBounds>& cells, const kin::KinematicChain& chain,
                           const Scene& scene, const SweptOptions& options = {},
                           SweptOccupancy* keep = nullptr);

/// Point-robot states sampled at `times`; motion between samples has constant
/// acceleration (velocity is linear in time).
struct StateTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> position;
    std::vector<Eigen::VectorXd> velocity;

    std::size_t size() const { return times.size(); }
    void validate() const;
};

/// Axis-aligned box of robot-centre positions over each cell, exact for the
/// constant-acceleration motion between samples. Cell layout: `cells` equal
/// groups of steps when they divide the step count, each step split into equal
/// parts when the step count divides `cells`, otherwise one cell per step.
std::vector<pz::Zonotope> point_swept_boxes(const StateTrajectory& traj, std::size_t cells,
                                            std::vector<pz::Interval>* cell_times = nullptr);

/// Disc robot of the given radius along a sampled trajectory: position limits on
/// the centre boxes, velocity and speed limits at every sample, and the centre
/// boxes inflated by the radius against every active obstacle.
SafetyVerdict check_state_traj(const StateTrajectory& traj, const Scene& scene, double radius,
                               std::size_t cells);

}  // namespace rail

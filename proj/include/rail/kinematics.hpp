#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rail/pz/interval.hpp"
#include "rail/pz/poly_zonotope.hpp"
#include "rail/pz/zonotope.hpp"

namespace rail::kin {

/// One revolute joint and the link it carries.
struct Joint {
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  ///< unit, in frame j-1
    Eigen::Vector3d offset = Eigen::Vector3d::Zero(); ///< origin of frame j in frame j-1 [m]
    pz::Zonotope link;                                ///< link volume in frame j [m]
    double accel_limit = 1.0;                         ///< rad/s^2, > 0
    pz::Interval position_limits{-M_PI, M_PI};        ///< rad
    double velocity_limit = 1.0;                      ///< rad/s
};

/// Serial chain of revolute joints rooted at the inertial frame.
class KinematicChain {
public:
    KinematicChain() = default;
    explicit KinematicChain(std::vector<Joint> joints);

    std::size_t size() const { return joints_.size(); }
    const Joint& joint(std::size_t j) const { return joints_[j]; }
    const std::vector<Joint>& joints() const { return joints_; }

    Eigen::VectorXd accel_limits() const;
    Eigen::VectorXd velocity_limits() const;
    std::vector<pz::Interval> position_limits() const;

private:
    std::vector<Joint> joints_;
};

struct Configuration {
    Eigen::VectorXd q;
    Eigen::VectorXd qd;  ///< optional; empty when unknown
};

/// Pose of frame j in the inertial frame.
struct FramePose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
};

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

/// I + p2 [w]x + (1 - p1) [w]x^2; the rotation by theta about w when p = (cos, sin).
Eigen::Matrix3d rodrigues(const Eigen::Vector2d& p, const Eigen::Vector3d& w);

/// Rectangle containing (cos t, sin t) for all t in [theta1, theta2]: the chord
/// p1p2 extruded outward to the arc midpoint, centred halfway between the chord
/// midpoint and the arc midpoint. Requires 0 <= theta2 - theta1 < pi.
pz::Zonotope arc_box(double theta1, double theta2);

/// Set of rotations about w through any angle in theta, as rodrigues applied to
/// arc_box(theta) with the box's two generators as fresh indeterminates.
pz::MatrixPolyZonotope rot_set(const pz::Interval& theta, const Eigen::Vector3d& w);

/// Frame poses 1..n for configuration q (no limit check).
std::vector<FramePose> frame_poses(const Eigen::VectorXd& q, const KinematicChain& chain);

/// FO_j(q) = {t_j(q)} + R_j(q) L_j for every link. Throws if q violates limits.
std::vector<pz::Zonotope> forward_occupancy(const Configuration& q, const KinematicChain& chain);

}  // namespace rail::kin

#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "rail/kinematics.hpp"
#include "rail/pz/interval.hpp"
#include "rail/pz/poly_zonotope.hpp"
#include "rail/pz/zonotope.hpp"

namespace rail {

/// Sampled joint-space (or workspace-axis) trajectory. Velocities are whatever
/// the sampler knows at each time; joint_bounds only uses their magnitude.
struct JointTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> q;
    std::vector<Eigen::VectorXd> qd;

    std::size_t size() const { return times.size(); }
    Eigen::Index dim() const { return q.empty() ? 0 : q.front().size(); }
    /// Throws unless times increase strictly and every sample has dim() entries.
    void validate() const;
};

/// Joint intervals for one time cell.
struct CellBounds {
    pz::Interval time;
    std::vector<pz::Interval> joints;    ///< Θ_i per joint
    std::vector<pz::Interval> velocity;  ///< hull of sampled velocities in the cell
};

/// Default augmentation of the acceleration bound in joint_bounds.
inline constexpr double kAccelMargin = 0.05;

/// Splits [t_0, t_N] into cells of length delta (samples must land on every cell
/// boundary) and bounds each joint over each cell by the union of
///   q(t_e) ± (delta |qd(t_e)| + ½ (1 + margin) accel delta²)
/// over both cell endpoints t_e, together with the hull of all samples inside.
std::vector<CellBounds> joint_bounds(const JointTrajectory& traj, double delta,
                                     const Eigen::VectorXd& accel_limits,
                                     double accel_margin = kAccelMargin);
std::vector<CellBounds> joint_bounds(const JointTrajectory& traj, double delta,
                                     const kin::KinematicChain& chain,
                                     double accel_margin = kAccelMargin);

struct SweptOptions {
    Eigen::Index rotation_terms = 16;     ///< monomial cap on each composed rotation
    Eigen::Index link_terms = 32;         ///< monomial cap on each link set before enclosure
    Eigen::Index enclosure_generators = 12;
    bool keep_poly = true;                ///< keep the polynomial link sets (else enclosures only)
};

/// Per-partition, per-link occupancy of a chain whose joints stay inside the
/// given boxes.
struct SweptOccupancy {
    std::vector<pz::Interval> partition_times;
    std::vector<std::vector<pz::Interval>> joint_boxes;
    std::vector<std::vector<pz::Interval>> velocity_boxes;
    std::vector<std::vector<pz::PolyZonotope>> links;    ///< [partition][link], empty if !keep_poly
    std::vector<std::vector<pz::Zonotope>> enclosures;   ///< [partition][link]

    std::size_t num_partitions() const { return enclosures.size(); }
};

/// Occupancy of every link over one partition: translation and rotation sets
/// composed joint by joint, each joint rotating through its own fresh interval.
std::vector<pz::PolyZonotope> partition_occupancy(const std::vector<pz::Interval>& theta,
                                                  const kin::KinematicChain& chain,
                                                  const SweptOptions& options = {});

SweptOccupancy swept_occupancy(const std::vector<CellBounds>& bounds, const kin::KinematicChain& chain,
                               const SweptOptions& options = {});

/// One line per (partition, link): "partition link  c_1 .. c_n  g_11 g_21 .. g_nm".
void write_geometry(std::ostream& out, const SweptOccupancy& swept);

}  // namespace rail

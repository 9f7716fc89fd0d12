#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rail/pz/interval.hpp"

namespace rail::pz {

/// Membership / feasibility tolerance shared by all set tests. Sets are closed.
inline constexpr double kSetTolerance = 1e-9;

/// Z = { c + G b : b in [-1, 1]^m }. Zero generator columns make a point.
class Zonotope {
public:
    Zonotope() = default;
    explicit Zonotope(Eigen::VectorXd center);
    Zonotope(Eigen::VectorXd center, Eigen::MatrixXd generators);

    /// Axis-aligned box given by center and half-widths.
    static Zonotope box(const Eigen::VectorXd& center, const Eigen::VectorXd& half_widths);
    /// Rotated box: center + R diag(half_widths).
    static Zonotope oriented_box(const Eigen::Vector3d& center,
                                 const Eigen::Matrix3d& rotation,
                                 const Eigen::Vector3d& half_widths);

    Eigen::Index dim() const { return center_.size(); }
    Eigen::Index num_generators() const { return generators_.cols(); }
    const Eigen::VectorXd& center() const { return center_; }
    const Eigen::MatrixXd& generators() const { return generators_; }

    /// Per-dimension interval enclosure.
    std::vector<Interval> interval_hull() const;
    /// Radius of the interval hull along each coordinate.
    Eigen::VectorXd half_widths() const;

    Eigen::VectorXd evaluate(const Eigen::VectorXd& coefficients) const;

    Zonotope minkowski_sum(const Zonotope& other) const;
    Zonotope linear_map(const Eigen::MatrixXd& m) const;
    Zonotope translate(const Eigen::VectorXd& v) const;

    /// Girard box reduction: keep the largest generators and replace the rest by
    /// their interval hull so the result has at most max_generators columns.
    Zonotope reduce(Eigen::Index max_generators) const;

    bool contains(const Eigen::VectorXd& point, double tol = kSetTolerance) const;

    /// Exact volume (area in 2-D) via the zonotope determinant sum; n <= 3.
    double volume() const;

private:
    Eigen::VectorXd center_;
    Eigen::MatrixXd generators_;
};

/// Exact emptiness test of a ∩ b for 2-D and 3-D zonotopes. Decides whether
/// c_b - c_a lies in the zonotope spanned by the combined generators; an
/// interval-hull overlap test short-circuits the separated case.
bool zono_intersects(const Zonotope& a, const Zonotope& b, double tol = kSetTolerance);

/// Decides r in { G b : b in [-1,1]^m } (centered zonotope membership).
bool centered_contains(const Eigen::MatrixXd& generators, const Eigen::VectorXd& r,
                       double tol = kSetTolerance);

}  // namespace rail::pz

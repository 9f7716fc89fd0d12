#include "rail/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rail::kin {

namespace {

void require_unit(const Eigen::Vector3d& w, const char* what) {
    if (!w.allFinite() || std::abs(w.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string(what) + ": rotation axis must be a unit vector");
    }
}

}  // namespace

KinematicChain::KinematicChain(std::vector<Joint> joints) : joints_(std::move(joints)) {
    if (joints_.empty()) throw std::invalid_argument("KinematicChain: need at least one joint");
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        const Joint& jt = joints_[j];
        require_unit(jt.axis, "KinematicChain");
        if (!(jt.accel_limit > 0.0)) throw std::invalid_argument("KinematicChain: accel limit must be positive");
        if (!(jt.velocity_limit > 0.0)) throw std::invalid_argument("KinematicChain: velocity limit must be positive");
        if (jt.link.dim() != 3) throw std::invalid_argument("KinematicChain: link volume must be 3-D");
        if (!jt.offset.allFinite()) throw std::invalid_argument("KinematicChain: non-finite offset");
    }
}

Eigen::VectorXd KinematicChain::accel_limits() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < size(); ++j) out[static_cast<Eigen::Index>(j)] = joints_[j].accel_limit;
    return out;
}

Eigen::VectorXd KinematicChain::velocity_limits() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < size(); ++j) out[static_cast<Eigen::Index>(j)] = joints_[j].velocity_limit;
    return out;
}

std::vector<pz::Interval> KinematicChain::position_limits() const {
    std::vector<pz::Interval> out;
    for (const auto& j : joints_) out.push_back(j.position_limits);
    return out;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
        -w.y(), w.x(), 0.0;
    return m;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector2d& p, const Eigen::Vector3d& w) {
    require_unit(w, "rodrigues");
    const Eigen::Matrix3d W = skew(w);
    return Eigen::Matrix3d::Identity() + p.y() * W + (1.0 - p.x()) * (W * W);
}

pz::Zonotope arc_box(double theta1, double theta2) {
    if (!std::isfinite(theta1) || !std::isfinite(theta2)) {
        throw std::invalid_argument("arc_box: non-finite angle");
    }
    if (theta2 < theta1) throw std::invalid_argument("arc_box: theta2 must not be below theta1");
    if (theta2 - theta1 >= M_PI) throw std::invalid_argument("arc_box: span must be below pi; subdivide");

    // Written in terms of the half-span so the sagitta keeps full precision for
    // tiny spans: p4 - p3 = 2 sin^2(h/2) u, (p2 - p1) / 2 = sin(h) u_perp.
    const double mid = 0.5 * (theta1 + theta2);
    const double h = 0.5 * (theta2 - theta1);
    const Eigen::Vector2d u(std::cos(mid), std::sin(mid));
    const Eigen::Vector2d u_perp(-u.y(), u.x());
    const double s = std::sin(0.5 * h);
    const double sagitta = 2.0 * s * s;

    const Eigen::Vector2d center = (1.0 - 0.5 * sagitta) * u;  // p5
    const Eigen::Vector2d chord_half = std::sin(h) * u_perp;
    const Eigen::Vector2d depth_half = 0.5 * sagitta * u;

    Eigen::MatrixXd g(2, 2);
    g << chord_half, depth_half;
    if (h == 0.0) return pz::Zonotope(Eigen::VectorXd(center));
    return {center, g};
}

pz::MatrixPolyZonotope rot_set(const pz::Interval& theta, const Eigen::Vector3d& w) {
    require_unit(w, "rot_set");
    const pz::Zonotope box = arc_box(theta.lo, theta.hi);
    const Eigen::Matrix3d W = skew(w);
    const Eigen::Matrix3d W2 = W * W;
    const Eigen::Vector2d c = box.center();
    const Eigen::Matrix3d constant = Eigen::Matrix3d::Identity() + c.y() * W + (1.0 - c.x()) * W2;
    if (box.num_generators() == 0) return pz::MatrixPolyZonotope(constant);

    // rot is affine in p, so each box generator maps to g2 W - g1 W^2.
    std::vector<Eigen::MatrixXd> gens;
    const auto m = box.num_generators();
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Vector2d g = box.generators().col(i);
        gens.emplace_back(g.y() * W - g.x() * W2);
    }
    const pz::IndeterminateId first = pz::allocate_ids(static_cast<std::size_t>(m));
    std::vector<pz::IndeterminateId> ids;
    for (Eigen::Index i = 0; i < m; ++i) ids.push_back(first + static_cast<pz::IndeterminateId>(i));
    return {constant, gens, pz::ExponentMatrix::Identity(m, m), ids};
}

std::vector<FramePose> frame_poses(const Eigen::VectorXd& q, const KinematicChain& chain) {
    if (q.size() != static_cast<Eigen::Index>(chain.size())) {
        throw std::invalid_argument("frame_poses: configuration size does not match the chain");
    }
    std::vector<FramePose> poses;
    poses.reserve(chain.size());
    FramePose prev;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const Joint& jt = chain.joint(j);
        const double qj = q[static_cast<Eigen::Index>(j)];
        FramePose pose;
        pose.origin = prev.origin + prev.rotation * jt.offset;
        pose.rotation = prev.rotation * rodrigues({std::cos(qj), std::sin(qj)}, jt.axis);
        poses.push_back(pose);
        prev = pose;
    }
    return poses;
}

std::vector<pz::Zonotope> forward_occupancy(const Configuration& q, const KinematicChain& chain) {
    if (!q.q.allFinite()) throw std::invalid_argument("forward_occupancy: non-finite configuration");
    if (q.q.size() != static_cast<Eigen::Index>(chain.size())) {
        throw std::invalid_argument("forward_occupancy: configuration size does not match the chain");
    }
    for (std::size_t j = 0; j < chain.size(); ++j) {
        if (!chain.joint(j).position_limits.contains(q.q[static_cast<Eigen::Index>(j)], 1e-12)) {
            throw std::invalid_argument("forward_occupancy: joint " + std::to_string(j) + " outside its limits");
        }
    }
    const auto poses = frame_poses(q.q, chain);
    std::vector<pz::Zonotope> out;
    out.reserve(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) {
        out.push_back(chain.joint(j).link.linear_map(poses[j].rotation).translate(poses[j].origin));
    }
    return out;
}

}  // namespace rail::kin

#include "rail/environments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rail::env {

bool obb_overlap(const Obb& a, const Obb& b) {
    const auto reach = [](const Obb& o, const Eigen::Vector3d& n) {
        return o.half[0] * std::abs(n.dot(o.axes.col(0))) + o.half[1] * std::abs(n.dot(o.axes.col(1))) +
               o.half[2] * std::abs(n.dot(o.axes.col(2)));
    };
    const Eigen::Vector3d d = b.center - a.center;
    const auto separated = [&](const Eigen::Vector3d& n) {
        if (n.squaredNorm() < 1e-18) return false;  // parallel edges; covered by the face axes
        return std::abs(d.dot(n)) > reach(a, n) + reach(b, n);
    };
    for (int i = 0; i < 3; ++i) {
        if (separated(a.axes.col(i)) || separated(b.axes.col(i))) return false;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (separated(a.axes.col(i).cross(b.axes.col(j)))) return false;
    return true;
}

std::vector<Eigen::Isometry3d> arm_frames(const kin::KinematicChain& chain, const Eigen::VectorXd& q) {
    if (q.size() != static_cast<Eigen::Index>(chain.size())) throw std::invalid_argument("arm_frames: size mismatch");
    std::vector<Eigen::Isometry3d> frames;
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    for (std::size_t j = 0; j < chain.size(); ++j) {
        t = t * Eigen::Translation3d(chain.joint(j).offset) *
            Eigen::AngleAxisd(q[static_cast<Eigen::Index>(j)], chain.joint(j).axis.normalized());
        frames.push_back(t);
    }
    return frames;
}

std::vector<Obb> arm_link_boxes(const kin::KinematicChain& chain, const Eigen::VectorXd& q) {
    const auto frames = arm_frames(chain, q);
    std::vector<Obb> boxes;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const pz::Zonotope& z = chain.joint(j).link;
        if (z.dim() != 3 || z.num_generators() > 3) throw std::invalid_argument("arm_link_boxes: link is not a box");
        Obb b;
        b.center = frames[j] * Eigen::Vector3d(z.center());
        b.axes = frames[j].linear();
        b.half.setZero();
        // Zero-width directions get any orthonormal completion.
        Eigen::Matrix3d local = Eigen::Matrix3d::Identity();
        for (Eigen::Index g = 0; g < z.num_generators(); ++g) {
            const Eigen::Vector3d col = z.generators().col(g);
            b.half[g] = col.norm();
            if (b.half[g] > 0) local.col(g) = col / b.half[g];
        }
        if (z.num_generators() == 3) b.axes = frames[j].linear() * local;
        boxes.push_back(b);
    }
    return boxes;
}

Eigen::Vector3d arm_tool(const ArmSpec& spec, const Eigen::VectorXd& q) {
    return arm_frames(spec.chain, q).back() * spec.tool;
}

Scene arm_scene(const ArmSpec& spec) {
    Scene s;
    for (const auto& b : spec.obstacles) {
        s.obstacles.push_back({pz::Zonotope::oriented_box(b.center, b.rotation, b.half), true, b.name});
    }
    s.position_limits = spec.chain.position_limits();
    const Eigen::VectorXd v = spec.chain.velocity_limits();
    for (Eigen::Index j = 0; j < v.size(); ++j) s.velocity_limits.push_back({-v[j], v[j]});
    s.goal = pz::Zonotope::box(arm_tool(spec, spec.goal), Eigen::Vector3d::Constant(spec.goal_tolerance));
    return s;
}

ArmModel arm_model(const ArmSpec& spec) { return ArmModel(spec.chain, spec.dt); }

ArmEnv::ArmEnv(ArmSpec spec, Eigen::VectorXd q0) : spec_(std::move(spec)) {
    if (q0.size() != static_cast<Eigen::Index>(spec_.chain.size())) throw std::invalid_argument("ArmEnv: start size");
    if (spec_.substeps < 1) throw std::invalid_argument("ArmEnv: need at least one substep");
    state_ = {std::move(q0), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec_.chain.size()))};
    for (const auto& b : spec_.obstacles) obstacles_.push_back({b.center, b.rotation, b.half});
}

int ArmEnv::first_contact(const Eigen::VectorXd& q) const {
    const auto links = arm_link_boxes(spec_.chain, q);
    for (std::size_t l = 0; l < links.size(); ++l)
        for (std::size_t o = 0; o < obstacles_.size(); ++o)
            if (obb_overlap(links[l], obstacles_[o])) return static_cast<int>(l * obstacles_.size() + o);
    return -1;
}

StepEvent ArmEnv::step(const Action& a) {
    const auto n = static_cast<Eigen::Index>(spec_.chain.size());
    if (a.size() != n || !a.allFinite()) throw std::invalid_argument("ArmEnv: command must be finite joint angles");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!spec_.chain.joint(static_cast<std::size_t>(j)).position_limits.contains(a[j], 1e-9)) {
            throw std::invalid_argument("ArmEnv: command outside joint " + std::to_string(j) + " limits");
        }
    }
    StepEvent ev;
    const Eigen::VectorXd q0 = state_.position;
    const Eigen::VectorXd v = (a - q0) / spec_.dt;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(v[j]) > spec_.chain.joint(static_cast<std::size_t>(j)).velocity_limit * (1.0 + 1e-9)) {
            ev.limit = true;
            ev.substep = 1;
            ev.detail = "joint " + std::to_string(j) + " velocity";
            break;
        }
    }
    for (int s = 1; s <= spec_.substeps; ++s) {
        const Eigen::VectorXd q = q0 + (a - q0) * (static_cast<double>(s) / spec_.substeps);
        const int hit = first_contact(q);
        if (hit >= 0) {
            ev.collision = true;
            const auto m = obstacles_.size();
            ev.detail = "link " + std::to_string(static_cast<std::size_t>(hit) / m) + " touches " +
                        spec_.obstacles[static_cast<std::size_t>(hit) % m].name;
            if (ev.substep < 0 || s < ev.substep) ev.substep = s;
            break;
        }
    }
    state_ = {a, v};
    return ev;
}

bool ArmEnv::goal_reached() const {
    return (arm_tool(spec_, state_.position) - arm_tool(spec_, spec_.goal)).norm() <= spec_.goal_tolerance;
}

Eigen::VectorXd sample_arm_start(const ArmSpec& spec, std::mt19937_64& rng) {
    const ArmEnv probe(spec, spec.start);
    std::uniform_real_distribution<double> noise(-spec.start_noise, spec.start_noise);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::VectorXd q = spec.start;
        for (Eigen::Index j = 0; j < q.size(); ++j) {
            const pz::Interval& lim = spec.chain.joint(static_cast<std::size_t>(j)).position_limits;
            q[j] = std::clamp(q[j] + noise(rng), lim.lo, lim.hi);
        }
        if (probe.first_contact(q) < 0) return q;
    }
    throw std::runtime_error("sample_arm_start: no contact-free start near the nominal configuration");
}

}  // namespace rail::env

#include "rail/collision.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rail {

namespace {

constexpr double kLimitTol = 1e-12;

bool within(const std::vector<pz::Interval>& limits, std::size_t j, const pz::Interval& box) {
    return limits.empty() || limits[j].contains(box, kLimitTol);
}

struct Hull {
    Eigen::VectorXd lo, hi;
};

Hull hull_of(const pz::Zonotope& z) {
    const Eigen::VectorXd r = z.half_widths();
    return {z.center() - r, z.center() + r};
}

bool hulls_overlap(const Hull& a, const Hull& b) {
    return ((a.lo.array() <= b.hi.array()) && (b.lo.array() <= a.hi.array())).all();
}

// Per-partition limit and sweep checks shared by check_head and verify_chain.
SafetyVerdict check_limits(const std::vector<std::vector<pz::Interval>>& joints,
                           const std::vector<std::vector<pz::Interval>>& velocity, const Scene& scene) {
    for (std::size_t i = 0; i < joints.size(); ++i) {
        for (std::size_t j = 0; j < joints[i].size(); ++j) {
            if (!(joints[i][j].width() < M_PI)) {
                return SafetyVerdict::violation(SafetyVerdict::Limit::Sweep, i, j);
            }
            if (!within(scene.position_limits, j, joints[i][j])) {
                return SafetyVerdict::violation(SafetyVerdict::Limit::Position, i, j);
            }
            if (i < velocity.size() && !within(scene.velocity_limits, j, velocity[i][j])) {
                return SafetyVerdict::violation(SafetyVerdict::Limit::Velocity, i, j);
            }
        }
    }
    return {};
}

std::optional<SafetyVerdict> first_hit(std::size_t partition, const std::vector<pz::Zonotope>& links,
                                       const Scene& scene, const std::vector<Hull>& obstacle_hulls) {
    for (std::size_t j = 0; j < links.size(); ++j) {
        const Hull h = hull_of(links[j]);
        for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
            if (!scene.obstacles[o].active || !hulls_overlap(h, obstacle_hulls[o])) continue;
            if (pz::zono_intersects(links[j], scene.obstacles[o].shape)) {
                return SafetyVerdict::unsafe(partition, j, o);
            }
        }
    }
    return std::nullopt;
}

std::vector<Hull> obstacle_hulls(const Scene& scene) {
    std::vector<Hull> out;
    out.reserve(scene.obstacles.size());
    for (const auto& o : scene.obstacles) out.push_back(hull_of(o.shape));
    return out;
}

}  // namespace

void Scene::validate() const {
    for (const auto& o : obstacles) {
        if (!o.shape.center().allFinite() || !o.shape.generators().allFinite()) {
            throw std::invalid_argument("Scene: obstacle '" + o.name + "' is not finite");
        }
    }
    if (goal.dim() == 0) throw std::invalid_argument("Scene: goal region is empty");
    if (speed_limit && !(*speed_limit > 0.0)) throw std::invalid_argument("Scene: speed limit must be positive");
}

SafetyVerdict SafetyVerdict::unsafe(std::size_t partition, std::size_t link, std::size_t obstacle) {
    SafetyVerdict v;
    v.kind = Kind::Unsafe;
    v.partition = partition;
    v.link = link;
    v.obstacle = obstacle;
    return v;
}

SafetyVerdict SafetyVerdict::violation(Limit limit, std::size_t partition, std::size_t axis) {
    SafetyVerdict v;
    v.kind = Kind::LimitViolation;
    v.limit = limit;
    v.partition = partition;
    v.axis = axis;
    return v;
}

const char* to_string(SafetyVerdict::Kind kind) {
    switch (kind) {
        case SafetyVerdict::Kind::Safe: return "safe";
        case SafetyVerdict::Kind::Unsafe: return "unsafe";
        case SafetyVerdict::Kind::LimitViolation: return "limit_violation";
    }
    return "?";
}

const char* to_string(SafetyVerdict::Limit limit) {
    switch (limit) {
        case SafetyVerdict::Limit::None: return "none";
        case SafetyVerdict::Limit::Position: return "position";
        case SafetyVerdict::Limit::Velocity: return "velocity";
        case SafetyVerdict::Limit::Sweep: return "sweep";
    }
    return "?";
}

std::string SafetyVerdict::describe() const {
    std::ostringstream s;
    s << to_string(kind);
    if (kind == Kind::Unsafe) s << "(partition " << partition << ", link " << link << ", obstacle " << obstacle << ")";
    if (kind == Kind::LimitViolation) s << "(" << to_string(limit) << ", partition " << partition << ", axis " << axis << ")";
    return s.str();
}

SafetyVerdict check_head(const SweptOccupancy& swept, const Scene& scene) {
    if (const auto v = check_limits(swept.joint_boxes, swept.velocity_boxes, scene); !v.safe()) return v;
    const auto hulls = obstacle_hulls(scene);
    for (std::size_t i = 0; i < swept.enclosures.size(); ++i) {
        if (auto hit = first_hit(i, swept.enclosures[i], scene, hulls)) return *hit;
    }
    return {};
}

SafetyVerdict verify_chain(const std::vector<CellBounds>& cells, const kin::KinematicChain& chain,
                           const Scene& scene, const SweptOptions& options, SweptOccupancy* keep) {
    std::vector<std::vector<pz::Interval>> joints, velocity;
    for (const auto& c : cells) {
        joints.push_back(c.joints);
        velocity.push_back(c.velocity);
    }
    if (const auto v = check_limits(joints, velocity, scene); !v.safe()) return v;

    const auto hulls = obstacle_hulls(scene);
    SweptOccupancy built;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto links = partition_occupancy(cells[i].joints, chain, options);
        std::vector<pz::Zonotope> boxes;
        boxes.reserve(links.size());
        for (const auto& l : links) boxes.push_back(pz::pz_enclose(l).reduce(options.enclosure_generators));
        if (auto hit = first_hit(i, boxes, scene, hulls)) return *hit;
        if (keep) {
            built.partition_times.push_back(cells[i].time);
            built.joint_boxes.push_back(cells[i].joints);
            built.velocity_boxes.push_back(cells[i].velocity);
            built.enclosures.push_back(std::move(boxes));
            if (options.keep_poly) built.links.push_back(std::move(links));
        }
    }
    if (keep) *keep = std::move(built);
    return {};
}

void StateTrajectory::validate() const {
    if (times.empty()) throw std::invalid_argument("StateTrajectory: no samples");
    if (position.size() != times.size() || velocity.size() != times.size()) {
        throw std::invalid_argument("StateTrajectory: times, position and velocity differ in length");
    }
    const Eigen::Index n = position.front().size();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0 && !(times[k] > times[k - 1])) throw std::invalid_argument("StateTrajectory: times must increase");
        if (position[k].size() != n || velocity[k].size() != n) {
            throw std::invalid_argument("StateTrajectory: inconsistent dimension");
        }
        if (!position[k].allFinite() || !velocity[k].allFinite()) {
            throw std::invalid_argument("StateTrajectory: non-finite sample");
        }
    }
}

std::vector<pz::Zonotope> point_swept_boxes(const StateTrajectory& traj, std::size_t cells,
                                            std::vector<pz::Interval>* cell_times) {
    traj.validate();
    if (cells == 0) throw std::invalid_argument("point_swept_boxes: need at least one cell");
    const std::size_t steps = traj.size() - 1;
    const Eigen::Index n = traj.position.front().size();

    // Cell boundaries as (step, fraction) pairs turned into times.
    std::vector<double> bounds{traj.times.front()};
    if (steps == 0) {
        bounds.push_back(traj.times.front());
    } else if (steps % cells == 0) {
        const std::size_t per = steps / cells;
        for (std::size_t c = 1; c <= cells; ++c) bounds.push_back(traj.times[c * per]);
    } else if (cells % steps == 0) {
        const std::size_t parts = cells / steps;
        for (std::size_t k = 0; k < steps; ++k) {
            const double a = traj.times[k], h = traj.times[k + 1] - a;
            for (std::size_t p = 1; p < parts; ++p) bounds.push_back(a + h * static_cast<double>(p) / static_cast<double>(parts));
            bounds.push_back(traj.times[k + 1]);
        }
    } else {
        for (std::size_t k = 1; k <= steps; ++k) bounds.push_back(traj.times[k]);
    }

    std::vector<pz::Zonotope> boxes;
    if (cell_times) cell_times->clear();
    std::size_t k = 0;
    for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
        const double ta = bounds[c], tb = bounds[c + 1];
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
        Eigen::VectorXd hi = -lo;
        const auto include = [&](const Eigen::VectorXd& p) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        };
        if (steps == 0) include(traj.position[0]);
        while (k < steps && traj.times[k + 1] <= ta) ++k;
        for (std::size_t s = k; s < steps && traj.times[s] < tb; ++s) {
            const double t0 = traj.times[s], h = traj.times[s + 1] - t0;
            const Eigen::VectorXd& p0 = traj.position[s];
            const Eigen::VectorXd& v0 = traj.velocity[s];
            const Eigen::VectorXd a = (traj.velocity[s + 1] - v0) / h;
            const double u0 = std::max(ta, t0) - t0, u1 = std::min(tb, traj.times[s + 1]) - t0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto at = [&](double u) { return p0[j] + v0[j] * u + 0.5 * a[j] * u * u; };
                double l = std::min(at(u0), at(u1)), r = std::max(at(u0), at(u1));
                if (a[j] != 0.0) {
                    const double u = -v0[j] / a[j];
                    if (u > u0 && u < u1) {
                        l = std::min(l, at(u));
                        r = std::max(r, at(u));
                    }
                }
                lo[j] = std::min(lo[j], l);
                hi[j] = std::max(hi[j], r);
            }
            if (u0 == 0.0) include(p0);
            if (u1 == h) include(traj.position[s + 1]);
        }
        boxes.push_back(pz::Zonotope::box(0.5 * (lo + hi), 0.5 * (hi - lo)));
        if (cell_times) cell_times->push_back({ta, tb});
    }
    return boxes;
}

SafetyVerdict check_state_traj(const StateTrajectory& traj, const Scene& scene, double radius, std::size_t cells) {
    if (!(radius >= 0.0)) throw std::invalid_argument("check_state_traj: radius must be nonnegative");
    std::vector<pz::Interval> times;
    const auto boxes = point_swept_boxes(traj, cells, &times);
    const auto cell_of = [&](double t) {
        std::size_t c = 0;
        while (c + 1 < times.size() && times[c].hi < t) ++c;
        return c;
    };

    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Eigen::VectorXd& v = traj.velocity[k];
        if (scene.speed_limit && v.norm() > *scene.speed_limit + kLimitTol) {
            return SafetyVerdict::violation(SafetyVerdict::Limit::Velocity, cell_of(traj.times[k]), 0);
        }
        for (Eigen::Index j = 0; j < v.size() && !scene.velocity_limits.empty(); ++j) {
            if (!scene.velocity_limits[static_cast<std::size_t>(j)].contains(v[j], kLimitTol)) {
                return SafetyVerdict::violation(SafetyVerdict::Limit::Velocity, cell_of(traj.times[k]),
                                                static_cast<std::size_t>(j));
            }
        }
    }
    for (std::size_t c = 0; c < boxes.size(); ++c) {
        const auto hull = boxes[c].interval_hull();
        for (std::size_t j = 0; j < hull.size(); ++j) {
            if (!within(scene.position_limits, j, hull[j])) {
                return SafetyVerdict::violation(SafetyVerdict::Limit::Position, c, j);
            }
        }
    }

    const auto hulls = obstacle_hulls(scene);
    std::vector<pz::Zonotope> robot;
    robot.reserve(boxes.size());
    for (const auto& b : boxes) {
        robot.push_back(pz::Zonotope::box(b.center(), b.half_widths().array() + radius));
    }
    for (std::size_t c = 0; c < robot.size(); ++c) {
        if (auto hit = first_hit(c, {robot[c]}, scene, hulls)) return *hit;
    }
    return {};
}

}  // namespace rail

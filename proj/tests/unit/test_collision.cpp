#include <doctest.h>

#include "rail/collision.hpp"
#include "unit/arm_support.hpp"

using namespace rail;
using rail::testing::uniform;

namespace {

Scene open_scene(std::size_t joints) {
    Scene s;
    s.goal = pz::Zonotope(Eigen::Vector3d::Zero());
    s.position_limits.assign(joints, {-3.0, 3.0});
    s.velocity_limits.assign(joints, {-1.5, 1.5});
    return s;
}

Obstacle box_obstacle(const Eigen::Vector3d& c, const Eigen::Vector3d& h, std::string name = "box") {
    return {pz::Zonotope::box(c, h), true, std::move(name)};
}

std::vector<CellBounds> rest_cells(const Eigen::VectorXd& q, int m) {
    std::vector<CellBounds> cells;
    for (int i = 0; i < m; ++i) {
        CellBounds c{{0.1 * i, 0.1 * (i + 1)}, {}, {}};
        for (Eigen::Index j = 0; j < q.size(); ++j) {
            c.joints.push_back(pz::Interval::point(q[j]));
            c.velocity.push_back(pz::Interval::point(0.0));
        }
        cells.push_back(c);
    }
    return cells;
}

JointTrajectory sample_bang(const rail::testing::BangTrajectory& b, double duration, int samples) {
    JointTrajectory traj;
    for (int k = 0; k <= samples; ++k) {
        const double t = duration * k / samples;
        Eigen::VectorXd q, v;
        b.state(t, q, v);
        traj.times.push_back(t);
        traj.q.push_back(q);
        traj.qd.push_back(v);
    }
    return traj;
}

bool point_in_box(const Eigen::Vector3d& p, const Eigen::Vector3d& c, const Eigen::Vector3d& h) {
    return ((p - c).cwiseAbs().array() <= h.array()).all();
}

StateTrajectory straight(const Eigen::Vector2d& p0, const Eigen::Vector2d& v, int steps, double dt) {
    StateTrajectory t;
    for (int k = 0; k <= steps; ++k) {
        t.times.push_back(k * dt);
        t.position.push_back(p0 + v * (k * dt));
        t.velocity.push_back(v);
    }
    return t;
}

}  // namespace

TEST_CASE("check_head: far obstacle is safe, obstacle around the base is not") {
    const kin::KinematicChain chain = rail::testing::seven_link_chain();
    Scene scene = open_scene(7);
    const auto cells = rest_cells(Eigen::VectorXd::Zero(7), 4);
    scene.obstacles.push_back(box_obstacle(Eigen::Vector3d(10, 0, 0), Eigen::Vector3d::Constant(0.5)));
    CHECK(check_head(swept_occupancy(cells, chain), scene).safe());
    scene.obstacles.push_back(box_obstacle(Eigen::Vector3d(0, 0, 0.15), Eigen::Vector3d::Constant(0.3), "base"));
    const SafetyVerdict v = check_head(swept_occupancy(cells, chain), scene);
    CHECK(v.kind == SafetyVerdict::Kind::Unsafe);
    CHECK(v.partition == 0);
    CHECK(v.link == 0);
    CHECK(v.obstacle == 1);
}

TEST_CASE("check_head: deactivated obstacles are ignored") {
    const kin::KinematicChain chain = rail::testing::seven_link_chain();
    Scene scene = open_scene(7);
    scene.obstacles.push_back(box_obstacle(Eigen::Vector3d(0, 0, 0.15), Eigen::Vector3d::Constant(0.3)));
    scene.obstacles.back().active = false;
    CHECK(check_head(swept_occupancy(rest_cells(Eigen::VectorXd::Zero(7), 2), chain), scene).safe());
}

TEST_CASE("check_head: grazing the enclosure but not the true sweep is reported unsafe") {
    kin::Joint j;
    j.link = pz::Zonotope(Eigen::Vector3d(0.5, 0, 0), Eigen::Vector3d(0.5, 0, 0));
    const kin::KinematicChain chain({j});
    const auto swept = swept_occupancy({CellBounds{{0, 1}, {{0.0, M_PI / 2}}, {{0, 0}}}}, chain);
    // The outer corner of the enclosure near (1, 1) is far from the quarter disc.
    const pz::Zonotope& z = swept.enclosures[0][0];
    Eigen::Vector3d corner = z.center();
    for (Eigen::Index g = 0; g < z.num_generators(); ++g) {
        const Eigen::Vector3d col = z.generators().col(g);
        corner += (col.dot(Eigen::Vector3d(1, 1, 0)) >= 0 ? 1.0 : -1.0) * col;
    }
    REQUIRE(corner.head<2>().norm() > 1.05);
    Scene scene = open_scene(1);
    scene.position_limits.clear();
    scene.velocity_limits.clear();
    const Eigen::Vector3d h = Eigen::Vector3d::Constant(0.01);
    scene.obstacles.push_back(box_obstacle(corner + Eigen::Vector3d(0.005, 0.005, 0), h));
    CHECK(check_head(swept, scene).kind == SafetyVerdict::Kind::Unsafe);
    // ground truth: the segment never reaches the box
    for (int i = 0; i <= 1000; ++i) {
        const double t = M_PI / 2 * i / 1000.0;
        for (int s = 0; s <= 100; ++s) {
            const Eigen::Vector3d p(s / 100.0 * std::cos(t), s / 100.0 * std::sin(t), 0.0);
            CHECK_FALSE(point_in_box(p, corner + Eigen::Vector3d(0.005, 0.005, 0), h));
        }
    }
}

TEST_CASE("check_head: limits are enforced per cell") {
    const kin::KinematicChain chain = rail::testing::seven_link_chain();
    Scene scene = open_scene(7);
    auto cells = rest_cells(Eigen::VectorXd::Zero(7), 3);
    cells[1].joints[2] = {2.9, 3.1};
    SafetyVerdict v = verify_chain(cells, chain, scene);
    CHECK(v.kind == SafetyVerdict::Kind::LimitViolation);
    CHECK(v.limit == SafetyVerdict::Limit::Position);
    CHECK(v.partition == 1);
    CHECK(v.axis == 2);
    cells = rest_cells(Eigen::VectorXd::Zero(7), 3);
    cells[2].velocity[4] = {0.0, 1.6};
    v = verify_chain(cells, chain, scene);
    CHECK(v.limit == SafetyVerdict::Limit::Velocity);
    CHECK(v.axis == 4);
}

TEST_CASE("verify_chain agrees with check_head on random scenes") {
    const kin::KinematicChain chain = rail::testing::seven_link_chain();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Scene scene = open_scene(7);
        scene.position_limits.clear();
        scene.velocity_limits.clear();
        for (int o = 0; o < 4; ++o) {
            scene.obstacles.push_back(box_obstacle(rail::testing::random_vector(rng, 3, 0.9),
                                                   Eigen::Vector3d::Constant(uniform(rng, 0.02, 0.15))));
        }
        const auto bang = rail::testing::random_bang(rng, 7, 0.8, 3.0, 1.0);
        const auto cells = joint_bounds(sample_bang(bang, 0.8, 16), 0.1, chain);
        SweptOccupancy kept;
        const SafetyVerdict lazy = verify_chain(cells, chain, scene, {}, &kept);
        const SafetyVerdict full = check_head(swept_occupancy(cells, chain), scene);
        CHECK(lazy.kind == full.kind);
        CHECK(lazy.partition == full.partition);
        CHECK(lazy.link == full.link);
        CHECK(lazy.obstacle == full.obstacle);
        if (lazy.safe()) CHECK(kept.num_partitions() == cells.size());
    }
}

TEST_CASE("check_head: no false negatives against dense sampling, monotone in obstacles") {
    const kin::KinematicChain chain = rail::testing::seven_link_chain();
    std::mt19937_64 rng(77);
    int safe_runs = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Scene scene = open_scene(7);
        scene.position_limits.clear();
        scene.velocity_limits.clear();
        std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> boxes;
        for (int o = 0; o < 3; ++o) {
            const Eigen::Vector3d c = rail::testing::random_vector(rng, 3, 0.8) + Eigen::Vector3d(0, 0, 0.4);
            const Eigen::Vector3d h = Eigen::Vector3d::Constant(uniform(rng, 0.03, 0.12));
            boxes.emplace_back(c, h);
            scene.obstacles.push_back(box_obstacle(c, h));
        }
        const auto bang = rail::testing::random_bang(rng, 7, 0.8, 3.0, 0.8);
        const auto cells = joint_bounds(sample_bang(bang, 0.8, 16), 0.1, chain);
        const SafetyVerdict v = verify_chain(cells, chain, scene);

        Scene more = scene;
        more.obstacles.push_back(box_obstacle(rail::testing::random_vector(rng, 3, 0.8), Eigen::Vector3d::Constant(0.1)));
        if (!v.safe()) CHECK_FALSE(verify_chain(cells, chain, more).safe());
        if (!v.safe()) continue;
        ++safe_runs;
        for (int s = 0; s < 1000; ++s) {
            const double t = 0.8 * s / 999.0;
            Eigen::VectorXd q, qd;
            bang.state(t, q, qd);
            const std::size_t link = static_cast<std::size_t>(s % 7);
            const auto& body = chain.joint(link).link;
            for (int corner = 0; corner < 8; ++corner) {
                Eigen::Vector3d b;
                for (int d = 0; d < 3; ++d) b[d] = (corner >> d & 1) ? 1.0 : -1.0;
                const Eigen::Vector3d x = rail::testing::fk_frame(chain, q, link) * Eigen::Vector3d(body.evaluate(b));
                for (const auto& [c, h] : boxes) CHECK_FALSE(point_in_box(x, c, h));
            }
        }
    }
    CHECK(safe_runs > 5);
}

TEST_CASE("check_state_traj: stationary, wall crossing and speed limit") {
    Scene scene;
    scene.goal = pz::Zonotope(Eigen::Vector2d(5, 5));
    scene.speed_limit = 5.0;
    scene.obstacles.push_back({pz::Zonotope::box(Eigen::Vector2d(2.5, 0.5), Eigen::Vector2d(0.5, 0.5)), true, "wall"});
    CHECK(check_state_traj(straight({0.5, 0.5}, {0, 0}, 8, 0.05), scene, 0.1, 8).safe());
    const SafetyVerdict through = check_state_traj(straight({0.5, 0.5}, {4, 0}, 16, 0.05), scene, 0.1, 8);
    CHECK(through.kind == SafetyVerdict::Kind::Unsafe);
    CHECK(through.obstacle == 0);
    const SafetyVerdict fast = check_state_traj(straight({0.5, 0.5}, {5.1, 0}, 2, 0.05), scene, 0.1, 2);
    CHECK(fast.kind == SafetyVerdict::Kind::LimitViolation);
    CHECK(fast.limit == SafetyVerdict::Limit::Velocity);
}

TEST_CASE("point_swept_boxes: exact hull of constant-acceleration motion") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        StateTrajectory t;
        Eigen::Vector2d p = rail::testing::random_vector(rng, 2);
        Eigen::Vector2d v = rail::testing::random_vector(rng, 2, 2.0);
        const double dt = 0.05;
        std::vector<Eigen::Vector2d> accel;
        const int steps = 8;
        for (int k = 0; k <= steps; ++k) {
            t.times.push_back(k * dt);
            t.position.push_back(p);
            t.velocity.push_back(v);
            const Eigen::Vector2d a = rail::testing::random_vector(rng, 2, 30.0);
            accel.push_back(a);
            p += v * dt + 0.5 * a * dt * dt;
            v += a * dt;
        }
        for (std::size_t cells : {std::size_t{2}, std::size_t{8}, std::size_t{16}, std::size_t{3}}) {
            std::vector<pz::Interval> times;
            const auto boxes = point_swept_boxes(t, cells, &times);
            Eigen::MatrixXd reached_lo = Eigen::MatrixXd::Constant(2, static_cast<Eigen::Index>(boxes.size()), 1e9);
            Eigen::MatrixXd reached_hi = -reached_lo;
            for (int k = 0; k < steps; ++k) {
                for (int s = 0; s <= 400; ++s) {
                    const double u = dt * s / 400.0, time = k * dt + u;
                    const Eigen::Vector2d x = t.position[static_cast<std::size_t>(k)] +
                                              t.velocity[static_cast<std::size_t>(k)] * u +
                                              0.5 * accel[static_cast<std::size_t>(k)] * u * u;
                    for (std::size_t c = 0; c < boxes.size(); ++c) {
                        if (time < times[c].lo - 1e-12 || time > times[c].hi + 1e-12) continue;
                        CHECK(boxes[c].contains(x, 1e-12));
                        const auto ci = static_cast<Eigen::Index>(c);
                        reached_lo.col(ci) = reached_lo.col(ci).cwiseMin(x);
                        reached_hi.col(ci) = reached_hi.col(ci).cwiseMax(x);
                    }
                }
            }
            for (std::size_t c = 0; c < boxes.size(); ++c) {
                const auto ci = static_cast<Eigen::Index>(c);
                const Eigen::VectorXd r = boxes[c].half_widths();
                CHECK(((boxes[c].center() - r) - reached_lo.col(ci)).cwiseAbs().maxCoeff() <= 1e-4);
                CHECK(((boxes[c].center() + r) - reached_hi.col(ci)).cwiseAbs().maxCoeff() <= 1e-4);
            }
        }
    }
}

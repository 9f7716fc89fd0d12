#include <doctest.h>

#include <random>

#include "rail/environments.hpp"
#include "rail/safety_filter.hpp"

using namespace rail;

namespace {

constexpr double kDt = 0.05;

PointMassModel disc_model() { return PointMassModel(2, kDt, Eigen::Vector2d(4.0, 4.0), 0.1); }

Scene corridor_scene() {
    // Corridor y in [0, 1] along x; end wall face at x = 3.
    Scene s;
    s.goal = pz::Zonotope(Eigen::Vector2d(9, 0.5));
    s.speed_limit = 1.5;
    s.obstacles.push_back({pz::Zonotope::box(Eigen::Vector2d(5, -0.5), Eigen::Vector2d(5, 0.5)), true, "floor"});
    s.obstacles.push_back({pz::Zonotope::box(Eigen::Vector2d(5, 1.5), Eigen::Vector2d(5, 0.5)), true, "ceiling"});
    s.obstacles.push_back({pz::Zonotope::box(Eigen::Vector2d(3.5, 0.5), Eigen::Vector2d(0.5, 0.5)), true, "end"});
    return s;
}

Plan constant_plan(const Eigen::Vector2d& a, std::size_t n) {
    Plan p;
    p.dt = kDt;
    p.actions.assign(n, a);
    return p;
}

FilterConfig small_config() {
    FilterConfig c;
    c.ta = 8;
    c.tp = 16;
    c.partitions = 8;
    return c;
}

// Ground truth for the corridor: exact constant-acceleration replay against the walls.
bool corridor_dense_safe(State s, const std::vector<Action>& actions) {
    for (const Action& a : actions) {
        for (int i = 0; i <= 100; ++i) {
            const double u = kDt * i / 100.0;
            const Eigen::Vector2d p = s.position + s.velocity * u + 0.5 * a * u * u;
            if (p.y() - 0.1 <= 0.0 || p.y() + 0.1 >= 1.0 || p.x() + 0.1 >= 3.0) return false;
        }
        s = {s.position + s.velocity * kDt + 0.5 * a * kDt * kDt, s.velocity + a * kDt};
    }
    return true;
}

class FixedPolicy final : public PolicyPort {
public:
    explicit FixedPolicy(Eigen::Vector2d a) : a_(std::move(a)) {}
    Plan plan(const Observation&, double time, std::size_t horizon) override {
        Plan p = constant_plan(a_, horizon);
        p.t0 = time;
        return p;
    }
    std::string name() const override { return "fixed"; }

private:
    Eigen::Vector2d a_;
};

env::MazeSpec open_maze() {
    env::MazeSpec m;
    m.layout = env::MazeLayout({"#######", "#.....#", "#.....#", "#.....#", "#######"});
    m.goal = {2, 5};
    return m;
}

env::MazeSpec walled_maze() {
    env::MazeSpec m;
    m.layout = env::MazeLayout({"########", "#..##..#", "#..#...#", "##...###", "#..#...#", "#.#..#.#",
                                "#...#..#", "########"});
    m.goal = {6, 6};
    return m;
}

EpisodeLog run_maze(const env::MazeSpec& spec, env::PolicyKind kind, const State& start, Mode mode,
                    std::size_t max_steps, std::uint64_t seed = 7) {
    env::MazeEnv environment(spec, start);
    auto policy = env::make_maze_policy(kind, spec, start, seed, max_steps);
    const PointMassModel model = env::maze_model(spec);
    FilterConfig cfg = small_config();
    cfg.mode = mode;
    cfg.max_steps = max_steps;
    return rail_loop(environment, *policy, model, env::maze_scene(spec), cfg);
}

}  // namespace

TEST_CASE("predict_state: hold keeps a constant state") {
    const PointMassModel model = disc_model();
    const State x{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero()};
    const auto states = predict_state(model, x, std::vector<Action>(5, Eigen::Vector2d::Zero()));
    REQUIRE(states.size() == 6);
    for (const auto& s : states) {
        CHECK(s.position.isApprox(x.position, 0.0));
        CHECK(s.velocity.isZero(0.0));
    }
    CHECK_THROWS_AS(predict_state(model, x, {}), std::invalid_argument);
}

TEST_CASE("predict_state: a ramp of desired angles gives constant finite-difference velocity") {
    kin::Joint joint;
    joint.link = pz::Zonotope::box(Eigen::Vector3d(0, 0, 0.1), Eigen::Vector3d(0.02, 0.02, 0.1));
    const ArmModel model(kin::KinematicChain({joint}), kDt);
    const State x{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Zero(1)};
    std::vector<Action> ramp;
    for (int k = 1; k <= 6; ++k) ramp.push_back(Eigen::VectorXd::Constant(1, 0.2 + 0.01 * k));
    const auto states = predict_state(model, x, ramp);
    REQUIRE(states.size() == 7);
    for (std::size_t k = 1; k < states.size(); ++k) {
        CHECK(states[k].position[0] == doctest::Approx(0.2 + 0.01 * static_cast<double>(k)).epsilon(1e-14));
        CHECK(states[k].velocity[0] == doctest::Approx(0.2).epsilon(1e-12));
    }
}

TEST_CASE("predict_state: double integrator matches the closed form") {
    const PointMassModel model = disc_model();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const State x{Eigen::Vector2d(0.3, -0.7), Eigen::Vector2d(0.5, 1.1)};
    std::vector<Action> actions;
    for (int k = 0; k < 20; ++k) actions.emplace_back(Eigen::Vector2d(u(rng), u(rng)));
    const auto states = predict_state(model, x, actions);
    // p_n = p0 + v0 t_n + sum_k a_k (dt^2 / 2 + (n - 1 - k) dt^2)
    for (std::size_t n = 0; n <= actions.size(); ++n) {
        const double t = kDt * static_cast<double>(n);
        Eigen::Vector2d p = x.position + x.velocity * t, v = x.velocity;
        for (std::size_t k = 0; k < n; ++k) {
            p += actions[k] * (0.5 * kDt * kDt + static_cast<double>(n - 1 - k) * kDt * kDt);
            v += actions[k] * kDt;
        }
        CHECK((states[n].position - p).norm() < 1e-9);
        CHECK((states[n].velocity - v).norm() < 1e-9);
    }
}

TEST_CASE("filter_step: a safe nominal head passes through unchanged") {
    const PointMassModel model = disc_model();
    Scene scene;
    scene.goal = pz::Zonotope(Eigen::Vector2d(5, 5));
    scene.speed_limit = 1.5;
    const State x{Eigen::Vector2d(0, 0), Eigen::Vector2d(0.2, 0)};
    const FilterConfig cfg = small_config();
    const auto stored = solve_backup(x, {}, scene, model, cfg.backup_options(kDt));
    REQUIRE(stored);
    Plan nominal;
    nominal.dt = kDt;
    for (std::size_t k = 0; k < cfg.tp; ++k) nominal.actions.emplace_back(Eigen::Vector2d(0.1 * std::sin(0.3 * k), -0.05 * k / 16.0));

    const FilterResult r = filter_step(x, nominal, *stored, scene, model, cfg);
    CHECK(r.source == Source::Nominal);
    CHECK_FALSE(r.intervention());
    CHECK(r.backup_found);
    REQUIRE(r.head.size() == cfg.ta);
    for (std::size_t k = 0; k < cfg.ta; ++k) CHECK(r.head[k] == nominal.actions[k]);
    // The new backup is anchored where the head ends.
    const auto end = predict_state(model, x, r.head).back();
    CHECK(r.backup.origin.position.isApprox(end.position, 1e-12));
    CHECK(r.backup.origin.velocity.isApprox(end.velocity, 1e-12));
}

TEST_CASE("filter_step: a head driving into the wall falls back to the stored backup") {
    const PointMassModel model = disc_model();
    const Scene scene = corridor_scene();
    const FilterConfig cfg = small_config();
    const State x{Eigen::Vector2d(2.3, 0.5), Eigen::Vector2d(1.0, 0)};
    const auto stored = solve_backup(x, {}, scene, model, cfg.backup_options(kDt));
    REQUIRE(stored);

    const FilterResult r = filter_step(x, constant_plan(Eigen::Vector2d(4, 0), cfg.tp), *stored, scene, model, cfg);
    CHECK_FALSE(r.head_verdict.safe());
    CHECK(r.source == Source::Backup);
    CHECK(r.intervention());
    const auto [head, rest] = stored->split(cfg.ta, model);
    REQUIRE(r.head.size() == head.size());
    for (std::size_t k = 0; k < head.size(); ++k) CHECK(r.head[k] == head[k]);
    CHECK(r.backup.size() == rest.size());
    CHECK(corridor_dense_safe(x, r.head));
}

TEST_CASE("filter_step: a safe head ending where no stop exists is rejected") {
    const PointMassModel model = disc_model();
    const Scene scene = corridor_scene();
    const FilterConfig cfg = small_config();
    const State x{Eigen::Vector2d(2.2, 0.5), Eigen::Vector2d(1.0, 0)};
    const auto stored = solve_backup(x, {}, scene, model, cfg.backup_options(kDt));
    REQUIRE(stored);

    // Accelerate to 1.5 m/s over the head: it ends at x = 2.7 without touching the wall,
    // but the shortest stop from there (v^2 / 2a) overshoots the face.
    const Plan nominal = constant_plan(Eigen::Vector2d(1.25, 0), cfg.tp);
    const auto end = predict_state(model, x, nominal.head(cfg.ta)).back();
    REQUIRE(corridor_dense_safe(x, nominal.head(cfg.ta)));
    REQUIRE(end.position.x() + end.velocity.squaredNorm() / (2.0 * 4.0) + 0.1 > 3.0);

    const FilterResult r = filter_step(x, nominal, *stored, scene, model, cfg);
    CHECK(r.head_verdict.safe());
    CHECK_FALSE(r.backup_found);
    CHECK(r.source == Source::Backup);
    std::vector<Action> committed = r.head;
    committed.insert(committed.end(), r.backup.actions.begin(), r.backup.actions.end());
    CHECK(corridor_dense_safe(x, committed));
}

TEST_CASE("rail_loop: goal at start succeeds with horizon 0") {
    const env::MazeSpec spec = open_maze();
    const State start{env::MazeLayout::center(spec.goal), Eigen::Vector2d::Zero()};
    const EpisodeLog log = run_maze(spec, env::PolicyKind::Greedy, start, Mode::Rail, 100);
    CHECK(log.status == EpisodeStatus::Success);
    CHECK(log.steps == 0);
    CHECK(log.records.empty());
    CHECK(log.safe_success());
}

TEST_CASE("rail_loop: a start in contact is unstartable") {
    const env::MazeSpec spec = open_maze();
    const State start{Eigen::Vector2d(1.05, 1.5), Eigen::Vector2d::Zero()};
    const EpisodeLog log = run_maze(spec, env::PolicyKind::Greedy, start, Mode::Rail, 100);
    CHECK(log.status == EpisodeStatus::Unstartable);
    CHECK(log.steps == 0);
}

TEST_CASE("rail_loop: a policy pushing into a wall never collides") {
    const env::MazeSpec spec = open_maze();
    const State start{env::MazeLayout::center({2, 2}), Eigen::Vector2d::Zero()};
    env::MazeEnv environment(spec, start);
    FixedPolicy policy(Eigen::Vector2d(0, 4));  // straight down into the bottom wall
    FilterConfig cfg = small_config();
    cfg.max_steps = 200;
    const EpisodeLog log = rail_loop(environment, policy, env::maze_model(spec), env::maze_scene(spec), cfg);
    CHECK(log.status == EpisodeStatus::Timeout);
    CHECK(log.steps == 200);
    CHECK(log.collision_transitions == 0);
    CHECK(log.limit_transitions == 0);
    CHECK(log.interventions > 0);

    env::MazeEnv raw(spec, start);
    cfg.mode = Mode::Unfiltered;
    const EpisodeLog unfiltered = rail_loop(raw, policy, env::maze_model(spec), env::maze_scene(spec), cfg);
    CHECK(unfiltered.status == EpisodeStatus::Collision);
    CHECK(unfiltered.collision_transitions == 1);
}

TEST_CASE("rail_loop: adversarial and greedy policies stay collision free") {
    const env::MazeSpec spec = walled_maze();
    std::mt19937_64 rng(11);
    for (int episode = 0; episode < 6; ++episode) {
        const State start = env::sample_maze_start(spec, rng);
        for (auto kind : {env::PolicyKind::Adversarial, env::PolicyKind::Greedy, env::PolicyKind::DemoReplay}) {
            const EpisodeLog log = run_maze(spec, kind, start, Mode::Rail, 300, 100 + episode);
            CHECK(log.collision_transitions == 0);
            CHECK(log.limit_transitions == 0);
            CHECK(log.events.empty());
            CHECK(log.status != EpisodeStatus::Collision);
            CHECK(log.status != EpisodeStatus::Unstartable);
        }
    }
}

TEST_CASE("rail_loop: a benign policy in an open maze succeeds without interventions") {
    const env::MazeSpec spec = open_maze();
    const State start{env::MazeLayout::center({2, 1}), Eigen::Vector2d::Zero()};
    for (auto kind : {env::PolicyKind::Greedy, env::PolicyKind::Waypoint}) {
        const EpisodeLog log = run_maze(spec, kind, start, Mode::Rail, 300);
        CHECK(log.status == EpisodeStatus::Success);
        CHECK(log.interventions == 0);
        CHECK(log.safe_success());
    }
}

TEST_CASE("rail_loop: intervention count equals backup commits and logs are reproducible") {
    const env::MazeSpec spec = walled_maze();
    const State start{env::MazeLayout::center({1, 1}), Eigen::Vector2d::Zero()};
    const EpisodeLog a = run_maze(spec, env::PolicyKind::Adversarial, start, Mode::Rail, 200);
    const EpisodeLog b = run_maze(spec, env::PolicyKind::Adversarial, start, Mode::Rail, 200);
    std::size_t backups = 0;
    for (const auto& r : a.records) backups += r.source == Source::Backup ? 1 : 0;
    CHECK(a.interventions == backups);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].source == b.records[i].source);
        CHECK(a.records[i].state.position == b.records[i].state.position);
        REQUIRE(a.records[i].committed.size() == b.records[i].committed.size());
        for (std::size_t k = 0; k < a.records[i].committed.size(); ++k) {
            CHECK(a.records[i].committed[k] == b.records[i].committed[k]);
        }
    }
}

TEST_CASE("rail_loop: backup-only mode is also collision free") {
    const env::MazeSpec spec = walled_maze();
    const State start{env::MazeLayout::center({4, 4}), Eigen::Vector2d::Zero()};
    const EpisodeLog log = run_maze(spec, env::PolicyKind::Greedy, start, Mode::BackupOnly, 200);
    CHECK(log.events.empty());
    CHECK(log.status != EpisodeStatus::Unstartable);
}

TEST_CASE("Plan and FilterConfig validation") {
    FilterConfig c = small_config();
    c.ta = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.ta = 20;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    Plan p = constant_plan(Eigen::Vector2d::Zero(), 15);
    CHECK_THROWS_AS(p.validate(8, 16), std::invalid_argument);
    p.actions.emplace_back(Eigen::Vector2d(std::nan(""), 0.0));
    CHECK_THROWS_AS(p.validate(8, 16), std::invalid_argument);
    CHECK(parse_mode("backup-only") == Mode::BackupOnly);
    CHECK_THROWS_AS(parse_mode("bogus"), std::invalid_argument);
}

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rail/runner.hpp"

namespace rail::run {

namespace {

using nlohmann::json;

// A JSON node with its dotted path, for error messages.
struct Field {
    const json& node;
    std::string path;

    [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path + ": " + message); }

    bool has(const char* key) const { return node.is_object() && node.contains(key); }

    Field at(const char* key) const {
        if (!node.is_object()) fail("expected an object");
        if (!node.contains(key)) throw ConfigError(path + "." + key + ": missing required field");
        return {node.at(key), path + "." + key};
    }

    Field at(std::size_t i) const { return {node.at(i), path + "[" + std::to_string(i) + "]"}; }

    std::size_t size() const {
        if (!node.is_array()) fail("expected an array");
        return node.size();
    }

    double number() const {
        if (!node.is_number()) fail("expected a number");
        const double v = node.get<double>();
        if (!std::isfinite(v)) fail("must be finite");
        return v;
    }

    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("must be positive");
        return v;
    }

    double nonnegative() const {
        const double v = number();
        if (v < 0.0) fail("must be nonnegative");
        return v;
    }

    std::uint64_t count() const {
        if (!node.is_number_integer() || node.get<long long>() < 0) fail("expected a nonnegative integer");
        return node.get<std::uint64_t>();
    }

    std::string text() const {
        if (!node.is_string()) fail("expected a string");
        return node.get<std::string>();
    }

    Eigen::VectorXd vector(long expected = -1) const {
        const std::size_t n = size();
        if (expected >= 0 && n != static_cast<std::size_t>(expected)) {
            fail("expected " + std::to_string(expected) + " numbers, got " + std::to_string(n));
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
        return v;
    }

    Eigen::Vector3d vec3() const { return vector(3); }

    env::Cell cell() const {
        if (size() != 2) fail("expected [row, col]");
        return {static_cast<int>(at(std::size_t{0}).count()), static_cast<int>(at(std::size_t{1}).count())};
    }

    double positive_or(const char* key, double fallback) const { return has(key) ? at(key).positive() : fallback; }
    double nonnegative_or(const char* key, double fallback) const {
        return has(key) ? at(key).nonnegative() : fallback;
    }
    std::size_t count_or(const char* key, std::size_t fallback) const {
        return has(key) ? static_cast<std::size_t>(at(key).count()) : fallback;
    }
};

Eigen::Matrix3d rpy(const Eigen::Vector3d& a) {
    return (Eigen::AngleAxisd(a.z(), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(a.y(), Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(a.x(), Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

void parse_maze(const Field& f, double dt, Scenario& s) {
    env::MazeSpec& m = s.maze;
    const Field layout = f.at("layout");
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < layout.size(); ++i) rows.push_back(layout.at(i).text());
    try {
        m.layout = env::MazeLayout(rows);
    } catch (const std::invalid_argument& e) {
        layout.fail(e.what());
    }
    m.goal = f.at("goal").cell();
    if (m.layout.wall(m.goal)) f.at("goal").fail("goal cell is a wall");
    m.dt = dt;
    m.radius = f.positive_or("radius", m.radius);
    if (m.radius >= 0.5) f.at("radius").fail("disc must fit a unit corridor");
    m.accel = f.positive_or("accel", m.accel);
    m.speed_limit = f.positive_or("speed_limit", m.speed_limit);
    m.goal_tolerance = f.positive_or("goal_tolerance", m.goal_tolerance);
    m.substeps = static_cast<int>(f.count_or("substeps", static_cast<std::size_t>(m.substeps)));
    if (m.substeps < 1) f.at("substeps").fail("must be at least 1");
    m.policy_speed = f.positive_or("policy_speed", m.policy_speed);
    m.start_jitter = f.nonnegative_or("start_jitter", m.start_jitter);
    if (m.start_jitter + m.radius >= 0.5) f.at("start_jitter").fail("start disc must stay inside its cell");
    m.demo_noise = f.nonnegative_or("demo_noise", m.demo_noise);
    if (f.has("start")) {
        const env::Cell c = f.at("start").cell();
        const auto comp = m.layout.component(m.goal);
        if (std::find(comp.begin(), comp.end(), c) == comp.end()) {
            f.at("start").fail("start cell is not connected to the goal");
        }
        s.maze_start = c;
    }
}

void parse_arm(const Field& f, double dt, Scenario& s) {
    env::ArmSpec& a = s.arm;
    const Field joints = f.at("joints");
    std::vector<kin::Joint> chain;
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const Field j = joints.at(i);
        kin::Joint joint;
        joint.axis = j.at("axis").vec3();
        if (joint.axis.norm() < 1e-9) j.at("axis").fail("must be nonzero");
        joint.axis.normalize();
        joint.offset = j.at("offset").vec3();
        const Field link = j.at("link");
        const Eigen::Vector3d half = link.at("half").vec3();
        if ((half.array() < 0.0).any()) link.at("half").fail("must be nonnegative");
        joint.link = pz::Zonotope::box(link.at("center").vec3(), half);
        joint.accel_limit = j.at("accel_limit").positive();
        joint.velocity_limit = j.at("velocity_limit").positive();
        const Eigen::VectorXd lim = j.at("position_limits").vector(2);
        if (!(lim[0] < lim[1])) j.at("position_limits").fail("need lo < hi");
        joint.position_limits = {lim[0], lim[1]};
        chain.push_back(joint);
    }
    if (chain.empty()) joints.fail("need at least one joint");
    try {
        a.chain = kin::KinematicChain(chain);
    } catch (const std::invalid_argument& e) {
        joints.fail(e.what());
    }
    const auto n = static_cast<long>(chain.size());
    if (f.has("obstacles")) {
        const Field obs = f.at("obstacles");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const Field o = obs.at(i);
            env::BoxSpec b;
            b.name = o.has("name") ? o.at("name").text() : "obstacle" + std::to_string(i);
            b.center = o.at("center").vec3();
            b.half = o.at("half").vec3();
            if (!(b.half.array() > 0.0).all()) o.at("half").fail("must be positive");
            if (o.has("rpy")) b.rotation = rpy(o.at("rpy").vec3());
            a.obstacles.push_back(b);
        }
    }
    const auto within_limits = [&](const Field& fld, const Eigen::VectorXd& q) {
        for (long j = 0; j < n; ++j) {
            if (!chain[static_cast<std::size_t>(j)].position_limits.contains(q[j])) {
                fld.fail("joint " + std::to_string(j) + " outside its limits");
            }
        }
    };
    a.start = f.at("start").vector(n);
    within_limits(f.at("start"), a.start);
    a.goal = f.at("goal").vector(n);
    within_limits(f.at("goal"), a.goal);
    if (f.has("via")) {
        const Field via = f.at("via");
        for (std::size_t i = 0; i < via.size(); ++i) {
            a.via.push_back(via.at(i).vector(n));
            within_limits(via.at(i), a.via.back());
        }
    }
    if (a.via.empty() || !a.via.back().isApprox(a.goal, 0.0)) a.via.push_back(a.goal);
    if (f.has("tool")) a.tool = f.at("tool").vec3();
    a.dt = dt;
    a.goal_tolerance = f.positive_or("goal_tolerance", a.goal_tolerance);
    a.substeps = static_cast<int>(f.count_or("substeps", static_cast<std::size_t>(a.substeps)));
    if (a.substeps < 1) f.at("substeps").fail("must be at least 1");
    a.start_noise = f.nonnegative_or("start_noise", a.start_noise);
    a.policy_speed = f.positive_or("policy_speed", a.policy_speed);
    a.policy_accel = f.positive_or("policy_accel", a.policy_accel);
    a.demo_noise = f.nonnegative_or("demo_noise", a.demo_noise);
    const env::ArmEnv probe(a, a.start);
    if (probe.first_contact(a.start) >= 0) f.at("start").fail("nominal start configuration is in contact");
}

}  // namespace

std::size_t Scenario::max_steps() const {
    return static_cast<std::size_t>(std::ceil(timeout_factor * static_cast<double>(nominal_horizon_steps)));
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    const Field root{doc, source};
    if (!doc.is_object()) root.fail("expected an object");
    Scenario s;
    s.name = root.at("name").text();
    const std::string kind = root.at("environment").text();
    if (kind == "maze") {
        s.kind = EnvKind::Maze;
    } else if (kind == "arm") {
        s.kind = EnvKind::Arm;
    } else {
        root.at("environment").fail("expected \"maze\" or \"arm\"");
    }
    const double dt = root.positive_or("dt", 0.05);

    const Field h = root.at("horizons");
    s.filter.ta = static_cast<std::size_t>(h.at("ta").count());
    s.filter.tp = static_cast<std::size_t>(h.at("tp").count());
    s.filter.partitions = static_cast<std::size_t>(h.at("partitions").count());
    if (s.filter.ta < 1) h.at("ta").fail("must be at least 1");
    if (s.filter.tp < s.filter.ta) h.at("tp").fail("must be at least ta");
    if (s.filter.partitions < 1) h.at("partitions").fail("must be at least 1");
    if (root.has("backup")) {
        const Field b = root.at("backup");
        s.filter.lattice_per_axis = b.count_or("lattice_per_axis", s.filter.lattice_per_axis);
        s.filter.max_verified = b.count_or("max_verified", s.filter.max_verified);
        if (s.filter.lattice_per_axis < 1) b.at("lattice_per_axis").fail("must be at least 1");
    }
    s.nominal_horizon_steps = static_cast<std::size_t>(root.at("nominal_horizon_steps").count());
    if (s.nominal_horizon_steps < 1) root.at("nominal_horizon_steps").fail("must be at least 1");
    s.timeout_factor = root.positive_or("timeout_factor", s.timeout_factor);
    if (root.has("seeds")) {
        const Field seeds = root.at("seeds");
        s.seeds.clear();
        for (std::size_t i = 0; i < seeds.size(); ++i) s.seeds.push_back(seeds.at(i).count());
        if (s.seeds.empty()) seeds.fail("need at least one seed");
    }
    if (root.has("policies")) {
        const Field p = root.at("policies");
        s.policies.clear();
        for (std::size_t i = 0; i < p.size(); ++i) {
            try {
                s.policies.push_back(env::parse_policy(p.at(i).text()));
            } catch (const std::invalid_argument& e) {
                p.at(i).fail(e.what());
            }
        }
        if (s.policies.empty()) p.fail("need at least one policy");
    }
    if (s.kind == EnvKind::Maze) {
        parse_maze(root.at("maze"), dt, s);
    } else {
        parse_arm(root.at("arm"), dt, s);
    }
    s.filter.max_steps = s.max_steps();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

}  // namespace rail::run

#include <algorithm>
#include <cmath>

#include "rail/runner.hpp"

namespace rail::run {

namespace {

constexpr std::size_t kSamplesPerTrajectory = 100;
constexpr double kContainTol = 1e-9;

// Piecewise-constant acceleration with random switch times, |a_j| <= accel_j.
struct RandomMotion {
    Eigen::VectorXd q0, v0;
    std::vector<double> switches;
    std::vector<Eigen::VectorXd> accel;

    void at(double t, Eigen::VectorXd& q, Eigen::VectorXd& v) const {
        q = q0;
        v = v0;
        for (std::size_t i = 0; i < switches.size(); ++i) {
            if (t <= switches[i]) break;
            const double end = i + 1 < switches.size() ? switches[i + 1] : t;
            const double h = std::min(t, end) - switches[i];
            q += v * h + 0.5 * accel[i] * h * h;
            v += accel[i] * h;
        }
    }
};

RandomMotion random_motion(std::mt19937_64& rng, const Eigen::VectorXd& q0, const Eigen::VectorXd& v0,
                           const Eigen::VectorXd& accel, double duration) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0), gap(0.03, 0.3);
    RandomMotion m{q0, v0, {}, {}};
    for (double t = 0.0; t < duration; t += gap(rng)) {
        Eigen::VectorXd a(accel.size());
        for (Eigen::Index j = 0; j < a.size(); ++j) a[j] = accel[j] * unit(rng);
        m.switches.push_back(t);
        m.accel.push_back(a);
    }
    return m;
}

SweptCheck verify_arm(const Scenario& s, std::size_t samples, std::mt19937_64& rng) {
    const kin::KinematicChain& chain = s.arm.chain;
    const auto n = static_cast<Eigen::Index>(chain.size());
    const std::size_t m = s.filter.partitions;
    const double duration = s.arm.dt * static_cast<double>(s.filter.tp);
    const double delta = duration / static_cast<double>(m);
    const Eigen::VectorXd accel = chain.accel_limits(), vmax = chain.velocity_limits();
    std::uniform_real_distribution<double> unit(-1.0, 1.0), time(0.0, duration);
    SweptOptions options;
    options.keep_poly = false;

    SweptCheck out;
    while (out.samples < samples) {
        Eigen::VectorXd q0(n), v0(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            q0[j] = s.arm.start[j] + 0.5 * unit(rng);
            v0[j] = 0.5 * vmax[j] * unit(rng);
        }
        const RandomMotion motion = random_motion(rng, q0, v0, accel, duration);
        JointTrajectory traj;
        for (std::size_t k = 0; k <= m; ++k) {
            Eigen::VectorXd q, v;
            const double t = k == m ? duration : delta * static_cast<double>(k);
            motion.at(t, q, v);
            traj.times.push_back(t);
            traj.q.push_back(q);
            traj.qd.push_back(v);
        }
        const SweptOccupancy swept = swept_occupancy(joint_bounds(traj, delta, chain), chain, options);
        for (std::size_t k = 0; k < kSamplesPerTrajectory && out.samples < samples; ++k, ++out.samples) {
            const double t = time(rng);
            const std::size_t cell = std::min(m - 1, static_cast<std::size_t>(t / delta));
            const std::size_t link = std::uniform_int_distribution<std::size_t>(0, chain.size() - 1)(rng);
            const pz::Zonotope& body = chain.joint(link).link;
            Eigen::VectorXd b(body.num_generators());
            for (Eigen::Index g = 0; g < b.size(); ++g) b[g] = unit(rng);
            Eigen::VectorXd q, v;
            motion.at(t, q, v);
            const Eigen::Vector3d x = env::arm_frames(chain, q)[link] * Eigen::Vector3d(body.evaluate(b));
            if (!swept.enclosures[cell][link].contains(x, kContainTol)) {
                ++out.violations;
                out.worst_excess = 1.0;
            }
        }
    }
    return out;
}

SweptCheck verify_maze(const Scenario& s, std::size_t samples, std::mt19937_64& rng) {
    const env::MazeSpec& spec = s.maze;
    const std::size_t steps = s.filter.tp;
    const double dt = spec.dt;
    std::uniform_real_distribution<double> unit(-1.0, 1.0), u01(0.0, 1.0);
    SweptCheck out;
    while (out.samples < samples) {
        StateTrajectory traj;
        std::vector<Eigen::Vector2d> accel;
        Eigen::Vector2d p(u01(rng) * spec.layout.cols(), u01(rng) * spec.layout.rows());
        Eigen::Vector2d v(unit(rng), unit(rng));
        if (v.norm() > 1.0) v.normalize();
        v *= 0.7 * spec.speed_limit;
        for (std::size_t k = 0; k <= steps; ++k) {
            traj.times.push_back(dt * static_cast<double>(k));
            traj.position.push_back(p);
            traj.velocity.push_back(v);
            const Eigen::Vector2d a(spec.accel * unit(rng), spec.accel * unit(rng));
            accel.push_back(a);
            p += v * dt + 0.5 * a * dt * dt;
            v += a * dt;
        }
        std::vector<pz::Interval> cell_times;
        const auto boxes = point_swept_boxes(traj, s.filter.partitions, &cell_times);
        for (std::size_t k = 0; k < kSamplesPerTrajectory && out.samples < samples; ++k, ++out.samples) {
            const double t = u01(rng) * dt * static_cast<double>(steps);
            const auto step = std::min(steps - 1, static_cast<std::size_t>(t / dt));
            const double h = t - dt * static_cast<double>(step);
            const Eigen::Vector2d centre = traj.position[step] + traj.velocity[step] * h + 0.5 * accel[step] * h * h;
            const double angle = 2.0 * M_PI * u01(rng), r = spec.radius * std::sqrt(u01(rng));
            const Eigen::Vector2d x = centre + r * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            std::size_t cell = 0;
            while (cell + 1 < cell_times.size() && t > cell_times[cell].hi) ++cell;
            const Eigen::Vector2d c = boxes[cell].center();
            const Eigen::Vector2d half = boxes[cell].half_widths().array() + spec.radius;
            const double excess = ((x - c).cwiseAbs() - half).maxCoeff();
            if (excess > kContainTol) {
                ++out.violations;
                out.worst_excess = std::max(out.worst_excess, excess);
            }
        }
    }
    return out;
}

}  // namespace

SweptCheck verify_swept(const Scenario& scenario, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return scenario.kind == EnvKind::Arm ? verify_arm(scenario, samples, rng) : verify_maze(scenario, samples, rng);
}

}  // namespace rail::run

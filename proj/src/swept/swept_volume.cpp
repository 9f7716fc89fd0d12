#include "rail/swept_volume.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rail {

namespace {

constexpr double kTimeTol = 1e-9;

}  // namespace

void JointTrajectory::validate() const {
    if (times.empty()) throw std::invalid_argument("JointTrajectory: no samples");
    if (q.size() != times.size() || qd.size() != times.size()) {
        throw std::invalid_argument("JointTrajectory: times, q and qd differ in length");
    }
    const Eigen::Index n = q.front().size();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) throw std::invalid_argument("JointTrajectory: non-finite time");
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw std::invalid_argument("JointTrajectory: times must increase strictly");
        }
        if (q[k].size() != n || qd[k].size() != n) {
            throw std::invalid_argument("JointTrajectory: inconsistent sample dimension");
        }
        if (!q[k].allFinite() || !qd[k].allFinite()) {
            throw std::invalid_argument("JointTrajectory: non-finite sample");
        }
    }
}

std::vector<CellBounds> joint_bounds(const JointTrajectory& traj, double delta,
                                     const Eigen::VectorXd& accel_limits, double accel_margin) {
    traj.validate();
    const Eigen::Index n = traj.dim();
    if (accel_limits.size() != n) throw std::invalid_argument("joint_bounds: accel bound size mismatch");
    if (!(delta > 0.0) || !(accel_margin >= 0.0)) {
        throw std::invalid_argument("joint_bounds: delta must be positive and margin nonnegative");
    }
    const double t0 = traj.times.front();
    const double span = traj.times.back() - t0;
    const long m = std::lround(span / delta);
    if (m < 1 || std::abs(static_cast<double>(m) * delta - span) > kTimeTol * std::max(1.0, span)) {
        throw std::invalid_argument("joint_bounds: delta does not divide the trajectory duration");
    }

    const Eigen::VectorXd accel = accel_limits * (1.0 + accel_margin);
    const double half_dd = 0.5 * delta * delta;

    std::vector<CellBounds> cells;
    cells.reserve(static_cast<std::size_t>(m));
    std::size_t k = 0;
    for (long i = 0; i < m; ++i) {
        const double a = t0 + static_cast<double>(i) * delta;
        const double b = (i + 1 == m) ? traj.times.back() : t0 + static_cast<double>(i + 1) * delta;
        if (std::abs(traj.times[k] - a) > kTimeTol) {
            throw std::invalid_argument("joint_bounds: no sample at cell start t = " + std::to_string(a));
        }
        std::size_t last = k;
        while (last + 1 < traj.size() && traj.times[last + 1] <= b + kTimeTol) ++last;
        if (std::abs(traj.times[last] - b) > kTimeTol) {
            throw std::invalid_argument("joint_bounds: no sample at cell end t = " + std::to_string(b));
        }

        CellBounds cell{{a, b}, {}, {}};
        for (Eigen::Index j = 0; j < n; ++j) {
            double lo = traj.q[k][j], hi = lo;
            double vlo = traj.qd[k][j], vhi = vlo;
            for (std::size_t s = k; s <= last; ++s) {
                lo = std::min(lo, traj.q[s][j]);
                hi = std::max(hi, traj.q[s][j]);
                vlo = std::min(vlo, traj.qd[s][j]);
                vhi = std::max(vhi, traj.qd[s][j]);
            }
            for (std::size_t e : {k, last}) {
                const double pad = delta * std::abs(traj.qd[e][j]) + half_dd * accel[j];
                lo = std::min(lo, traj.q[e][j] - pad);
                hi = std::max(hi, traj.q[e][j] + pad);
            }
            cell.joints.push_back({lo, hi});
            cell.velocity.push_back({vlo, vhi});
        }
        cells.push_back(std::move(cell));
        k = last;
    }
    return cells;
}

std::vector<CellBounds> joint_bounds(const JointTrajectory& traj, double delta,
                                     const kin::KinematicChain& chain, double accel_margin) {
    return joint_bounds(traj, delta, chain.accel_limits(), accel_margin);
}

std::vector<pz::PolyZonotope> partition_occupancy(const std::vector<pz::Interval>& theta,
                                                  const kin::KinematicChain& chain,
                                                  const SweptOptions& options) {
    if (theta.size() != chain.size()) {
        throw std::invalid_argument("partition_occupancy: one interval per joint required");
    }
    pz::MatrixPolyZonotope rotation(Eigen::MatrixXd(Eigen::Matrix3d::Identity()));
    pz::PolyZonotope origin(Eigen::VectorXd(Eigen::Vector3d::Zero()));
    std::vector<pz::PolyZonotope> links;
    links.reserve(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const kin::Joint& joint = chain.joint(j);
        if (!(theta[j].width() < M_PI)) {
            throw std::invalid_argument("partition_occupancy: joint " + std::to_string(j) +
                                        " sweeps pi or more in one partition; refine the partition");
        }
        origin = pz::pz_add(origin, pz::pz_mul(rotation, Eigen::VectorXd(joint.offset)))
                     .reduce(options.rotation_terms);
        rotation = pz::pz_mul(rotation, kin::rot_set(theta[j], joint.axis)).reduce(options.rotation_terms);
        const pz::PolyZonotope body = pz::PolyZonotope::from_zonotope(joint.link);
        links.push_back(pz::pz_add(origin, pz::pz_mul(rotation, body)).reduce(options.link_terms));
    }
    return links;
}

SweptOccupancy swept_occupancy(const std::vector<CellBounds>& bounds, const kin::KinematicChain& chain,
                               const SweptOptions& options) {
    if (bounds.empty()) throw std::invalid_argument("swept_occupancy: need at least one partition");
    SweptOccupancy out;
    for (const CellBounds& cell : bounds) {
        auto links = partition_occupancy(cell.joints, chain, options);
        std::vector<pz::Zonotope> boxes;
        boxes.reserve(links.size());
        for (const auto& l : links) boxes.push_back(pz::pz_enclose(l).reduce(options.enclosure_generators));
        out.partition_times.push_back(cell.time);
        out.joint_boxes.push_back(cell.joints);
        out.velocity_boxes.push_back(cell.velocity);
        out.enclosures.push_back(std::move(boxes));
        if (options.keep_poly) out.links.push_back(std::move(links));
    }
    return out;
}

void write_geometry(std::ostream& out, const SweptOccupancy& swept) {
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < swept.enclosures.size(); ++i) {
        for (std::size_t j = 0; j < swept.enclosures[i].size(); ++j) {
            const pz::Zonotope& z = swept.enclosures[i][j];
            out << i << ' ' << j;
            for (Eigen::Index r = 0; r < z.dim(); ++r) out << ' ' << z.center()[r];
            for (Eigen::Index c = 0; c < z.num_generators(); ++c)
                for (Eigen::Index r = 0; r < z.dim(); ++r) out << ' ' << z.generators()(r, c);
            out << '\n';
        }
    }
    out.precision(old);
}

}  // namespace rail

#include "rail/pz/zonotope.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rail::pz {

Zonotope::Zonotope(Eigen::VectorXd center)
    : center_(std::move(center)), generators_(center_.size(), 0) {}

Zonotope::Zonotope(Eigen::VectorXd center, Eigen::MatrixXd generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
    if (generators_.rows() != center_.size() && generators_.cols() > 0) {
        throw std::invalid_argument("Zonotope: generator rows must match center dimension");
    }
    if (generators_.cols() == 0) {
        generators_.resize(center_.size(), 0);
    }
    if (!center_.allFinite() || !generators_.allFinite()) {
        throw std::invalid_argument("Zonotope: non-finite center or generators");
    }
}

Zonotope Zonotope::box(const Eigen::VectorXd& center, const Eigen::VectorXd& half_widths) {
    if (center.size() != half_widths.size()) {
        throw std::invalid_argument("Zonotope::box: dimension mismatch");
    }
    if ((half_widths.array() < 0.0).any()) {
        throw std::invalid_argument("Zonotope::box: negative half-width");
    }
    std::vector<Eigen::Index> nonzero;
    for (Eigen::Index i = 0; i < half_widths.size(); ++i) {
        if (half_widths[i] > 0.0) nonzero.push_back(i);
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(center.size(), static_cast<Eigen::Index>(nonzero.size()));
    for (std::size_t k = 0; k < nonzero.size(); ++k) {
        g(nonzero[k], static_cast<Eigen::Index>(k)) = half_widths[nonzero[k]];
    }
    return {center, g};
}

Zonotope Zonotope::oriented_box(const Eigen::Vector3d& center, const Eigen::Matrix3d& rotation,
                                const Eigen::Vector3d& half_widths) {
    return box(Eigen::Vector3d::Zero(), half_widths).linear_map(rotation).translate(center);
}

std::vector<Interval> Zonotope::interval_hull() const {
    const Eigen::VectorXd r = half_widths();
    std::vector<Interval> out;
    out.reserve(static_cast<std::size_t>(dim()));
    for (Eigen::Index i = 0; i < dim(); ++i) {
        out.emplace_back(center_[i] - r[i], center_[i] + r[i]);
    }
    return out;
}

Eigen::VectorXd Zonotope::half_widths() const {
    if (generators_.cols() == 0) return Eigen::VectorXd::Zero(dim());
    return generators_.cwiseAbs().rowwise().sum();
}

Eigen::VectorXd Zonotope::evaluate(const Eigen::VectorXd& coefficients) const {
    if (coefficients.size() != num_generators()) {
        throw std::invalid_argument("Zonotope::evaluate: coefficient count mismatch");
    }
    return center_ + generators_ * coefficients;
}

Zonotope Zonotope::minkowski_sum(const Zonotope& other) const {
    if (other.dim() != dim()) {
        throw std::invalid_argument("Zonotope::minkowski_sum: dimension mismatch");
    }
    Eigen::MatrixXd g(dim(), num_generators() + other.num_generators());
    g << generators_, other.generators_;
    return {center_ + other.center_, g};
}

Zonotope Zonotope::linear_map(const Eigen::MatrixXd& m) const {
    if (m.cols() != dim()) {
        throw std::invalid_argument("Zonotope::linear_map: dimension mismatch");
    }
    return {m * center_, m * generators_};
}

Zonotope Zonotope::translate(const Eigen::VectorXd& v) const {
    if (v.size() != dim()) {
        throw std::invalid_argument("Zonotope::translate: dimension mismatch");
    }
    return {center_ + v, generators_};
}

Zonotope Zonotope::reduce(Eigen::Index max_generators) const {
    const Eigen::Index n = dim();
    const Eigen::Index m = num_generators();
    if (m <= max_generators) return *this;
    if (max_generators < n) {
        throw std::invalid_argument("Zonotope::reduce: need at least dim() generators");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<double> score(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto col = generators_.col(i);
        score[static_cast<std::size_t>(i)] = col.lpNorm<1>() - col.lpNorm<Eigen::Infinity>();
    }
    // stable so equal scores keep their input order
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    const Eigen::Index keep = max_generators - n;
    Eigen::VectorXd boxed = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = keep; k < m; ++k) {
        boxed += generators_.col(order[static_cast<std::size_t>(k)]).cwiseAbs();
    }
    Eigen::MatrixXd g(n, max_generators);
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < keep; ++k) {
        g.col(col++) = generators_.col(order[static_cast<std::size_t>(k)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (boxed[i] > 0.0) {
            g.col(col).setZero();
            g(i, col) = boxed[i];
            ++col;
        }
    }
    return {center_, g.leftCols(col)};
}

bool Zonotope::contains(const Eigen::VectorXd& point, double tol) const {
    if (point.size() != dim()) {
        throw std::invalid_argument("Zonotope::contains: dimension mismatch");
    }
    return centered_contains(generators_, point - center_, tol);
}

double Zonotope::volume() const {
    const Eigen::Index n = dim();
    const Eigen::Index m = num_generators();
    if (n > 3) throw std::invalid_argument("Zonotope::volume: only n <= 3 supported");
    if (m < n) return 0.0;
    double sum = 0.0;
    if (n == 1) {
        sum = generators_.cwiseAbs().sum();
    } else if (n == 2) {
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i + 1; j < m; ++j) {
                Eigen::Matrix2d d;
                d << generators_.col(i), generators_.col(j);
                sum += std::abs(d.determinant());
            }
    } else {
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i + 1; j < m; ++j)
                for (Eigen::Index k = j + 1; k < m; ++k) {
                    Eigen::Matrix3d d;
                    d << generators_.col(i), generators_.col(j), generators_.col(k);
                    sum += std::abs(d.determinant());
                }
    }
    return std::ldexp(sum, static_cast<int>(n));
}

namespace {

// Support test along unit direction d: r violates iff |d.r| > sum |d.g| + tol.
bool separated_along(const Eigen::MatrixXd& g, const Eigen::VectorXd& r,
                     const Eigen::VectorXd& d, double tol) {
    const double reach = (d.transpose() * g).cwiseAbs().sum();
    return std::abs(d.dot(r)) > reach + tol;
}

// Full-rank membership in dimension n (1, 2 or 3): every facet normal of the
// centered zonotope is checked, which decides membership exactly.
bool full_rank_contains(const Eigen::MatrixXd& g, const Eigen::VectorXd& r, double tol) {
    const Eigen::Index n = g.rows();
    const Eigen::Index m = g.cols();
    if (n == 1) {
        return std::abs(r[0]) <= g.cwiseAbs().sum() + tol;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (separated_along(g, r, Eigen::VectorXd::Unit(n, i), tol)) return false;
    }
    if (n == 2) {
        for (Eigen::Index i = 0; i < m; ++i) {
            Eigen::VectorXd d(2);
            d << -g(1, i), g(0, i);
            const double norm = d.norm();
            if (norm == 0.0) continue;
            if (separated_along(g, r, d / norm, tol)) return false;
        }
        return true;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Vector3d gi = g.col(i);
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const Eigen::Vector3d gj = g.col(j);
            const Eigen::Vector3d d = gi.cross(gj);
            const double norm = d.norm();
            if (norm <= 1e-12 * gi.norm() * gj.norm() || norm == 0.0) continue;
            if (separated_along(g, r, Eigen::VectorXd(d / norm), tol)) return false;
        }
    }
    return true;
}

}  // namespace

bool centered_contains(const Eigen::MatrixXd& generators, const Eigen::VectorXd& r, double tol) {
    const Eigen::Index n = r.size();
    if (generators.rows() != n && generators.cols() > 0) {
        throw std::invalid_argument("centered_contains: dimension mismatch");
    }
    if (n > 3) throw std::invalid_argument("centered_contains: only n <= 3 supported");

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < generators.cols(); ++i) {
        if (generators.col(i).norm() > 1e-14) keep.push_back(i);
    }
    if (keep.empty()) return r.norm() <= tol;
    Eigen::MatrixXd g(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = generators.col(keep[k]);

    if (n == 1) return full_rank_contains(g, r, tol);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > 1e-12 * s[0]) ++rank;
    }
    if (rank == n) return full_rank_contains(g, r, tol);

    // Degenerate: r must lie in the generator span, then decide in that subspace.
    const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);
    const Eigen::VectorXd along = basis.transpose() * r;
    if ((r - basis * along).norm() > tol) return false;
    return full_rank_contains(basis.transpose() * g, along, tol);
}

bool zono_intersects(const Zonotope& a, const Zonotope& b, double tol) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("zono_intersects: dimension mismatch");
    }
    const Eigen::VectorXd gap = (b.center() - a.center()).cwiseAbs();
    const Eigen::VectorXd reach = a.half_widths() + b.half_widths();
    if (((gap - reach).array() > tol).any()) return false;

    Eigen::MatrixXd g(a.dim(), a.num_generators() + b.num_generators());
    g << a.generators(), b.generators();
    return centered_contains(g, b.center() - a.center(), tol);
}

}  // namespace rail::pz

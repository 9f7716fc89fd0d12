#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rail/pz/zonotope.hpp"

namespace rail::pz {

/// Symbolic identity of one indeterminate b_i in [-1, 1]. Two sets that carry the
/// same id depend on the same variable.
using IndeterminateId = std::uint64_t;

/// Reserves `count` consecutive fresh ids from the process-wide allocator and
/// returns the first one. Thread-safe; ids grow monotonically.
IndeterminateId allocate_ids(std::size_t count = 1);

/// Exponent matrix: one row per generator, one column per indeterminate id.
using ExponentMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Values for indeterminates, keyed by id.
using Assignment = std::map<IndeterminateId, double>;

namespace detail {

// Shared storage for vector- and matrix-valued polynomial zonotopes. Values are
// flattened column-major; `coeffs` holds one column per non-constant monomial.
struct Terms {
    Eigen::Index rows = 0;
    Eigen::Index cols = 1;
    Eigen::VectorXd constant;
    Eigen::MatrixXd coeffs;
    ExponentMatrix exponents;
    std::vector<IndeterminateId> ids;  // sorted ascending, distinct

    Eigen::Index size() const { return rows * cols; }
    Eigen::Index num_terms() const { return coeffs.cols(); }

    void validate() const;
    void normalize();
    void reduce(Eigen::Index max_terms);
    Eigen::VectorXd evaluate(const Assignment& b) const;
    Eigen::VectorXd evaluate(std::span<const double> b) const;
};

Terms make_terms(Eigen::Index rows, Eigen::Index cols, Eigen::VectorXd constant,
                 Eigen::MatrixXd coeffs, ExponentMatrix exponents,
                 std::vector<IndeterminateId> ids);
Terms add(const Terms& a, const Terms& b);
Terms multiply(const Terms& a, const Terms& b);

}  // namespace detail

/// Sparse polynomial zonotope in R^n:
///   { g_0 + sum_i g_i prod_k b_k^{E(i,k)} : b in [-1,1]^{#ids} }.
class PolyZonotope {
public:
    PolyZonotope() = default;
    /// Single point.
    explicit PolyZonotope(const Eigen::VectorXd& constant);
    /// `generators` holds one column per monomial; `exponents` one row per column.
    PolyZonotope(const Eigen::VectorXd& constant, const Eigen::MatrixXd& generators,
                 const ExponentMatrix& exponents, std::vector<IndeterminateId> ids);

    /// Lifts a zonotope, allocating one fresh linear indeterminate per generator.
    static PolyZonotope from_zonotope(const Zonotope& z);

    Eigen::Index dim() const { return terms_.rows; }
    Eigen::Index num_generators() const { return terms_.num_terms(); }
    const Eigen::VectorXd& constant() const { return terms_.constant; }
    const Eigen::MatrixXd& generators() const { return terms_.coeffs; }
    const ExponentMatrix& exponents() const { return terms_.exponents; }
    const std::vector<IndeterminateId>& ids() const { return terms_.ids; }

    /// b aligned with ids().
    Eigen::VectorXd evaluate(std::span<const double> b) const { return terms_.evaluate(b); }
    Eigen::VectorXd evaluate(const Assignment& b) const { return terms_.evaluate(b); }

    /// Caps the monomial count; the smallest monomials are absorbed into an
    /// independent box with fresh ids (conservative).
    PolyZonotope reduce(Eigen::Index max_generators) const;

    const detail::Terms& terms() const { return terms_; }
    static PolyZonotope from_terms(detail::Terms t);

private:
    detail::Terms terms_;
};

/// Polynomial zonotope of rows x cols matrices (3x3 rotation sets).
class MatrixPolyZonotope {
public:
    MatrixPolyZonotope() = default;
    explicit MatrixPolyZonotope(const Eigen::MatrixXd& constant);
    MatrixPolyZonotope(const Eigen::MatrixXd& constant, const std::vector<Eigen::MatrixXd>& generators,
                       const ExponentMatrix& exponents, std::vector<IndeterminateId> ids);

    Eigen::Index rows() const { return terms_.rows; }
    Eigen::Index cols() const { return terms_.cols; }
    Eigen::Index num_generators() const { return terms_.num_terms(); }
    Eigen::MatrixXd constant() const;
    Eigen::MatrixXd generator(Eigen::Index i) const;
    const ExponentMatrix& exponents() const { return terms_.exponents; }
    const std::vector<IndeterminateId>& ids() const { return terms_.ids; }

    Eigen::MatrixXd evaluate(std::span<const double> b) const;
    Eigen::MatrixXd evaluate(const Assignment& b) const;

    MatrixPolyZonotope reduce(Eigen::Index max_generators) const;

    const detail::Terms& terms() const { return terms_; }
    static MatrixPolyZonotope from_terms(detail::Terms t);

private:
    detail::Terms terms_;
};

/// Dependent Minkowski sum: like monomials (same ids, same exponents) merge,
/// disjoint ids concatenate block-diagonally.
PolyZonotope pz_add(const PolyZonotope& a, const PolyZonotope& b);
MatrixPolyZonotope pz_add(const MatrixPolyZonotope& a, const MatrixPolyZonotope& b);

/// Set product { A x }: pairwise generator products with exponent addition.
PolyZonotope pz_mul(const MatrixPolyZonotope& a, const PolyZonotope& b);
MatrixPolyZonotope pz_mul(const MatrixPolyZonotope& a, const MatrixPolyZonotope& b);
PolyZonotope pz_mul(const MatrixPolyZonotope& a, const Eigen::VectorXd& x);
PolyZonotope pz_mul(const Eigen::MatrixXd& a, const PolyZonotope& b);

/// Skew-symmetric lift of every monomial of a 3-D set.
MatrixPolyZonotope skew(const PolyZonotope& a);

/// Set cross product { a x b } = skew(a) b.
PolyZonotope pz_cross(const PolyZonotope& a, const PolyZonotope& b);

/// Zonotope enclosure: all-even monomials range over [0, 1] and contribute a
/// centre shift plus a half generator; the rest range over [-1, 1].
Zonotope pz_enclose(const PolyZonotope& a);

}  // namespace rail::pz

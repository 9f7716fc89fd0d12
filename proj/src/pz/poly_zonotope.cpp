#include "rail/pz/poly_zonotope.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace rail::pz {

namespace {
std::atomic<IndeterminateId> g_next_id{1};
}  // namespace

IndeterminateId allocate_ids(std::size_t count) {
    return g_next_id.fetch_add(static_cast<IndeterminateId>(count));
}

namespace detail {

namespace {

bool row_less(const ExponentMatrix& e, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
        if (e(a, k) != e(b, k)) return e(a, k) > e(b, k);
    }
    return false;
}

bool row_equal(const ExponentMatrix& e, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
        if (e(a, k) != e(b, k)) return false;
    }
    return true;
}

// Union of two sorted id lists plus the column of each input id in the union.
struct IdUnion {
    std::vector<IndeterminateId> ids;
    std::vector<Eigen::Index> a_cols;
    std::vector<Eigen::Index> b_cols;
};

IdUnion unite(const std::vector<IndeterminateId>& a, const std::vector<IndeterminateId>& b) {
    IdUnion u;
    u.ids.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        const Eigen::Index col = static_cast<Eigen::Index>(u.ids.size());
        if (j == b.size() || (i < a.size() && a[i] < b[j])) {
            u.ids.push_back(a[i++]);
            u.a_cols.push_back(col);
        } else if (i == a.size() || b[j] < a[i]) {
            u.ids.push_back(b[j++]);
            u.b_cols.push_back(col);
        } else {
            u.ids.push_back(a[i++]);
            ++j;
            u.a_cols.push_back(col);
            u.b_cols.push_back(col);
        }
    }
    return u;
}

ExponentMatrix relayout(const ExponentMatrix& e, const std::vector<Eigen::Index>& cols,
                        Eigen::Index width) {
    ExponentMatrix out = ExponentMatrix::Zero(e.rows(), width);
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
        out.col(cols[static_cast<std::size_t>(k)]) = e.col(k);
    }
    return out;
}

bool all_even(const ExponentMatrix& e, Eigen::Index row) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
        if (e(row, k) % 2 != 0) return false;
    }
    return true;
}

}  // namespace

void Terms::validate() const {
    if (constant.size() != size()) {
        throw std::invalid_argument("PolyZonotope: constant term has wrong size");
    }
    if (coeffs.cols() > 0 && coeffs.rows() != size()) {
        throw std::invalid_argument("PolyZonotope: generator size does not match the set dimension");
    }
    if (exponents.rows() != coeffs.cols()) {
        throw std::invalid_argument("PolyZonotope: exponent rows must equal generator count");
    }
    if (exponents.cols() != static_cast<Eigen::Index>(ids.size())) {
        throw std::invalid_argument("PolyZonotope: exponent row length must equal id count");
    }
    if ((exponents.array() < 0).any()) {
        throw std::invalid_argument("PolyZonotope: exponents must be nonnegative");
    }
    for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] <= ids[i - 1]) throw std::invalid_argument("PolyZonotope: ids must be distinct");
    }
}

void Terms::normalize() {
    const Eigen::Index m = num_terms();
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        if (exponents.row(i).isZero()) {
            constant += coeffs.col(i);
        } else {
            order.push_back(i);
        }
    }
    // Rows compare as byte strings when every exponent fits in a byte, which is
    // the common case and far cheaper than element-wise comparison.
    const Eigen::Index w = exponents.cols();
    const bool packed = m == 0 || w == 0 || exponents.maxCoeff() <= 255;
    std::vector<unsigned char> keys;
    if (packed) {
        keys.resize(static_cast<std::size_t>(m * w));
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index k = 0; k < w; ++k)
                keys[static_cast<std::size_t>(i * w + k)] = static_cast<unsigned char>(exponents(i, k));
    }
    const auto key = [&](Eigen::Index i) { return keys.data() + i * w; };
    const auto wbytes = static_cast<std::size_t>(w);
    const auto same = [&](Eigen::Index a, Eigen::Index b) {
        return packed ? std::memcmp(key(a), key(b), wbytes) == 0 : row_equal(exponents, a, b);
    };
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (packed) {
            const int c = std::memcmp(key(a), key(b), wbytes);
            return c != 0 ? c > 0 : a < b;
        }
        if (row_less(exponents, a, b)) return true;
        if (row_less(exponents, b, a)) return false;
        return a < b;
    });

    Eigen::MatrixXd merged(size(), static_cast<Eigen::Index>(order.size()));
    std::vector<Eigen::Index> source;
    source.reserve(order.size());
    Eigen::Index out = -1;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Eigen::Index i = order[k];
        if (out >= 0 && same(source.back(), i)) {
            merged.col(out) += coeffs.col(i);
        } else {
            ++out;
            merged.col(out) = coeffs.col(i);
            source.push_back(i);
        }
    }

    std::vector<Eigen::Index> live;
    for (Eigen::Index k = 0; k <= out; ++k) {
        if (!merged.col(k).isZero()) live.push_back(k);
    }
    std::vector<bool> used(ids.size(), false);
    for (Eigen::Index k : live) {
        for (Eigen::Index c = 0; c < exponents.cols(); ++c) {
            if (exponents(source[static_cast<std::size_t>(k)], c) != 0) used[static_cast<std::size_t>(c)] = true;
        }
    }
    std::vector<IndeterminateId> new_ids;
    std::vector<Eigen::Index> id_cols;
    for (std::size_t c = 0; c < ids.size(); ++c) {
        if (used[c]) {
            new_ids.push_back(ids[c]);
            id_cols.push_back(static_cast<Eigen::Index>(c));
        }
    }

    Eigen::MatrixXd new_coeffs(size(), static_cast<Eigen::Index>(live.size()));
    ExponentMatrix new_exp(static_cast<Eigen::Index>(live.size()), static_cast<Eigen::Index>(new_ids.size()));
    for (std::size_t k = 0; k < live.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        new_coeffs.col(row) = merged.col(live[k]);
        const Eigen::Index src = source[static_cast<std::size_t>(live[k])];
        for (std::size_t c = 0; c < id_cols.size(); ++c) {
            new_exp(row, static_cast<Eigen::Index>(c)) = exponents(src, id_cols[c]);
        }
    }
    coeffs = std::move(new_coeffs);
    exponents = std::move(new_exp);
    ids = std::move(new_ids);
}

void Terms::reduce(Eigen::Index max_terms) {
    const Eigen::Index m = num_terms();
    if (m <= max_terms) return;
    const Eigen::Index d = size();
    const Eigen::Index keep = std::max<Eigen::Index>(0, max_terms - d);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::VectorXd norms = coeffs.colwise().norm();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return norms[a] > norms[b]; });

    Eigen::VectorXd radius = Eigen::VectorXd::Zero(d);
    for (std::size_t k = static_cast<std::size_t>(keep); k < order.size(); ++k) {
        const Eigen::Index i = order[k];
        if (all_even(exponents, i)) {
            constant += 0.5 * coeffs.col(i);
            radius += 0.5 * coeffs.col(i).cwiseAbs();
        } else {
            radius += coeffs.col(i).cwiseAbs();
        }
    }
    std::vector<Eigen::Index> box_rows;
    for (Eigen::Index r = 0; r < d; ++r) {
        if (radius[r] > 0.0) box_rows.push_back(r);
    }
    const auto nbox = static_cast<Eigen::Index>(box_rows.size());
    const IndeterminateId first = allocate_ids(box_rows.size());

    std::vector<Eigen::Index> kept(order.begin(), order.begin() + keep);
    std::sort(kept.begin(), kept.end());
    const auto old_ids = static_cast<Eigen::Index>(ids.size());
    Eigen::MatrixXd new_coeffs = Eigen::MatrixXd::Zero(d, keep + nbox);
    ExponentMatrix new_exp = ExponentMatrix::Zero(keep + nbox, old_ids + nbox);
    for (Eigen::Index k = 0; k < keep; ++k) {
        new_coeffs.col(k) = coeffs.col(kept[static_cast<std::size_t>(k)]);
        new_exp.row(k).head(old_ids) = exponents.row(kept[static_cast<std::size_t>(k)]);
    }
    for (Eigen::Index k = 0; k < nbox; ++k) {
        new_coeffs(box_rows[static_cast<std::size_t>(k)], keep + k) = radius[box_rows[static_cast<std::size_t>(k)]];
        new_exp(keep + k, old_ids + k) = 1;
        ids.push_back(first + static_cast<IndeterminateId>(k));
    }
    coeffs = std::move(new_coeffs);
    exponents = std::move(new_exp);
    normalize();
}

Eigen::VectorXd Terms::evaluate(std::span<const double> b) const {
    if (b.size() != ids.size()) {
        throw std::invalid_argument("PolyZonotope::evaluate: assignment length must equal id count");
    }
    Eigen::VectorXd out = constant;
    for (Eigen::Index i = 0; i < num_terms(); ++i) {
        double mono = 1.0;
        for (Eigen::Index k = 0; k < exponents.cols(); ++k) {
            for (int p = 0; p < exponents(i, k); ++p) mono *= b[static_cast<std::size_t>(k)];
        }
        out += mono * coeffs.col(i);
    }
    return out;
}

Eigen::VectorXd Terms::evaluate(const Assignment& b) const {
    std::vector<double> values;
    values.reserve(ids.size());
    for (IndeterminateId id : ids) {
        auto it = b.find(id);
        if (it == b.end()) throw std::invalid_argument("PolyZonotope::evaluate: unassigned indeterminate");
        values.push_back(it->second);
    }
    return evaluate(values);
}

Terms make_terms(Eigen::Index rows, Eigen::Index cols, Eigen::VectorXd constant, Eigen::MatrixXd coeffs,
                 ExponentMatrix exponents, std::vector<IndeterminateId> ids) {
    Terms t;
    t.rows = rows;
    t.cols = cols;
    t.constant = std::move(constant);
    t.coeffs = coeffs.cols() == 0 ? Eigen::MatrixXd(rows * cols, 0) : std::move(coeffs);
    t.exponents = exponents.size() == 0 ? ExponentMatrix::Zero(t.coeffs.cols(), static_cast<Eigen::Index>(ids.size()))
                                        : std::move(exponents);
    if (!t.constant.allFinite() || !t.coeffs.allFinite()) {
        throw std::invalid_argument("PolyZonotope: non-finite generators");
    }
    // sort ids, permuting exponent columns to match
    std::vector<std::size_t> perm(ids.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    if (t.exponents.cols() == static_cast<Eigen::Index>(ids.size())) {
        ExponentMatrix e(t.exponents.rows(), t.exponents.cols());
        for (std::size_t c = 0; c < perm.size(); ++c) {
            e.col(static_cast<Eigen::Index>(c)) = t.exponents.col(static_cast<Eigen::Index>(perm[c]));
        }
        t.exponents = std::move(e);
    }
    t.ids.resize(ids.size());
    for (std::size_t c = 0; c < perm.size(); ++c) t.ids[c] = ids[perm[c]];
    t.validate();
    t.normalize();
    return t;
}

Terms add(const Terms& a, const Terms& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw std::invalid_argument("pz_add: dimension mismatch");
    }
    const IdUnion u = unite(a.ids, b.ids);
    const auto width = static_cast<Eigen::Index>(u.ids.size());
    Terms t;
    t.rows = a.rows;
    t.cols = a.cols;
    t.constant = a.constant + b.constant;
    t.coeffs.resize(a.size(), a.num_terms() + b.num_terms());
    t.coeffs << a.coeffs, b.coeffs;
    t.exponents.resize(t.coeffs.cols(), width);
    t.exponents << relayout(a.exponents, u.a_cols, width), relayout(b.exponents, u.b_cols, width);
    t.ids = u.ids;
    t.normalize();
    return t;
}

namespace {

template <int R, int K, int C>
void product_terms(const Terms& a, const Terms& b, const ExponentMatrix& ea, const ExponentMatrix& eb,
                   Terms& t) {
    using MatA = Eigen::Matrix<double, R, K>;
    using MatB = Eigen::Matrix<double, K, C>;
    using MatC = Eigen::Matrix<double, R, C>;
    const Eigen::Index ar = a.rows, ak = a.cols, bc = b.cols;
    const Eigen::Index ma = a.num_terms(), mb = b.num_terms();
    auto a_term = [&](Eigen::Index i) { return i == 0 ? a.constant.data() : a.coeffs.col(i - 1).data(); };
    auto b_term = [&](Eigen::Index j) { return j == 0 ? b.constant.data() : b.coeffs.col(j - 1).data(); };

    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i <= ma; ++i) {
        Eigen::Map<const MatA> ai(a_term(i), ar, ak);
        for (Eigen::Index j = 0; j <= mb; ++j) {
            Eigen::Map<const MatB> bj(b_term(j), ak, bc);
            if (i == 0 && j == 0) {
                Eigen::Map<MatC>(t.constant.data(), ar, bc).noalias() = ai * bj;
                continue;
            }
            Eigen::Map<MatC>(t.coeffs.col(col).data(), ar, bc).noalias() = ai * bj;
            if (i == 0) {
                t.exponents.row(col) = eb.row(j - 1);
            } else if (j == 0) {
                t.exponents.row(col) = ea.row(i - 1);
            } else {
                t.exponents.row(col) = ea.row(i - 1) + eb.row(j - 1);
            }
            ++col;
        }
    }
}

}  // namespace

Terms multiply(const Terms& a, const Terms& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("pz_mul: inner dimensions do not agree");
    }
    const IdUnion u = unite(a.ids, b.ids);
    const auto width = static_cast<Eigen::Index>(u.ids.size());
    const ExponentMatrix ea = relayout(a.exponents, u.a_cols, width);
    const ExponentMatrix eb = relayout(b.exponents, u.b_cols, width);
    const Eigen::Index ma = a.num_terms(), mb = b.num_terms();
    const Eigen::Index count = (ma + 1) * (mb + 1) - 1;

    Terms t;
    t.rows = a.rows;
    t.cols = b.cols;
    t.constant.resize(t.size());
    t.coeffs.resize(t.size(), count);
    t.exponents.resize(count, width);
    t.ids = u.ids;
    if (a.rows == 3 && a.cols == 3 && b.cols == 3) {
        product_terms<3, 3, 3>(a, b, ea, eb, t);
    } else if (a.rows == 3 && a.cols == 3 && b.cols == 1) {
        product_terms<3, 3, 1>(a, b, ea, eb, t);
    } else {
        product_terms<Eigen::Dynamic, Eigen::Dynamic, Eigen::Dynamic>(a, b, ea, eb, t);
    }
    t.normalize();
    return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------

PolyZonotope::PolyZonotope(const Eigen::VectorXd& constant)
    : terms_(detail::make_terms(constant.size(), 1, constant, Eigen::MatrixXd(constant.size(), 0),
                                ExponentMatrix(0, 0), {})) {}

PolyZonotope::PolyZonotope(const Eigen::VectorXd& constant, const Eigen::MatrixXd& generators,
                           const ExponentMatrix& exponents, std::vector<IndeterminateId> ids)
    : terms_(detail::make_terms(constant.size(), 1, constant, generators, exponents, std::move(ids))) {
    if (exponents.rows() != generators.cols()) {
        throw std::invalid_argument("PolyZonotope: exponent rows must equal generator count");
    }
}

PolyZonotope PolyZonotope::from_zonotope(const Zonotope& z) {
    const Eigen::Index m = z.num_generators();
    const IndeterminateId first = allocate_ids(static_cast<std::size_t>(m));
    std::vector<IndeterminateId> ids(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) ids[static_cast<std::size_t>(i)] = first + static_cast<IndeterminateId>(i);
    return {z.center(), z.generators(), ExponentMatrix::Identity(m, m), std::move(ids)};
}

PolyZonotope PolyZonotope::reduce(Eigen::Index max_generators) const {
    detail::Terms t = terms_;
    t.reduce(max_generators);
    return from_terms(std::move(t));
}

PolyZonotope PolyZonotope::from_terms(detail::Terms t) {
    if (t.cols != 1) throw std::invalid_argument("PolyZonotope: expected vector-valued terms");
    PolyZonotope p;
    p.terms_ = std::move(t);
    return p;
}

MatrixPolyZonotope::MatrixPolyZonotope(const Eigen::MatrixXd& constant)
    : MatrixPolyZonotope(constant, {}, ExponentMatrix(0, 0), {}) {}

MatrixPolyZonotope::MatrixPolyZonotope(const Eigen::MatrixXd& constant,
                                       const std::vector<Eigen::MatrixXd>& generators,
                                       const ExponentMatrix& exponents, std::vector<IndeterminateId> ids) {
    const Eigen::Index r = constant.rows(), c = constant.cols();
    if (exponents.rows() != static_cast<Eigen::Index>(generators.size())) {
        throw std::invalid_argument("MatrixPolyZonotope: exponent rows must equal generator count");
    }
    Eigen::MatrixXd coeffs(r * c, static_cast<Eigen::Index>(generators.size()));
    for (std::size_t i = 0; i < generators.size(); ++i) {
        if (generators[i].rows() != r || generators[i].cols() != c) {
            throw std::invalid_argument("MatrixPolyZonotope: generator shape mismatch");
        }
        coeffs.col(static_cast<Eigen::Index>(i)) = generators[i].reshaped();
    }
    terms_ = detail::make_terms(r, c, constant.reshaped(), coeffs,
                                exponents.rows() == 0 ? ExponentMatrix(0, static_cast<Eigen::Index>(ids.size()))
                                                      : exponents,
                                std::move(ids));
}

Eigen::MatrixXd MatrixPolyZonotope::constant() const {
    return terms_.constant.reshaped(terms_.rows, terms_.cols);
}

Eigen::MatrixXd MatrixPolyZonotope::generator(Eigen::Index i) const {
    return terms_.coeffs.col(i).reshaped(terms_.rows, terms_.cols);
}

Eigen::MatrixXd MatrixPolyZonotope::evaluate(std::span<const double> b) const {
    return terms_.evaluate(b).reshaped(terms_.rows, terms_.cols);
}

Eigen::MatrixXd MatrixPolyZonotope::evaluate(const Assignment& b) const {
    return terms_.evaluate(b).reshaped(terms_.rows, terms_.cols);
}

MatrixPolyZonotope MatrixPolyZonotope::reduce(Eigen::Index max_generators) const {
    detail::Terms t = terms_;
    t.reduce(max_generators);
    return from_terms(std::move(t));
}

MatrixPolyZonotope MatrixPolyZonotope::from_terms(detail::Terms t) {
    MatrixPolyZonotope p;
    p.terms_ = std::move(t);
    return p;
}

// ---------------------------------------------------------------------------

PolyZonotope pz_add(const PolyZonotope& a, const PolyZonotope& b) {
    return PolyZonotope::from_terms(detail::add(a.terms(), b.terms()));
}

MatrixPolyZonotope pz_add(const MatrixPolyZonotope& a, const MatrixPolyZonotope& b) {
    return MatrixPolyZonotope::from_terms(detail::add(a.terms(), b.terms()));
}

PolyZonotope pz_mul(const MatrixPolyZonotope& a, const PolyZonotope& b) {
    return PolyZonotope::from_terms(detail::multiply(a.terms(), b.terms()));
}

MatrixPolyZonotope pz_mul(const MatrixPolyZonotope& a, const MatrixPolyZonotope& b) {
    return MatrixPolyZonotope::from_terms(detail::multiply(a.terms(), b.terms()));
}

PolyZonotope pz_mul(const MatrixPolyZonotope& a, const Eigen::VectorXd& x) {
    return pz_mul(a, PolyZonotope(x));
}

PolyZonotope pz_mul(const Eigen::MatrixXd& a, const PolyZonotope& b) {
    return pz_mul(MatrixPolyZonotope(a), b);
}

MatrixPolyZonotope skew(const PolyZonotope& a) {
    if (a.dim() != 3) throw std::invalid_argument("skew: set must be 3-dimensional");
    auto lift = [](const Eigen::Vector3d& x) {
        Eigen::Matrix<double, 9, 1> m;
        // column-major [0 -x3 x2; x3 0 -x1; -x2 x1 0]
        m << 0.0, x[2], -x[1], -x[2], 0.0, x[0], x[1], -x[0], 0.0;
        return m;
    };
    const detail::Terms& src = a.terms();
    detail::Terms t;
    t.rows = 3;
    t.cols = 3;
    t.constant = lift(src.constant);
    t.coeffs.resize(9, src.num_terms());
    for (Eigen::Index i = 0; i < src.num_terms(); ++i) t.coeffs.col(i) = lift(src.coeffs.col(i));
    t.exponents = src.exponents;
    t.ids = src.ids;
    return MatrixPolyZonotope::from_terms(std::move(t));
}

PolyZonotope pz_cross(const PolyZonotope& a, const PolyZonotope& b) {
    if (a.dim() != 3 || b.dim() != 3) {
        throw std::invalid_argument("pz_cross: both sets must be 3-dimensional");
    }
    return pz_mul(skew(a), b);
}

Zonotope pz_enclose(const PolyZonotope& a) {
    const detail::Terms& t = a.terms();
    Eigen::VectorXd center = t.constant;
    Eigen::MatrixXd g(t.rows, t.num_terms());
    for (Eigen::Index i = 0; i < t.num_terms(); ++i) {
        if (detail::all_even(t.exponents, i)) {
            center += 0.5 * t.coeffs.col(i);
            g.col(i) = 0.5 * t.coeffs.col(i);
        } else {
            g.col(i) = t.coeffs.col(i);
        }
    }
    return {center, g};
}

}  // namespace rail::pz

#include "optlab/linalg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace optlab {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      engine_(hash_pair(master_seed, stream_id)) {}

RngStream RngStream::fork(std::uint64_t index) const {
    return RngStream(master_seed_, hash_pair(stream_id_, index));
}

double RngStream::uniform_open() {
    // 53 random bits mapped to the cell midpoints (k + 1/2) / 2^53.
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

Vector sample_normal_vector(Eigen::Index d, RngStream& rng) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    return v;
}

Matrix sample_normal_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
    Matrix m(rows, cols);
    // Row-major fill order so the draw sequence does not depend on storage order.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

Matrix sample_skew(Eigen::Index d, RngStream& rng) {
    if (d < 1) throw std::invalid_argument("sample_skew: d must be positive");
    const Matrix m = sample_normal_matrix(d, d, rng);
    Matrix a = m - m.transpose();
    return a;
}

namespace {

void require_skew(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("expm_skew: matrix is not square");
    if (a.size() == 0) throw std::invalid_argument("expm_skew: empty matrix");
    if (!a.allFinite()) throw std::invalid_argument("expm_skew: non-finite entries");
    const double asym = (a + a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw std::invalid_argument("expm_skew: matrix is not skew-symmetric (|A+A^T|_max = " +
                                    std::to_string(asym) + ")");
}

}  // namespace

Matrix expm_skew(const Matrix& skew, double t) {
    require_skew(skew);
    const Eigen::Index n = skew.rows();
    if (t == 0.0) return Matrix::Identity(n, n);

    Matrix x = t * skew;
    const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    x /= std::ldexp(1.0, squarings);

    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 40; ++k) {
        term = (term * x) / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-18 * result.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) result = (result * result).eval();
    return result;
}

double cauchy_quantile(double u) { return std::tan(std::numbers::pi * (u - 0.5)); }

Vector sample_cauchy_vector(Eigen::Index d, RngStream& rng) {
    if (d < 1) throw std::invalid_argument("sample_cauchy_vector: d must be positive");
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = cauchy_quantile(rng.uniform_open());
    return v;
}

Matrix sample_orthogonal(Eigen::Index n, RngStream& rng) {
    const Matrix g = sample_normal_matrix(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

double orthogonality_error(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

namespace {

void check_mode_inputs(const Vector& x, const TensorShape& shape, const Matrix& q1,
                       const Matrix& q2, const Matrix& q3) {
    for (auto s : shape)
        if (s < 1) throw std::invalid_argument("mode_reshape_rotate: shape factors must be >= 1");
    if (shape[0] * shape[1] * shape[2] != x.size())
        throw std::invalid_argument("mode_reshape_rotate: shape does not multiply to d");
    const Matrix* qs[3] = {&q1, &q2, &q3};
    for (int k = 0; k < 3; ++k) {
        if (qs[k]->rows() != shape[k] || qs[k]->cols() != shape[k])
            throw std::invalid_argument("mode_reshape_rotate: Q" + std::to_string(k + 1) +
                                        " has the wrong size");
        if (orthogonality_error(*qs[k]) > 1e-10)
            throw std::invalid_argument("mode_reshape_rotate: Q" + std::to_string(k + 1) +
                                        " is not orthogonal");
    }
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Applies op(Qk) on every mode, op = identity or transpose.
template <bool Transposed>
Vector apply_modes(const Vector& x, const TensorShape& shape, const Matrix& q1, const Matrix& q2,
                   const Matrix& q3) {
    const auto [s1, s2, s3] = shape;
    auto op = [](const Matrix& q) -> Matrix {
        if constexpr (Transposed) return q.transpose();
        else return q;
    };
    const Matrix a1 = op(q1), a2 = op(q2), a3 = op(q3);

    Vector y = x;
    // mode 1: view as s1 x (s2 s3)
    {
        Eigen::Map<RowMajor> t(y.data(), s1, s2 * s3);
        t = (a1 * t).eval();
    }
    // mode 2: each leading index holds an s2 x s3 slice
    for (Eigen::Index i = 0; i < s1; ++i) {
        Eigen::Map<RowMajor> t(y.data() + i * s2 * s3, s2, s3);
        t = (a2 * t).eval();
    }
    // mode 3: view as (s1 s2) x s3
    {
        Eigen::Map<RowMajor> t(y.data(), s1 * s2, s3);
        t = (t * a3.transpose()).eval();
    }
    return y;
}

}  // namespace

Vector mode_reshape_rotate(const Vector& x, const TensorShape& shape, const Matrix& q1,
                           const Matrix& q2, const Matrix& q3) {
    check_mode_inputs(x, shape, q1, q2, q3);
    return apply_modes<false>(x, shape, q1, q2, q3);
}

Vector mode_reshape_rotate_transpose(const Vector& x, const TensorShape& shape,
                                     const Matrix& q1, const Matrix& q2, const Matrix& q3) {
    check_mode_inputs(x, shape, q1, q2, q3);
    return apply_modes<true>(x, shape, q1, q2, q3);
}

}  // namespace optlab

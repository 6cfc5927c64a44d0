#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>

namespace optlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// =============================================================================
/// Deterministic random stream identified by (master_seed, stream_id).
///
/// Two streams built from the same pair reproduce the same draw sequence.
/// Child streams for grid cells or probes are derived with fork(), which
/// hashes the parent identity with the child index; streams are never shared
/// between workers.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Independent child stream; a pure function of (this identity, index).
    RngStream fork(std::uint64_t index) const;

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform_open();
    double normal();
    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer, used to derive stream ids.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b);

Vector sample_normal_vector(Eigen::Index d, RngStream& rng);
Matrix sample_normal_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng);

/// A = M - M^T with M i.i.d. standard normal.
Matrix sample_skew(Eigen::Index d, RngStream& rng);

/// exp(t A) for skew-symmetric A by scaling and squaring of a Taylor series.
/// Throws std::invalid_argument when A is not square or |A + A^T|_max > 1e-12.
Matrix expm_skew(const Matrix& skew, double t);

/// Standard Cauchy quantile tan(pi (u - 1/2)).
double cauchy_quantile(double u);
Vector sample_cauchy_vector(Eigen::Index d, RngStream& rng);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// diagonal of R made positive).
Matrix sample_orthogonal(Eigen::Index n, RngStream& rng);

/// |Q^T Q - I|_F
double orthogonality_error(const Matrix& q);

using TensorShape = std::array<Eigen::Index, 3>;

/// Treats x as a row-major s1 x s2 x s3 tensor and multiplies mode k by Qk.
/// The result element (a,b,c) is sum_{i,j,k} Q1(a,i) Q2(b,j) Q3(c,k) x(i,j,k),
/// i.e. the map (Q1 kron Q2 kron Q3) in row-major flattening.
Vector mode_reshape_rotate(const Vector& x, const TensorShape& shape, const Matrix& q1,
                           const Matrix& q2, const Matrix& q3);

/// Same map with each Qk transposed; the inverse of mode_reshape_rotate.
Vector mode_reshape_rotate_transpose(const Vector& x, const TensorShape& shape,
                                     const Matrix& q1, const Matrix& q2, const Matrix& q3);

}  // namespace optlab

#include "optlab/linalg.hpp"

#include <doctest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace optlab;

TEST_CASE("rng streams are reproducible and forks differ") {
    RngStream a(7, 3), b(7, 3), c(7, 4);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    RngStream a2(7, 3);
    CHECK(a2.next_u64() != c.next_u64());

    const RngStream parent(1, 2);
    RngStream f1 = parent.fork(5), f2 = parent.fork(5), f3 = parent.fork(6);
    CHECK(f1.stream_id() == f2.stream_id());
    CHECK(f1.stream_id() != f3.stream_id());
    CHECK(f1.next_u64() == f2.next_u64());

    RngStream u(0, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform_open();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("sample_skew") {
    RngStream rng(0, 1);
    const Matrix a1 = sample_skew(1, rng);
    CHECK(a1.rows() == 1);
    CHECK(a1(0, 0) == 0.0);

    const Matrix a = sample_skew(30, rng);
    CHECK((a + a.transpose()).cwiseAbs().maxCoeff() == 0.0);

    RngStream r1(42, 1), r2(42, 1);
    const Matrix s1 = sample_skew(3, r1), s2 = sample_skew(3, r2);
    CHECK((s1.array() == s2.array()).all());

    CHECK_THROWS_AS(sample_skew(0, rng), std::invalid_argument);
}

TEST_CASE("expm_skew closed forms") {
    Matrix a(2, 2);
    a << 0, -1, 1, 0;
    const Matrix r = expm_skew(a, std::numbers::pi / 2);
    CHECK((r - a).cwiseAbs().maxCoeff() <= 1e-12);

    const Matrix r0 = expm_skew(a, 0.0);
    CHECK((r0.array() == Matrix::Identity(2, 2).array()).all());

    // 2x2 rotation by angle t
    for (double t : {0.1, 1.0, 3.0, -2.5, 40.0}) {
        const Matrix q = expm_skew(a, t);
        CHECK(q(0, 0) == doctest::Approx(std::cos(t)).epsilon(1e-12));
        CHECK(q(1, 0) == doctest::Approx(std::sin(t)).epsilon(1e-12));
    }
}

TEST_CASE("expm_skew agrees with the eigendecomposition and is orthogonal") {
    RngStream rng(3, 1);
    const Matrix a = sample_skew(20, rng);
    const Matrix r = expm_skew(a, 0.3);
    CHECK(orthogonality_error(r) <= 1e-10);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-9);

    // exp(tA) exp(-tA) = I and exp(2tA) = exp(tA)^2
    const Matrix rinv = expm_skew(a, -0.3);
    CHECK((r * rinv - Matrix::Identity(20, 20)).norm() <= 1e-10);
    CHECK((expm_skew(a, 0.6) - r * r).norm() <= 1e-10);

    // A^2 is symmetric negative semidefinite; compare exp(tA) on its eigenvectors
    // through the real Schur form of A: exp(tA) v = cos/sin combination.
    Eigen::ComplexEigenSolver<Matrix> ces(a);
    const Eigen::MatrixXcd v = ces.eigenvectors();
    const Eigen::VectorXcd lam = ces.eigenvalues();
    const Eigen::MatrixXcd oracle = v * (lam * 0.3).array().exp().matrix().asDiagonal() * v.inverse();
    CHECK((oracle.real() - r).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("expm_skew rejects bad input") {
    CHECK_THROWS_AS(expm_skew(Matrix::Zero(2, 3), 1.0), std::invalid_argument);
    Matrix nonskew(2, 2);
    nonskew << 0, 1, 1, 0;
    CHECK_THROWS_AS(expm_skew(nonskew, 1.0), std::invalid_argument);
}

TEST_CASE("cauchy quantiles") {
    CHECK(cauchy_quantile(0.5) == 0.0);
    CHECK(cauchy_quantile(0.75) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cauchy_quantile(0.25) == doctest::Approx(-1.0).epsilon(1e-14));

    RngStream rng(11, 2);
    const Vector c = sample_cauchy_vector(100000, rng);
    std::vector<double> abs(c.data(), c.data() + c.size());
    for (double& x : abs) x = std::abs(x);
    std::nth_element(abs.begin(), abs.begin() + abs.size() / 2, abs.end());
    const double med = abs[abs.size() / 2];
    CHECK(med >= 0.97);
    CHECK(med <= 1.03);
    CHECK(c.allFinite());
}

TEST_CASE("normal samples have unit variance") {
    RngStream rng(5, 5);
    const Vector z = sample_normal_vector(200000, rng);
    CHECK(std::abs(z.mean()) < 0.01);
    const double var = (z.array() - z.mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Haar orthogonal samples") {
    RngStream rng(9, 9);
    for (int n : {1, 2, 7, 40}) {
        const Matrix q = sample_orthogonal(n, rng);
        CHECK(orthogonality_error(q) <= 1e-12 * n);
    }
    // E[Q_11^2] = 1/n under the Haar measure
    const int n = 5, draws = 4000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        const Matrix q = sample_orthogonal(n, rng);
        acc += q(0, 0) * q(0, 0);
    }
    CHECK(acc / draws == doctest::Approx(1.0 / n).epsilon(0.08));
}

TEST_CASE("mode_reshape_rotate") {
    RngStream rng(1, 1);
    const Vector x = sample_normal_vector(24, rng);
    const TensorShape shape{2, 3, 4};
    const Matrix i2 = Matrix::Identity(2, 2), i3 = Matrix::Identity(3, 3), i4 = Matrix::Identity(4, 4);
    CHECK((mode_reshape_rotate(x, shape, i2, i3, i4) - x).norm() == 0.0);

    const Matrix q1 = sample_orthogonal(2, rng), q2 = sample_orthogonal(3, rng), q3 = sample_orthogonal(4, rng);
    const Vector y = mode_reshape_rotate(x, shape, q1, q2, q3);
    CHECK(std::abs(y.norm() - x.norm()) <= 1e-10);
    CHECK((mode_reshape_rotate_transpose(y, shape, q1, q2, q3) - x).norm() <= 1e-10);

    // Row-major flattening: the map is kron(Q1, kron(Q2, Q3)).
    const Matrix k = Eigen::kroneckerProduct(q1, Eigen::kroneckerProduct(q2, q3).eval()).eval();
    CHECK((k * x - y).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mode_reshape_rotate matches the explicit Kronecker matrix for d = 8") {
    RngStream rng(2, 2);
    const Vector x = sample_normal_vector(8, rng);
    const Matrix q1 = sample_orthogonal(2, rng), q2 = sample_orthogonal(2, rng), q3 = sample_orthogonal(2, rng);
    const Matrix k = Eigen::kroneckerProduct(q1, Eigen::kroneckerProduct(q2, q3).eval()).eval();
    CHECK((k * x - mode_reshape_rotate(x, {2, 2, 2}, q1, q2, q3)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mode_reshape_rotate validates its input") {
    const Vector x = Vector::Ones(8);
    const Matrix i2 = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(mode_reshape_rotate(x, {2, 2, 3}, i2, i2, Matrix::Identity(3, 3)), std::invalid_argument);
    CHECK_THROWS_AS(mode_reshape_rotate(x, {2, 2, 2}, 2.0 * i2, i2, i2), std::invalid_argument);
}

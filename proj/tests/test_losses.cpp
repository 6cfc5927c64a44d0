#include "optlab/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace optlab;

namespace {

Matrix diag(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v[i++] = x;
    return v.asDiagonal();
}

Matrix random_psd(Eigen::Index d, RngStream& rng) {
    const Matrix g = sample_normal_matrix(d, d, rng);
    const Matrix a = g * g.transpose() / static_cast<double>(d);
    return 0.5 * (a + a.transpose());
}

// Central differences of value and grad against grad and hvp.
void check_finite_differences(const LossOracle& f, RngStream& rng) {
    const Eigen::Index d = f.dim();
    const Vector x = sample_normal_vector(d, rng);
    const Vector v = sample_normal_vector(d, rng);
    const double h = 1e-5;
    const Vector g = f.grad(x);
    Vector fd(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector e = Vector::Zero(d);
        e[i] = h;
        fd[i] = (f.value(x + e) - f.value(x - e)) / (2 * h);
    }
    CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
    const Vector hv = f.hvp(x, v);
    const Vector fdh = (f.grad(x + h * v) - f.grad(x - h * v)) / (2 * h);
    CHECK((fdh - hv).norm() <= 1e-5 * std::max(1.0, hv.norm()));
}

}  // namespace

TEST_CASE("quadratic oracle values") {
    const auto q = quadratic_oracle({diag({1, 2})});
    const Vector x = Vector::Ones(2);
    CHECK(q->value(x) == 1.5);
    CHECK(q->grad(x) == (Vector(2) << 1, 2).finished());
    CHECK(q->value(Vector::Zero(2)) == 0.0);
    CHECK(q->grad(Vector::Zero(2)).norm() == 0.0);
    CHECK(q->deterministic());

    const auto q2 = quadratic_oracle({diag({1, 4})});
    const Vector x2 = (Vector(2) << 2, -1).finished();
    CHECK(q2->hvp(x2, Vector::Ones(2)) == (Vector(2) << 1, 4).finished());
    CHECK(q2->grad(x2) == (Vector(2) << 2, -4).finished());
}

TEST_CASE("quadratic oracle rejects non-symmetric input") {
    Matrix a(2, 2);
    a << 1, 1, 0, 1;
    CHECK_THROWS_AS(quadratic_oracle({a}), std::invalid_argument);
    CHECK_THROWS_AS(quadratic_oracle({Matrix::Zero(2, 3)}), std::invalid_argument);
}

TEST_CASE("rotated oracle") {
    RngStream rng(1, 0);
    const Matrix a = random_psd(5, rng);
    const auto inner = quadratic_oracle({a});
    const auto same = rotated_oracle(inner, RotationSpec::identity(5));
    const Vector x = sample_normal_vector(5, rng);
    CHECK(same->value(x) == inner->value(x));
    CHECK(same->grad(x) == inner->grad(x));

    const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
    Matrix r(2, 2);
    r << c, s, -s, c;
    const auto rot = rotated_oracle(quadratic_oracle({diag({1, 0})}), RotationSpec::explicit_matrix(r));
    const Vector g = rot->grad((Vector(2) << 1, 0).finished());
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));

    const RotationSpec q = RotationSpec::explicit_matrix(sample_orthogonal(5, rng));
    const auto lq = rotated_oracle(inner, q);
    CHECK(lq->value(q.apply_inverse(x)) == doctest::Approx(inner->value(x)).epsilon(1e-12));
    const Matrix h = *lq->hessian();
    const Matrix qm = q.materialize();
    CHECK((h - qm.transpose() * a * qm).norm() <= 1e-12);
}

TEST_CASE("finite-difference gradient and hvp checks") {
    RngStream rng(2, 0);
    const auto quad = quadratic_oracle({random_psd(8, rng)});
    check_finite_differences(*quad, rng);
    const auto rot = rotated_oracle(quad, RotationSpec::skew_exp(sample_skew(8, rng), 0.4));
    check_finite_differences(*rot, rng);
    const auto noisy = noisy_oracle(rot, {Vector::Constant(8, 0.3)});
    check_finite_differences(*noisy, rng);
}

TEST_CASE("noise oracle statistics") {
    const auto quad = quadratic_oracle({diag({1, 2, 3})});
    const Vector x = (Vector(3) << 1, -1, 0.5).finished();

    const auto zero = noisy_oracle(quad, {Vector::Zero(3)});
    RngStream r0(3, 0);
    CHECK(zero->stochastic_grad(x, r0) == quad->grad(x));
    CHECK_FALSE(zero->deterministic());

    const auto unit = noisy_oracle(quad, {Vector::Ones(3)});
    RngStream rng(4, 0);
    const int n = 100000;
    Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
    for (int i = 0; i < n; ++i) {
        const Vector e = unit->stochastic_grad(x, rng) - quad->grad(x);
        sum += e;
        sq += e.cwiseProduct(e);
    }
    const Vector mean = sum / n;
    const Vector var = sq / n - mean.cwiseProduct(mean);
    CHECK(mean.cwiseAbs().maxCoeff() <= 0.02);
    CHECK(var.minCoeff() >= 0.97);
    CHECK(var.maxCoeff() <= 1.03);

    CHECK_THROWS_AS(noisy_oracle(quad, {Vector::Constant(3, -1.0)}), std::invalid_argument);
    CHECK_THROWS_AS(noisy_oracle(quad, {Vector::Ones(2)}), std::invalid_argument);
}

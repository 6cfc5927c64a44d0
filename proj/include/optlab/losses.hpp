#pragma once

#include "optlab/linalg.hpp"
#include "optlab/rotations.hpp"

#include <memory>
#include <optional>

namespace optlab {

// =============================================================================
/// A loss L with value, gradient, a stochastic gradient whose expectation is
/// the gradient, and Hessian-vector products.
///
/// Oracles are immutable after construction and may be evaluated from several
/// threads at once; randomness comes only from the caller's RngStream.
class LossOracle {
public:
    virtual ~LossOracle() = default;

    virtual Eigen::Index dim() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector grad(const Vector& x) const = 0;
    virtual Vector stochastic_grad(const Vector& x, RngStream& rng) const = 0;
    virtual Vector hvp(const Vector& x, const Vector& v) const = 0;

    /// True when stochastic_grad always equals grad and consumes no randomness.
    virtual bool deterministic() const { return false; }

    /// The constant Hessian when the loss is quadratic.
    virtual std::optional<Matrix> hessian() const { return std::nullopt; }
};

using OraclePtr = std::shared_ptr<const LossOracle>;

/// L(x) = 1/2 x^T A x, so the Hessian is exactly A.
struct QuadraticSpec {
    Matrix hessian;
};

/// Per-coordinate gradient noise standard deviations.
struct NoiseSpec {
    Vector sigma;
};

/// Throws std::invalid_argument unless A is square, finite and symmetric to 1e-12.
OraclePtr quadratic_oracle(QuadraticSpec spec);

/// L~(x) = L(R x) for the orthogonal map R described by rot.
OraclePtr rotated_oracle(OraclePtr inner, RotationSpec rot);

/// Adds independent N(0, sigma_i^2) noise to every stochastic gradient call.
OraclePtr noisy_oracle(OraclePtr inner, NoiseSpec noise);

}  // namespace optlab

#pragma once

#include "optlab/linalg.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace optlab {

/// One RandPerm stage: permute coordinates, then rotate every mode of the
/// reshaped s1 x s2 x s3 tensor.
struct RandPermLayer {
    std::vector<Eigen::Index> perm;
    TensorShape shape;
    Matrix q1, q2, q3;
};

// =============================================================================
/// An orthogonal map T on R^d.
///
/// Variants: identity, an explicit orthogonal matrix, a coordinate
/// permutation (T x)_i = x_{perm[i]}, exp(t A) for skew A, a chain of RandPerm
/// layers, and a composition [R1, ..., Rn] meaning R1 o ... o Rn.
class RotationSpec {
public:
    struct Identity {
        Eigen::Index dim;
    };
    struct Explicit {
        Matrix q;
    };
    struct Permutation {
        std::vector<Eigen::Index> perm;
    };
    struct SkewExp {
        Matrix skew;
        double t;
        Matrix rotation;  // exp(t * skew), computed once
    };
    struct RandPerm {
        std::vector<RandPermLayer> layers;
    };
    struct Composed {
        std::vector<RotationSpec> parts;
    };
    using Variant = std::variant<Identity, Explicit, Permutation, SkewExp, RandPerm, Composed>;

    static RotationSpec identity(Eigen::Index d);
    static RotationSpec explicit_matrix(Matrix q);
    static RotationSpec permutation(std::vector<Eigen::Index> perm);
    static RotationSpec skew_exp(Matrix skew, double t);
    static RotationSpec randperm(std::vector<RandPermLayer> layers);
    static RotationSpec composed(std::vector<RotationSpec> parts);

    Eigen::Index dim() const;
    /// "identity", "explicit", "permutation", "skew_exp", "randperm", "composed"
    std::string kind() const;
    /// The exp(tA) parameter for skew_exp specs, 0 otherwise.
    double t() const;

    Vector apply(const Vector& x) const;
    Vector apply_inverse(const Vector& x) const;

    /// Dense d x d matrix of the map, built column by column.
    Matrix materialize() const;

    const Variant& variant() const { return v_; }

private:
    explicit RotationSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// k RandPerm layers with fresh permutations and Haar Qk per layer.
/// Throws std::invalid_argument when the shape does not factor d.
RotationSpec randperm_compose(int k, Eigen::Index d, const TensorShape& shape, RngStream& rng);

std::vector<Eigen::Index> random_permutation(Eigen::Index d, RngStream& rng);

}  // namespace optlab

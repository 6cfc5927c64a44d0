#include "optlab/rotations.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace optlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_permutation(const std::vector<Eigen::Index>& perm) {
    const auto d = static_cast<Eigen::Index>(perm.size());
    if (d < 1) throw std::invalid_argument("permutation: empty");
    std::vector<char> seen(perm.size(), 0);
    for (auto p : perm) {
        if (p < 0 || p >= d || seen[static_cast<std::size_t>(p)])
            throw std::invalid_argument("permutation: not a bijection on [0, d)");
        seen[static_cast<std::size_t>(p)] = 1;
    }
}

Vector permute(const std::vector<Eigen::Index>& perm, const Vector& x) {
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = x[perm[static_cast<std::size_t>(i)]];
    return y;
}

Vector unpermute(const std::vector<Eigen::Index>& perm, const Vector& x) {
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[perm[static_cast<std::size_t>(i)]] = x[i];
    return y;
}

void check_dim(const RotationSpec& r, const Vector& x) {
    if (x.size() != r.dim())
        throw std::invalid_argument("rotation: dimension mismatch (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(r.dim()) + ")");
}

}  // namespace

RotationSpec RotationSpec::identity(Eigen::Index d) {
    if (d < 1) throw std::invalid_argument("identity rotation: d must be positive");
    return RotationSpec(Identity{d});
}

RotationSpec RotationSpec::explicit_matrix(Matrix q) {
    if (q.rows() != q.cols() || q.rows() < 1)
        throw std::invalid_argument("explicit rotation: matrix must be square");
    if (orthogonality_error(q) > 1e-9)
        throw std::invalid_argument("explicit rotation: matrix is not orthogonal");
    return RotationSpec(Explicit{std::move(q)});
}

RotationSpec RotationSpec::permutation(std::vector<Eigen::Index> perm) {
    check_permutation(perm);
    return RotationSpec(Permutation{std::move(perm)});
}

RotationSpec RotationSpec::skew_exp(Matrix skew, double t) {
    Matrix r = expm_skew(skew, t);
    return RotationSpec(SkewExp{std::move(skew), t, std::move(r)});
}

RotationSpec RotationSpec::randperm(std::vector<RandPermLayer> layers) {
    if (layers.empty()) throw std::invalid_argument("randperm: at least one layer required");
    const auto d = static_cast<Eigen::Index>(layers.front().perm.size());
    for (const auto& layer : layers) {
        check_permutation(layer.perm);
        if (static_cast<Eigen::Index>(layer.perm.size()) != d)
            throw std::invalid_argument("randperm: layers disagree on dimension");
        // Validates shape and orthogonality.
        mode_reshape_rotate(Vector::Zero(d), layer.shape, layer.q1, layer.q2, layer.q3);
    }
    return RotationSpec(RandPerm{std::move(layers)});
}

RotationSpec RotationSpec::composed(std::vector<RotationSpec> parts) {
    if (parts.empty()) throw std::invalid_argument("composed rotation: no parts");
    for (const auto& p : parts)
        if (p.dim() != parts.front().dim())
            throw std::invalid_argument("composed rotation: parts disagree on dimension");
    return RotationSpec(Composed{std::move(parts)});
}

Eigen::Index RotationSpec::dim() const {
    return std::visit(
        overloaded{
            [](const Identity& v) { return v.dim; },
            [](const Explicit& v) { return v.q.rows(); },
            [](const Permutation& v) { return static_cast<Eigen::Index>(v.perm.size()); },
            [](const SkewExp& v) { return v.rotation.rows(); },
            [](const RandPerm& v) { return static_cast<Eigen::Index>(v.layers.front().perm.size()); },
            [](const Composed& v) { return v.parts.front().dim(); },
        },
        v_);
}

std::string RotationSpec::kind() const {
    static const char* names[] = {"identity", "explicit", "permutation",
                                  "skew_exp", "randperm", "composed"};
    return names[v_.index()];
}

double RotationSpec::t() const {
    if (const auto* s = std::get_if<SkewExp>(&v_)) return s->t;
    return 0.0;
}

Vector RotationSpec::apply(const Vector& x) const {
    check_dim(*this, x);
    return std::visit(
        overloaded{
            [&](const Identity&) -> Vector { return x; },
            [&](const Explicit& v) -> Vector { return v.q * x; },
            [&](const Permutation& v) -> Vector { return permute(v.perm, x); },
            [&](const SkewExp& v) -> Vector { return v.rotation * x; },
            [&](const RandPerm& v) -> Vector {
                // Layers act in list order: layer 0 first.
                Vector y = x;
                for (const auto& l : v.layers)
                    y = mode_reshape_rotate(permute(l.perm, y), l.shape, l.q1, l.q2, l.q3);
                return y;
            },
            [&](const Composed& v) -> Vector {
                Vector y = x;
                for (auto it = v.parts.rbegin(); it != v.parts.rend(); ++it) y = it->apply(y);
                return y;
            },
        },
        v_);
}

Vector RotationSpec::apply_inverse(const Vector& x) const {
    check_dim(*this, x);
    return std::visit(
        overloaded{
            [&](const Identity&) -> Vector { return x; },
            [&](const Explicit& v) -> Vector { return v.q.transpose() * x; },
            [&](const Permutation& v) -> Vector { return unpermute(v.perm, x); },
            [&](const SkewExp& v) -> Vector { return v.rotation.transpose() * x; },
            [&](const RandPerm& v) -> Vector {
                Vector y = x;
                for (auto it = v.layers.rbegin(); it != v.layers.rend(); ++it)
                    y = unpermute(it->perm, mode_reshape_rotate_transpose(y, it->shape, it->q1,
                                                                          it->q2, it->q3));
                return y;
            },
            [&](const Composed& v) -> Vector {
                Vector y = x;
                for (const auto& p : v.parts) y = p.apply_inverse(y);
                return y;
            },
        },
        v_);
}

Matrix RotationSpec::materialize() const {
    if (const auto* e = std::get_if<Explicit>(&v_)) return e->q;
    if (const auto* s = std::get_if<SkewExp>(&v_)) return s->rotation;
    const Eigen::Index d = dim();
    Matrix m(d, d);
    for (Eigen::Index j = 0; j < d; ++j) m.col(j) = apply(Vector::Unit(d, j));
    return m;
}

std::vector<Eigen::Index> random_permutation(Eigen::Index d, RngStream& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    // Fisher-Yates with our own index draws so the result is stdlib independent.
    for (Eigen::Index i = d - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

RotationSpec randperm_compose(int k, Eigen::Index d, const TensorShape& shape, RngStream& rng) {
    if (k < 1) throw std::invalid_argument("randperm_compose: k must be positive");
    if (shape[0] < 1 || shape[1] < 1 || shape[2] < 1 || shape[0] * shape[1] * shape[2] != d)
        throw std::invalid_argument("randperm_compose: shape does not factor d");
    // The mode rotations are fixed across layers; only the permutations are fresh.
    RandPermLayer base{{}, shape, sample_orthogonal(shape[0], rng), sample_orthogonal(shape[1], rng),
                       sample_orthogonal(shape[2], rng)};
    std::vector<RandPermLayer> layers;
    for (int i = 0; i < k; ++i) {
        RandPermLayer l = base;
        l.perm = random_permutation(d, rng);
        layers.push_back(std::move(l));
    }
    return RotationSpec::randperm(std::move(layers));
}

}  // namespace optlab

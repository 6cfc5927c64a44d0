#include "optlab/losses.hpp"

#include <stdexcept>
#include <string>

namespace optlab {

namespace {

void require_dim(Eigen::Index expected, const Vector& x, const char* what) {
    if (x.size() != expected)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(expected) + ")");
}

class Quadratic final : public LossOracle {
public:
    explicit Quadratic(Matrix a) : a_(std::move(a)) {}

    Eigen::Index dim() const override { return a_.rows(); }

    double value(const Vector& x) const override {
        require_dim(dim(), x, "quadratic value");
        return 0.5 * x.dot(a_ * x);
    }
    Vector grad(const Vector& x) const override {
        require_dim(dim(), x, "quadratic grad");
        return a_ * x;
    }
    Vector stochastic_grad(const Vector& x, RngStream&) const override { return grad(x); }
    bool deterministic() const override { return true; }
    Vector hvp(const Vector& x, const Vector& v) const override {
        require_dim(dim(), x, "quadratic hvp");
        require_dim(dim(), v, "quadratic hvp");
        return a_ * v;
    }
    std::optional<Matrix> hessian() const override { return a_; }

private:
    Matrix a_;
};

class Rotated final : public LossOracle {
public:
    Rotated(OraclePtr inner, RotationSpec rot) : inner_(std::move(inner)), rot_(std::move(rot)) {}

    Eigen::Index dim() const override { return inner_->dim(); }

    double value(const Vector& x) const override { return inner_->value(rot_.apply(x)); }
    Vector grad(const Vector& x) const override {
        return rot_.apply_inverse(inner_->grad(rot_.apply(x)));
    }
    Vector stochastic_grad(const Vector& x, RngStream& rng) const override {
        return rot_.apply_inverse(inner_->stochastic_grad(rot_.apply(x), rng));
    }
    bool deterministic() const override { return inner_->deterministic(); }
    Vector hvp(const Vector& x, const Vector& v) const override {
        return rot_.apply_inverse(inner_->hvp(rot_.apply(x), rot_.apply(v)));
    }
    std::optional<Matrix> hessian() const override {
        auto h = inner_->hessian();
        if (!h) return std::nullopt;
        const Matrix r = rot_.materialize();
        Matrix rotated = r.transpose() * (*h) * r;
        return Matrix(0.5 * (rotated + rotated.transpose()));
    }

private:
    OraclePtr inner_;
    RotationSpec rot_;
};

class Noisy final : public LossOracle {
public:
    Noisy(OraclePtr inner, NoiseSpec noise) : inner_(std::move(inner)), noise_(std::move(noise)) {}

    Eigen::Index dim() const override { return inner_->dim(); }
    double value(const Vector& x) const override { return inner_->value(x); }
    Vector grad(const Vector& x) const override { return inner_->grad(x); }
    Vector stochastic_grad(const Vector& x, RngStream& rng) const override {
        Vector g = inner_->grad(x);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            // Always draw, so the stream position does not depend on sigma.
            const double z = rng.normal();
            g[i] += noise_.sigma[i] * z;
        }
        return g;
    }
    Vector hvp(const Vector& x, const Vector& v) const override { return inner_->hvp(x, v); }
    std::optional<Matrix> hessian() const override { return inner_->hessian(); }

private:
    OraclePtr inner_;
    NoiseSpec noise_;
};

}  // namespace

OraclePtr quadratic_oracle(QuadraticSpec spec) {
    const Matrix& a = spec.hessian;
    if (a.rows() != a.cols() || a.rows() < 1)
        throw std::invalid_argument("quadratic_oracle: Hessian must be square and non-empty");
    if (!a.allFinite()) throw std::invalid_argument("quadratic_oracle: non-finite Hessian entries");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("quadratic_oracle: Hessian is not symmetric");
    return std::make_shared<Quadratic>(std::move(spec.hessian));
}

OraclePtr rotated_oracle(OraclePtr inner, RotationSpec rot) {
    if (!inner) throw std::invalid_argument("rotated_oracle: null inner oracle");
    if (rot.dim() != inner->dim())
        throw std::invalid_argument("rotated_oracle: rotation dimension does not match the loss");
    return std::make_shared<Rotated>(std::move(inner), std::move(rot));
}

OraclePtr noisy_oracle(OraclePtr inner, NoiseSpec noise) {
    if (!inner) throw std::invalid_argument("noisy_oracle: null inner oracle");
    if (noise.sigma.size() != inner->dim())
        throw std::invalid_argument("noisy_oracle: sigma dimension does not match the loss");
    if ((noise.sigma.array() < 0).any() || !noise.sigma.allFinite())
        throw std::invalid_argument("noisy_oracle: sigma must be finite and nonnegative");
    return std::make_shared<Noisy>(std::move(inner), std::move(noise));
}

}  // namespace optlab

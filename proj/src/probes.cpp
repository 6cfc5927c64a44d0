#include "optlab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace optlab {

LinearOperator dense_operator(Matrix a) {
    return [a = std::move(a)](const Vector& v) -> Vector { return a * v; };
}

// -----------------------------------------------------------------------------
// (1,1)-norm

double lower_median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("lower_median: empty sample");
    const auto k = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

double concentration_bound(long n, Eigen::Index d, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("concentration_bound: eps must lie in (0, 1)");
    if (n < 1 || d < 1) throw std::invalid_argument("concentration_bound: n and d must be >= 1");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return 2.0 * static_cast<double>(d) * std::exp(-8.0 * static_cast<double>(n) * eps * eps / (25.0 * pi2));
}

double NormEstimate::failure_bound(double eps) const { return concentration_bound(probes, dim, eps); }

namespace {

NormEstimate reduce_probe_columns(const Matrix& columns) {
    const Eigen::Index d = columns.rows();
    const Eigen::Index n = columns.cols();
    NormEstimate est{0.0, static_cast<long>(n), d};
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = std::abs(columns(j, i));
        est.value += lower_median(row);
    }
    return est;
}

Matrix cauchy_probes(Eigen::Index d, long n, const RngStream& rng) {
    Matrix v(d, n);
    for (long i = 0; i < n; ++i) {
        RngStream probe = rng.fork(static_cast<std::uint64_t>(i));
        v.col(i) = sample_cauchy_vector(d, probe);
    }
    return v;
}

}  // namespace

NormEstimate estimate_norm11(const LinearOperator& hvp, Eigen::Index d, long n, const RngStream& rng) {
    if (n < 1) throw std::invalid_argument("estimate_norm11: n must be >= 1");
    if (d < 1) throw std::invalid_argument("estimate_norm11: d must be >= 1");
    Matrix columns(d, n);
    for (long i = 0; i < n; ++i) {
        RngStream probe = rng.fork(static_cast<std::uint64_t>(i));
        const Vector out = hvp(sample_cauchy_vector(d, probe));
        if (out.size() != d) throw std::invalid_argument("estimate_norm11: operator changed dimension");
        columns.col(i) = out;
    }
    return reduce_probe_columns(columns);
}

NormEstimate estimate_norm11(const Matrix& a, long n, const RngStream& rng) {
    if (n < 1) throw std::invalid_argument("estimate_norm11: n must be >= 1");
    if (a.rows() != a.cols() || a.rows() < 1)
        throw std::invalid_argument("estimate_norm11: matrix must be square");
    return reduce_probe_columns(a * cauchy_probes(a.rows(), n, rng));
}

// -----------------------------------------------------------------------------
// Spectral norm

SpectralEstimate spectral_norm(const LinearOperator& hvp, Eigen::Index d, int max_iters, double tol,
                               RngStream& rng) {
    if (max_iters < 1) throw std::invalid_argument("spectral_norm: max_iters must be >= 1");
    if (d < 1) throw std::invalid_argument("spectral_norm: d must be >= 1");

    const Eigen::Index m = std::min<Eigen::Index>(d, max_iters);
    Matrix q(d, m);
    Vector alpha(m), beta(m);
    Vector start = sample_normal_vector(d, rng);
    q.col(0) = start / start.norm();

    SpectralEstimate est;
    Vector ritz;
    for (Eigen::Index j = 0; j < m; ++j) {
        Vector w = hvp(q.col(j));
        alpha[j] = q.col(j).dot(w);
        w -= alpha[j] * q.col(j);
        if (j > 0) w -= beta[j - 1] * q.col(j - 1);
        // Full reorthogonalization, twice for stability.
        for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
        beta[j] = w.norm();

        Eigen::SelfAdjointEigenSolver<Matrix> tri;
        tri.computeFromTridiagonal(alpha.head(j + 1), beta.head(j), Eigen::ComputeEigenvectors);
        const Vector& theta = tri.eigenvalues();
        Eigen::Index best = 0;
        theta.cwiseAbs().maxCoeff(&best);
        est.value = std::abs(theta[best]);
        est.residual = beta[j] * std::abs(tri.eigenvectors()(j, best));
        est.iterations = static_cast<int>(j + 1);
        ritz = q.leftCols(j + 1) * tri.eigenvectors().col(best);

        const double scale = std::max(est.value, std::numeric_limits<double>::min());
        if (est.residual <= tol * scale || beta[j] <= 1e-14 * scale) {
            est.converged = true;
            break;
        }
        if (j + 1 < m) q.col(j + 1) = w / beta[j];
    }
    if (est.converged) return est;

    // Power iteration fallback from the best Ritz vector.
    Vector x = ritz / ritz.norm();
    for (int k = 0; k < max_iters; ++k) {
        const Vector y = hvp(x);
        const double theta = x.dot(y);
        const double residual = (y - theta * x).norm();
        ++est.iterations;
        if (residual < est.residual || std::abs(theta) > est.value) {
            est.value = std::abs(theta);
            est.residual = residual;
        }
        if (residual <= tol * std::abs(theta)) {
            est.converged = true;
            break;
        }
        const double ny = y.norm();
        if (ny == 0.0) break;
        x = y / ny;
    }
    return est;
}

// -----------------------------------------------------------------------------
// Smoothness

Vector blockwise_smoothness(const Matrix& a, const Partition& partition) {
    const Eigen::Index d = partition.dim();
    if (a.rows() != d || a.cols() != d)
        throw std::invalid_argument("blockwise_smoothness: matrix does not match the partition");
    const Eigen::Index nb = partition.num_blocks();

    if (nb == d) {
        // Singleton blocks: exact absolute row sums, placed by block id.
        Vector h(nb);
        for (Eigen::Index i = 0; i < d; ++i) h[partition.block_of[static_cast<std::size_t>(i)]] = a.row(i).cwiseAbs().sum();
        return h;
    }
    if (nb == 1) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
        return Vector::Constant(1, static_cast<double>(d) * eig.eigenvalues().cwiseAbs().maxCoeff());
    }

    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(nb));
    for (Eigen::Index i = 0; i < d; ++i) members[static_cast<std::size_t>(partition.block_of[static_cast<std::size_t>(i)])].push_back(i);

    Vector h = Vector::Zero(nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
        const auto& rows = members[static_cast<std::size_t>(b)];
        for (Eigen::Index c = 0; c < nb; ++c) {
            const auto& cols = members[static_cast<std::size_t>(c)];
            Matrix sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t s = 0; s < cols.size(); ++s)
                    sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = a(rows[r], cols[s]);
            const Matrix gram = sub.rows() <= sub.cols() ? Matrix(sub * sub.transpose()) : Matrix(sub.transpose() * sub);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
            const double op_norm = std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
            h[b] += std::sqrt(static_cast<double>(cols.size())) * op_norm;
        }
        h[b] *= std::sqrt(static_cast<double>(rows.size()));
    }
    return h;
}

InequalityCheck lemma312_check(const Matrix& a, const Partition& partition, const Vector& h,
                               const Vector& delta) {
    if (h.size() != partition.num_blocks() || delta.size() != partition.dim() || a.rows() != partition.dim())
        throw std::invalid_argument("lemma312_check: dimension mismatch");
    InequalityCheck c;
    c.lhs = delta.dot(a * delta);
    Vector sq = Vector::Zero(partition.num_blocks());
    for (Eigen::Index i = 0; i < delta.size(); ++i) sq[partition.block_of[static_cast<std::size_t>(i)]] += delta[i] * delta[i];
    for (Eigen::Index b = 0; b < sq.size(); ++b)
        c.rhs += h[b] / static_cast<double>(partition.block_sizes[static_cast<std::size_t>(b)]) * sq[b];
    c.holds = c.lhs <= c.rhs + 1e-9 * (1.0 + std::abs(c.rhs));
    return c;
}

// -----------------------------------------------------------------------------
// Bounds

BoundReport bound_report(const BoundInputs& in) {
    const std::size_t nb = in.H.size();
    if (nb == 0 || in.sigma.size() != nb || in.block_sizes.size() != nb)
        throw std::invalid_argument("bound_report: H, sigma and block_sizes must have one entry per block");
    if (in.T < 1) throw std::invalid_argument("bound_report: T must be >= 1");
    if (!(in.eta > 0.0)) throw std::invalid_argument("bound_report: eta must be > 0");
    if (!(in.beta2 >= 0.0 && in.beta2 < 1.0)) throw std::invalid_argument("bound_report: beta2 must lie in [0, 1)");
    if (!(in.v0 >= 0.0 && in.epsilon >= 0.0 && in.delta0 >= 0.0 && in.grad0_phi >= 0.0))
        throw std::invalid_argument("bound_report: v0, epsilon, delta0 and grad0_phi must be >= 0");
    for (std::size_t b = 0; b < nb; ++b)
        if (!(in.H[b] >= 0.0 && in.sigma[b] >= 0.0 && in.block_sizes[b] >= 1.0))
            throw std::invalid_argument("bound_report: H and sigma must be >= 0, block sizes >= 1");
    if (in.v0 + in.epsilon == 0.0 && in.beta2 > 0.0)
        throw std::invalid_argument("bound_report: v0 + epsilon must be > 0 when beta2 > 0");

    double sum_h = 0.0, max_h = 0.0, sum_sigma2 = 0.0, sum_db_sigma = 0.0, d = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        sum_h += in.H[b];
        max_h = std::max(max_h, in.H[b]);
        sum_sigma2 += in.sigma[b] * in.sigma[b];
        sum_db_sigma += in.block_sizes[b] * in.sigma[b];
        d += in.block_sizes[b];
    }
    const double T = static_cast<double>(in.T);
    const double one_minus_b2 = 1.0 - in.beta2;

    BoundReport r;
    if (in.v0 + in.epsilon > 0.0) {
        const double numer = sum_sigma2 + in.grad0_phi * in.grad0_phi +
                             max_h * max_h * in.eta * in.eta * T * (T + 1.0 / one_minus_b2);
        r.F = 2.0 * std::log1p(numer / (in.v0 + in.epsilon)) + std::log(32.0);
    } else {
        r.F = std::numeric_limits<double>::infinity();
    }
    const double f_term = in.beta2 == 0.0 ? 0.0 : in.beta2 * r.F / (T * one_minus_b2);
    r.E = 2.0 * in.delta0 / (in.eta * T) +
          (1.0 + f_term) * (in.eta * sum_h + std::sqrt(one_minus_b2) * sum_db_sigma);
    const double tail = std::pow(in.beta2, T / 4.0) / (T * one_minus_b2) * d * std::sqrt(in.v0) +
                        sum_db_sigma + d * std::sqrt(in.epsilon);
    r.rate_bound = r.E + std::sqrt(r.E) * std::sqrt(tail);

    r.R = in.delta0 * sum_h;
    r.recommended_eta = sum_h > 0.0 ? std::sqrt(in.delta0 / (T * sum_h)) : 0.0;
    r.recommended_one_minus_beta2 = std::log(T) / T;
    r.signgd_bound = in.delta0 / (T * in.eta) + sum_h * in.eta / 2.0;
    r.signgd_optimal_eta = sum_h > 0.0 ? std::sqrt(2.0 * in.delta0 / (T * sum_h)) : 0.0;
    r.signgd_optimal_bound = std::sqrt(2.0 * sum_h * in.delta0 / T);
    return r;
}

}  // namespace optlab

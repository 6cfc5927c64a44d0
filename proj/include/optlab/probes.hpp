#pragma once

#include "optlab/linalg.hpp"
#include "optlab/optimizers.hpp"

#include <functional>
#include <vector>

namespace optlab {

/// A symmetric linear map v -> H v, typically a Hessian-vector product.
using LinearOperator = std::function<Vector(const Vector&)>;

LinearOperator dense_operator(Matrix a);

// -----------------------------------------------------------------------------
// (1,1)-norm sketch

struct NormEstimate {
    double value = 0.0;
    long probes = 0;
    Eigen::Index dim = 0;

    /// Upper bound on P(|estimate - |H|_{1,1}| >= eps |H|_{1,1}).
    double failure_bound(double eps) const;
};

/// Sum over rows of the median |(H V)_{j,i}| over n standard Cauchy probes V.
/// Probe i draws from rng.fork(i); for even n the lower middle order
/// statistic is used.
NormEstimate estimate_norm11(const LinearOperator& hvp, Eigen::Index d, long n, const RngStream& rng);

/// Same estimate with the probes applied as one dense product.
NormEstimate estimate_norm11(const Matrix& a, long n, const RngStream& rng);

/// 2 d exp(-8 n eps^2 / (25 pi^2)); eps must lie in (0, 1).
double concentration_bound(long n, Eigen::Index d, double eps);

/// Lower middle order statistic for even sizes.
double lower_median(std::vector<double> values);

// -----------------------------------------------------------------------------
// Spectral norm

struct SpectralEstimate {
    double value = 0.0;
    double residual = 0.0;  // |H u - theta u| for the returned Ritz pair
    int iterations = 0;
    bool converged = false;
};

/// Largest |eigenvalue| by Lanczos with full reorthogonalization over at most
/// min(d, max_iters) steps, followed by power iteration on the Ritz vector when
/// the residual is still above tol * value.
SpectralEstimate spectral_norm(const LinearOperator& hvp, Eigen::Index d, int max_iters, double tol,
                               RngStream& rng);

// -----------------------------------------------------------------------------
// Smoothness constants

/// Blockwise (inf,2) smoothness constants of x -> 1/2 x^T A x.
///  - singleton blocks: H_i = sum_j |A_ij| (exact)
///  - one block: d |A|_2 (exact)
///  - otherwise: H_b = sqrt(d_b) sum_b' sqrt(d_b') |A_(b),(b')|_2 (upper bound)
Vector blockwise_smoothness(const Matrix& a, const Partition& partition);

/// Delta^T A Delta versus sum_b H_b / d_b |Delta_(b)|^2.
InequalityCheck lemma312_check(const Matrix& a, const Partition& partition, const Vector& h,
                               const Vector& delta);

// -----------------------------------------------------------------------------
// Convergence bounds

struct BoundInputs {
    std::vector<double> H;       // per block
    std::vector<double> sigma;   // per block
    std::vector<double> block_sizes;
    double eta = 0.0;
    double beta2 = 0.0;
    long T = 0;
    double v0 = 0.0;
    double epsilon = 0.0;
    double delta0 = 0.0;     // L(x0) - min L
    double grad0_phi = 0.0;  // |grad L(x0)|_Phi
};

struct BoundReport {
    double F = 0.0;
    double E = 0.0;
    double rate_bound = 0.0;
    double recommended_eta = 0.0;
    double recommended_one_minus_beta2 = 0.0;
    double R = 0.0;  // delta0 * sum_b H_b
    // Deterministic sign descent with H = sum_b H_b.
    double signgd_bound = 0.0;
    double signgd_optimal_eta = 0.0;
    double signgd_optimal_bound = 0.0;
};

/// Evaluates the blockwise Adam rate with its displayed constants. When
/// beta2 = 0 the F term is multiplied by zero and v0 + eps may vanish.
BoundReport bound_report(const BoundInputs& in);

}  // namespace optlab

#pragma once

#include "optlab/config.hpp"
#include "optlab/invariance.hpp"
#include "optlab/losses.hpp"
#include "optlab/optimizers.hpp"
#include "optlab/probes.hpp"
#include "optlab/results.hpp"
#include "optlab/rotations.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace optlab {

struct RunContext {
    int threads = 1;
    bool verbose = false;
    std::ostream* log = nullptr;
};

// -----------------------------------------------------------------------------
// Shared helpers

/// Hessian of the configured quadratic; random_psd draws G G^T / d from seed.
Matrix build_problem_matrix(const ProblemSource& problem, std::uint64_t seed);

/// Rotation for a descriptor on R^d. skew_exp specs reuse `shared_skew` when
/// given so a whole t-grid shares one generator A.
RotationSpec build_rotation(const RotationDescriptor& desc, Eigen::Index d, std::uint64_t master_seed,
                            const Matrix* shared_skew = nullptr);

/// Maps a descriptor to an algorithm with a constant step size.
Algorithm build_algorithm(const OptimizerDescriptor& desc, Eigen::Index d, double lr,
                          const std::vector<Eigen::Index>& block_sizes = {});

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// L(x0) - min L for 1/2 x^T A x; throws ConfigError when A is not PSD.
double quadratic_gap(const Matrix& a, const Vector& x0);

// -----------------------------------------------------------------------------
// Table 1 reproduction

struct Table1SummaryRow {
    std::uint64_t seed = 0;
    std::string optimizer;  // "adasgd" or "adam"
    double rotation_t = 0.0;
    double norm11_over_d = 0.0;        // Cauchy estimate
    double norm11_over_d_exact = 0.0;  // sum |H_ij| / d
    double spectral_norm = 0.0;
    std::vector<double> tuned_loss;  // one per optimizer setting
    std::vector<double> tuned_lr;
};

struct QuadraticTableResult {
    std::vector<ResultRow> rows;
    std::vector<Table1SummaryRow> summary;
    std::vector<std::string> settings;  // labels of the (beta1, beta2) settings
    /// Spearman(norm11/d, tuned Adam loss) per (seed, setting).
    std::vector<std::vector<double>> spearman;
    std::vector<std::string> errors;
    std::string metadata_json;
};

QuadraticTableResult run_quadratic_table(const ExperimentConfig& config, const RunContext& ctx = {});
void write_quadratic_table(const QuadraticTableResult& result, const std::string& dir);

// -----------------------------------------------------------------------------
// Convergence sweep

struct SweepCell {
    std::string optimizer;
    long T = 0;
    std::uint64_t seed = 0;
    double eta = 0.0;
    double one_minus_beta2 = 0.0;
    double empirical = 0.0;  // min |grad|_1 over the bound's window
    double bound = 0.0;
    bool within_bound = false;
};

struct SweepSummary {
    std::string optimizer;
    long T = 0;
    double mean_empirical = 0.0;
    double bound = 0.0;  // mean over cells (constant when the problem is shared)
    long violations = 0;
    bool mean_within_bound = false;
};

struct ConvergenceSweepResult {
    std::vector<ResultRow> rows;
    std::vector<SweepCell> cells;
    std::vector<SweepSummary> summary;
    std::vector<std::pair<std::string, double>> slopes;  // per optimizer
    std::vector<std::string> errors;
    std::string metadata_json;
};

ConvergenceSweepResult run_convergence_sweep(const ExperimentConfig& config, const RunContext& ctx = {});
void write_convergence_sweep(const ConvergenceSweepResult& result, const std::string& dir);

// -----------------------------------------------------------------------------
// Invariance suite

struct InvarianceRow {
    std::string check;  // group label
    std::string algo;
    std::string rotation_kind;
    int trial = 0;
    Eigen::Index d = 0;
    long T = 0;
    bool noisy = false;
    double max_deviation = 0.0;
    std::string expected;  // "invariant" | "witness" | "informational"
    double threshold = 0.0;
    bool pass = false;
};

struct InvarianceSuiteResult {
    std::vector<InvarianceRow> rows;
    bool all_required_pass = false;
    std::vector<std::string> errors;
    std::string metadata_json;
};

InvarianceSuiteResult run_invariance_suite(const ExperimentConfig& config, const RunContext& ctx = {});
void write_invariance_suite(const InvarianceSuiteResult& result, const std::string& dir);

// -----------------------------------------------------------------------------
// Norm measurement

struct NormRow {
    std::string rotation_kind;
    double rotation_t = 0.0;
    Eigen::Index d = 0;
    long n_probes = 0;
    double norm11 = 0.0;
    double norm11_over_d = 0.0;
    double norm11_exact = 0.0;
    double spectral_norm = 0.0;
    double spectral_residual = 0.0;
    Vector H_adam;
    double H_adasgd = 0.0;
    Vector H_custom;  // empty unless block sizes were configured
    double concentration_eps = 0.0;
    double concentration_bound = 0.0;
};

struct NormEstimateResult {
    std::vector<NormRow> rows;
    std::vector<std::string> errors;
    std::string metadata_json;
};

NormEstimateResult estimate_norms_cmd(const ExperimentConfig& config, const RunContext& ctx = {});
void write_norm_estimates(const NormEstimateResult& result, const std::string& dir);

// -----------------------------------------------------------------------------
// Bounds

/// Uses config.bound_inputs when present, otherwise derives the inputs from
/// the problem (Adam partition, sigma, T, first seed).
BoundInputs derive_bound_inputs(const ExperimentConfig& config);
std::string bound_report_json(const BoundInputs& inputs, const BoundReport& report);

}  // namespace optlab

#pragma once

#include "optlab/linalg.hpp"
#include "optlab/losses.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace optlab {

// =============================================================================
/// Block map from coordinates to blocks [0, B).
struct Partition {
    std::vector<Eigen::Index> block_of;
    std::vector<Eigen::Index> block_sizes;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(block_of.size()); }
    Eigen::Index num_blocks() const { return static_cast<Eigen::Index>(block_sizes.size()); }
};

/// Singleton blocks (i -> i).
Partition make_partition_adam(Eigen::Index d);
/// One block (i -> 0).
Partition make_partition_adasgd(Eigen::Index d);
/// Contiguous blocks with the given sizes.
Partition make_partition_blocks(const std::vector<Eigen::Index>& sizes);
/// Arbitrary map; every id in [0, max+1) must occur.
Partition make_partition(std::vector<Eigen::Index> block_of);

enum class ScheduleKind { constant, cosine };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::constant;
    double peak = 1e-3;
    double floor = 0.0;
    int warmup = 0;

    /// Step size for step t in 1..T.
    double at(int t, int total_steps) const;
    void validate() const;

    static ScheduleSpec constant(double eta) { return {ScheduleKind::constant, eta, 0.0, 0}; }
};

struct OptimizerConfig {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double epsilon = 0.0;
    double v0 = 0.0;
    ScheduleSpec schedule;

    void validate() const;
};

/// m is the first moment, v holds one second moment per block, t counts steps.
struct OptimizerState {
    Vector m;
    Vector v;
    long t = 0;
};

OptimizerState initial_state(const Partition& partition, const OptimizerConfig& config);

struct StepOutput {
    OptimizerState state;
    Vector x;
};

/// Raised when a block update would divide a nonzero moment by zero.
class DivisionByZeroError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by run() with the failing step attached.
class StepError : public std::runtime_error {
public:
    StepError(long step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// One step of blockwise Adam:
///   m_i <- b1 m_i + (1 - b1) g_i
///   v_b <- b2 v_b + (1 - b2) |g_(b)|^2 / d_b
///   x_i <- x_i - eta m_i / sqrt(v_{block(i)} + eps)
/// A zero denominator with zero numerator moves nothing.
StepOutput blockwise_adam_step(const OptimizerState& state, const Vector& x, const Vector& g,
                               double eta, const Partition& partition,
                               const OptimizerConfig& config);

/// m <- momentum m + g;  x <- x - eta m
StepOutput sgd_momentum_step(const OptimizerState& state, const Vector& x, const Vector& g,
                             double eta, double momentum);

double phi_norm(const Vector& x, const Partition& partition);
double phi_dual_norm(const Vector& x, const Partition& partition);

// -----------------------------------------------------------------------------
// Trajectories

struct BlockwiseAdamAlgo {
    Partition partition;
    OptimizerConfig config;
};

struct SgdAlgo {
    double momentum = 0.0;
    ScheduleSpec schedule;
};

using Algorithm = std::variant<BlockwiseAdamAlgo, SgdAlgo>;

/// Per-iterate metrics. Row s describes x_s (s = 0..T); the optimizer
/// quantities (v range, eta) are those of the step that produced x_s.
struct TrajectoryRow {
    long step = 0;
    double loss = 0.0;
    double grad_l1 = 0.0;
    double grad_l2 = 0.0;
    double grad_phi_dual = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    double eta = 0.0;
};

struct TrajectoryRecord {
    std::vector<TrajectoryRow> rows;
    /// Iterates x_s for s = 0, k, 2k, ... and always x_T.
    std::vector<std::pair<long, Vector>> checkpoints;
    OptimizerState final_state;

    long steps() const { return static_cast<long>(rows.size()) - 1; }
    double final_loss() const { return rows.back().loss; }
    const Vector& final_iterate() const { return checkpoints.back().second; }

    /// min over T/2 < t <= T of |grad L(x_{t-1})|_1.
    double min_grad_l1_second_half() const;
    /// Same in the partition's dual norm.
    double min_grad_phi_dual_second_half() const;
    /// min over 1 <= t <= T of |grad L(x_t)|_1.
    double min_grad_l1_iterates() const;
};

struct RunOptions {
    long checkpoint_every = 0;  // 0 keeps only x_0 and x_T
};

/// Runs T steps, drawing one stochastic gradient per step from rng.
TrajectoryRecord run(const LossOracle& oracle, const Algorithm& algo, const Vector& x0, long T,
                     RngStream& rng, const RunOptions& options = {});

// -----------------------------------------------------------------------------

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// sum_t g_t^2 / v_t  versus  T + b2/(1-b2) ln(v_T / v_0), with v_0 replaced by
/// v_1 / e when v_0 = 0. v_seq holds v_0..v_T, g_seq holds g_1..g_T.
/// Throws std::invalid_argument when the sequences are not admissible.
InequalityCheck momentum_ratio_check(const std::vector<double>& g_seq,
                                     const std::vector<double>& v_seq, double beta2);

}  // namespace optlab

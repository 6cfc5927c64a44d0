#include "optlab/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace optlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_same_dim(const Partition& p, const Vector& x, const char* what) {
    if (x.size() != p.dim())
        throw std::invalid_argument(std::string(what) + ": vector has dimension " +
                                    std::to_string(x.size()) + ", partition has " +
                                    std::to_string(p.dim()));
}

// Squared l2 norm of each block.
Vector block_sq_norms(const Vector& x, const Partition& p) {
    Vector s = Vector::Zero(p.num_blocks());
    for (Eigen::Index i = 0; i < x.size(); ++i) s[p.block_of[static_cast<std::size_t>(i)]] += x[i] * x[i];
    return s;
}

}  // namespace

// -----------------------------------------------------------------------------
// Partitions

Partition make_partition_adam(Eigen::Index d) {
    if (d < 1) throw std::invalid_argument("make_partition_adam: d must be positive");
    Partition p;
    p.block_of.resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) p.block_of[static_cast<std::size_t>(i)] = i;
    p.block_sizes.assign(static_cast<std::size_t>(d), 1);
    return p;
}

Partition make_partition_adasgd(Eigen::Index d) {
    if (d < 1) throw std::invalid_argument("make_partition_adasgd: d must be positive");
    return Partition{std::vector<Eigen::Index>(static_cast<std::size_t>(d), 0), {d}};
}

Partition make_partition_blocks(const std::vector<Eigen::Index>& sizes) {
    if (sizes.empty()) throw std::invalid_argument("make_partition_blocks: no block sizes");
    Partition p;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (sizes[b] < 1) throw std::invalid_argument("make_partition_blocks: block sizes must be >= 1");
        p.block_of.insert(p.block_of.end(), static_cast<std::size_t>(sizes[b]),
                          static_cast<Eigen::Index>(b));
    }
    p.block_sizes = sizes;
    return p;
}

Partition make_partition(std::vector<Eigen::Index> block_of) {
    if (block_of.empty()) throw std::invalid_argument("make_partition: empty map");
    const auto max_id = *std::max_element(block_of.begin(), block_of.end());
    Partition p;
    p.block_sizes.assign(static_cast<std::size_t>(max_id + 1), 0);
    for (auto b : block_of) {
        if (b < 0) throw std::invalid_argument("make_partition: negative block id");
        ++p.block_sizes[static_cast<std::size_t>(b)];
    }
    for (auto s : p.block_sizes)
        if (s == 0) throw std::invalid_argument("make_partition: block ids are not contiguous");
    p.block_of = std::move(block_of);
    return p;
}

// -----------------------------------------------------------------------------
// Hyperparameters

double ScheduleSpec::at(int t, int total_steps) const {
    if (kind == ScheduleKind::constant) return peak;
    if (warmup > 0 && t <= warmup) return peak * static_cast<double>(t) / warmup;
    const int span = total_steps - warmup;
    const double progress = span > 0 ? static_cast<double>(t - warmup) / span : 1.0;
    return floor + 0.5 * (peak - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

void ScheduleSpec::validate() const {
    if (!(peak >= 0.0) || !std::isfinite(peak))
        throw std::invalid_argument("schedule: peak learning rate must be finite and >= 0");
    if (!(floor >= 0.0) || floor > peak)
        throw std::invalid_argument("schedule: floor must satisfy 0 <= floor <= peak");
    if (warmup < 0) throw std::invalid_argument("schedule: warmup must be >= 0");
}

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0))
        throw std::invalid_argument("optimizer: beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 <= 1.0))
        throw std::invalid_argument("optimizer: beta2 must lie in [0, 1]");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("optimizer: epsilon must be >= 0");
    if (!(v0 >= 0.0)) throw std::invalid_argument("optimizer: v0 must be >= 0");
    schedule.validate();
}

OptimizerState initial_state(const Partition& partition, const OptimizerConfig& config) {
    return OptimizerState{Vector::Zero(partition.dim()),
                          Vector::Constant(partition.num_blocks(), config.v0), 0};
}

// -----------------------------------------------------------------------------
// Steps

StepOutput blockwise_adam_step(const OptimizerState& state, const Vector& x, const Vector& g,
                               double eta, const Partition& partition,
                               const OptimizerConfig& config) {
    require_same_dim(partition, x, "blockwise_adam_step");
    require_same_dim(partition, g, "blockwise_adam_step");
    require_same_dim(partition, state.m, "blockwise_adam_step");
    if (state.v.size() != partition.num_blocks())
        throw std::invalid_argument("blockwise_adam_step: state has the wrong number of blocks");
    if (!(eta >= 0.0)) throw std::invalid_argument("blockwise_adam_step: eta must be >= 0");

    const double b1 = config.beta1;
    const double b2 = config.beta2;

    StepOutput out{OptimizerState{(b1 * state.m + (1.0 - b1) * g).eval(), state.v, state.t + 1}, x};

    const Vector sq = block_sq_norms(g, partition);
    for (Eigen::Index b = 0; b < partition.num_blocks(); ++b)
        out.state.v[b] = b2 * state.v[b] +
                         (1.0 - b2) * sq[b] / static_cast<double>(partition.block_sizes[static_cast<std::size_t>(b)]);

    const Vector denom = (out.state.v.array() + config.epsilon).sqrt();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto b = partition.block_of[static_cast<std::size_t>(i)];
        const double m = out.state.m[i];
        if (denom[b] == 0.0) {
            if (m != 0.0)
                throw DivisionByZeroError("blockwise_adam_step: zero second moment in block " +
                                          std::to_string(b) + " with a nonzero first moment");
            continue;
        }
        out.x[i] = x[i] - eta * m / denom[b];
    }
    return out;
}

StepOutput sgd_momentum_step(const OptimizerState& state, const Vector& x, const Vector& g,
                             double eta, double momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("sgd_momentum_step: momentum must lie in [0, 1)");
    if (x.size() != g.size() || state.m.size() != g.size())
        throw std::invalid_argument("sgd_momentum_step: dimension mismatch");
    StepOutput out{OptimizerState{(momentum * state.m + g).eval(), state.v, state.t + 1}, x};
    out.x -= eta * out.state.m;
    return out;
}

double phi_norm(const Vector& x, const Partition& partition) {
    require_same_dim(partition, x, "phi_norm");
    const Vector sq = block_sq_norms(x, partition);
    double best = 0.0;
    for (Eigen::Index b = 0; b < sq.size(); ++b)
        best = std::max(best, std::sqrt(sq[b] / static_cast<double>(partition.block_sizes[static_cast<std::size_t>(b)])));
    return best;
}

double phi_dual_norm(const Vector& x, const Partition& partition) {
    require_same_dim(partition, x, "phi_dual_norm");
    const Vector sq = block_sq_norms(x, partition);
    double total = 0.0;
    for (Eigen::Index b = 0; b < sq.size(); ++b)
        total += std::sqrt(static_cast<double>(partition.block_sizes[static_cast<std::size_t>(b)]) * sq[b]);
    return total;
}

// -----------------------------------------------------------------------------
// Trajectories

namespace {

TrajectoryRow measure(const LossOracle& oracle, const Vector& x, const Vector& grad,
                      const Partition& metric_partition, long step) {
    TrajectoryRow row;
    row.step = step;
    row.loss = oracle.value(x);
    row.grad_l1 = grad.lpNorm<1>();
    row.grad_l2 = grad.norm();
    row.grad_phi_dual = phi_dual_norm(grad, metric_partition);
    return row;
}

double min_over(const std::vector<TrajectoryRow>& rows, std::size_t first, std::size_t last,
                double TrajectoryRow::*field) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = first; s <= last && s < rows.size(); ++s) best = std::min(best, rows[s].*field);
    return best;
}

}  // namespace

double TrajectoryRecord::min_grad_l1_second_half() const {
    const auto T = static_cast<std::size_t>(steps());
    return min_over(rows, T / 2, T - 1, &TrajectoryRow::grad_l1);
}

double TrajectoryRecord::min_grad_phi_dual_second_half() const {
    const auto T = static_cast<std::size_t>(steps());
    return min_over(rows, T / 2, T - 1, &TrajectoryRow::grad_phi_dual);
}

double TrajectoryRecord::min_grad_l1_iterates() const {
    return min_over(rows, 1, static_cast<std::size_t>(steps()), &TrajectoryRow::grad_l1);
}

TrajectoryRecord run(const LossOracle& oracle, const Algorithm& algo, const Vector& x0, long T,
                     RngStream& rng, const RunOptions& options) {
    if (T < 1) throw std::invalid_argument("run: T must be >= 1");
    if (x0.size() != oracle.dim()) throw std::invalid_argument("run: x0 has the wrong dimension");

    const auto* adam = std::get_if<BlockwiseAdamAlgo>(&algo);
    const auto* sgd = std::get_if<SgdAlgo>(&algo);
    const Partition metric_partition = adam ? adam->partition : make_partition_adam(oracle.dim());
    if (adam) {
        adam->config.validate();
        if (adam->partition.dim() != oracle.dim())
            throw std::invalid_argument("run: partition dimension does not match the loss");
    } else {
        sgd->schedule.validate();
        if (!(sgd->momentum >= 0.0 && sgd->momentum < 1.0))
            throw std::invalid_argument("run: momentum must lie in [0, 1)");
    }

    TrajectoryRecord rec;
    rec.rows.reserve(static_cast<std::size_t>(T + 1));

    OptimizerState state = adam ? initial_state(adam->partition, adam->config)
                                : OptimizerState{Vector::Zero(oracle.dim()), Vector(), 0};
    Vector x = x0;
    Vector grad = oracle.grad(x);
    {
        TrajectoryRow row = measure(oracle, x, grad, metric_partition, 0);
        if (state.v.size() > 0) {
            row.v_min = state.v.minCoeff();
            row.v_max = state.v.maxCoeff();
        }
        rec.rows.push_back(row);
    }
    rec.checkpoints.emplace_back(0, x);

    const bool deterministic = oracle.deterministic();
    for (long t = 1; t <= T; ++t) {
        try {
            Vector g = deterministic ? grad : oracle.stochastic_grad(x, rng);
            double eta = 0.0;
            StepOutput out;
            if (adam) {
                eta = adam->config.schedule.at(static_cast<int>(t), static_cast<int>(T));
                out = blockwise_adam_step(state, x, g, eta, adam->partition, adam->config);
            } else {
                eta = sgd->schedule.at(static_cast<int>(t), static_cast<int>(T));
                out = sgd_momentum_step(state, x, g, eta, sgd->momentum);
            }
            state = std::move(out.state);
            x = std::move(out.x);
            if (!x.allFinite()) throw std::runtime_error("iterate became non-finite");
        } catch (const StepError&) {
            throw;
        } catch (const std::exception& e) {
            throw StepError(t, e.what());
        }

        grad = oracle.grad(x);
        TrajectoryRow row = measure(oracle, x, grad, metric_partition, t);
        row.eta = adam ? adam->config.schedule.at(static_cast<int>(t), static_cast<int>(T))
                       : sgd->schedule.at(static_cast<int>(t), static_cast<int>(T));
        if (state.v.size() > 0) {
            row.v_min = state.v.minCoeff();
            row.v_max = state.v.maxCoeff();
        }
        rec.rows.push_back(row);
        if ((options.checkpoint_every > 0 && t % options.checkpoint_every == 0) || t == T)
            rec.checkpoints.emplace_back(t, x);
    }
    rec.final_state = std::move(state);
    return rec;
}

// -----------------------------------------------------------------------------

InequalityCheck momentum_ratio_check(const std::vector<double>& g_seq,
                                     const std::vector<double>& v_seq, double beta2) {
    if (!(beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("momentum_ratio_check: beta2 must lie in (0, 1)");
    const std::size_t T = g_seq.size();
    if (T == 0 || v_seq.size() != T + 1)
        throw std::invalid_argument("momentum_ratio_check: need g_1..g_T and v_0..v_T");
    if (!(v_seq[0] >= 0.0)) throw std::invalid_argument("momentum_ratio_check: v_0 must be >= 0");
    if (!(v_seq[1] > 0.0)) throw std::invalid_argument("momentum_ratio_check: v_1 must be > 0");
    for (std::size_t t = 1; t <= T; ++t) {
        const double slack = v_seq[t] - beta2 * v_seq[t - 1] - (1.0 - beta2) * g_seq[t - 1] * g_seq[t - 1];
        // Sequences produced by the equality recurrence may miss by rounding.
        if (slack < -1e-12 * (1.0 + std::abs(v_seq[t])))
            throw std::invalid_argument("momentum_ratio_check: v_t - beta2 v_{t-1} < (1 - beta2) g_t^2 at t = " +
                                        std::to_string(t));
    }

    InequalityCheck c;
    for (std::size_t t = 1; t <= T; ++t) c.lhs += g_seq[t - 1] * g_seq[t - 1] / v_seq[t];
    const double base = v_seq[0] > 0.0 ? v_seq[0] : v_seq[1] / std::numbers::e;
    c.rhs = static_cast<double>(T) + beta2 / (1.0 - beta2) * std::log(v_seq[T] / base);
    c.holds = c.lhs <= c.rhs + 1e-9;
    return c;
}

}  // namespace optlab

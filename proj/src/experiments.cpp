#include "optlab/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

namespace optlab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "optlab 0.1.0";

// Stream tags: RngStream(master_seed, tag) roots one family of draws.
enum StreamTag : std::uint64_t {
    kSkew = 1,
    kInit = 2,
    kProbes = 3,
    kSpectral = 4,
    kPerm = 5,
    kRandPerm = 6,
    kProblem = 7,
    kNoise = 8,
    kInvariance = 9,
};

constexpr int kLanczosSteps = 60;
constexpr double kLanczosTol = 1e-8;

void log_line(const RunContext& ctx, const std::string& msg) {
    if (ctx.verbose && ctx.log) *ctx.log << msg << '\n';
}

std::string pad(std::size_t i, int width = 3) {
    std::ostringstream ss;
    ss << std::setw(width) << std::setfill('0') << i;
    return ss.str();
}

std::string setting_label(const OptimizerDescriptor& o) {
    return "b1=" + format_double(o.beta1) + "_b2=" + format_double(o.beta2);
}

Matrix rotate_hessian(const Matrix& a, const RotationSpec& rot) {
    if (rot.kind() == "identity") return a;
    const Matrix r = rot.materialize();
    const Matrix h = r.transpose() * a * r;
    return 0.5 * (h + h.transpose());
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

ResultRow base_row(const std::string& run_id, const std::string& experiment, const std::string& optimizer,
                   const std::string& phi, const OptimizerConfig& cfg, double lr, const std::string& rot_kind,
                   double rot_t, std::uint64_t seed) {
    ResultRow r;
    r.run_id = run_id;
    r.experiment = experiment;
    r.optimizer = optimizer;
    r.phi = phi;
    r.beta1 = cfg.beta1;
    r.beta2 = cfg.beta2;
    r.eps = cfg.epsilon;
    r.v0 = cfg.v0;
    r.lr = lr;
    r.rotation_kind = rot_kind;
    r.rotation_t = rot_t;
    r.seed = seed;
    return r;
}

// Appends rows for steps divisible by stride plus the final step.
void append_trajectory(std::vector<ResultRow>& out, const ResultRow& base, const TrajectoryRecord& rec,
                       long stride = 1) {
    const long T = rec.steps();
    for (const auto& tr : rec.rows) {
        if (tr.step % stride != 0 && tr.step != T) continue;
        ResultRow r = base;
        r.step = tr.step;
        r.loss = tr.loss;
        r.grad_l1 = tr.grad_l1;
        r.grad_l2 = tr.grad_l2;
        r.grad_phi_dual = tr.grad_phi_dual;
        r.v_min = tr.v_min;
        r.v_max = tr.v_max;
        r.final = tr.step == T;
        out.push_back(std::move(r));
    }
}

ResultRow error_row(ResultRow base) {
    base.error = true;
    base.final = true;
    return base;
}

json metadata_base(const ExperimentConfig& config) {
    json j;
    j["version"] = kVersion;
    j["config"] = json::parse(config_to_json(config));
    j["seeds"] = config.seeds;
    return j;
}

Vector average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vector ranks(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[static_cast<Eigen::Index>(idx[k])] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

// -----------------------------------------------------------------------------
// Helpers

Matrix build_problem_matrix(const ProblemSource& problem, std::uint64_t seed) {
    switch (problem.kind) {
        case ProblemSource::Kind::table1_default: return table1_diagonal().asDiagonal();
        case ProblemSource::Kind::diagonal: {
            Vector diag = Eigen::Map<const Vector>(problem.diagonal.data(), static_cast<Eigen::Index>(problem.diagonal.size()));
            return diag.asDiagonal();
        }
        case ProblemSource::Kind::dense_file: return read_dense_matrix(problem.path);
        case ProblemSource::Kind::random_psd: {
            RngStream rng(seed, kProblem);
            const Matrix g = sample_normal_matrix(problem.dim, problem.dim, rng);
            const Matrix a = g * g.transpose() / static_cast<double>(problem.dim);
            return 0.5 * (a + a.transpose());
        }
    }
    throw ConfigError("unknown problem kind");
}

RotationSpec build_rotation(const RotationDescriptor& desc, Eigen::Index d, std::uint64_t master_seed,
                            const Matrix* shared_skew) {
    const std::uint64_t seed = desc.seed.value_or(master_seed);
    try {
        if (desc.kind == "identity") return RotationSpec::identity(d);
        if (desc.kind == "skew_exp") {
            if (shared_skew && !desc.seed) return RotationSpec::skew_exp(*shared_skew, desc.t);
            RngStream rng(seed, kSkew);
            return RotationSpec::skew_exp(sample_skew(d, rng), desc.t);
        }
        if (desc.kind == "permutation") {
            RngStream rng(seed, kPerm);
            return RotationSpec::permutation(random_permutation(d, rng));
        }
        if (desc.kind == "randperm") {
            RngStream rng(seed, kRandPerm);
            return randperm_compose(desc.k, d, desc.shape, rng);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("rotation '") + desc.kind + "': " + e.what());
    }
    throw ConfigError("unknown rotation kind '" + desc.kind + "'");
}

Algorithm build_algorithm(const OptimizerDescriptor& desc, Eigen::Index d, double lr,
                          const std::vector<Eigen::Index>& block_sizes) {
    OptimizerConfig cfg{desc.beta1, desc.beta2, desc.eps, desc.v0, ScheduleSpec::constant(lr)};
    if (desc.algo == "sgd") return SgdAlgo{desc.momentum, ScheduleSpec::constant(lr)};
    if (desc.algo == "adam") return BlockwiseAdamAlgo{make_partition_adam(d), cfg};
    if (desc.algo == "adasgd") return BlockwiseAdamAlgo{make_partition_adasgd(d), cfg};
    if (desc.algo == "signgd") {
        cfg.beta1 = cfg.beta2 = 0.0;
        return BlockwiseAdamAlgo{make_partition_adam(d), cfg};
    }
    if (desc.algo == "rmsprop") {
        cfg.beta1 = 0.0;
        return BlockwiseAdamAlgo{make_partition_adam(d), cfg};
    }
    if (desc.algo == "blockwise") {
        if (block_sizes.empty()) throw ConfigError("blockwise optimizer needs 'block_sizes'");
        Partition p = make_partition_blocks(block_sizes);
        if (p.dim() != d) throw ConfigError("block_sizes do not sum to the problem dimension");
        return BlockwiseAdamAlgo{std::move(p), cfg};
    }
    throw ConfigError("unknown optimizer '" + desc.algo + "'");
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
    const Vector rx = average_ranks(x), ry = average_ranks(y);
    const Vector cx = rx.array() - rx.mean(), cy = ry.array() - ry.mean();
    const double denom = cx.norm() * cy.norm();
    return denom > 0.0 ? cx.dot(cy) / denom : 0.0;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two points");
    const auto n = static_cast<Eigen::Index>(x.size());
    Vector lx(n), ly(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lx[i] = std::log(x[static_cast<std::size_t>(i)]);
        ly[i] = std::log(y[static_cast<std::size_t>(i)]);
    }
    const Vector cx = lx.array() - lx.mean(), cy = ly.array() - ly.mean();
    return cx.dot(cy) / cx.squaredNorm();
}

double quadratic_gap(const Matrix& a, const Vector& x0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (lo < -1e-10 * std::max(1.0, hi)) throw ConfigError("quadratic is not bounded below (Hessian not PSD)");
    return 0.5 * x0.dot(a * x0);
}

// -----------------------------------------------------------------------------
// Table 1

namespace {

struct Table1Geometry {
    std::vector<Matrix> hessians;  // [0] = unrotated, [r + 1] = rotation r
    std::vector<RotationSpec> rotations;
    std::vector<double> norm11, norm11_exact, spectral;
    Vector x0;
};

Table1Geometry table1_geometry(const ExperimentConfig& config, std::uint64_t seed, const RunContext& ctx) {
    Table1Geometry g;
    const Matrix base = build_problem_matrix(config.problem, seed);
    const Eigen::Index d = base.rows();
    RngStream skew_rng(seed, kSkew);
    const Matrix skew = sample_skew(d, skew_rng);
    RngStream init_rng(seed, kInit);
    g.x0 = sample_normal_vector(d, init_rng);

    g.hessians.push_back(base);
    g.rotations.push_back(RotationSpec::identity(d));
    for (const auto& desc : config.rotations) {
        log_line(ctx, "table1: building rotation " + desc.kind + " t=" + format_double(desc.t));
        RotationSpec rot = build_rotation(desc, d, seed, &skew);
        g.hessians.push_back(rotate_hessian(base, rot));
        g.rotations.push_back(std::move(rot));
    }
    for (std::size_t r = 0; r < g.hessians.size(); ++r) {
        const Matrix& h = g.hessians[r];
        const NormEstimate est = estimate_norm11(h, config.n_probes, RngStream(seed, kProbes).fork(r));
        RngStream spec_rng = RngStream(seed, kSpectral).fork(r);
        const SpectralEstimate sn = spectral_norm(dense_operator(h), d, kLanczosSteps, kLanczosTol, spec_rng);
        g.norm11.push_back(est.value);
        g.norm11_exact.push_back(h.cwiseAbs().sum());
        g.spectral.push_back(sn.value);
    }
    return g;
}

}  // namespace

QuadraticTableResult run_quadratic_table(const ExperimentConfig& config, const RunContext& ctx) {
    QuadraticTableResult result;
    for (const auto& o : config.optimizers) result.settings.push_back(setting_label(o));

    std::vector<double> lrs = config.lrs;
    std::sort(lrs.begin(), lrs.end());

    json meta = metadata_base(config);
    meta["notes"] = {
        "loss convention: L(x) = 1/2 x^T H x, so the Hessian is exactly H",
        "x0: i.i.d. standard normal coordinates, fixed per master seed",
        "norm11_over_d is sum_ij |H_ij| / d, 0.011644 for the unrotated Hessian; normalizing by 2d instead "
        "gives 0.00582",
        "AdaSGD runs on the unrotated loss only (rotation invariant)",
        "learning rate tie-break: smallest lr among equal final losses"};
    meta["rotation_t_grid"] = json::array();
    for (const auto& r : config.rotations) meta["rotation_t_grid"].push_back(r.t);

    std::mutex mu;
    for (std::uint64_t seed : config.seeds) {
        const Table1Geometry geo = table1_geometry(config, seed, ctx);
        const Eigen::Index d = geo.x0.size();
        const std::size_t n_rot = config.rotations.size();

        struct Cell {
            std::size_t setting, hessian, lr;
            bool adasgd;
        };
        std::vector<Cell> cells;
        for (std::size_t s = 0; s < config.optimizers.size(); ++s)
            for (std::size_t li = 0; li < lrs.size(); ++li) {
                cells.push_back({s, 0, li, true});
                for (std::size_t r = 0; r < n_rot; ++r) cells.push_back({s, r + 1, li, false});
            }

        std::vector<double> final_loss(cells.size(), std::numeric_limits<double>::infinity());
        std::vector<std::vector<ResultRow>> cell_rows(cells.size());
        std::vector<OraclePtr> oracles;
        for (const auto& h : geo.hessians) oracles.push_back(quadratic_oracle({h}));

        parallel_for(cells.size(), ctx.threads, [&](std::size_t ci) {
            const Cell& c = cells[ci];
            OptimizerDescriptor desc = config.optimizers[c.setting];
            desc.algo = c.adasgd ? "adasgd" : "adam";
            const Algorithm algo = build_algorithm(desc, d, lrs[c.lr]);
            const auto& cfg = std::get<BlockwiseAdamAlgo>(algo).config;
            const std::string rot_kind = c.hessian == 0 ? "identity" : geo.rotations[c.hessian].kind();
            const double rot_t = geo.rotations[c.hessian].t();
            const std::string run_id = "table1/s" + std::to_string(seed) + "/" + desc.algo + "/set" +
                                       std::to_string(c.setting) + "/rot" + pad(c.hessian) + "/lr" + pad(c.lr);
            const ResultRow base =
                base_row(run_id, "quadratic_table", desc.algo, desc.algo, cfg, lrs[c.lr], rot_kind, rot_t, seed);
            try {
                RngStream rng = RngStream(seed, kNoise).fork(ci);
                const TrajectoryRecord rec = run(*oracles[c.hessian], algo, geo.x0, config.T, rng);
                append_trajectory(cell_rows[ci], base, rec);
                final_loss[ci] = rec.final_loss();
            } catch (const std::exception& e) {
                cell_rows[ci].push_back(error_row(base));
                std::lock_guard lock(mu);
                result.errors.push_back(run_id + ": " + e.what());
            }
        });
        for (auto& rows : cell_rows)
            for (auto& r : rows) result.rows.push_back(std::move(r));

        // Tune: best final loss per (setting, optimizer, hessian); lrs are sorted ascending.
        auto tuned = [&](std::size_t setting, std::size_t hessian, bool adasgd) {
            double best = std::numeric_limits<double>::infinity(), best_lr = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t ci = 0; ci < cells.size(); ++ci) {
                const Cell& c = cells[ci];
                if (c.setting != setting || c.hessian != hessian || c.adasgd != adasgd) continue;
                if (final_loss[ci] < best) {
                    best = final_loss[ci];
                    best_lr = lrs[c.lr];
                }
            }
            return std::pair{best, best_lr};
        };

        auto summary_row = [&](const std::string& opt, std::size_t hessian, bool adasgd) {
            Table1SummaryRow row;
            row.seed = seed;
            row.optimizer = opt;
            row.rotation_t = geo.rotations[hessian].t();
            row.norm11_over_d = geo.norm11[hessian] / static_cast<double>(d);
            row.norm11_over_d_exact = geo.norm11_exact[hessian] / static_cast<double>(d);
            row.spectral_norm = geo.spectral[hessian];
            for (std::size_t s = 0; s < config.optimizers.size(); ++s) {
                auto [loss, lr] = tuned(s, hessian, adasgd);
                row.tuned_loss.push_back(loss);
                row.tuned_lr.push_back(lr);
            }
            return row;
        };
        result.summary.push_back(summary_row("adasgd", 0, true));
        for (std::size_t r = 0; r < n_rot; ++r) result.summary.push_back(summary_row("adam", r + 1, false));

        std::vector<double> rho;
        for (std::size_t s = 0; s < config.optimizers.size(); ++s) {
            std::vector<double> xs, ys;
            for (std::size_t r = 0; r < n_rot; ++r) {
                const auto& row = result.summary[result.summary.size() - n_rot + r];
                xs.push_back(row.norm11_over_d);
                ys.push_back(row.tuned_loss[s]);
            }
            rho.push_back(n_rot >= 2 ? spearman(xs, ys) : std::numeric_limits<double>::quiet_NaN());
        }
        result.spearman.push_back(rho);
    }

    json chosen = json::array();
    for (const auto& row : result.summary)
        for (std::size_t s = 0; s < row.tuned_lr.size(); ++s)
            chosen.push_back({{"seed", row.seed},
                              {"optimizer", row.optimizer},
                              {"rotation_t", row.rotation_t},
                              {"setting", result.settings[s]},
                              {"lr", row.tuned_lr[s]},
                              {"final_loss", row.tuned_loss[s]}});
    meta["chosen_lr"] = chosen;
    meta["spearman_norm11_vs_loss"] = result.spearman;
    meta["errors"] = result.errors;
    result.metadata_json = meta.dump(2);
    return result;
}

void write_quadratic_table(const QuadraticTableResult& result, const std::string& dir) {
    ensure_dir(dir);
    write_result_rows(dir + "/rows.csv", result.rows);
    std::vector<std::string> header{"seed", "optimizer", "rotation_t", "norm11_over_d", "norm11_over_d_exact",
                                    "spectral_norm"};
    for (const auto& s : result.settings) {
        header.push_back("loss_" + s);
        header.push_back("lr_" + s);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.summary) {
        std::vector<std::string> cells{std::to_string(r.seed), r.optimizer, format_double(r.rotation_t),
                                       format_double(r.norm11_over_d), format_double(r.norm11_over_d_exact),
                                       format_double(r.spectral_norm)};
        for (std::size_t s = 0; s < r.tuned_loss.size(); ++s) {
            cells.push_back(std::isfinite(r.tuned_loss[s]) ? format_double(r.tuned_loss[s]) : "");
            cells.push_back(std::isfinite(r.tuned_lr[s]) ? format_double(r.tuned_lr[s]) : "");
        }
        rows.push_back(std::move(cells));
    }
    write_csv(dir + "/table1_summary.csv", header, rows);
    write_text(dir + "/metadata.json", result.metadata_json);
}

// -----------------------------------------------------------------------------
// Convergence sweep

ConvergenceSweepResult run_convergence_sweep(const ExperimentConfig& config, const RunContext& ctx) {
    ConvergenceSweepResult result;
    const bool noisy = config.sigma > 0.0;

    struct Job {
        std::size_t opt;
        long T;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t o = 0; o < config.optimizers.size(); ++o) {
        const auto& algo = config.optimizers[o].algo;
        if (algo != "signgd" && algo != "rmsprop")
            throw ConfigError("convergence_sweep supports the signgd and rmsprop optimizers, got '" + algo + "'");
        for (long T : config.T_grid)
            for (std::uint64_t s : config.seeds) jobs.push_back({o, T, s});
    }

    result.cells.resize(jobs.size());
    std::vector<std::vector<ResultRow>> job_rows(jobs.size());
    std::vector<char> failed(jobs.size(), 0);
    std::mutex mu;

    parallel_for(jobs.size(), ctx.threads, [&](std::size_t ji) {
        const Job& job = jobs[ji];
        const OptimizerDescriptor& desc = config.optimizers[job.opt];
        // Deterministic sweeps draw one problem per seed; noisy sweeps fix the
        // problem from the first seed and vary only the noise.
        const std::uint64_t problem_seed = noisy ? config.seeds.front() : job.seed;
        const Matrix a = build_problem_matrix(config.problem, problem_seed);
        const Eigen::Index d = a.rows();
        RngStream init_rng(problem_seed, kInit);
        const Vector x0 = sample_normal_vector(d, init_rng);

        const Partition part = make_partition_adam(d);
        const Vector h = blockwise_smoothness(a, part);
        const double delta0 = quadratic_gap(a, x0);
        const double T = static_cast<double>(job.T);

        BoundInputs in;
        in.H.assign(h.data(), h.data() + h.size());
        in.sigma.assign(static_cast<std::size_t>(d), config.sigma);
        in.block_sizes.assign(static_cast<std::size_t>(d), 1.0);
        in.T = job.T;
        in.v0 = desc.v0;
        in.epsilon = desc.eps;
        in.delta0 = delta0;
        in.grad0_phi = phi_norm(a * x0, part);

        SweepCell cell;
        cell.optimizer = desc.algo;
        cell.T = job.T;
        cell.seed = job.seed;
        OptimizerDescriptor run_desc = desc;
        if (desc.algo == "signgd") {
            cell.eta = std::sqrt(2.0 * delta0 / (T * h.sum()));
            in.eta = cell.eta;
            in.beta2 = 0.0;
        } else {
            cell.one_minus_beta2 = std::log(T) / T;
            in.beta2 = 1.0 - cell.one_minus_beta2;
            in.eta = 1.0;  // placeholder, replaced by the recommended value below
            cell.eta = bound_report(in).recommended_eta;
            in.eta = cell.eta;
            run_desc.beta2 = in.beta2;
        }

        const std::string run_id = "sweep/" + desc.algo + "/T" + pad(static_cast<std::size_t>(job.T), 6) + "/s" +
                                   pad(static_cast<std::size_t>(job.seed), 4);
        const Algorithm algo = build_algorithm(run_desc, d, cell.eta);
        const auto& cfg = std::get<BlockwiseAdamAlgo>(algo).config;
        const ResultRow base = base_row(run_id, "convergence_sweep", desc.algo, "adam", cfg, cell.eta, "identity",
                                        0.0, job.seed);
        try {
            OraclePtr oracle = quadratic_oracle({a});
            if (noisy) oracle = noisy_oracle(oracle, {Vector::Constant(d, config.sigma)});
            RngStream rng(job.seed, kNoise);
            const TrajectoryRecord rec = run(*oracle, algo, x0, job.T, rng);
            const BoundReport report = bound_report(in);
            if (desc.algo == "signgd") {
                cell.empirical = rec.min_grad_l1_iterates();
                cell.bound = report.signgd_bound;
            } else {
                cell.empirical = rec.min_grad_l1_second_half();
                cell.bound = report.rate_bound;
            }
            cell.within_bound = cell.empirical <= cell.bound;
            append_trajectory(job_rows[ji], base, rec, std::max<long>(1, job.T / 64));
        } catch (const std::exception& e) {
            failed[ji] = 1;
            job_rows[ji].push_back(error_row(base));
            std::lock_guard lock(mu);
            result.errors.push_back(run_id + ": " + e.what());
        }
        result.cells[ji] = cell;
    });
    for (auto& rows : job_rows)
        for (auto& r : rows) result.rows.push_back(std::move(r));

    json slopes = json::object();
    for (std::size_t o = 0; o < config.optimizers.size(); ++o) {
        std::vector<double> ts, means;
        for (long T : config.T_grid) {
            SweepSummary s;
            s.optimizer = config.optimizers[o].algo;
            s.T = T;
            long count = 0;
            for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
                if (jobs[ji].opt != o || jobs[ji].T != T || failed[ji]) continue;
                s.mean_empirical += result.cells[ji].empirical;
                s.bound += result.cells[ji].bound;
                s.violations += result.cells[ji].within_bound ? 0 : 1;
                ++count;
            }
            if (count == 0) continue;
            s.mean_empirical /= static_cast<double>(count);
            s.bound /= static_cast<double>(count);
            s.mean_within_bound = s.mean_empirical <= s.bound;
            result.summary.push_back(s);
            ts.push_back(static_cast<double>(T));
            means.push_back(s.mean_empirical);
        }
        if (ts.size() >= 2) {
            const double slope = loglog_slope(ts, means);
            result.slopes.emplace_back(config.optimizers[o].algo, slope);
            slopes[config.optimizers[o].algo + "#" + std::to_string(o)] = slope;
        }
    }

    json meta = metadata_base(config);
    meta["notes"] = {"signgd: eta = sqrt(2 delta0 / (T H)), H = sum_ij |A_ij|, empirical = min over 1<=t<=T",
                     "rmsprop: 1 - beta2 = ln T / T, eta = sqrt(delta0 / (T sum H)), empirical = min over T/2<t<=T "
                     "of |grad L(x_{t-1})|_1",
                     noisy ? "noisy sweep: problem fixed by the first seed, noise varies with the seed"
                           : "deterministic sweep: one random problem per seed"};
    meta["loglog_slopes"] = slopes;
    meta["errors"] = result.errors;
    result.metadata_json = meta.dump(2);
    return result;
}

void write_convergence_sweep(const ConvergenceSweepResult& result, const std::string& dir) {
    ensure_dir(dir);
    write_result_rows(dir + "/rows.csv", result.rows);
    std::vector<std::vector<std::string>> cells;
    for (const auto& c : result.cells)
        cells.push_back({c.optimizer, std::to_string(c.T), std::to_string(c.seed), format_double(c.eta),
                         format_double(c.one_minus_beta2), format_double(c.empirical), format_double(c.bound),
                         c.within_bound ? "1" : "0"});
    write_csv(dir + "/sweep_cells.csv",
              {"optimizer", "T", "seed", "eta", "one_minus_beta2", "empirical_min_grad_l1", "bound", "within_bound"},
              cells);
    std::vector<std::vector<std::string>> summary;
    for (const auto& s : result.summary)
        summary.push_back({s.optimizer, std::to_string(s.T), format_double(s.mean_empirical), format_double(s.bound),
                           std::to_string(s.violations), s.mean_within_bound ? "1" : "0"});
    write_csv(dir + "/sweep_summary.csv",
              {"optimizer", "T", "mean_empirical_min_grad_l1", "mean_bound", "violations", "mean_within_bound"},
              summary);
    write_text(dir + "/metadata.json", result.metadata_json);
}

// -----------------------------------------------------------------------------
// Invariance suite

namespace {

Algorithm invariance_algo(const std::string& name, Eigen::Index d, double lr) {
    OptimizerDescriptor desc;
    desc.algo = name;
    if (name == "sgd") desc.momentum = 0.9;
    if (name == "adam" || name == "adasgd") {
        desc.beta1 = 0.9;
        desc.beta2 = 0.99;
    }
    return build_algorithm(desc, d, lr);
}

}  // namespace

InvarianceSuiteResult run_invariance_suite(const ExperimentConfig& config, const RunContext& ctx) {
    InvarianceSuiteResult result;
    const Eigen::Index d = config.dim;
    const long T = config.T;
    const double lr = config.lrs.empty() ? 0.05 : config.lrs.front();
    const std::uint64_t seed = config.seeds.front();

    struct Job {
        std::string group, algo;
        bool rotation;  // random rotation, otherwise random permutation
        int trial;
        std::string expected;
        double threshold;
    };
    std::vector<Job> jobs;
    const int witness_trials = std::min(config.trials, 20);
    for (int i = 0; i < config.trials; ++i) {
        jobs.push_back({"rotation_invariance", "sgd", true, i, "invariant", 1e-7});
        jobs.push_back({"rotation_invariance", "adasgd", true, i, "invariant", 1e-7});
        jobs.push_back({"permutation_invariance", "adam", false, i, "invariant", 1e-9});
        jobs.push_back({"permutation_invariance", "signgd", false, i, "invariant", 1e-9});
    }
    for (int i = 0; i < witness_trials; ++i) {
        jobs.push_back({"rotation_sensitivity", "adam", true, i, "informational", 1e-2});
        jobs.push_back({"rotation_sensitivity", "signgd", true, i, "informational", 1e-2});
    }

    result.rows.resize(jobs.size() + 2);
    std::mutex mu;
    parallel_for(jobs.size(), ctx.threads, [&](std::size_t ji) {
        const Job& job = jobs[ji];
        // The problem, start point and rotation depend only on the trial index,
        // so every algorithm in a group sees the same instances.
        RngStream rng = RngStream(seed, kInvariance).fork(static_cast<std::uint64_t>(job.trial));
        const Matrix g = sample_normal_matrix(d, d, rng);
        const Matrix a0 = g * g.transpose() / static_cast<double>(d);
        const Matrix a = 0.5 * (a0 + a0.transpose());
        const Vector x0 = sample_normal_vector(d, rng);
        const bool noisy = job.trial % 4 >= 2;

        RotationSpec rot = RotationSpec::identity(d);
        if (job.rotation) {
            if (job.trial % 2 == 0) {
                const double t = 0.1 + 1.9 * rng.uniform_open();
                rot = RotationSpec::skew_exp(sample_skew(d, rng), t);
            } else {
                rot = RotationSpec::explicit_matrix(sample_orthogonal(d, rng));
            }
        } else {
            rot = RotationSpec::permutation(random_permutation(d, rng));
        }

        OraclePtr oracle = quadratic_oracle({a});
        if (noisy) oracle = noisy_oracle(oracle, {Vector::Constant(d, 0.1)});

        InvarianceRow row{job.group, job.algo, rot.kind(), job.trial, d, T, noisy, 0.0, job.expected, job.threshold, false};
        try {
            const InvarianceReport rep =
                invariance_check(invariance_algo(job.algo, d, lr), oracle, rot, x0, T, rng.fork(1));
            row.max_deviation = rep.max_deviation;
            row.pass = job.expected == "invariant" ? rep.max_deviation <= job.threshold
                                                   : rep.max_deviation > job.threshold;
        } catch (const std::exception& e) {
            std::lock_guard lock(mu);
            result.errors.push_back(job.group + "/" + job.algo + "/" + std::to_string(job.trial) + ": " + e.what());
        }
        result.rows[ji] = row;
    });

    // Two-dimensional counterexample: L = 2 x1^2 + x2^2, R = [[1, 1], [1, -1]] / sqrt(2).
    {
        Matrix a(2, 2);
        a << 4.0, 0.0, 0.0, 2.0;
        Matrix r(2, 2);
        r << 1.0, 1.0, 1.0, -1.0;
        r /= std::sqrt(2.0);
        const RotationSpec rot = RotationSpec::explicit_matrix(r);
        const Vector x0 = Vector::Ones(2);
        const OraclePtr oracle = quadratic_oracle({a});
        int k = 0;
        for (const char* name : {"signgd", "adam"}) {
            InvarianceRow row{"counterexample_2d", name, "explicit", 0, 2, 10, false, 0.0, "witness", 1e-2, false};
            const InvarianceReport rep = invariance_check(invariance_algo(name, 2, 0.1), oracle, rot, x0, 10,
                                                          RngStream(seed, kInvariance));
            row.max_deviation = rep.max_deviation;
            row.pass = rep.max_deviation > 1e-2;
            result.rows[jobs.size() + static_cast<std::size_t>(k++)] = row;
        }
    }

    result.all_required_pass = result.errors.empty();
    for (const auto& row : result.rows)
        if (row.expected != "informational" && !row.pass) result.all_required_pass = false;
    log_line(ctx, std::string("invariance: required checks ") + (result.all_required_pass ? "pass" : "FAIL"));

    json meta = metadata_base(config);
    meta["notes"] = {"sgd: momentum 0.9; adam/adasgd: beta1 0.9, beta2 0.99; signgd: beta1 = beta2 = 0",
                     "noisy trials couple the gradient noise by seed so both runs see the same stochastic losses",
                     "deviation: max_t |x~_t - T^{-1} x_t|_inf / (1 + |x_t|_inf)"};
    meta["all_required_pass"] = result.all_required_pass;
    meta["errors"] = result.errors;
    result.metadata_json = meta.dump(2);
    return result;
}

void write_invariance_suite(const InvarianceSuiteResult& result, const std::string& dir) {
    ensure_dir(dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.rows)
        rows.push_back({r.check, r.algo, r.rotation_kind, std::to_string(r.trial), std::to_string(r.d),
                        std::to_string(r.T), r.noisy ? "1" : "0", format_double(r.max_deviation), r.expected,
                        format_double(r.threshold), r.pass ? "1" : "0"});
    write_csv(dir + "/invariance.csv",
              {"check", "algo", "rotation_kind", "trial", "d", "T", "noisy", "max_deviation", "expected", "threshold",
               "pass"},
              rows);
    write_text(dir + "/metadata.json", result.metadata_json);
}

// -----------------------------------------------------------------------------
// Norms

NormEstimateResult estimate_norms_cmd(const ExperimentConfig& config, const RunContext& ctx) {
    NormEstimateResult result;
    const std::uint64_t seed = config.seeds.front();
    const Matrix base = build_problem_matrix(config.problem, seed);
    const Eigen::Index d = base.rows();
    RngStream skew_rng(seed, kSkew);
    const Matrix skew = sample_skew(d, skew_rng);

    std::vector<RotationDescriptor> rotations = config.rotations;
    if (rotations.empty()) rotations.push_back({});

    Partition custom;
    if (!config.block_sizes.empty()) {
        custom = make_partition_blocks(config.block_sizes);
        if (custom.dim() != d) throw ConfigError("block_sizes do not sum to the problem dimension");
    }

    result.rows.resize(rotations.size());
    parallel_for(rotations.size(), ctx.threads, [&](std::size_t r) {
        const RotationSpec rot = build_rotation(rotations[r], d, seed, &skew);
        const Matrix h = rotate_hessian(base, rot);
        NormRow row;
        row.rotation_kind = rot.kind();
        row.rotation_t = rot.t();
        row.d = d;
        row.n_probes = config.n_probes;
        // Probe streams depend on the seed only, so equal Hessians give equal estimates.
        const NormEstimate est = estimate_norm11(h, config.n_probes, RngStream(seed, kProbes));
        row.norm11 = est.value;
        row.norm11_over_d = est.value / static_cast<double>(d);
        row.norm11_exact = h.cwiseAbs().sum();
        RngStream spec_rng(seed, kSpectral);
        const SpectralEstimate sn = spectral_norm(dense_operator(h), d, kLanczosSteps, kLanczosTol, spec_rng);
        row.spectral_norm = sn.value;
        row.spectral_residual = sn.residual;
        row.H_adam = blockwise_smoothness(h, make_partition_adam(d));
        row.H_adasgd = static_cast<double>(d) * sn.value;
        if (!config.block_sizes.empty()) row.H_custom = blockwise_smoothness(h, custom);
        row.concentration_eps = config.concentration_eps;
        row.concentration_bound = concentration_bound(config.n_probes, d, config.concentration_eps);
        result.rows[r] = std::move(row);
    });

    json meta = metadata_base(config);
    meta["notes"] = {"H_adasgd = d * spectral_norm (single-block smoothness of a quadratic)",
                     "median of an even number of probes uses the lower middle order statistic"};
    json per = json::array();
    for (const auto& row : result.rows) {
        json e{{"rotation_kind", row.rotation_kind}, {"rotation_t", row.rotation_t},
               {"H_adam", std::vector<double>(row.H_adam.data(), row.H_adam.data() + row.H_adam.size())}};
        if (row.H_custom.size() > 0)
            e["H_custom"] = std::vector<double>(row.H_custom.data(), row.H_custom.data() + row.H_custom.size());
        per.push_back(e);
    }
    meta["blockwise_smoothness"] = per;
    meta["errors"] = result.errors;
    result.metadata_json = meta.dump(2);
    return result;
}

void write_norm_estimates(const NormEstimateResult& result, const std::string& dir) {
    ensure_dir(dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.rows)
        rows.push_back({r.rotation_kind, format_double(r.rotation_t), std::to_string(r.d), std::to_string(r.n_probes),
                        format_double(r.norm11), format_double(r.norm11_over_d), format_double(r.norm11_exact),
                        format_double(r.spectral_norm), format_double(r.spectral_residual),
                        format_double(r.H_adam.sum()), format_double(r.H_adasgd),
                        r.H_custom.size() ? format_double(r.H_custom.sum()) : "",
                        format_double(r.concentration_eps), format_double(r.concentration_bound)});
    write_csv(dir + "/norms.csv",
              {"rotation_kind", "rotation_t", "d", "n_probes", "norm11", "norm11_over_d", "norm11_exact",
               "spectral_norm", "spectral_residual", "H_adam_sum", "H_adasgd", "H_custom_sum", "concentration_eps",
               "concentration_bound"},
              rows);
    write_text(dir + "/metadata.json", result.metadata_json);
}

// -----------------------------------------------------------------------------
// Bounds

BoundInputs derive_bound_inputs(const ExperimentConfig& config) {
    if (config.bound_inputs) return *config.bound_inputs;
    const std::uint64_t seed = config.seeds.front();
    const Matrix a = build_problem_matrix(config.problem, seed);
    const Eigen::Index d = a.rows();
    const Partition part = config.block_sizes.empty() ? make_partition_adam(d) : make_partition_blocks(config.block_sizes);
    if (part.dim() != d) throw ConfigError("block_sizes do not sum to the problem dimension");
    RngStream init_rng(seed, kInit);
    const Vector x0 = sample_normal_vector(d, init_rng);
    const Vector h = blockwise_smoothness(a, part);

    BoundInputs in;
    in.H.assign(h.data(), h.data() + h.size());
    in.sigma.assign(static_cast<std::size_t>(part.num_blocks()), config.sigma);
    for (auto s : part.block_sizes) in.block_sizes.push_back(static_cast<double>(s));
    in.T = config.T;
    in.delta0 = quadratic_gap(a, x0);
    in.grad0_phi = phi_norm(a * x0, part);
    const OptimizerDescriptor opt = config.optimizers.empty() ? OptimizerDescriptor{} : config.optimizers.front();
    in.v0 = opt.v0;
    in.epsilon = opt.eps;
    const double T = static_cast<double>(config.T);
    in.beta2 = opt.beta2 > 0.0 ? opt.beta2 : 1.0 - std::log(T) / T;
    in.eta = config.lrs.empty() ? std::sqrt(in.delta0 / (T * h.sum())) : config.lrs.front();
    return in;
}

std::string bound_report_json(const BoundInputs& in, const BoundReport& r) {
    json j;
    j["inputs"] = {{"H", in.H},         {"sigma", in.sigma},   {"block_sizes", in.block_sizes},
                   {"eta", in.eta},     {"beta2", in.beta2},   {"T", in.T},
                   {"v0", in.v0},       {"epsilon", in.epsilon}, {"delta0", in.delta0},
                   {"grad0_phi", in.grad0_phi}};
    auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
    j["report"] = {{"F", num(r.F)},
                   {"E", num(r.E)},
                   {"rate_bound", num(r.rate_bound)},
                   {"R", num(r.R)},
                   {"recommended_eta", num(r.recommended_eta)},
                   {"recommended_one_minus_beta2", num(r.recommended_one_minus_beta2)},
                   {"signgd_bound", num(r.signgd_bound)},
                   {"signgd_optimal_eta", num(r.signgd_optimal_eta)},
                   {"signgd_optimal_bound", num(r.signgd_optimal_bound)}};
    return j.dump(2);
}

}  // namespace optlab

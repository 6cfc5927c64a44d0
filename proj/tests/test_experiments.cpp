#include "optlab/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace optlab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_table() {
    ExperimentConfig c = default_config(ExperimentKind::quadratic_table);
    c.problem.kind = ProblemSource::Kind::diagonal;
    c.problem.diagonal = {1, 1, 1, 0.25, 0.111, 0.0625, 0.04, 0.0278, 0.0204, 0.0156, 0.0123, 0.01};
    c.rotations.clear();
    for (double t : {0.0, 0.05, 0.3}) c.rotations.push_back({"skew_exp", t, std::nullopt, 1, {0, 0, 0}});
    c.lrs = {0.01, 0.03, 0.1, 0.3};
    c.T = 30;
    c.n_probes = 101;
    return c;
}

}  // namespace

TEST_CASE("spearman and log-log slope") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3, 4, 5}, {1, 2, 3, 5, 4}) == doctest::Approx(0.9));
    // ties receive average ranks
    CHECK(spearman({1, 1, 2}, {1, 1, 2}) == doctest::Approx(1.0));
    CHECK(loglog_slope({1, 4, 16}, {8, 4, 2}) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(spearman({1}, {1}), std::invalid_argument);
}

TEST_CASE("quadratic gap") {
    const Matrix a = Eigen::Vector2d(2, 0).asDiagonal();
    CHECK(quadratic_gap(a, Eigen::Vector2d(1, 5)) == 1.0);
    const Matrix neg = Eigen::Vector2d(1, -1).asDiagonal();
    CHECK_THROWS_AS(quadratic_gap(neg, Eigen::Vector2d(1, 1)), ConfigError);
}

TEST_CASE("build helpers") {
    ProblemSource p;
    p.kind = ProblemSource::Kind::random_psd;
    p.dim = 6;
    const Matrix a = build_problem_matrix(p, 3);
    CHECK(a == build_problem_matrix(p, 3));
    CHECK((a - a.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);

    RotationDescriptor bad{"randperm", 0.0, std::nullopt, 1, {2, 2, 2}};
    CHECK_THROWS_AS(build_rotation(bad, 6, 0), ConfigError);
    RotationDescriptor unknown{"shear", 0.0, std::nullopt, 1, {0, 0, 0}};
    CHECK_THROWS_AS(build_rotation(unknown, 6, 0), ConfigError);

    OptimizerDescriptor sign{"signgd", 0.9, 0.9, 0.0, 0.0, 0.0};
    const auto& algo = std::get<BlockwiseAdamAlgo>(build_algorithm(sign, 4, 0.1));
    CHECK(algo.config.beta1 == 0.0);
    CHECK(algo.config.beta2 == 0.0);
    OptimizerDescriptor blocks{"blockwise", 0.9, 0.99, 0.0, 0.0, 0.0};
    CHECK(std::get<BlockwiseAdamAlgo>(build_algorithm(blocks, 5, 0.1, {2, 3})).partition.num_blocks() == 2);
    CHECK_THROWS_AS(build_algorithm(blocks, 5, 0.1, {2, 2}), ConfigError);
}

TEST_CASE("quadratic table: structure, tuning and determinism") {
    const ExperimentConfig c = small_table();
    RunContext ctx;
    ctx.threads = 2;
    const auto r = run_quadratic_table(c, ctx);
    CHECK(r.errors.empty());
    REQUIRE(r.summary.size() == 4);
    CHECK(r.summary[0].optimizer == "adasgd");
    CHECK(r.settings.size() == 2);
    REQUIRE(r.spearman.size() == 1);

    // t = 0: unrotated Hessian is diagonal
    const double exact = (Eigen::Map<const Vector>(c.problem.diagonal.data(), 12)).sum() / 12.0;
    CHECK(r.summary[1].norm11_over_d_exact == doctest::Approx(exact));
    CHECK(r.summary[1].spectral_norm == doctest::Approx(1.0).epsilon(1e-9));

    // the tuned loss equals the smallest final loss among the per-step rows of the cell
    for (const auto& s : r.summary)
        for (std::size_t k = 0; k < s.tuned_loss.size(); ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& row : r.rows)
                if (row.final && row.optimizer == s.optimizer && row.rotation_t == s.rotation_t &&
                    row.beta2 == c.optimizers[k].beta2 && row.step == c.T)
                    best = std::min(best, row.loss);
            CHECK(best == s.tuned_loss[k]);
        }

    // Single-threaded rerun produces byte-identical files.
    const auto dir1 = (std::filesystem::temp_directory_path() / "optlab_t1a").string();
    const auto dir2 = (std::filesystem::temp_directory_path() / "optlab_t1b").string();
    write_quadratic_table(r, dir1);
    write_quadratic_table(run_quadratic_table(c), dir2);
    for (const char* f : {"rows.csv", "table1_summary.csv", "metadata.json"})
        CHECK(slurp(dir1 + "/" + f) == slurp(dir2 + "/" + f));
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("quadratic table isolates failing cells") {
    ExperimentConfig c = small_table();
    c.rotations.resize(1);
    c.optimizers = {{"adam", 0.5, 1.0, 0.0, 0.0, 0.0}, {"adam", 0.0, 0.0, 0.0, 0.0, 0.0}};
    const auto r = run_quadratic_table(c);
    CHECK_FALSE(r.errors.empty());
    long error_rows = 0, good_finals = 0;
    for (const auto& row : r.rows) {
        error_rows += row.error;
        good_finals += row.final && !row.error;
    }
    CHECK(error_rows == 2 * 4);
    CHECK(good_finals == 2 * 4);
    CHECK(std::isinf(r.summary[0].tuned_loss[0]));
    CHECK(std::isfinite(r.summary[0].tuned_loss[1]));
}

TEST_CASE("convergence sweep") {
    ExperimentConfig c = default_config(ExperimentKind::convergence_sweep);
    c.problem.dim = 8;
    c.T_grid = {32, 128, 512};
    c.seeds = {0, 1, 2};
    const auto r = run_convergence_sweep(c);
    CHECK(r.errors.empty());
    CHECK(r.cells.size() == 9);
    for (const auto& cell : r.cells) CHECK(cell.within_bound);
    REQUIRE(r.slopes.size() == 1);
    CHECK(r.slopes[0].second < 0.0);

    c.optimizers = {{"adam", 0.9, 0.99, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(run_convergence_sweep(c), ConfigError);
}

TEST_CASE("invariance suite") {
    ExperimentConfig c = default_config(ExperimentKind::invariance_suite);
    c.trials = 4;
    c.T = 30;
    c.dim = 6;
    const auto r = run_invariance_suite(c);
    CHECK(r.errors.empty());
    CHECK(r.all_required_pass);
    int counterexamples = 0;
    for (const auto& row : r.rows) {
        if (row.check == "counterexample_2d") {
            ++counterexamples;
            CHECK(row.max_deviation > 1e-2);
        }
        if (row.expected == "invariant") CHECK(row.max_deviation <= row.threshold);
    }
    CHECK(counterexamples == 2);
}

TEST_CASE("norm measurement") {
    ExperimentConfig c = default_config(ExperimentKind::norm_estimate);
    c.problem.kind = ProblemSource::Kind::diagonal;
    c.problem.diagonal = {1, 2, 3};
    c.n_probes = 4001;
    c.rotations = {{"identity", 0.0, std::nullopt, 1, {0, 0, 0}}, {"skew_exp", 0.0, std::nullopt, 1, {0, 0, 0}}};
    const auto r = estimate_norms_cmd(c);
    REQUIRE(r.rows.size() == 2);
    const auto& row = r.rows[0];
    CHECK(row.norm11 == doctest::Approx(6.0).epsilon(0.05));
    CHECK(row.norm11_exact == 6.0);
    CHECK(row.spectral_norm == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(row.H_adam == Eigen::Vector3d(1, 2, 3));
    CHECK(row.H_adasgd == doctest::Approx(9.0).epsilon(1e-10));
    // the same matrix gives identical estimates
    CHECK(r.rows[1].norm11 == row.norm11);
    CHECK(r.rows[1].spectral_norm == row.spectral_norm);
}

TEST_CASE("derived bound inputs") {
    const ExperimentConfig c = default_config(ExperimentKind::bound_check);
    const BoundInputs in = derive_bound_inputs(c);
    CHECK(in.H.size() == 10);
    CHECK(in.beta2 == doctest::Approx(1.0 - std::log(1024.0) / 1024.0));
    const BoundReport rep = bound_report(in);
    CHECK(in.eta == doctest::Approx(rep.recommended_eta));
    CHECK(std::isfinite(rep.rate_bound));
    CHECK(bound_report_json(in, rep).find("\"rate_bound\"") != std::string::npos);
}

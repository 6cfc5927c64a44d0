#include "optlab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

using namespace optlab;

namespace {

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool verbose = false;
};

ExperimentConfig resolve_config(const Options& opt, ExperimentKind kind) {
    ExperimentConfig c = opt.config_path.empty() ? default_config(kind) : load_config(opt.config_path);
    if (c.experiment != kind)
        throw ConfigError("config experiment '" + to_string(c.experiment) + "' does not match subcommand '" +
                          to_string(kind) + "'");
    if (opt.seed) c.seeds = {*opt.seed};
    if (!opt.out.empty()) c.output_dir = opt.out;
    return c;
}

int report_errors(const std::vector<std::string>& errors) {
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    return errors.empty() ? 0 : 2;
}

int dispatch(const std::string& cmd, const Options& opt) {
    const RunContext ctx{opt.threads, opt.verbose, &std::cerr};
    if (cmd == "table1") {
        const auto c = resolve_config(opt, ExperimentKind::quadratic_table);
        const auto r = run_quadratic_table(c, ctx);
        write_quadratic_table(r, c.output_dir);
        for (const auto& row : r.summary) {
            std::cout << "seed " << row.seed << ' ' << row.optimizer << " t=" << format_double(row.rotation_t)
                      << " norm11/d=" << format_double(row.norm11_over_d) << " spectral="
                      << format_double(row.spectral_norm);
            for (std::size_t s = 0; s < row.tuned_loss.size(); ++s)
                std::cout << "  [" << r.settings[s] << "] loss=" << format_double(row.tuned_loss[s])
                          << " lr=" << format_double(row.tuned_lr[s]);
            std::cout << '\n';
        }
        return report_errors(r.errors);
    }
    if (cmd == "sweep") {
        const auto c = resolve_config(opt, ExperimentKind::convergence_sweep);
        const auto r = run_convergence_sweep(c, ctx);
        write_convergence_sweep(r, c.output_dir);
        for (const auto& s : r.summary)
            std::cout << s.optimizer << " T=" << s.T << " mean_min_grad_l1=" << format_double(s.mean_empirical)
                      << " bound=" << format_double(s.bound) << " violations=" << s.violations << '\n';
        for (const auto& [name, slope] : r.slopes) std::cout << name << " loglog slope " << format_double(slope) << '\n';
        return report_errors(r.errors);
    }
    if (cmd == "invariance") {
        const auto c = resolve_config(opt, ExperimentKind::invariance_suite);
        const auto r = run_invariance_suite(c, ctx);
        write_invariance_suite(r, c.output_dir);
        std::cout << "required invariance checks: " << (r.all_required_pass ? "pass" : "FAIL") << '\n';
        return report_errors(r.errors);
    }
    if (cmd == "norms") {
        const auto c = resolve_config(opt, ExperimentKind::norm_estimate);
        const auto r = estimate_norms_cmd(c, ctx);
        write_norm_estimates(r, c.output_dir);
        for (const auto& row : r.rows)
            std::cout << row.rotation_kind << " t=" << format_double(row.rotation_t)
                      << " norm11=" << format_double(row.norm11) << " exact=" << format_double(row.norm11_exact)
                      << " spectral=" << format_double(row.spectral_norm) << '\n';
        return report_errors(r.errors);
    }
    const auto c = resolve_config(opt, ExperimentKind::bound_check);
    const BoundInputs in = derive_bound_inputs(c);
    std::cout << bound_report_json(in, bound_report(in)) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blockwise adaptive optimizer experiments on quadratics"};
    app.require_subcommand(1, 1);
    Options opt;
    app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--verbose", opt.verbose, "Progress messages on stderr");

    auto add = [&](const char* name, const char* help, bool with_out, bool with_seed) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
        if (with_out) sub->add_option("--out", opt.out, "Output directory");
        if (with_seed) sub->add_option("--seed", opt.seed, "Master seed (overrides the config seeds)");
        sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--verbose", opt.verbose, "Progress messages on stderr");
        return sub;
    };
    add("table1", "Rotated quadratic table with learning-rate search", true, true);
    add("sweep", "Convergence sweep against the theoretical bounds", true, true);
    add("invariance", "Rotation and permutation invariance suite", true, true);
    add("norms", "(1,1)-norm, spectral norm and blockwise smoothness", true, true);
    add("bounds", "Print the bound report as JSON", false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        return dispatch(cmd, opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

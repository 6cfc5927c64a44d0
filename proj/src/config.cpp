#include "optlab/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace optlab {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::quadratic_table: return "quadratic_table";
        case ExperimentKind::convergence_sweep: return "convergence_sweep";
        case ExperimentKind::invariance_suite: return "invariance_suite";
        case ExperimentKind::norm_estimate: return "norm_estimate";
        case ExperimentKind::bound_check: return "bound_check";
    }
    return "unknown";
}

Vector table1_diagonal() {
    Vector diag(1000);
    for (int i = 0; i < 10; ++i) diag[i] = 1.0;
    for (int k = 1; k <= 990; ++k) diag[9 + k] = 1.0 / (static_cast<double>(k) * k);
    return diag;
}

std::vector<double> default_lr_grid() {
    std::vector<double> lrs;
    const double lo = 1e-4, hi = 4.0;
    for (int i = 0; i < 13; ++i) lrs.push_back(lo * std::pow(hi / lo, i / 12.0));
    lrs.back() = hi;
    return lrs;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
        case ExperimentKind::quadratic_table:
            c.problem.kind = ProblemSource::Kind::table1_default;
            for (double t : {0.0, 0.002, 0.0075, 0.015, 0.05}) c.rotations.push_back({"skew_exp", t, std::nullopt, 1, {0, 0, 0}});
            c.optimizers = {{"adam", 0.0, 0.0, 0.0, 0.0, 0.0}, {"adam", 0.9, 0.99, 0.0, 0.0, 0.0}};
            c.lrs = default_lr_grid();
            c.T = 100;
            break;
        case ExperimentKind::convergence_sweep:
            c.problem.kind = ProblemSource::Kind::random_psd;
            c.problem.dim = 50;
            c.optimizers = {{"signgd", 0.0, 0.0, 0.0, 0.0, 0.0}};
            c.T_grid = {64, 256, 1024, 4096};
            c.seeds.clear();
            for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
            break;
        case ExperimentKind::invariance_suite:
            c.T = 100;
            c.dim = 20;
            c.trials = 100;
            c.lrs = {0.05};
            break;
        case ExperimentKind::norm_estimate:
            c.problem.kind = ProblemSource::Kind::table1_default;
            c.rotations = {{"identity", 0.0, std::nullopt, 1, {0, 0, 0}}};
            break;
        case ExperimentKind::bound_check:
            c.problem.kind = ProblemSource::Kind::random_psd;
            c.problem.dim = 10;
            c.T = 1024;
            c.sigma = 0.1;
            c.optimizers = {{"rmsprop", 0.0, 0.0, 0.0, 1.0, 0.0}};
            break;
    }
    return c;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
}

ExperimentKind parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::quadratic_table, ExperimentKind::convergence_sweep,
                   ExperimentKind::invariance_suite, ExperimentKind::norm_estimate, ExperimentKind::bound_check})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

ProblemSource parse_problem(const json& j) {
    reject_unknown(j, {"kind", "diagonal", "path", "dim"}, "problem");
    ProblemSource p;
    const auto kind = get_or<std::string>(j, "kind", "table1_default");
    if (kind == "table1_default") p.kind = ProblemSource::Kind::table1_default;
    else if (kind == "diagonal") p.kind = ProblemSource::Kind::diagonal;
    else if (kind == "dense_file") p.kind = ProblemSource::Kind::dense_file;
    else if (kind == "random_psd") p.kind = ProblemSource::Kind::random_psd;
    else throw ConfigError("problem: unknown kind '" + kind + "'");
    p.diagonal = get_or<std::vector<double>>(j, "diagonal", {});
    p.path = get_or<std::string>(j, "path", "");
    p.dim = get_or<Eigen::Index>(j, "dim", 0);
    if (p.kind == ProblemSource::Kind::diagonal && p.diagonal.empty())
        throw ConfigError("problem: diagonal kind needs a nonempty 'diagonal' list");
    if (p.kind == ProblemSource::Kind::dense_file && p.path.empty())
        throw ConfigError("problem: dense_file kind needs 'path'");
    if (p.kind == ProblemSource::Kind::random_psd && p.dim < 1)
        throw ConfigError("problem: random_psd kind needs 'dim' >= 1");
    return p;
}

RotationDescriptor parse_rotation(const json& j) {
    reject_unknown(j, {"kind", "t", "seed", "k", "shape"}, "rotation");
    RotationDescriptor r;
    r.kind = get_or<std::string>(j, "kind", "identity");
    if (r.kind != "identity" && r.kind != "skew_exp" && r.kind != "permutation" && r.kind != "randperm")
        throw ConfigError("rotation: unknown kind '" + r.kind + "'");
    r.t = get_or<double>(j, "t", 0.0);
    if (j.contains("seed")) r.seed = get_or<std::uint64_t>(j, "seed", 0);
    r.k = get_or<int>(j, "k", 1);
    if (j.contains("shape")) {
        const auto s = get_or<std::vector<Eigen::Index>>(j, "shape", {});
        if (s.size() != 3) throw ConfigError("rotation: shape must have three factors");
        r.shape = {s[0], s[1], s[2]};
    }
    if (r.kind == "randperm" && (r.k < 1 || r.shape[0] < 1))
        throw ConfigError("rotation: randperm needs k >= 1 and a shape");
    return r;
}

OptimizerDescriptor parse_optimizer(const json& j) {
    reject_unknown(j, {"algo", "beta1", "beta2", "eps", "v0", "momentum"}, "optimizer");
    OptimizerDescriptor o;
    o.algo = get_or<std::string>(j, "algo", "adam");
    static const std::set<std::string> algos{"adam", "adasgd", "signgd", "rmsprop", "sgd", "blockwise"};
    if (!algos.count(o.algo)) throw ConfigError("optimizer: unknown algo '" + o.algo + "'");
    o.beta1 = get_or<double>(j, "beta1", 0.0);
    o.beta2 = get_or<double>(j, "beta2", 0.0);
    o.eps = get_or<double>(j, "eps", 0.0);
    o.v0 = get_or<double>(j, "v0", 0.0);
    o.momentum = get_or<double>(j, "momentum", 0.0);
    if (!(o.beta1 >= 0 && o.beta1 < 1) || !(o.beta2 >= 0 && o.beta2 <= 1) || o.eps < 0 || o.v0 < 0 ||
        !(o.momentum >= 0 && o.momentum < 1))
        throw ConfigError("optimizer: hyperparameter out of range");
    return o;
}

BoundInputs parse_bound_inputs(const json& j) {
    reject_unknown(j, {"H", "sigma", "block_sizes", "eta", "beta2", "T", "v0", "epsilon", "delta0", "grad0_phi"},
                   "bound_inputs");
    BoundInputs b;
    b.H = get_or<std::vector<double>>(j, "H", {});
    b.sigma = get_or<std::vector<double>>(j, "sigma", std::vector<double>(b.H.size(), 0.0));
    b.block_sizes = get_or<std::vector<double>>(j, "block_sizes", std::vector<double>(b.H.size(), 1.0));
    b.eta = get_or<double>(j, "eta", 0.0);
    b.beta2 = get_or<double>(j, "beta2", 0.0);
    b.T = get_or<long>(j, "T", 0);
    b.v0 = get_or<double>(j, "v0", 0.0);
    b.epsilon = get_or<double>(j, "epsilon", 0.0);
    b.delta0 = get_or<double>(j, "delta0", 0.0);
    b.grad0_phi = get_or<double>(j, "grad0_phi", 0.0);
    return b;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"experiment", "problem", "rotations", "optimizers", "lrs", "T", "T_grid", "seeds", "n_probes",
                    "sigma", "trials", "dim", "concentration_eps", "block_sizes", "bound_inputs", "output_dir"},
                   "config");
    if (!j.contains("experiment")) throw ConfigError("config: missing 'experiment'");
    ExperimentConfig c = default_config(parse_kind(get_or<std::string>(j, "experiment", "")));

    if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
    if (j.contains("rotations")) {
        c.rotations.clear();
        for (const auto& r : j.at("rotations")) c.rotations.push_back(parse_rotation(r));
    }
    if (j.contains("optimizers")) {
        c.optimizers.clear();
        for (const auto& o : j.at("optimizers")) c.optimizers.push_back(parse_optimizer(o));
    }
    c.lrs = get_or(j, "lrs", c.lrs);
    c.T = get_or(j, "T", c.T);
    c.T_grid = get_or(j, "T_grid", c.T_grid);
    c.seeds = get_or(j, "seeds", c.seeds);
    c.n_probes = get_or(j, "n_probes", c.n_probes);
    c.sigma = get_or(j, "sigma", c.sigma);
    c.trials = get_or(j, "trials", c.trials);
    c.dim = get_or(j, "dim", c.dim);
    c.concentration_eps = get_or(j, "concentration_eps", c.concentration_eps);
    c.block_sizes = get_or(j, "block_sizes", c.block_sizes);
    if (j.contains("bound_inputs")) c.bound_inputs = parse_bound_inputs(j.at("bound_inputs"));
    c.output_dir = get_or(j, "output_dir", c.output_dir);

    if (c.T < 1) throw ConfigError("config: T must be >= 1");
    if (c.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (c.n_probes < 1) throw ConfigError("config: n_probes must be >= 1");
    if (c.sigma < 0) throw ConfigError("config: sigma must be >= 0");
    if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (c.dim < 1) throw ConfigError("config: dim must be >= 1");
    if (!(c.concentration_eps > 0 && c.concentration_eps < 1))
        throw ConfigError("config: concentration_eps must lie in (0, 1)");
    for (double lr : c.lrs)
        if (!(lr > 0)) throw ConfigError("config: learning rates must be positive");
    for (long t : c.T_grid)
        if (t < 1) throw ConfigError("config: T_grid entries must be >= 1");
    if (c.experiment == ExperimentKind::quadratic_table) {
        if (c.rotations.empty() || c.optimizers.empty() || c.lrs.empty())
            throw ConfigError("config: quadratic_table needs nonempty rotation, optimizer and lr grids");
    }
    if (c.experiment == ExperimentKind::convergence_sweep && (c.T_grid.empty() || c.optimizers.empty()))
        throw ConfigError("config: convergence_sweep needs T_grid and optimizers");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    static const char* pk[] = {"table1_default", "diagonal", "dense_file", "random_psd"};
    j["problem"] = {{"kind", pk[static_cast<int>(c.problem.kind)]}};
    if (!c.problem.diagonal.empty()) j["problem"]["diagonal"] = c.problem.diagonal;
    if (!c.problem.path.empty()) j["problem"]["path"] = c.problem.path;
    if (c.problem.dim > 0) j["problem"]["dim"] = c.problem.dim;
    j["rotations"] = json::array();
    for (const auto& r : c.rotations) {
        json e{{"kind", r.kind}, {"t", r.t}, {"k", r.k}};
        if (r.seed) e["seed"] = *r.seed;
        if (r.shape[0] > 0) e["shape"] = {r.shape[0], r.shape[1], r.shape[2]};
        j["rotations"].push_back(e);
    }
    j["optimizers"] = json::array();
    for (const auto& o : c.optimizers)
        j["optimizers"].push_back({{"algo", o.algo}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps},
                                   {"v0", o.v0}, {"momentum", o.momentum}});
    j["lrs"] = c.lrs;
    j["T"] = c.T;
    j["T_grid"] = c.T_grid;
    j["seeds"] = c.seeds;
    j["n_probes"] = c.n_probes;
    j["sigma"] = c.sigma;
    j["trials"] = c.trials;
    j["dim"] = c.dim;
    j["concentration_eps"] = c.concentration_eps;
    j["block_sizes"] = c.block_sizes;
    j["output_dir"] = c.output_dir;
    return j.dump(2);
}

Matrix read_dense_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw ConfigError("matrix file '" + path + "': non-numeric entry");
        if (!row.empty()) rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw ConfigError("matrix file '" + path + "' is empty");
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
            throw ConfigError("matrix file '" + path + "' is not square");
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return m;
}

}  // namespace optlab

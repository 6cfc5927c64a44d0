#pragma once

#include "optlab/linalg.hpp"
#include "optlab/probes.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace optlab {

/// Malformed or inconsistent configuration; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { quadratic_table, convergence_sweep, invariance_suite, norm_estimate, bound_check };

std::string to_string(ExperimentKind kind);

struct ProblemSource {
    enum class Kind { table1_default, diagonal, dense_file, random_psd };
    Kind kind = Kind::table1_default;
    std::vector<double> diagonal;
    std::string path;
    Eigen::Index dim = 0;  // random_psd only
};

struct RotationDescriptor {
    std::string kind = "identity";  // identity | skew_exp | permutation | randperm
    double t = 0.0;
    std::optional<std::uint64_t> seed;  // defaults to the experiment seed
    int k = 1;
    TensorShape shape{0, 0, 0};
};

struct OptimizerDescriptor {
    std::string algo = "adam";  // adam | adasgd | signgd | rmsprop | sgd | blockwise
    double beta1 = 0.0;
    double beta2 = 0.0;
    double eps = 0.0;
    double v0 = 0.0;
    double momentum = 0.0;  // sgd only
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::quadratic_table;
    ProblemSource problem;
    std::vector<RotationDescriptor> rotations;
    std::vector<OptimizerDescriptor> optimizers;
    std::vector<double> lrs;
    long T = 100;
    std::vector<long> T_grid;
    std::vector<std::uint64_t> seeds{0};
    long n_probes = 50;
    double sigma = 0.0;
    int trials = 100;
    Eigen::Index dim = 20;
    double concentration_eps = 0.3;
    std::vector<Eigen::Index> block_sizes;
    std::optional<BoundInputs> bound_inputs;
    std::string output_dir = "results";
};

/// Per-experiment defaults, before any JSON overrides.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses one JSON document; unknown keys raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Echo of the effective configuration, written into metadata.
std::string config_to_json(const ExperimentConfig& config);

/// diag(1 x 10, 1, 1/2^2, ..., 1/990^2), d = 1000.
Vector table1_diagonal();

/// 13 learning rates spaced geometrically from 1e-4 to 4.
std::vector<double> default_lr_grid();

/// Dense whitespace-separated square matrix, one row per line.
Matrix read_dense_matrix(const std::string& path);

}  // namespace optlab

#include "optlab/invariance.hpp"

#include <algorithm>
#include <stdexcept>

namespace optlab {

InvarianceReport invariance_check(const Algorithm& algo, const OraclePtr& oracle,
                                  const RotationSpec& rot, const Vector& x0, long T,
                                  const RngStream& rng) {
    if (!oracle) throw std::invalid_argument("invariance_check: null oracle");
    const OraclePtr rotated = rotated_oracle(oracle, rot);

    RngStream rng_plain = rng;
    RngStream rng_rotated = rng;
    const RunOptions every_step{1};
    const TrajectoryRecord plain = run(*oracle, algo, x0, T, rng_plain, every_step);
    const TrajectoryRecord other = run(*rotated, algo, rot.apply_inverse(x0), T, rng_rotated, every_step);

    InvarianceReport report;
    report.per_step.reserve(plain.checkpoints.size());
    for (std::size_t s = 0; s < plain.checkpoints.size(); ++s) {
        const Vector& x = plain.checkpoints[s].second;
        const Vector& x_tilde = other.checkpoints[s].second;
        const double dev =
            (x_tilde - rot.apply_inverse(x)).lpNorm<Eigen::Infinity>() / (1.0 + x.lpNorm<Eigen::Infinity>());
        report.per_step.push_back(dev);
        report.max_deviation = std::max(report.max_deviation, dev);
    }
    return report;
}

}  // namespace optlab

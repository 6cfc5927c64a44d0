#pragma once

#include "optlab/losses.hpp"
#include "optlab/optimizers.hpp"
#include "optlab/rotations.hpp"

#include <vector>

namespace optlab {

struct InvarianceReport {
    double max_deviation = 0.0;
    /// |x~_t - T^{-1} x_t|_inf / (1 + |x_t|_inf) for t = 0..T
    std::vector<double> per_step;
};

/// Runs algo on (x0, L) and on (T^{-1} x0, L o T) and compares the trajectories
/// after mapping the first back through T^{-1}. Both runs draw from copies of
/// rng, so a noisy oracle realizes the same stochastic losses in each.
InvarianceReport invariance_check(const Algorithm& algo, const OraclePtr& oracle,
                                  const RotationSpec& rot, const Vector& x0, long T,
                                  const RngStream& rng);

}  // namespace optlab

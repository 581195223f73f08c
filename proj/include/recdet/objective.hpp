#pragma once

#include <vector>

#include "recdet/geometry.hpp"

namespace recdet {

struct LossBreakdown {
  double cls = 0.0;
  double loc = 0.0;
  double total = 0.0;
};

// -log probs[g], with probs[g] floored at 1e-12 before the log.
// Throws std::invalid_argument on an out-of-range label.
double log_loss(const std::vector<double>& probs, int label);

// Per-coordinate 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise, summed over
// the four offset coordinates of (predicted - target).
double smooth_l1(const RegressionTarget& predicted,
                 const RegressionTarget& target);

// Classification plus localization; loc enters only for label >= 1.
// loc_weight scales the localization term (default 1).
LossBreakdown multitask_loss(const std::vector<double>& probs, int label,
                             const RegressionTarget& predicted_offsets,
                             const RegressionTarget& target_offsets,
                             double loc_weight = 1.0);

// Sum of totals across the unrolled iterations.
// Throws std::invalid_argument on an empty list.
double global_loss(const std::vector<LossBreakdown>& per_iteration);

// Derivative of smooth_l1 in each coordinate: x for |x| < 1, sign(x)
// otherwise, evaluated at (predicted - target).
RegressionTarget smooth_l1_grad(const RegressionTarget& predicted,
                                const RegressionTarget& target);

}  // namespace recdet

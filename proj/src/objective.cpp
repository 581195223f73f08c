#include "recdet/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recdet {

namespace {
constexpr double kProbFloor = 1e-12;

double smooth_l1_coord(double x) {
  const double a = std::fabs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_grad_coord(double x) {
  if (std::fabs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}
}  // namespace

double log_loss(const std::vector<double>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("invalid label");
  }
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbFloor));
}

double smooth_l1(const RegressionTarget& predicted,
                 const RegressionTarget& target) {
  return smooth_l1_coord(predicted.dx - target.dx) +
         smooth_l1_coord(predicted.dy - target.dy) +
         smooth_l1_coord(predicted.dw - target.dw) +
         smooth_l1_coord(predicted.dh - target.dh);
}

RegressionTarget smooth_l1_grad(const RegressionTarget& predicted,
                                const RegressionTarget& target) {
  return RegressionTarget{smooth_l1_grad_coord(predicted.dx - target.dx),
                          smooth_l1_grad_coord(predicted.dy - target.dy),
                          smooth_l1_grad_coord(predicted.dw - target.dw),
                          smooth_l1_grad_coord(predicted.dh - target.dh)};
}

LossBreakdown multitask_loss(const std::vector<double>& probs, int label,
                             const RegressionTarget& predicted_offsets,
                             const RegressionTarget& target_offsets,
                             double loc_weight) {
  LossBreakdown out;
  out.cls = log_loss(probs, label);
  out.loc = label >= 1
                ? loc_weight * smooth_l1(predicted_offsets, target_offsets)
                : 0.0;
  out.total = out.cls + out.loc;
  return out;
}

double global_loss(const std::vector<LossBreakdown>& per_iteration) {
  if (per_iteration.empty()) {
    throw std::invalid_argument("no iterations");
  }
  double sum = 0.0;
  for (const LossBreakdown& b : per_iteration) sum += b.total;
  return sum;
}

}  // namespace recdet

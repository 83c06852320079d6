#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>

#include "annobench/grid.hpp"

namespace annobench {

// Additive smoothing for the differentiable Dice ratio; keeps the perfect
// prediction at exactly 1 and handles classes absent from an image.
inline constexpr double kDiceEpsilon = 1e-6;

// Hard evaluation Dice per class plus the mean over the three tissue
// classes (CSF, GM, WM).
struct DiceReport {
  std::array<double, kNumClasses> per_class{};
  double mean_foreground = 0.0;
};

// 2|A n B| / (|A| + |B|) over the class_id pixel sets; 1.0 when both sets
// are empty (a tissue absent from both maps is a perfect agreement).
double hard_dice(const LabelMap& pred, const LabelMap& gt, int class_id);

DiceReport dice_report(const LabelMap& pred, const LabelMap& gt);

// CSV with header class_0,class_1,class_2,class_3,mean_foreground.
std::string dice_report_csv(const DiceReport& r);

struct LossValue {
  double value = 0.0;  // 4 - sum of per-class soft Dice ratios
  std::array<double, kNumClasses> per_class_soft_dsc{};
};

// Soft Dice loss over per-pixel class probabilities against the one-hot
// encoding of gt:
//   dsc_i = (2 * sum_x p_i(x) g_i(x) + eps) / (sum_x p_i(x) + |g_i| + eps)
// All accumulation is sequential in pixel storage order, in double.
LossValue soft_dice_loss(const Eigen::Ref<const Eigen::Matrix4Xd>& probs,
                         std::span<const std::uint8_t> labels);
LossValue soft_dice_loss(const ProbMap& pred, const LabelMap& gt);

// Column-wise softmax with the usual max shift; columns are pixels.
Eigen::Matrix4Xd softmax_columns(
    const Eigen::Ref<const Eigen::Matrix4Xd>& logits);

// Analytic gradient of soft_dice_loss(softmax(logits), labels) with respect
// to the pre-softmax logits. Same shape as logits.
Eigen::Matrix4Xd soft_dice_grad(
    const Eigen::Ref<const Eigen::Matrix4Xd>& logits,
    std::span<const std::uint8_t> labels);

// Mean over pixels of the margin between the largest and second-largest
// class probability. 1 for one-hot maps, 0 for uniform ones; lower values
// mean a less confident prediction.
double average_bvsb(const ProbMap& pm);

}  // namespace annobench

#include "annobench/metrics.hpp"

#include <cmath>

#include "annobench/text_format.hpp"

namespace annobench {

namespace {

void check_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": dimension mismatch");
}

void check_class_id(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses)
    throw DataError("class id " + std::to_string(class_id) +
                    " out of range 0..3");
}

}  // namespace

double hard_dice(const LabelMap& pred, const LabelMap& gt, int class_id) {
  check_same_dims(pred.dims(), gt.dims(), "hard_dice");
  check_class_id(class_id);
  auto p = pred.values();
  auto g = gt.values();
  std::size_t in_pred = 0, in_gt = 0, in_both = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] == class_id;
    const bool b = g[i] == class_id;
    in_pred += a;
    in_gt += b;
    in_both += a && b;
  }
  if (in_pred + in_gt == 0) return 1.0;
  return 2.0 * static_cast<double>(in_both) /
         static_cast<double>(in_pred + in_gt);
}

DiceReport dice_report(const LabelMap& pred, const LabelMap& gt) {
  DiceReport r;
  for (int c = 0; c < kNumClasses; ++c) r.per_class[c] = hard_dice(pred, gt, c);
  r.mean_foreground =
      (r.per_class[1] + r.per_class[2] + r.per_class[3]) / 3.0;
  return r;
}

std::string dice_report_csv(const DiceReport& r) {
  std::string out = "class_0,class_1,class_2,class_3,mean_foreground\n";
  for (int c = 0; c < kNumClasses; ++c)
    out += format_double(r.per_class[c]) + ",";
  out += format_double(r.mean_foreground) + "\n";
  return out;
}

LossValue soft_dice_loss(const Eigen::Ref<const Eigen::Matrix4Xd>& probs,
                         std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(probs.cols()) != labels.size())
    throw DataError("soft_dice_loss: dimension mismatch");

  // Sequential accumulation in pixel order keeps results reproducible.
  double prob_sum[kNumClasses] = {0, 0, 0, 0};
  double inter_sum[kNumClasses] = {0, 0, 0, 0};
  double gt_count[kNumClasses] = {0, 0, 0, 0};
  const Eigen::Index n = probs.cols();
  for (Eigen::Index x = 0; x < n; ++x) {
    const int y = labels[static_cast<std::size_t>(x)];
    for (int c = 0; c < kNumClasses; ++c) prob_sum[c] += probs(c, x);
    inter_sum[y] += probs(y, x);
    gt_count[y] += 1.0;
  }

  LossValue out;
  double total = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    out.per_class_soft_dsc[c] = (2.0 * inter_sum[c] + kDiceEpsilon) /
                                (prob_sum[c] + gt_count[c] + kDiceEpsilon);
    total += out.per_class_soft_dsc[c];
  }
  out.value = static_cast<double>(kNumClasses) - total;
  return out;
}

LossValue soft_dice_loss(const ProbMap& pred, const LabelMap& gt) {
  check_same_dims(pred.dims(), gt.dims(), "soft_dice_loss");
  return soft_dice_loss(pred.channels().cast<double>(), gt.values());
}

Eigen::Matrix4Xd softmax_columns(
    const Eigen::Ref<const Eigen::Matrix4Xd>& logits) {
  Eigen::Matrix4Xd p(4, logits.cols());
  for (Eigen::Index x = 0; x < logits.cols(); ++x) {
    const double m =
        std::max(std::max(logits(0, x), logits(1, x)),
                 std::max(logits(2, x), logits(3, x)));
    double e[kNumClasses];
    for (int c = 0; c < kNumClasses; ++c) e[c] = std::exp(logits(c, x) - m);
    const double sum = ((e[0] + e[1]) + e[2]) + e[3];
    for (int c = 0; c < kNumClasses; ++c) p(c, x) = e[c] / sum;
  }
  return p;
}

Eigen::Matrix4Xd soft_dice_grad(
    const Eigen::Ref<const Eigen::Matrix4Xd>& logits,
    std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size())
    throw DataError("soft_dice_grad: dimension mismatch");
  if (!logits.allFinite()) throw DataError("soft_dice_grad: non-finite logits");

  const Eigen::Matrix4Xd p = softmax_columns(logits);
  const Eigen::Index n = p.cols();

  double prob_sum[kNumClasses] = {0, 0, 0, 0};
  double inter_sum[kNumClasses] = {0, 0, 0, 0};
  double gt_count[kNumClasses] = {0, 0, 0, 0};
  for (Eigen::Index x = 0; x < n; ++x) {
    const int y = labels[static_cast<std::size_t>(x)];
    for (int c = 0; c < kNumClasses; ++c) prob_sum[c] += p(c, x);
    inter_sum[y] += p(y, x);
    gt_count[y] += 1.0;
  }

  // dL/dp_c(x) = beta_c - gamma_c * [y(x) == c], with the per-class scalars
  // below; chaining through the softmax gives
  // dL/dz_c(x) = p_c(x) * (dL/dp_c(x) - sum_i dL/dp_i(x) p_i(x)).
  double beta[kNumClasses], gamma[kNumClasses];
  for (int c = 0; c < kNumClasses; ++c) {
    const double denom = prob_sum[c] + gt_count[c] + kDiceEpsilon;
    gamma[c] = 2.0 / denom;
    beta[c] = (2.0 * inter_sum[c] + kDiceEpsilon) / (denom * denom);
  }

  Eigen::Matrix4Xd grad(4, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const int y = labels[static_cast<std::size_t>(x)];
    double dLdp[kNumClasses];
    double inner = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      dLdp[c] = beta[c] - (c == y ? gamma[c] : 0.0);
      inner += dLdp[c] * p(c, x);
    }
    for (int c = 0; c < kNumClasses; ++c)
      grad(c, x) = p(c, x) * (dLdp[c] - inner);
  }
  return grad;
}

double average_bvsb(const ProbMap& pm) {
  auto vals = pm.values();
  const std::size_t n = pm.pixels();
  double margin_sum = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    double best = -1.0, second = -1.0;
    for (int c = 0; c < kNumClasses; ++c) {
      const double v = vals[x * kNumClasses + c];
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    margin_sum += best - second;
  }
  return margin_sum / static_cast<double>(n);
}

}  // namespace annobench

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "annobench/grid.hpp"
#include "annobench/metrics.hpp"

namespace annobench {

// Desk-scale reference segmenter: a linear-softmax per-pixel classifier over
// seven hand features, trained by full-batch gradient descent on the soft
// Dice loss. It honors the same contract a heavyweight network would
// (4-channel softmax output, Dice-loss training, warm start), at 28
// parameters.

inline constexpr int kNumFeatures = 7;

using WeightMatrix = Eigen::Matrix<double, kNumClasses, kNumFeatures>;
using FeatureMatrix = Eigen::Matrix<double, kNumFeatures, Eigen::Dynamic>;

// Column per pixel in row-major pixel order. Feature rows:
//   0  raw intensity on the [0,1] scale
//   1  box mean, radius 1 (clamped to edge)
//   2  box mean, radius 2
//   3  box mean, radius 4
//   4  row / d0
//   5  col / d1
//   6  constant 1
struct FeatureMap {
  Dims dims;
  FeatureMatrix values;
};

FeatureMap extract_features(const Volume& slice);

struct ModelParams {
  WeightMatrix weights = WeightMatrix::Zero();
  std::uint32_t trained_epochs = 0;
  std::uint64_t rng_seed = 0;
};

// All-zero weights: every pixel starts at the uniform prediction.
ModelParams fresh_model(std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.1;
  int max_epochs = 200;
  int patience = 30;  // epochs without >= 1e-6 improvement before stopping
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kImprovementThreshold = 1e-6;

// One 2-D training slice with its features precomputed.
struct TrainingSlice {
  FeatureMatrix features;
  std::vector<std::uint8_t> labels;
};

// Flattens (Volume, LabelMap) pairs into 2-D slices; 3-D cases contribute
// one slice per axis-0 index, in order.
std::vector<TrainingSlice> prepare_training_slices(
    std::span<const std::pair<Volume, LabelMap>> labeled);

double mean_loss(const WeightMatrix& weights,
                 std::span<const TrainingSlice> slices);
WeightMatrix mean_loss_grad(const WeightMatrix& weights,
                            std::span<const TrainingSlice> slices);

struct TrainResult {
  ModelParams params;             // best-seen weights
  std::vector<double> epoch_loss; // loss evaluated at the start of each epoch
  double best_loss = 0.0;
  int epochs_run = 0;
};

// Full-batch gradient descent on the mean soft Dice loss over all slices.
// Stops at max_epochs or after `patience` epochs without improvement; the
// returned weights attain the minimum recorded loss. Deterministic for a
// fixed (init, labeled order, cfg).
TrainResult train(const ModelParams& init,
                  std::span<const std::pair<Volume, LabelMap>> labeled,
                  const TrainConfig& cfg);

// Per-pixel softmax probabilities for one 2-D slice.
ProbMap predict(const ModelParams& model, const Volume& slice);

// Per-pixel argmax; ties go to the lowest class id.
LabelMap reconstruct_labels(const ProbMap& pm);

// Whole-case prediction: 2-D directly, 3-D slice by slice along axis 0.
LabelMap predict_labels(const ModelParams& model, const Volume& volume);

// Model file: magic "SGM1", u32 class count, u32 feature count, f64 weights
// row-major, u32 trained_epochs, u64 seed; little-endian throughout.
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace annobench

#include "annobench/segmenter.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "annobench/text_format.hpp"

namespace annobench {

namespace {

// Separable box mean with coordinates clamped to the image edge; every
// window averages exactly (2r+1)^2 samples.
std::vector<double> box_mean(const std::vector<double>& src, int rows,
                             int cols, int radius) {
  const auto clamp = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  std::vector<double> horiz(src.size()), out(src.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d)
        s += src[static_cast<std::size_t>(r) * cols + clamp(c + d, cols - 1)];
      horiz[static_cast<std::size_t>(r) * cols + c] = s;
    }
  const double norm = 1.0 / ((2.0 * radius + 1) * (2.0 * radius + 1));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d)
        s += horiz[static_cast<std::size_t>(clamp(r + d, rows - 1)) * cols + c];
      out[static_cast<std::size_t>(r) * cols + c] = s * norm;
    }
  return out;
}

constexpr int kBoxRadii[3] = {1, 2, 4};

}  // namespace

FeatureMap extract_features(const Volume& slice) {
  if (slice.rank() != 2)
    throw DataError("extract_features requires a 2-D slice");

  const Grid<float> unit = slice.unit_floats();
  const int rows = static_cast<int>(unit.dims()[0]);
  const int cols = static_cast<int>(unit.dims()[1]);
  const std::size_t n = unit.size();

  std::vector<double> intensity(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = unit.values()[i];
    if (!std::isfinite(v))
      throw DataError("extract_features: non-finite intensity at element " +
                      std::to_string(i));
    intensity[i] = v;
  }

  FeatureMap fm;
  fm.dims = unit.dims();
  fm.values.resize(kNumFeatures, static_cast<Eigen::Index>(n));

  for (std::size_t i = 0; i < n; ++i) fm.values(0, i) = intensity[i];
  for (int b = 0; b < 3; ++b) {
    const std::vector<double> sm = box_mean(intensity, rows, cols, kBoxRadii[b]);
    for (std::size_t i = 0; i < n; ++i) fm.values(1 + b, i) = sm[i];
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      fm.values(4, i) = static_cast<double>(r) / rows;
      fm.values(5, i) = static_cast<double>(c) / cols;
      fm.values(6, i) = 1.0;
    }
  return fm;
}

ModelParams fresh_model(std::uint64_t seed) {
  ModelParams m;
  m.rng_seed = seed;
  return m;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw DataError("learning_rate must be > 0");
  if (max_epochs < 0) throw DataError("max_epochs must be >= 0");
  if (patience < 0 || patience > max_epochs)
    throw DataError("patience must lie in [0, max_epochs]");
}

std::vector<TrainingSlice> prepare_training_slices(
    std::span<const std::pair<Volume, LabelMap>> labeled) {
  std::vector<TrainingSlice> out;
  for (const auto& [vol, lab] : labeled) {
    if (vol.dims() != lab.dims())
      throw DataError("training pair has mismatched volume/label dims");
    const auto add_slice = [&out](const Volume& v, const LabelMap& m) {
      TrainingSlice s;
      s.features = extract_features(v).values;
      s.labels.assign(m.values().begin(), m.values().end());
      out.push_back(std::move(s));
    };
    if (vol.rank() == 2) {
      add_slice(vol, lab);
    } else {
      for (std::uint32_t i = 0; i < vol.dims()[0]; ++i)
        add_slice(slice2d(vol, 0, i), slice2d(lab, 0, i));
    }
  }
  return out;
}

double mean_loss(const WeightMatrix& weights,
                 std::span<const TrainingSlice> slices) {
  double total = 0.0;
  for (const TrainingSlice& s : slices) {
    const Eigen::Matrix4Xd probs = softmax_columns(weights * s.features);
    total += soft_dice_loss(probs, s.labels).value;
  }
  return total / static_cast<double>(slices.size());
}

WeightMatrix mean_loss_grad(const WeightMatrix& weights,
                            std::span<const TrainingSlice> slices) {
  WeightMatrix grad = WeightMatrix::Zero();
  for (const TrainingSlice& s : slices) {
    const Eigen::Matrix4Xd dz = soft_dice_grad(weights * s.features, s.labels);
    grad += dz * s.features.transpose();
  }
  return grad / static_cast<double>(slices.size());
}

TrainResult train(const ModelParams& init,
                  std::span<const std::pair<Volume, LabelMap>> labeled,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (labeled.empty()) throw DataError("train: empty labeled set");
  const std::vector<TrainingSlice> slices = prepare_training_slices(labeled);

  WeightMatrix w = init.weights;
  TrainResult res;
  res.params = init;
  res.best_loss = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double loss = mean_loss(w, slices);
    if (!std::isfinite(loss))
      throw ComputeError("training diverged: non-finite loss at epoch " +
                         std::to_string(epoch));
    res.epoch_loss.push_back(loss);
    res.epochs_run = epoch + 1;

    if (loss < res.best_loss) {
      stall = res.best_loss - loss >= kImprovementThreshold ? 0 : stall + 1;
      res.best_loss = loss;
      res.params.weights = w;
    } else {
      ++stall;
    }
    if (stall >= cfg.patience) break;

    w -= cfg.learning_rate * mean_loss_grad(w, slices);
  }

  res.params.trained_epochs =
      init.trained_epochs + static_cast<std::uint32_t>(res.epochs_run);
  res.params.rng_seed = init.rng_seed;
  return res;
}

ProbMap predict(const ModelParams& model, const Volume& slice) {
  if (!model.weights.allFinite())
    throw ComputeError("predict: non-finite model weights");
  const FeatureMap fm = extract_features(slice);
  const Eigen::Matrix4Xd probs = softmax_columns(model.weights * fm.values);

  std::vector<float> interleaved(probs.cols() * kNumClasses);
  for (Eigen::Index x = 0; x < probs.cols(); ++x)
    for (int c = 0; c < kNumClasses; ++c)
      interleaved[static_cast<std::size_t>(x) * kNumClasses + c] =
          static_cast<float>(probs(c, x));
  return ProbMap(fm.dims, std::move(interleaved));
}

LabelMap reconstruct_labels(const ProbMap& pm) {
  auto vals = pm.values();
  std::vector<std::uint8_t> labels(pm.pixels());
  for (std::size_t x = 0; x < labels.size(); ++x) {
    int best = 0;
    float best_v = vals[x * kNumClasses];
    for (int c = 1; c < kNumClasses; ++c) {
      const float v = vals[x * kNumClasses + c];
      if (v > best_v) {  // strict: ties keep the lowest class id
        best_v = v;
        best = c;
      }
    }
    labels[x] = static_cast<std::uint8_t>(best);
  }
  return LabelMap(Grid<std::uint8_t>(pm.dims(), std::move(labels)));
}

LabelMap predict_labels(const ModelParams& model, const Volume& volume) {
  if (volume.rank() == 2) return reconstruct_labels(predict(model, volume));
  std::vector<Grid<std::uint8_t>> slices;
  for (std::uint32_t i = 0; i < volume.dims()[0]; ++i)
    slices.push_back(
        reconstruct_labels(predict(model, slice2d(volume, 0, i))).grid());
  return LabelMap(stack_axis0(std::span<const Grid<std::uint8_t>>(slices)));
}

namespace {

constexpr std::size_t kModelFileSize =
    4 + 4 + 4 + sizeof(double) * kNumClasses * kNumFeatures + 4 + 8;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  if (!model.weights.allFinite())
    throw DataError("refusing to save non-finite model weights");
  std::vector<std::uint8_t> out;
  out.reserve(kModelFileSize);
  out.insert(out.end(), {'S', 'G', 'M', '1'});
  put_u32_le(out, kNumClasses);
  put_u32_le(out, kNumFeatures);
  for (int r = 0; r < kNumClasses; ++r)
    for (int c = 0; c < kNumFeatures; ++c)
      put_u64_le(out, std::bit_cast<std::uint64_t>(model.weights(r, c)));
  put_u32_le(out, model.trained_epochs);
  put_u64_le(out, model.rng_seed);
  write_file_atomic(path, out);
}

ModelParams load_model(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_binary_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SGM1", 4) != 0)
    throw DataError(path.string() + ": bad magic (expected \"SGM1\")");
  if (bytes.size() != kModelFileSize)
    throw DataError(path.string() + ": model file must be " +
                    std::to_string(kModelFileSize) + " bytes, got " +
                    std::to_string(bytes.size()));
  if (get_u32_le(bytes.data() + 4) != kNumClasses ||
      get_u32_le(bytes.data() + 8) != kNumFeatures)
    throw DataError(path.string() + ": unsupported class/feature counts");

  ModelParams m;
  std::size_t pos = 12;
  for (int r = 0; r < kNumClasses; ++r)
    for (int c = 0; c < kNumFeatures; ++c) {
      m.weights(r, c) =
          std::bit_cast<double>(get_u64_le(bytes.data() + pos));
      pos += 8;
    }
  if (!m.weights.allFinite())
    throw DataError(path.string() + ": non-finite weights");
  m.trained_epochs = get_u32_le(bytes.data() + pos);
  m.rng_seed = get_u64_le(bytes.data() + pos + 4);
  return m;
}

}  // namespace annobench

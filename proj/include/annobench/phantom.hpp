#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>

#include "annobench/grid.hpp"
#include "annobench/tensor_io.hpp"

namespace annobench {

// Deterministic brain-like 2-D cases: nested elliptic bands (background,
// CSF, GM, WM from the outside in) with per-case jittered center, aspect and
// radii, plus Gaussian intensity noise. Difficulty is tuned through
// noise_sigma; the geometric jitter gives cases genuine variability so
// uncertainty sampling has signal.
struct PhantomSpec {
  std::uint32_t rows = 32;
  std::uint32_t cols = 32;
  std::uint64_t seed = 0;
  double noise_sigma = 0.05;
  double ring_radii_jitter = 0.15;
  std::array<double, kNumClasses> class_intensity_means = {0.05, 0.35, 0.65,
                                                           0.9};

  void validate() const;
};

// One case, fully determined by (spec.seed, case_index). The volume is f32
// in [0, 1]; the label map holds the generating band of each pixel.
std::pair<Volume, LabelMap> generate_case(const PhantomSpec& spec,
                                          std::uint64_t case_index);

// Writes VTF1 volume/label files for a labeled/unlabeled/test split of the
// given sizes plus the manifest describing them; returns the manifest.
// Ground-truth labels are written for every case, including the unlabeled
// pool (they are the simulated annotator).
DatasetManifest generate_benchmark(const PhantomSpec& spec, int n_labeled,
                                   int n_pool, int n_test,
                                   const std::filesystem::path& out_dir);

}  // namespace annobench

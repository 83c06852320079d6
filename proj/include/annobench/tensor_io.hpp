#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "annobench/grid.hpp"

namespace annobench {

// On-disk tensor container (VTF1), bit-exact:
//   bytes 0..3   magic "VTF1"
//   byte  4      dtype: 0 = u8, 1 = f32 (IEEE-754 little-endian)
//   byte  5      kind:  0 = volume, 1 = labelmap, 2 = probmap
//   byte  6      spatial rank r (2 or 3; probmap payload carries an implicit
//                trailing channel dim of 4)
//   then         r x u32 little-endian spatial dims, outermost first
//   then         payload, row-major (probmap: 4 channel values per pixel,
//                contiguous)
// No padding, no checksum. Label maps are always u8, probability maps always
// f32. Every type invariant is enforced at load; errors carry the byte
// offset of the offending field.

using Tensor = std::variant<Volume, LabelMap, ProbMap>;

Tensor load_tensor(const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path);
LabelMap load_labelmap(const std::filesystem::path& path);
ProbMap load_probmap(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
void save_tensor(const Tensor& t, const std::filesystem::path& path);
void save_tensor(const Volume& v, const std::filesystem::path& path);
void save_tensor(const LabelMap& m, const std::filesystem::path& path);
void save_tensor(const ProbMap& p, const std::filesystem::path& path);

// Binary PGM ("P5", maxval 255) import/export for human-inspectable 2-D u8
// fixtures.
Grid<std::uint8_t> load_pgm(const std::filesystem::path& path);
void save_pgm(const Grid<std::uint8_t>& g, const std::filesystem::path& path);

enum class Split { labeled, unlabeled, test };

std::string split_name(Split s);

struct ManifestCase {
  std::string id;
  std::string volume;                // path, relative to the manifest dir
  std::optional<std::string> labels; // required for labeled/test splits
  Split split = Split::unlabeled;
};

// Case pool description. Paths are stored as written in the manifest file
// and resolved against base_dir.
struct DatasetManifest {
  std::vector<ManifestCase> cases;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& rel) const {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base_dir / p;
  }
  std::vector<const ManifestCase*> split_cases(Split s) const {
    std::vector<const ManifestCase*> out;
    for (const auto& c : cases)
      if (c.split == s) out.push_back(&c);
    return out;
  }
};

// Loads and validates a manifest: unique ids, labels present where the split
// requires them, every referenced path resolvable on disk.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m,
                   const std::filesystem::path& path);

}  // namespace annobench

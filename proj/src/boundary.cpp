#include "annobench/boundary.hpp"

#include <algorithm>

#include "annobench/text_format.hpp"

namespace annobench {

namespace {

void check_class_id(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses)
    throw DataError("class id " + std::to_string(class_id) +
                    " out of range 0..3");
}

void check_tol(int tol) {
  if (tol < 0) throw DataError("overlap tolerance must be >= 0");
}

}  // namespace

BoundarySet extract_boundary(const LabelMap& map, int class_id) {
  if (map.rank() != 2)
    throw DataError("extract_boundary requires a 2-D label map");
  check_class_id(class_id);

  const std::uint32_t rows = map.dims()[0];
  const std::uint32_t cols = map.dims()[1];
  BoundarySet out;
  out.class_id = class_id;
  out.source_dims = {rows, cols};

  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (map(r, c) != class_id) continue;
      const bool edge =
          r == 0 || r == rows - 1 || c == 0 || c == cols - 1 ||
          map(r - 1, c) != class_id || map(r + 1, c) != class_id ||
          map(r, c - 1) != class_id || map(r, c + 1) != class_id;
      if (edge) out.pixels.push_back({r, c});
    }
  }
  return out;
}

std::int64_t boundary_overlap(const BoundarySet& gt_b,
                              const BoundarySet& pred_b, int tol) {
  if (gt_b.class_id != pred_b.class_id)
    throw DataError("boundary_overlap: class mismatch");
  if (gt_b.source_dims != pred_b.source_dims)
    throw DataError("boundary_overlap: dimension mismatch");
  check_tol(tol);

  const std::int64_t rows = gt_b.source_dims[0];
  const std::int64_t cols = gt_b.source_dims[1];
  std::vector<std::uint8_t> pred_mask(
      static_cast<std::size_t>(rows * cols), 0);
  for (const auto& p : pred_b.pixels)
    pred_mask[static_cast<std::size_t>(p[0]) * cols + p[1]] = 1;

  std::int64_t count = 0;
  for (const auto& p : gt_b.pixels) {
    const std::int64_t pr = p[0], pc = p[1];
    const std::int64_t r0 = std::max<std::int64_t>(0, pr - tol);
    const std::int64_t r1 = std::min<std::int64_t>(rows - 1, pr + tol);
    const std::int64_t c0 = std::max<std::int64_t>(0, pc - tol);
    const std::int64_t c1 = std::min<std::int64_t>(cols - 1, pc + tol);
    bool hit = false;
    for (std::int64_t r = r0; r <= r1 && !hit; ++r)
      for (std::int64_t c = c0; c <= c1 && !hit; ++c)
        hit = pred_mask[static_cast<std::size_t>(r) * cols + c] != 0;
    count += hit;
  }
  return count;
}

namespace {

// Per-class boundary length and overlap, accumulated over axial slices for
// 3-D maps so the ratio weighs slices by boundary length.
void accumulate_counts(const LabelMap& gt, const LabelMap& pred, int class_id,
                       int tol, std::int64_t& gt_len, std::int64_t& overlap) {
  if (gt.rank() == 2) {
    const BoundarySet gb = extract_boundary(gt, class_id);
    const BoundarySet pb = extract_boundary(pred, class_id);
    gt_len += static_cast<std::int64_t>(gb.pixels.size());
    overlap += boundary_overlap(gb, pb, tol);
    return;
  }
  for (std::uint32_t s = 0; s < gt.dims()[0]; ++s) {
    const LabelMap gs = slice2d(gt, 0, s);
    const LabelMap ps = slice2d(pred, 0, s);
    accumulate_counts(gs, ps, class_id, tol, gt_len, overlap);
  }
}

}  // namespace

double saved_effort(const LabelMap& gt, const LabelMap& pred, int class_id,
                    int tol) {
  if (gt.dims() != pred.dims())
    throw DataError("saved_effort: dimension mismatch");
  if (class_id < 1 || class_id >= kNumClasses)
    throw DataError("saved_effort: class id must be 1, 2 or 3");
  check_tol(tol);

  std::int64_t gt_len = 0, overlap = 0;
  accumulate_counts(gt, pred, class_id, tol, gt_len, overlap);
  if (gt_len == 0) return 100.0;
  return 100.0 * static_cast<double>(overlap) / static_cast<double>(gt_len);
}

EffortReport effort_report(const LabelMap& gt, const LabelMap& pred,
                           int tol) {
  if (gt.dims() != pred.dims())
    throw DataError("effort_report: dimension mismatch");
  check_tol(tol);

  EffortReport r;
  for (int c = 1; c < kNumClasses; ++c) {
    EffortRow& row = r.per_class[c - 1];
    row.class_id = c;
    accumulate_counts(gt, pred, c, tol, row.gt_boundary_len, row.overlap_len);
    row.saved_effort_pct =
        row.gt_boundary_len == 0
            ? 100.0
            : 100.0 * static_cast<double>(row.overlap_len) /
                  static_cast<double>(row.gt_boundary_len);
  }
  return r;
}

std::string effort_report_csv(const EffortReport& r) {
  std::string out = "class,gt_boundary_len,overlap_len,saved_effort_pct\n";
  for (const EffortRow& row : r.per_class) {
    out += std::to_string(row.class_id) + "," +
           std::to_string(row.gt_boundary_len) + "," +
           std::to_string(row.overlap_len) + "," +
           format_double(row.saved_effort_pct) + "\n";
  }
  return out;
}

}  // namespace annobench

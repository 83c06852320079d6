#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "annobench/grid.hpp"

namespace annobench {

// Boundary pixels of one class in one 2-D label map: pixels of the class
// with a 4-neighbor (or the image border) of a different class. Pixel order
// is row-major.
struct BoundarySet {
  int class_id = 0;
  std::array<std::uint32_t, 2> source_dims{};
  std::vector<std::array<std::uint32_t, 2>> pixels;
};

BoundarySet extract_boundary(const LabelMap& map, int class_id);

// Number of gt boundary pixels with a predicted boundary pixel within
// Chebyshev distance tol; tol = 0 counts exact coincidences.
std::int64_t boundary_overlap(const BoundarySet& gt_b,
                              const BoundarySet& pred_b, int tol);

// 100 * C / L per the saved-effort criterion: C the overlap count above, L
// the gt boundary length (pixel count). 100 when the gt boundary is empty,
// since no drawing effort remains.
double saved_effort(const LabelMap& gt, const LabelMap& pred, int class_id,
                    int tol);

struct EffortRow {
  int class_id = 0;
  std::int64_t gt_boundary_len = 0;
  std::int64_t overlap_len = 0;
  double saved_effort_pct = 0.0;
};

// One row per tissue class (1 = CSF, 2 = GM, 3 = WM). 3-D maps are measured
// per axial slice (axis 0) with counts summed before the ratio, so longer
// boundaries weigh more.
struct EffortReport {
  std::array<EffortRow, kNumClasses - 1> per_class{};
};

EffortReport effort_report(const LabelMap& gt, const LabelMap& pred, int tol);

// CSV with header class,gt_boundary_len,overlap_len,saved_effort_pct.
std::string effort_report_csv(const EffortReport& r);

}  // namespace annobench

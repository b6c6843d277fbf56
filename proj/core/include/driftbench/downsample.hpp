#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace driftbench {

/// Largest-triangle-three-buckets selection over a series with gaps.
///
/// Returns ascending indices into the input, at most `max_points` of them.
/// Each run of missing values is represented by its first index, so the
/// caller emits an explicit null there. The first and last index of the
/// series are always kept. When the series fits, every index is returned.
/// Throws Error{validation} if max_points < 3 or the spans differ in length.
std::vector<std::size_t> lttb_select(std::span<const double> x, std::span<const std::optional<double>> y,
                                     std::size_t max_points);

}  // namespace driftbench

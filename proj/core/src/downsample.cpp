#include "driftbench/downsample.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/errors.hpp"

namespace driftbench {

namespace {

struct Segment {
  bool gap = false;
  std::vector<std::size_t> indices;  // present indices for runs, the full range for gaps
};

void lttb_run(std::span<const double> x, std::span<const std::optional<double>> y,
              const std::vector<std::size_t>& run, std::size_t target, std::vector<std::size_t>& out) {
  const std::size_t n = run.size();
  if (target >= n) {
    out.insert(out.end(), run.begin(), run.end());
    return;
  }
  if (target == 1) {
    out.push_back(run.front());
    return;
  }
  if (target == 2) {
    out.push_back(run.front());
    out.push_back(run.back());
    return;
  }
  const double every = static_cast<double>(n - 2) / static_cast<double>(target - 2);
  std::size_t a = 0;
  out.push_back(run[0]);
  for (std::size_t i = 0; i + 2 < target; ++i) {
    const auto bucket_begin = static_cast<std::size_t>(std::floor(static_cast<double>(i) * every)) + 1;
    const auto bucket_end =
        std::min(static_cast<std::size_t>(std::floor(static_cast<double>(i + 1) * every)) + 1, n - 1);
    const auto next_begin = bucket_end;
    const auto next_end = std::min(static_cast<std::size_t>(std::floor(static_cast<double>(i + 2) * every)) + 1, n);

    double avg_x = 0.0;
    double avg_y = 0.0;
    for (std::size_t k = next_begin; k < next_end; ++k) {
      avg_x += x[run[k]];
      avg_y += *y[run[k]];
    }
    const auto count = static_cast<double>(std::max<std::size_t>(next_end - next_begin, 1));
    if (next_end == next_begin) {
      avg_x = x[run[n - 1]];
      avg_y = *y[run[n - 1]];
    } else {
      avg_x /= count;
      avg_y /= count;
    }

    const double ax = x[run[a]];
    const double ay = *y[run[a]];
    double best_area = -1.0;
    std::size_t best = bucket_begin;
    for (std::size_t k = bucket_begin; k < bucket_end; ++k) {
      const double area = std::abs((ax - avg_x) * (*y[run[k]] - ay) - (ax - x[run[k]]) * (avg_y - ay));
      if (area > best_area) {
        best_area = area;
        best = k;
      }
    }
    out.push_back(run[best]);
    a = best;
  }
  out.push_back(run[n - 1]);
}

}  // namespace

std::vector<std::size_t> lttb_select(std::span<const double> x, std::span<const std::optional<double>> y,
                                     std::size_t max_points) {
  if (x.size() != y.size()) throw Error(ErrorCode::validation, "x and y lengths differ");
  if (max_points < 3) throw Error(ErrorCode::validation, "max_points must be at least 3", "max_points");
  const std::size_t n = x.size();
  std::vector<std::size_t> out;
  if (n <= max_points) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }

  std::vector<Segment> segments;
  for (std::size_t i = 0; i < n; ++i) {
    const bool gap = !y[i].has_value();
    if (segments.empty() || segments.back().gap != gap) segments.push_back({gap, {}});
    segments.back().indices.push_back(i);
  }

  // Too many segments for the budget: fold the shortest interior gaps into
  // their neighbouring runs.
  while (segments.size() > max_points) {
    std::size_t best = 0;
    for (std::size_t s = 1; s + 1 < segments.size(); ++s) {
      if (segments[s].gap && (best == 0 || segments[s].indices.size() < segments[best].indices.size())) best = s;
    }
    if (best == 0) break;
    auto& left = segments[best - 1];
    left.indices.insert(left.indices.end(), segments[best + 1].indices.begin(), segments[best + 1].indices.end());
    segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(best),
                   segments.begin() + static_cast<std::ptrdiff_t>(best + 2));
  }

  std::size_t gaps = 0;
  std::size_t present = 0;
  std::vector<std::size_t> runs;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].gap) {
      ++gaps;
    } else {
      runs.push_back(s);
      present += segments[s].indices.size();
    }
  }
  // A trailing gap of more than one row needs a slot for the last index.
  const bool trailing_gap = segments.back().gap && segments.back().indices.size() > 1;
  const std::size_t budget = max_points - gaps - (trailing_gap ? 1 : 0);

  // Baseline of up to two points per run, remainder proportional to length.
  std::vector<std::size_t> alloc(segments.size(), 0);
  std::size_t used = 0;
  for (std::size_t pass_min : {std::size_t{1}, std::size_t{2}}) {
    for (auto s : runs) {
      const auto want = std::min(pass_min, segments[s].indices.size());
      if (alloc[s] < want && used < budget) {
        ++alloc[s];
        ++used;
      }
    }
  }
  if (used < budget && present > 0) {
    const std::size_t spare = budget - used;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t handed = 0;
    for (auto s : runs) {
      const double share =
          static_cast<double>(spare) * static_cast<double>(segments[s].indices.size()) / static_cast<double>(present);
      const auto whole = std::min(static_cast<std::size_t>(share), segments[s].indices.size() - alloc[s]);
      alloc[s] += whole;
      handed += whole;
      remainders.emplace_back(share - static_cast<double>(whole), s);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [frac, s] : remainders) {
      if (handed >= spare) break;
      if (alloc[s] < segments[s].indices.size()) {
        ++alloc[s];
        ++handed;
      }
    }
  }

  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].gap) {
      out.push_back(segments[s].indices.front());
    } else {
      lttb_run(x, y, segments[s].indices, alloc[s], out);
    }
  }
  if (out.back() != n - 1) {
    if (out.size() < max_points) {
      out.push_back(n - 1);
    } else {
      out.back() = n - 1;
    }
  }
  return out;
}

}  // namespace driftbench

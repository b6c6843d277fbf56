// SEED (Huang, Koh, Dobbie & Pears, "Detecting Volatility Shift in Data
// Streams", ICDM 2014): block-based adaptive windowing.
//
// Samples are grouped into blocks of `block_size`. Each time a block fills,
// every block boundary splits the window into an older part (n0, mean u0)
// and a newer part (n1, mean u1) that are compared with
//
//   eps = sqrt(2 m v ln(2/delta')) + (2/3) m ln(2/delta'),
//   m = 1/n0 + 1/n1,  delta' = delta / (number of boundaries)
//
// v being the per-sample variance of the whole window. When the block count
// passes `compression_term`, adjacent blocks whose means differ by at most
// `epsilon_prime` are merged; if that does not shrink the list enough the
// most similar neighbours are merged until it fits.

#include <algorithm>
#include <cmath>
#include <limits>

#include "algorithms.hpp"

namespace driftbench::detail {

namespace {

Seed::Block merge(const Seed::Block& a, const Seed::Block& b) {
  Seed::Block out;
  out.n = a.n + b.n;
  out.total = a.total + b.total;
  const double gap = a.total / a.n - b.total / b.n;
  out.m2 = a.m2 + b.m2 + gap * gap * a.n * b.n / out.n;
  return out;
}

double mean_of(const Seed::Block& b) { return b.total / b.n; }

}  // namespace

Seed::Seed(const DetectorConfig& c)
    : delta(c.param("delta")),
      block_size(static_cast<std::size_t>(c.param("block_size"))),
      epsilon_prime(c.param("epsilon_prime")),
      compression_term(static_cast<std::size_t>(c.param("compression_term"))) {}

DetectorStatus Seed::update(double x) {
  if (filling.n == 0.0) {
    filling = Block{1.0, x, 0.0};
  } else {
    filling = merge(filling, Block{1.0, x, 0.0});
  }
  if (filling.n < static_cast<double>(block_size)) return DetectorStatus::stable;

  blocks.push_back(filling);
  filling = Block{};
  const bool drift = blocks.size() >= 2 && detect();
  if (!drift) compress();
  return drift ? DetectorStatus::drift : DetectorStatus::stable;
}

bool Seed::detect() {
  Block whole = blocks.front();
  for (std::size_t i = 1; i < blocks.size(); ++i) whole = merge(whole, blocks[i]);
  const double v = whole.m2 / whole.n;
  const double boundaries = static_cast<double>(blocks.size() - 1);
  const double dd = std::log(2.0 * boundaries / delta);

  double n0 = 0.0;
  double u0 = 0.0;
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
    n0 += blocks[i].n;
    u0 += blocks[i].total;
    const double n1 = whole.n - n0;
    const double u1 = whole.total - u0;
    const double gap = u0 / n0 - u1 / n1;
    const double m = 1.0 / n0 + 1.0 / n1;
    const double eps = std::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
    if (std::abs(gap) > eps) {
      last_difference = gap;
      return true;
    }
  }
  return false;
}

void Seed::compress() {
  if (blocks.size() <= compression_term) return;
  std::vector<Block> merged;
  merged.reserve(blocks.size());
  for (const auto& b : blocks) {
    if (!merged.empty() && std::abs(mean_of(merged.back()) - mean_of(b)) <= epsilon_prime) {
      merged.back() = merge(merged.back(), b);
    } else {
      merged.push_back(b);
    }
  }
  while (merged.size() > compression_term) {
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
      const double gap = std::abs(mean_of(merged[i]) - mean_of(merged[i + 1]));
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    merged[best] = merge(merged[best], merged[best + 1]);
    merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }
  blocks = std::move(merged);
}

}  // namespace driftbench::detail

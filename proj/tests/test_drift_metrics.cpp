#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftbench/drift_metrics.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/random.hpp"
#include "support.hpp"

using namespace driftbench;

namespace {

std::vector<double> random_masses(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) {
    v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    s += v;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    s = 1.0;
  }
  for (auto& v : p) v /= s;
  return p;
}

Timestamp step_at(std::size_t i) { return testing::kEpoch + kScadaStep * static_cast<std::int64_t>(i); }

const Seconds kThousand = kScadaStep * 1000;

}  // namespace

TEST_CASE("empirical distribution examples") {
  const std::vector<double> same(100, 3.0);
  const auto edges = equal_width_edges(3.0, 3.0, 20);
  CHECK(edges.front() == 2.5);
  CHECK(edges.back() == 3.5);
  const auto h = empirical_distribution(same, edges);
  CHECK(std::count(h.masses.begin(), h.masses.end(), 1.0) == 1);

  const std::vector<double> v{1, 2, 3, 4};
  const std::vector<double> e2{1.0, 2.5, 4.0};
  CHECK(empirical_distribution(v, e2).masses == std::vector<double>{0.5, 0.5});

  const std::vector<double> clip{-100.0, 100.0, 2.0};
  const auto hc = empirical_distribution(clip, e2);
  CHECK(hc.masses[0] == doctest::Approx(2.0 / 3.0));
  CHECK(hc.masses[1] == doctest::Approx(1.0 / 3.0));

  try {
    empirical_distribution(v, e2, 5);
    FAIL("expected insufficient_samples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_samples);
  }
  const std::vector<double> bad_edges{1.0, 1.0, 2.0};
  CHECK_THROWS_AS(empirical_distribution(v, bad_edges), Error);
}

TEST_CASE("distance examples") {
  const std::vector<double> a{0.5, 0.5}, b{0.9, 0.1}, x{1.0, 0.0}, y{0.0, 1.0};
  CHECK(hellinger_distance(a, a) == 0.0);
  CHECK(hellinger_distance(x, y) == doctest::Approx(1.0));
  CHECK(hellinger_distance(a, b) == doctest::Approx(0.3250).epsilon(1e-4));
  CHECK(hellinger_distance(a, b) == doctest::Approx(std::sqrt(1.0 - (std::sqrt(0.45) + std::sqrt(0.05)))));
  CHECK(total_variation_distance(a, a) == 0.0);
  CHECK(total_variation_distance(x, y) == doctest::Approx(1.0));
  CHECK(total_variation_distance(a, b) == doctest::Approx(0.4));
  const std::vector<double> three{0.2, 0.3, 0.5};
  CHECK_THROWS_AS(hellinger_distance(a, three), Error);
  CHECK_THROWS_AS(total_variation_distance(a, three), Error);
  CHECK(parse_distance_metric(to_string(DistanceMetric::total_variation)) == DistanceMetric::total_variation);
}

TEST_CASE("metric axioms on random masses") {
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t k = 2 + rng.below(30);
    const auto p = random_masses(rng, k), q = random_masses(rng, k), r = random_masses(rng, k);
    for (auto m : {DistanceMetric::hellinger, DistanceMetric::total_variation}) {
      const double pq = distance(m, p, q);
      CHECK(pq >= 0.0);
      CHECK(pq <= 1.0 + 1e-12);
      CHECK(pq == doctest::Approx(distance(m, q, p)).epsilon(1e-12));
      CHECK(distance(m, p, p) == 0.0);
      CHECK(pq <= distance(m, p, r) + distance(m, r, q) + 1e-9);
    }
    const double h = hellinger_distance(p, q);
    const double tv = total_variation_distance(p, q);
    CHECK(h * h <= tv + 1e-9);
    CHECK(tv <= std::sqrt(2.0) * h + 1e-9);
    if (p != q) CHECK(tv > 0.0);
  }
}

TEST_CASE("duration") {
  const auto t = parse_rfc3339("2016-01-01T00:00:00Z");
  CHECK(drift_duration(t, parse_rfc3339("2016-01-03T00:00:00Z")).count() == 172800);
  CHECK(drift_duration(t, t + Seconds{600}).count() == 600);
  try {
    drift_duration(t, t);
    FAIL("expected ordering error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ordering);
  }
}

TEST_CASE("identical windows have zero magnitude") {
  auto block = testing::gaussian(1000, 1);
  std::vector<std::optional<double>> values = block;
  values.insert(values.end(), block.begin(), block.end());
  const auto s = testing::residual_series(values);
  CHECK(drift_magnitude(s, step_at(1000), step_at(1000), kThousand) == 0.0);
}

TEST_CASE("stationary baseline and +5 sigma step") {
  std::vector<double> mags, paths;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto s = testing::residual_series(testing::gaussian(3000, seed));
    mags.push_back(drift_magnitude(s, step_at(1000), step_at(2000), kThousand));
    paths.push_back(drift_path_length(s, step_at(1000), step_at(2000), 4, kThousand));
  }
  std::sort(mags.begin(), mags.end());
  const double p99 = mags[98];
  MESSAGE("stationary magnitude p99 = " << p99);
  CHECK(mags.back() < 0.15);
  for (double p : paths) CHECK(p <= 4.0 * p99);

  auto v = testing::gaussian(2000, 9);
  for (std::size_t i = 1000; i < 2000; ++i) *v[i] += 5.0;
  const auto s = testing::residual_series(v);
  CHECK(drift_magnitude(s, step_at(1000), step_at(1000), kThousand) > 0.9);
}

TEST_CASE("path length properties") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto v = testing::gaussian(4000, 100 + trial);
    const double amp = rng.uniform(0.0, 4.0);
    const bool gradual = trial % 2 == 0;
    for (std::size_t i = 1000; i < 4000; ++i) {
      const double ramp = gradual ? std::min(1.0, static_cast<double>(i - 1000) / 2000.0) : (i >= 2000 ? 1.0 : 0.0);
      *v[i] += amp * ramp;
    }
    const auto s = testing::residual_series(v);
    const auto t = step_at(1000), u = step_at(3000);
    const double mag = drift_magnitude(s, t, u, Seconds{kScadaStep * 500});
    CHECK(drift_path_length(s, t, u, 1, Seconds{kScadaStep * 500}) == mag);
    for (std::size_t n : {2u, 4u, 8u}) CHECK(drift_path_length(s, t, u, n, Seconds{kScadaStep * 500}) >= mag - 1e-9);
  }
}

TEST_CASE("affine rescaling leaves metrics unchanged") {
  auto v = testing::gaussian(3000, 77);
  for (std::size_t i = 1500; i < 3000; ++i) *v[i] = *v[i] * 1.5 + 0.8;
  auto w = v;
  for (auto& x : w) *x = 37.5 * *x - 120.0;
  const auto s1 = testing::residual_series(v), s2 = testing::residual_series(w);
  for (auto m : {DistanceMetric::hellinger, DistanceMetric::total_variation}) {
    MetricConfig c;
    c.metric = m;
    CHECK(drift_magnitude(s1, step_at(1000), step_at(2000), kThousand, c) ==
          doctest::Approx(drift_magnitude(s2, step_at(1000), step_at(2000), kThousand, c)).epsilon(1e-9));
    CHECK(drift_path_length(s1, step_at(1000), step_at(2000), 5, kThousand, c) ==
          doctest::Approx(drift_path_length(s2, step_at(1000), step_at(2000), 5, kThousand, c)).epsilon(1e-9));
  }
}

TEST_CASE("insufficient samples names the failing step") {
  std::vector<std::optional<double>> v = testing::gaussian(3000, 5);
  for (std::size_t i = 1400; i < 1600; ++i) v[i].reset();
  const auto s = testing::residual_series(v);
  try {
    drift_path_length(s, step_at(1000), step_at(2000), 2, Seconds{kScadaStep * 200});
    FAIL("expected insufficient_samples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_samples);
    CHECK(std::string(e.what()).find("window 1") != std::string::npos);
  }
  CHECK_THROWS_AS(drift_magnitude(s, step_at(10), step_at(2000), kThousand), Error);
}

TEST_CASE("characterization export") {
  const auto s = testing::residual_series(testing::gaussian(3000, 3));
  const auto c = characterize(s, step_at(1000), step_at(2000), 4, kThousand, {}, "p1");
  CHECK(c.duration.count() == 600000);
  CHECK(c.path_length >= c.magnitude - 1e-9);
  std::ostringstream out;
  write_characterizations_jsonl(out, {c});
  const auto line = out.str();
  for (const char* key : {"\"magnitude\"", "\"duration_s\"", "\"path_length\"", "\"n_steps\"", "\"metric\"",
                          "\"window_s\""}) {
    CHECK(line.find(key) != std::string::npos);
  }
}

#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "driftbench/errors.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/random.hpp"
#include "support.hpp"

using namespace driftbench;

namespace {

Timestamp T(std::int64_t s) { return testing::kEpoch + Seconds{s}; }

std::vector<LabelledPeriod> periods(std::initializer_list<std::pair<std::int64_t, std::int64_t>> spans) {
  std::vector<LabelledPeriod> out;
  for (auto [a, b] : spans) out.push_back({T(a), T(b), PeriodSource::expert});
  return out;
}

std::vector<DetectionEvent> events(std::initializer_list<std::int64_t> at) {
  std::vector<DetectionEvent> out;
  std::size_t i = 0;
  for (auto s : at) out.push_back({DetectorKind::PH, T(s), i++, 0.0});
  return out;
}

// Brute-force reference: scan every (event, period) pair.
ConfusionCounts oracle(const std::vector<LabelledPeriod>& ps, const std::vector<DetectionEvent>& es, Seconds tol) {
  ConfusionCounts c;
  c.tolerance = tol;
  for (const auto& p : ps) {
    bool hit = false;
    for (const auto& e : es) hit |= e.timestamp >= p.start - tol && e.timestamp <= p.end + tol;
    (hit ? c.tp : c.fn)++;
  }
  for (const auto& e : es) {
    bool inside = false;
    for (const auto& p : ps) inside |= e.timestamp >= p.start - tol && e.timestamp <= p.end + tol;
    if (!inside) ++c.fp;
  }
  return c;
}

struct RandomCase {
  std::vector<LabelledPeriod> ps;
  std::vector<DetectionEvent> es;
};

RandomCase random_case(Rng& rng) {
  RandomCase rc;
  std::int64_t t = static_cast<std::int64_t>(rng.below(50));
  const auto n = rng.below(6);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto a = t + 1 + static_cast<std::int64_t>(rng.below(40));
    const auto b = a + 1 + static_cast<std::int64_t>(rng.below(30));
    rc.ps.push_back({T(a), T(b), PeriodSource::consensus});
    t = b;
  }
  std::vector<std::int64_t> at;
  const auto m = rng.below(10);
  for (std::uint64_t i = 0; i < m; ++i) at.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(t + 60))));
  std::sort(at.begin(), at.end());
  std::size_t k = 0;
  for (auto s : at) rc.es.push_back({DetectorKind::ADWIN, T(s), k++, 0.0});
  return rc;
}

}  // namespace

TEST_CASE("hand-counted fixtures") {
  const auto ps = periods({{10, 20}, {40, 50}});
  auto c = match_triggers(ps, events({12, 30, 45}), Seconds{0});
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 0);
  CHECK(c.policy == "period_hit");
  const auto r = precision_sensitivity(c);
  CHECK(*r.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(*r.sensitivity == 1.0);

  c = match_triggers(ps, events({30}), Seconds{0});
  CHECK((c.tp == 0 && c.fp == 1 && c.fn == 2));

  c = match_triggers(ps, events({12, 13}), Seconds{0});
  CHECK((c.tp == 1 && c.fp == 0 && c.fn == 1));

  c = match_triggers(ps, events({9, 20, 51}), Seconds{0});
  CHECK((c.tp == 1 && c.fp == 2 && c.fn == 1));
  c = match_triggers(ps, events({9, 20, 51}), Seconds{1});
  CHECK((c.tp == 2 && c.fp == 0 && c.fn == 0));
}

TEST_CASE("ratio examples") {
  ConfusionCounts c;
  c.fn = 3;
  auto r = precision_sensitivity(c);
  CHECK_FALSE(r.precision.has_value());
  CHECK(*r.sensitivity == 0.0);

  c = ConfusionCounts{};
  c.tp = 31;
  c.fp = 44;
  c.fn = 7;
  r = precision_sensitivity(c);
  CHECK(*r.precision == doctest::Approx(0.413).epsilon(1e-3));
  CHECK(*r.sensitivity == doctest::Approx(0.816).epsilon(1e-3));

  const auto none = precision_sensitivity(ConfusionCounts{});
  CHECK_FALSE(none.precision.has_value());
  CHECK_FALSE(none.sensitivity.has_value());

  const auto e = evaluate(DetectorKind::GMA, c);
  CHECK(e.kind == DetectorKind::GMA);
  CHECK(e.precision == r.precision);
  CHECK(e.counts == c);
}

TEST_CASE("match errors") {
  const auto overlapping = periods({{10, 30}, {20, 40}});
  try {
    match_triggers(overlapping, events({}), Seconds{0});
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
    CHECK(std::string(e.what()).find("consensus") != std::string::npos);
  }
  CHECK_THROWS_AS(match_triggers(periods({{10, 10}}), events({}), Seconds{0}), Error);
  CHECK_THROWS_AS(match_triggers(periods({{10, 20}}), events({}), Seconds{-1}), Error);
}

TEST_CASE("matching agrees with the brute-force oracle and its invariants") {
  Rng rng(99);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto rc = random_case(rng);
    const Seconds tol{static_cast<std::int64_t>(rng.below(5))};
    const auto c = match_triggers(rc.ps, rc.es, tol);
    const auto o = oracle(rc.ps, rc.es, tol);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.fn == o.fn);
    CHECK(c.tp + c.fn == rc.ps.size());

    const auto wider = match_triggers(rc.ps, rc.es, tol + Seconds{1 + static_cast<std::int64_t>(rng.below(10))});
    CHECK(wider.tp >= c.tp);
    CHECK(wider.fn <= c.fn);

    const auto shift = Seconds{static_cast<std::int64_t>(rng.below(1000000)) - 500000};
    auto ps = rc.ps;
    auto es = rc.es;
    for (auto& p : ps) {
      p.start += shift;
      p.end += shift;
    }
    for (auto& e : es) e.timestamp += shift;
    const auto moved = match_triggers(ps, es, tol);
    CHECK(moved == c);

    for (const auto& p : rc.ps) {
      auto more = rc.es;
      bool detected = false;
      for (const auto& e : rc.es) detected |= e.timestamp >= p.start - tol && e.timestamp <= p.end + tol;
      if (!detected || p.end - p.start < Seconds{2}) continue;
      const auto at = p.start + Seconds{1};
      std::size_t covering = 0;
      for (const auto& q : rc.ps) covering += at >= q.start - tol && at <= q.end + tol;
      if (covering != 1) continue;
      more.push_back({DetectorKind::ADWIN, at, 0, 0.0});
      std::sort(more.begin(), more.end(),
                [](const DetectionEvent& a, const DetectionEvent& b) { return a.timestamp < b.timestamp; });
      CHECK(match_triggers(rc.ps, more, tol) == c);
      break;
    }
  }
}

TEST_CASE("counts pool additively") {
  ConfusionCounts a, b;
  a.tp = 1;
  a.fp = 2;
  b.fn = 3;
  b.tp = 4;
  a += b;
  CHECK((a.tp == 5 && a.fp == 2 && a.fn == 3));
}

TEST_CASE("periods from injections") {
  DriftInjection inj;
  inj.start = T(0);
  inj.end = T(600);
  const std::vector<DriftInjection> v{inj};
  const auto ps = periods_from_injections(v);
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].source == PeriodSource::injected_ground_truth);
  CHECK(ps[0].start == inj.start);
  CHECK(to_string(PeriodSource::injected_ground_truth) == "ground_truth");
}

TEST_CASE("benchmark over a small corpus") {
  std::vector<CorpusEntry> corpus;
  for (std::uint64_t s = 0; s < 4; ++s) {
    auto v = testing::gaussian(3000, 50 + s);
    for (std::size_t i = 1500; i < 1800; ++i) *v[i] += 4.0;
    CorpusEntry e;
    e.series_id = "S" + std::to_string(s);
    e.residuals = testing::residual_series(v);
    e.periods.push_back({e.residuals.entries[1500].timestamp, e.residuals.entries[1799].timestamp,
                         PeriodSource::injected_ground_truth});
    corpus.push_back(std::move(e));
  }
  CorpusEntry quiet;
  quiet.series_id = "Q";
  quiet.residuals = testing::residual_series(testing::gaussian(3000, 7));
  quiet.drift_free = true;
  corpus.push_back(quiet);

  const auto configs = default_detector_configs();
  const auto table = benchmark_detectors(corpus, configs, Seconds{0});
  REQUIRE(table.pooled.size() == 10);
  CHECK(table.macro_precision.size() == 10);
  CHECK(table.per_series.size() == 50);
  for (std::size_t d = 0; d < configs.size(); ++d) {
    const auto& row = table.pooled[d];
    CHECK(row.kind == configs[d].kind);
    CHECK(row.counts.tp + row.counts.fn == 4);
    ConfusionCounts sum;
    for (const auto& s : table.per_series)
      if (s.result.kind == row.kind) sum += s.result.counts;
    CHECK(sum.tp == row.counts.tp);
    CHECK(sum.fp == row.counts.fp);
    CHECK(sum.fn == row.counts.fn);
    if (row.precision) CHECK((*row.precision >= 0.0 && *row.precision <= 1.0));
    REQUIRE(row.sensitivity.has_value());
    CHECK((*row.sensitivity >= 0.0 && *row.sensitivity <= 1.0));
  }

  const auto empty = benchmark_detectors(corpus, std::span<const DetectorConfig>{}, Seconds{0});
  CHECK(empty.pooled.empty());

  try {
    benchmark_detectors(std::span<const CorpusEntry>{}, configs, Seconds{0});
    FAIL("expected empty_input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_input);
  }
  auto unlabeled = corpus;
  unlabeled.back().drift_free = false;
  try {
    benchmark_detectors(unlabeled, configs, Seconds{0});
    FAIL("expected precondition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
}

TEST_CASE("result CSV") {
  ConfusionCounts c;
  c.fn = 3;
  c.tolerance = Seconds{600};
  ConfusionCounts d;
  d.tp = 2;
  d.fp = 1;
  const std::vector<EvalResult> rows{evaluate(DetectorKind::HDDM_W, c), evaluate(DetectorKind::STEPD, d)};
  std::ostringstream out;
  write_eval_csv(out, rows);
  CHECK(out.str() ==
        "detector,precision,sensitivity,tp,fp,fn,tolerance_s\n"
        "HDDM_W,,0,0,0,3,600\n"
        "STEPD,0.6666666666666666,1,2,1,0,0\n");
}

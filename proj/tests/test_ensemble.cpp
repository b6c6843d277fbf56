#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "driftbench/ensemble.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/random.hpp"
#include "support.hpp"

using namespace driftbench;

namespace {

Eigen::MatrixXd column(const std::vector<double>& v) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = v[i];
  return x;
}

bool certain1(const CertaintyFilter& f, double v) { return f.is_certain(std::span<const double>(&v, 1)); }

ElmModel tiny_model(std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(30, 3);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y[i] = x(i, 0) + rng.normal();
  }
  ElmParams p;
  p.hidden_width = 5;
  return train_elm(x, y, p);
}

TurbineSeries small_series(std::size_t n, std::uint64_t seed) {
  GeneratorConfig g;
  g.n_records = n;
  g.seed = seed;
  return generate_series(g, {}).series;
}

EnsembleConfig small_config() {
  EnsembleConfig c;
  c.batch_size = 500;
  c.elm.hidden_width = 30;
  c.min_occupancy = 3;
  return c;
}

}  // namespace

TEST_CASE("batch partition sizes") {
  auto sizes = [](std::size_t n, std::size_t b) {
    std::vector<std::size_t> out;
    for (const auto& batch : partition_batches(n, b, 0.2, 1)) out.push_back(batch.size());
    return out;
  };
  CHECK(sizes(1000, 300) == std::vector<std::size_t>{300, 300, 300});
  CHECK(sizes(1000, 400) == std::vector<std::size_t>{400, 400, 200});
  CHECK(sizes(150, 300) == std::vector<std::size_t>{150});
}

TEST_CASE("batch validation split") {
  const auto batches = partition_batches(1000, 300, 0.2, 9);
  std::size_t expected_begin = 0;
  for (const auto& b : batches) {
    CHECK(b.begin == expected_begin);
    expected_begin = b.end;
    CHECK(b.validation_rows.size() == 60);
    CHECK(b.train_rows.size() == 240);
    std::set<std::size_t> all(b.train_rows.begin(), b.train_rows.end());
    for (auto r : b.validation_rows) CHECK(all.insert(r).second);
    CHECK(all.size() == 300);
    CHECK(*all.begin() == b.begin);
    CHECK(*all.rbegin() == b.end - 1);
  }
  const auto again = partition_batches(1000, 300, 0.2, 9);
  CHECK(again[1].validation_rows == batches[1].validation_rows);
  CHECK_FALSE(partition_batches(1000, 300, 0.2, 10)[1].validation_rows == batches[1].validation_rows);
}

TEST_CASE("batch partition errors") {
  CHECK_THROWS_AS(partition_batches(1000, 10, 0.2, 1), Error);
  CHECK_THROWS_AS(partition_batches(1000, 300, 0.5, 1), Error);
  CHECK_THROWS_AS(partition_batches(1000, 300, 0.0, 1), Error);
  try {
    partition_batches(100, 300, 0.2, 1);
    FAIL("expected insufficient_data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_data);
  }
}

TEST_CASE("certainty filter basic examples") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto f = CertaintyFilter::build(column(v), 10, 1);
  CHECK(certain1(f, 50.0));
  CHECK_FALSE(certain1(f, 150.0));
  CHECK_FALSE(certain1(f, 0.5));
  CHECK(certain1(f, 100.0));
  CHECK(certain1(f, 1.0));
  const auto& d = f.dimensions()[0];
  std::size_t total = 0;
  for (auto c : d.counts) total += c;
  CHECK(total == 100);
  for (std::size_t k = 1; k < d.edges.size(); ++k) CHECK(d.edges[k] > d.edges[k - 1]);
}

TEST_CASE("certainty filter gap fixture") {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i)
    if (i < 40 || i > 50) v.push_back(i);
  const auto f = CertaintyFilter::build(column(v), 10, 1);
  CHECK_FALSE(certain1(f, 45.0));
  CHECK(certain1(f, 35.0));
  CHECK(certain1(f, 55.0));
}

TEST_CASE("certainty filter edge rule") {
  CertaintyFilter::Dimension d;
  d.min = 0.0;
  d.max = 100.0;
  for (int k = 0; k <= 10; ++k) d.edges.push_back(10.0 * k);
  d.counts = {5, 5, 5, 5, 0, 5, 5, 5, 5, 5};
  const CertaintyFilter f({d}, 10, 1);
  CHECK(f.bin_of(0, 50.0) == std::optional<std::size_t>(5));
  CHECK(certain1(f, 50.0));
  CHECK(f.bin_of(0, 40.0) == std::optional<std::size_t>(4));
  CHECK_FALSE(certain1(f, 40.0));
  CHECK(f.bin_of(0, 100.0) == std::optional<std::size_t>(9));
  CHECK_FALSE(f.bin_of(0, 100.0000001).has_value());

  const CertaintyFilter strict({d}, 10, 6);
  CHECK_FALSE(certain1(strict, 50.0));
}

TEST_CASE("certainty filter degenerate dimension and centroid") {
  Eigen::MatrixXd x(50, 2);
  for (int i = 0; i < 50; ++i) x.row(i) << i, 7.0;
  const auto f = CertaintyFilter::build(x, 5, 1);
  const double centroid[2] = {24.5, 7.0};
  CHECK(f.is_certain(centroid));
  const double close[2] = {24.5, 7.0 + 5e-10};
  CHECK(f.is_certain(close));
  const double off[2] = {24.5, 7.001};
  CHECK_FALSE(f.is_certain(off));
  const double beyond[2] = {49.5, 7.0};
  CHECK_FALSE(f.is_certain(beyond));
  CHECK_THROWS_AS(CertaintyFilter::build(Eigen::MatrixXd(0, 2), 5, 1), Error);
  CHECK_THROWS_AS(CertaintyFilter::build(x, 1, 1), Error);
}

TEST_CASE("certainty is monotone in training data under fixed edges") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> small, big;
    for (int i = 0; i < 200; ++i) {
      const double v = rng.uniform(0.0, 100.0);
      big.push_back(v);
      if (rng.uniform() < 0.5) small.push_back(v);
    }
    big.push_back(0.0);
    big.push_back(100.0);
    small.push_back(0.0);
    small.push_back(100.0);
    const auto ref = CertaintyFilter::build(column(big), 20, 1);
    auto with_counts = [&](const std::vector<double>& data) {
      auto d = ref.dimensions()[0];
      std::fill(d.counts.begin(), d.counts.end(), 0);
      for (double v : data) ++d.counts[*ref.bin_of(0, v)];
      return CertaintyFilter({d}, 20, 4);
    };
    const auto fs = with_counts(small);
    const auto fb = with_counts(big);
    for (double q = -5.0; q <= 105.0; q += 0.25) {
      if (certain1(fs, q)) CHECK(certain1(fb, q));
    }
  }
}

TEST_CASE("combination examples") {
  const std::vector<double> preds{1000.0, 1100.0};
  const std::vector<double> w{0.5, 0.5};
  const bool all[2] = {true, true};
  const auto c = combine_predictions(preds, w, all);
  REQUIRE(c.value.has_value());
  CHECK(*c.value == doctest::Approx(1050.0));
  CHECK(1060.0 - *c.value == doctest::Approx(10.0));
  CHECK(c.n_contributing == 2);

  const bool none[2] = {false, false};
  const auto n = combine_predictions(preds, w, none);
  CHECK_FALSE(n.value.has_value());
  CHECK(n.n_contributing == 0);

  const bool one[2] = {false, true};
  const auto o = combine_predictions(preds, w, one);
  CHECK(*o.value == 1100.0);
  CHECK(o.n_contributing == 1);

  CHECK_THROWS_AS(combine_predictions(preds, std::vector<double>{1.0}, all), Error);
}

TEST_CASE("inverse-rmse weights") {
  EnsembleModel m;
  for (double rmse : {100.0, 200.0, 200.0}) {
    m.members.push_back(EnsembleMember{tiny_model(1), CertaintyFilter{}, rmse, member_weight(rmse), m.members.size()});
  }
  const auto w = normalized_weights(m);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.25));
  CHECK(w[2] == doctest::Approx(0.25));

  EnsembleModel single;
  single.members.push_back(EnsembleMember{tiny_model(1), CertaintyFilter{}, 42.0, member_weight(42.0), 0});
  CHECK(normalized_weights(single) == std::vector<double>{1.0});
  CHECK(member_weight(0.0) == doctest::Approx(1e6));
}

TEST_CASE("identical batch data gives equal weights") {
  Rng rng(3);
  Eigen::MatrixXd x(200, 3);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y[i] = std::sin(3 * x(i, 0)) + 0.1 * rng.normal();
  }
  ElmParams p;
  p.hidden_width = 20;
  EnsembleModel m;
  for (int k = 0; k < 2; ++k) {
    auto model = train_elm(x.topRows(150), y.head(150), p);
    const double rmse = validation_rmse(model, x.bottomRows(50), y.tail(50));
    m.members.push_back(EnsembleMember{std::move(model), CertaintyFilter{}, rmse, member_weight(rmse), 0});
  }
  const auto w = normalized_weights(m);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.5);
}

TEST_CASE("combination is convex") {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    std::vector<double> p(k), w(k);
    auto c = std::make_unique<bool[]>(k);
    bool any = false;
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = rng.uniform(-500, 2500);
      w[i] = member_weight(rng.uniform(0.0, 300.0));
      c[i] = rng.uniform() < 0.6;
      if (c[i]) {
        any = true;
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
    }
    const auto r = combine_predictions(p, w, std::span<const bool>(c.get(), k));
    CHECK(r.value.has_value() == any);
    if (any) {
      CHECK(*r.value >= lo - 1e-9);
      CHECK(*r.value <= hi + 1e-9);
    }
  }
}

TEST_CASE("ensemble training and residual invariants") {
  const auto series = small_series(2200, 4);
  const auto cfg = small_config();
  const auto model = train_ensemble(series, cfg, 7);
  CHECK(model.members.size() == 4);
  for (const auto& m : model.members) CHECK(m.weight > 0.0);
  const auto again = train_ensemble(series, cfg, 7);
  CHECK(again.members[2].model.output_weights() == model.members[2].model.output_weights());

  const auto res = ensemble_residuals(model, series);
  REQUIRE(res.entries.size() == series.records.size());
  std::size_t present = 0;
  for (std::size_t i = 0; i < res.entries.size(); ++i) {
    const auto& e = res.entries[i];
    CHECK(e.timestamp == series.records[i].timestamp);
    CHECK(e.actual == series.records[i].power);
    CHECK(e.residual.has_value() == e.predicted.has_value());
    CHECK(e.residual.has_value() == (e.n_members > 0));
    if (e.residual) {
      CHECK(*e.residual == e.actual - *e.predicted);
      ++present;
    }
  }
  CHECK(present == res.count_present());
  CHECK(present > res.entries.size() / 2);
}

TEST_CASE("rejection threshold") {
  const auto series = small_series(1200, 4);
  auto cfg = small_config();
  cfg.rejection_rmse = 1e-9;
  try {
    train_ensemble(series, cfg, 1);
    FAIL("expected no_usable_model");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_usable_model);
  }
}

TEST_CASE("a member that is never certain leaves predictions unchanged") {
  const auto series = small_series(1500, 12);
  const auto cfg = small_config();
  auto model = train_ensemble(series, cfg, 3);
  const auto before = ensemble_residuals(model, series);

  // Train on inputs shifted far outside the observed range.
  Eigen::MatrixXd x = predictor_matrix(series, cfg.predictors);
  x.col(0).array() += 1000.0;
  const Eigen::VectorXd y = power_vector(series);
  ElmParams p = cfg.elm;
  auto alien = train_elm(x, y, p);
  auto filter = CertaintyFilter::build(x, cfg.bins, cfg.min_occupancy);
  model.members.push_back(EnsembleMember{std::move(alien), std::move(filter), 1.0, member_weight(1.0), 99});
  const auto after = ensemble_residuals(model, series);
  CHECK(after.entries == before.entries);
}

TEST_CASE("residual CSV and ensemble persistence round trip") {
  const auto series = small_series(1200, 2);
  const auto model = train_ensemble(series, small_config(), 5);
  const auto res = ensemble_residuals(model, series);

  std::stringstream csv;
  write_residuals_csv(csv, res);
  const std::string text = csv.str();
  CHECK(text.rfind("timestamp,actual,predicted,residual,n_members\n", 0) == 0);
  const auto back = read_residuals_csv(csv, "T001");
  REQUIRE(back.entries.size() == res.entries.size());
  for (std::size_t i = 0; i < res.entries.size(); ++i) CHECK(back.entries[i] == res.entries[i]);

  std::stringstream bin;
  save_ensemble(bin, model);
  const auto loaded = load_ensemble(bin);
  CHECK(loaded.members.size() == model.members.size());
  CHECK(loaded.combination_rule == model.combination_rule);
  CHECK(ensemble_residuals(loaded, series).entries == res.entries);
}

TEST_CASE("ensemble config validation") {
  EnsembleConfig c;
  c.bins = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = EnsembleConfig{};
  c.predictors.clear();
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_predictor(to_string(Predictor::turbulence)) == Predictor::turbulence);
  CHECK_THROWS_AS(parse_predictor("humidity"), Error);
}

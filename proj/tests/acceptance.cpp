// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "driftbench/drift_metrics.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/random.hpp"
#include "service_fixture.hpp"

#include <httplib.h>

using namespace driftbench;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %-28s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome elm_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(1000 + seed);
    Eigen::MatrixXd x(500, 3);
    Eigen::VectorXd y(500);
    for (int i = 0; i < 500; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-3.0, 3.0);
      y[i] = std::sin(x(i, 0)) + 0.3 * x(i, 1) * x(i, 2) + 0.1 * rng.normal();
    }
    ElmParams p;
    p.seed = seed;
    const auto m = train_elm(x, y, p);
    const Eigen::MatrixXd h = m.hidden(x);
    const auto L = h.cols() - 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(h.rows() + L, h.cols());
    a.topRows(h.rows()) = h;
    for (Eigen::Index j = 0; j < L; ++j) a(h.rows() + j, j) = std::sqrt(p.ridge_lambda);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
    b.head(h.rows()) = y;
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    worst = std::max(worst, (m.output_weights() - beta).norm() / beta.norm());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 5.0, "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs)};
}

Outcome fidelity() {
  const auto t0 = Clock::now();
  GeneratorConfig g;
  g.seed = 42;
  g.n_records = 52560;
  g.noise_sd = 0.02 * g.rated_power;
  const auto series = generate_series(g, {}).series;
  const auto model = train_ensemble(series, EnsembleConfig{}, 42);
  const auto res = ensemble_residuals(model, series);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& e : res.entries) {
    if (!e.residual) continue;
    sum += *e.residual;
    sum2 += *e.residual * *e.residual;
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
  const double se = sd / std::sqrt(static_cast<double>(n));
  const double secs = seconds_since(t0);
  const bool ok = std::abs(mean) <= 3.0 * se && sd <= 1.5 * g.noise_sd && secs < 60.0;
  std::ostringstream d;
  d << "mean " << fmt("%.3f", mean) << " kW (3SE " << fmt("%.3f", 3 * se) << "), sd " << fmt("%.1f", sd)
    << " kW (limit " << 1.5 * g.noise_sd << "), coverage " << n << "/" << res.entries.size();
  return {ok, d.str()};
}

std::vector<double> random_masses(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) {
    v = rng.uniform() < 0.15 ? 0.0 : rng.uniform();
    s += v;
  }
  if (s == 0.0) {
    p[rng.below(k)] = 1.0;
    s = 1.0;
  }
  for (auto& v : p) v /= s;
  return p;
}

Outcome metric_identities() {
  Rng rng(7);
  std::size_t violations = 0;
  const double tol = 1e-9;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + rng.below(40);
    const auto p = random_masses(rng, k), q = random_masses(rng, k), r = random_masses(rng, k);
    for (auto m : {DistanceMetric::hellinger, DistanceMetric::total_variation}) {
      const double pq = distance(m, p, q), qp = distance(m, q, p);
      bool ok = std::abs(pq - qp) <= tol && pq >= 0.0 && pq <= 1.0 + tol;
      ok = ok && distance(m, p, p) <= tol;
      ok = ok && (p == q || pq > 0.0);
      ok = ok && pq <= distance(m, p, r) + distance(m, r, q) + tol;
      violations += !ok;
    }
    const double h = hellinger_distance(p, q), tv = total_variation_distance(p, q);
    violations += !(h * h <= tv + tol && tv <= std::sqrt(2.0) * h + tol);
  }
  const std::vector<double> a{0.5, 0.5}, b{0.9, 0.1};
  const double h = hellinger_distance(a, b), tv = total_variation_distance(a, b);
  const bool hand = std::abs(h - 0.3250) <= 1e-4 && std::abs(tv - 0.4) <= 1e-4;
  return {violations == 0 && hand, std::to_string(violations) + " violations on 10000 pairs; H=" + fmt("%.6f", h) +
                                       " TV=" + fmt("%.6f", tv)};
}

Outcome duration_and_path() {
  const auto t = parse_rfc3339("2016-01-01T00:00:00Z");
  const bool dur = drift_duration(t, parse_rfc3339("2016-01-03T00:00:00Z")).count() == 172800;
  Rng rng(11);
  std::size_t n1_mismatch = 0, below = 0, windows = 0;
  const std::size_t n = 6000;
  for (int trial = 0; trial < 50; ++trial) {
    auto v = testing::gaussian(n, 500 + trial);
    const double amp = rng.uniform(0.0, 3.0);
    const std::size_t a0 = 2000 + rng.below(1000), a1 = a0 + rng.below(1500);
    for (std::size_t i = a0; i < n; ++i) {
      const double ramp = a1 > a0 ? std::min(1.0, double(i - a0) / double(a1 - a0)) : 1.0;
      *v[i] += amp * ramp;
    }
    const auto s = testing::residual_series(v);
    for (int w = 0; w < 20; ++w) {
      const std::size_t win = 100 + rng.below(400);
      const std::size_t ti = win + rng.below(n / 2 - win);
      const std::size_t ui = ti + 1 + rng.below(n - win - ti - 1);
      const auto tt = testing::kEpoch + kScadaStep * static_cast<std::int64_t>(ti);
      const auto uu = testing::kEpoch + kScadaStep * static_cast<std::int64_t>(ui);
      const Seconds window = kScadaStep * static_cast<std::int64_t>(win);
      const std::size_t steps = 1 + rng.below(8);
      MetricConfig cfg;
      cfg.min_samples = 10;
      cfg.metric = rng.uniform() < 0.5 ? DistanceMetric::hellinger : DistanceMetric::total_variation;
      const double mag = drift_magnitude(s, tt, uu, window, cfg);
      n1_mismatch += drift_path_length(s, tt, uu, 1, window, cfg) != mag;
      below += drift_path_length(s, tt, uu, steps, window, cfg) < mag - 1e-9;
      ++windows;
    }
  }
  return {dur && n1_mismatch == 0 && below == 0 && windows == 1000,
          std::string("duration ") + (dur ? "exact" : "WRONG") + "; n=1 mismatches " + std::to_string(n1_mismatch) +
              "; path<magnitude " + std::to_string(below) + " of " + std::to_string(windows)};
}

Outcome detector_calibration() {
  const auto t0 = Clock::now();
  std::vector<Timestamp> ts(10000);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = testing::kEpoch + kScadaStep * static_cast<std::int64_t>(i);
  auto stream = [](std::uint64_t seed, std::size_t n, bool step) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.normal() + (step && i >= 2000 ? 3.0 : 0.0);
    return v;
  };
  struct Target {
    DetectorKind kind;
    std::size_t limit;
    int hits = 0;
  };
  std::vector<Target> targets{{DetectorKind::CUSUM, 50}, {DetectorKind::PH, 50}, {DetectorKind::ADWIN, 300}};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto v = stream(seed, 4000, true);
    for (auto& t : targets) {
      const auto ev = run_detector(DetectorConfig::defaults(t.kind), v, std::span(ts).first(v.size()));
      for (const auto& e : ev) {
        if (e.sample_index < 2000) continue;
        t.hits += e.sample_index - 2000 <= t.limit;
        break;
      }
    }
  }
  std::ostringstream d;
  bool ok = true;
  for (const auto& t : targets) {
    ok = ok && t.hits >= 95;
    d << to_string(t.kind) << " " << t.hits << "/100; ";
  }
  std::size_t worst_overall = 0;
  for (auto k : kAllDetectorKinds) {
    std::size_t worst = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      worst = std::max(worst, run_detector(DetectorConfig::defaults(k), stream(50000 + seed, 10000, false), ts).size());
    }
    ok = ok && worst <= 3;
    worst_overall = std::max(worst_overall, worst);
    d << to_string(k) << " fa<=" << worst << " ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  return {ok, d.str()};
}

Outcome evaluation_arithmetic() {
  auto T = [](std::int64_t s) { return testing::kEpoch + Seconds{s}; };
  const std::vector<LabelledPeriod> ps{{T(10), T(20), PeriodSource::expert}, {T(40), T(50), PeriodSource::expert}};
  std::vector<DetectionEvent> es;
  for (std::int64_t s : {12, 30, 45}) es.push_back({DetectorKind::CUSUM, T(s), es.size(), 0.0});
  const auto r = precision_sensitivity(match_triggers(ps, es, Seconds{0}));
  const bool hand = r.precision && r.sensitivity && std::abs(*r.precision - 2.0 / 3.0) <= 1e-9 &&
                    std::abs(*r.precision - 0.667) <= 5e-4 && *r.sensitivity == 1.0;

  Rng rng(5);
  std::size_t non_monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<LabelledPeriod> periods;
    std::int64_t t = 0;
    for (int i = 0; i < 5; ++i) {
      const auto a = t + 1 + static_cast<std::int64_t>(rng.below(20000));
      const auto b = a + 600 + static_cast<std::int64_t>(rng.below(20000));
      periods.push_back({T(a), T(b), PeriodSource::consensus});
      t = b;
    }
    std::vector<DetectionEvent> events;
    std::vector<std::int64_t> at;
    for (int i = 0; i < 8; ++i) at.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(t))));
    std::sort(at.begin(), at.end());
    for (auto s : at) events.push_back({DetectorKind::PH, T(s), events.size(), 0.0});
    double prev = -1.0;
    for (std::int64_t tol : {0, 600, 3600, 21600, 86400}) {
      const double s = *precision_sensitivity(match_triggers(periods, events, Seconds{tol})).sensitivity;
      non_monotone += s < prev;
      prev = s;
    }
  }
  return {hand && non_monotone == 0, "precision " + fmt("%.12f", r.precision.value_or(-1)) + ", sensitivity " +
                                         fmt("%.1f", r.sensitivity.value_or(-1)) + "; sweep violations " +
                                         std::to_string(non_monotone)};
}

Outcome corpus_table() {
  std::vector<CorpusEntry> corpus;
  std::size_t total_periods = 0;
  EnsembleConfig ec;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    GeneratorConfig g;
    g.seed = 9000 + s;
    g.n_records = 144 * 120;
    Rng rng(s);
    std::vector<DriftInjection> inj;
    const InjectionKind kinds[] = {InjectionKind::sudden, InjectionKind::gradual, InjectionKind::recurring,
                                   InjectionKind::power_limitation};
    for (int k = 0; k < 2; ++k) {
      DriftInjection d;
      d.kind = kinds[rng.below(4)];
      d.target = InjectionTarget::power_offset;
      d.start = g.start + Seconds{86400 * (40 + 40 * k + static_cast<std::int64_t>(rng.below(20)))};
      d.end = d.start + Seconds{86400 * (3 + static_cast<std::int64_t>(rng.below(10)))};
      d.amplitude = d.kind == InjectionKind::power_limitation ? 1000.0 + rng.uniform(0, 500) : -150.0 - rng.uniform(0, 150);
      d.period = Seconds{86400};
      inj.push_back(d);
    }
    const auto data = generate_series(g, inj, "S" + std::to_string(s));
    TurbineSeries train;
    train.turbine_id = data.series.turbine_id;
    for (const auto& r : data.series.records)
      if (r.timestamp < inj.front().start) train.records.push_back(r);
    CorpusEntry e;
    e.series_id = data.series.turbine_id;
    e.residuals = ensemble_residuals(train_ensemble(train, ec, s), data.series);
    e.periods = periods_from_injections(data.ground_truth);
    total_periods += e.periods.size();
    corpus.push_back(std::move(e));
  }
  const auto configs = default_detector_configs();
  const auto table = benchmark_detectors(corpus, configs, Seconds{0});
  bool ok = table.pooled.size() == 10;
  for (const auto& row : table.pooled) {
    ok = ok && row.counts.tp + row.counts.fn == total_periods;
    if (row.precision) ok = ok && *row.precision >= 0.0 && *row.precision <= 1.0;
    ok = ok && row.sensitivity && *row.sensitivity >= 0.0 && *row.sensitivity <= 1.0;
  }
  std::ostringstream csv;
  write_eval_csv(csv, table.pooled);
  const auto text = csv.str();
  ok = ok && text.rfind("detector,precision,sensitivity,", 0) == 0;
  std::cout << text;
  return {ok, std::to_string(table.pooled.size()) + " rows over " + std::to_string(corpus.size()) + " series, " +
                  std::to_string(total_periods) + " periods"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  testing::TempDir a, b;
  const std::string cli = DRIFTBENCH_CLI_PATH;
  auto pipeline = [&](const testing::TempDir& dir) {
    const std::string base = "\"" + cli + "\" --data-dir \"" + dir.str() + "\" --seed 2024 ";
    const std::string log = " >>\"" + (dir.path() / "log.txt").string() + "\" 2>&1";
    for (const std::string& step : std::vector<std::string>
         {"generate", "train", "residuals", "detect",
          "evaluate --run run-000001 --out \"" + (dir.path() / "eval.csv").string() + "\""}) {
      if (std::system((base + step + log).c_str()) != 0) return false;
    }
    return true;
  };
  if (!pipeline(a) || !pipeline(b)) return {false, "a pipeline step failed"};
  const double secs = seconds_since(t0) / 2.0;
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file() || entry.path().filename() == "log.txt") continue;
    const auto rel = fs::relative(entry.path(), a.path());
    ++compared;
    differing += slurp(entry.path()) != slurp(b.path() / rel);
  }
  const bool ok = compared >= 7 && differing == 0 && secs < 180.0;
  return {ok, std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ; " +
                  fmt("%.1f s per pipeline", secs)};
}

Outcome label_durability() {
  testing::TempDir dir;
  std::vector<ExpertInfo> experts;
  for (int i = 0; i < 100; ++i) experts.push_back({"expert-" + std::to_string(i), "Expert " + std::to_string(i)});
  write_experts_file(dir.path() / "experts.json", experts);

  std::vector<std::string> acknowledged(100);
  {
    ServiceConfig c;
    c.data_dir = dir.path();
    Service svc(c);
    testing::RunningServer server(svc);
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        nlohmann::json body = {{"turbine_id", "T001"},
                               {"model_id", "m1"},
                               {"start", format_rfc3339(testing::kEpoch + Seconds{600 * i})},
                               {"end", format_rfc3339(testing::kEpoch + Seconds{600 * i + 172800})},
                               {"drift_type", "sudden"},
                               {"cause", "power_limitation"},
                               {"severity", 1 + i % 5},
                               {"confidence", "high"},
                               {"expert_id", experts[static_cast<std::size_t>(i)].expert_id},
                               {"note", "concurrent " + std::to_string(i)}};
        httplib::Client cl("127.0.0.1", server.port());
        auto r = cl.Post("/labels", body.dump(), "application/json");
        if (r && r->status == 201) acknowledged[static_cast<std::size_t>(i)] = r->body;
      });
    }
    for (auto& t : threads) t.join();
  }
  std::size_t acked = 0, matched = 0;
  LabelStore reopened(dir.path());
  for (const auto& body : acknowledged) {
    if (body.empty()) continue;
    ++acked;
    const auto label = parse_label_json(body);
    const auto stored = reopened.find(label.label_id);
    matched += stored && to_json_line(*stored) == body;
  }
  std::string expected;
  std::vector<std::string> lines;
  std::istringstream log(slurp(reopened.log_path()));
  for (std::string line; std::getline(log, line);) lines.push_back(line);
  std::size_t in_log = 0;
  for (const auto& body : acknowledged) in_log += std::find(lines.begin(), lines.end(), body) != lines.end();
  const bool ok = acked == 100 && matched == 100 && in_log == 100 && reopened.size() == 100;
  return {ok, std::to_string(acked) + " acknowledged, " + std::to_string(matched) + " identical after restart, " +
                  std::to_string(in_log) + " byte-identical log lines"};
}

}  // namespace

int main() {
  report("elm_oracle_equivalence", elm_oracle);
  report("normal_behaviour_fidelity", fidelity);
  report("metric_identities", metric_identities);
  report("duration_and_path_length", duration_and_path);
  report("detector_calibration", detector_calibration);
  report("evaluation_arithmetic", evaluation_arithmetic);
  report("synthetic_corpus_table", corpus_table);
  report("end_to_end_cli", end_to_end);
  report("label_durability", label_durability);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

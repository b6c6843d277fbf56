#pragma once

#include <fstream>
#include <thread>

#include "driftbench/http_server.hpp"
#include "driftbench/service.hpp"
#include "support.hpp"

namespace testing {

/// Data directory holding one turbine (T001, model m1) whose residuals carry
/// a +5 sigma step over rows [1500, 1800), plus two ground-truth periods.
struct FixtureData {
  TempDir dir;
  driftbench::ResidualSeries residuals;
  std::vector<driftbench::DriftInjection> injections;

  FixtureData() {
    using namespace driftbench;
    const DataDir data(dir.path());
    GeneratorConfig g;
    g.n_records = 3000;
    g.start = kEpoch;
    const auto series = generate_series(g, {}).series;
    std::filesystem::create_directories(data.series("T001").parent_path());
    {
      std::ofstream out(data.series("T001"));
      write_scada_csv(out, series);
    }
    auto values = gaussian(3000, 17, 0.0, 40.0);
    for (std::size_t i = 1500; i < 1800; ++i) *values[i] += 200.0;
    for (std::size_t i = 100; i < 3000; i += 97) values[i].reset();
    residuals = residual_series(values);
    residuals.turbine_id = "T001";
    std::filesystem::create_directories(data.residuals("T001", "m1").parent_path());
    {
      std::ofstream out(data.residuals("T001", "m1"));
      write_residuals_csv(out, residuals);
    }
    for (auto [a, b] : {std::pair<std::int64_t, std::int64_t>{1500, 1800}, {2400, 2500}}) {
      DriftInjection inj;
      inj.start = kEpoch + kScadaStep * a;
      inj.end = kEpoch + kScadaStep * b;
      inj.amplitude = 200.0;
      injections.push_back(inj);
    }
    std::filesystem::create_directories(data.ground_truth("T001").parent_path());
    {
      std::ofstream out(data.ground_truth("T001"));
      write_injections_jsonl(out, injections);
    }
    write_experts_file(dir.path() / "experts.json",
                       std::vector<ExpertInfo>{{"e1", "Expert One"}, {"e2", "Expert Two"}});
  }
};

class RunningServer {
 public:
  explicit RunningServer(driftbench::Service& service) : server_(service) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.listen(); });
    server_.wait_until_ready();
  }
  ~RunningServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  int port() const { return port_; }

 private:
  driftbench::HttpServer server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace testing

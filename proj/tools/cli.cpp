#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "driftbench/drift_metrics.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/http_server.hpp"
#include "driftbench/label_store.hpp"
#include "driftbench/service.hpp"
#include "pipeline_config.hpp"

namespace driftbench::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string data_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string config_path;
};

struct Options {
  std::string turbine = "T001";
  std::string model = "m1";
  std::string scenario = "mixed";
  std::string injections_path;
  std::optional<std::size_t> records;
  std::string from;
  std::string to;
  std::string out;
  std::string run_id;
  std::string source;
  std::optional<long long> tolerance;
  std::optional<double> overlap;
  std::string idempotency_key;
  std::string expert;
  std::string cause;
  std::string label_file;
  std::string expert_name;
  std::string listen = "127.0.0.1:8080";
  bool read_only = false;
  std::string turbines;
  std::string per_series_out;
  long long window = 86400;
  std::size_t steps = 8;
};

PipelineConfig config_for(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_pipeline_config(g.config_path);
  if (g.seed) c.generator.seed = *g.seed;
  return c;
}

std::uint64_t seed_for(const Globals& g) { return g.seed.value_or(1); }

std::optional<Timestamp> opt_time(const std::string& text, const char* field) {
  if (text.empty()) return std::nullopt;
  try {
    return parse_rfc3339(text);
  } catch (const Error&) {
    throw Error(ErrorCode::validation, std::string(field) + " must be an RFC 3339 UTC timestamp", field);
  }
}

void write_file(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    write_file(out_path, content);
  }
}

TurbineSeries load_series(const DataDir& data, const std::string& turbine) {
  validate_identifier(turbine, "turbine");
  std::ifstream in(data.series(turbine), std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "no series for turbine '" + turbine + "'");
  auto parsed = parse_scada_csv(in, turbine);
  if (parsed.dropped_count > 0) std::cerr << "dropped " << parsed.dropped_count << " unparseable rows\n";
  return std::move(parsed.series);
}

ServiceConfig service_config(const Globals& g, bool read_only = false) {
  ServiceConfig sc;
  sc.data_dir = g.data_dir;
  sc.read_only = read_only;
  return sc;
}

int cmd_generate(const Globals& g, const Options& o) {
  validate_identifier(o.turbine, "turbine");
  auto config = config_for(g);
  if (o.records) config.generator.n_records = *o.records;

  std::vector<DriftInjection> injections;
  if (!o.injections_path.empty()) {
    std::ifstream in(o.injections_path);
    if (!in) throw Error(ErrorCode::validation, "cannot read injections file: " + o.injections_path, "injections");
    injections = read_injections_jsonl(in);
  } else if (config.injections) {
    injections = *config.injections;
  } else if (o.scenario == "mixed") {
    injections = mixed_scenario(config.generator);
  } else if (o.scenario != "none") {
    throw Error(ErrorCode::validation, "scenario must be mixed or none", "scenario");
  }

  const auto generated = generate_series(config.generator, injections, o.turbine);
  const DataDir data(g.data_dir);
  std::ostringstream series_csv;
  write_scada_csv(series_csv, generated.series);
  write_file(data.series(o.turbine), series_csv.str());
  std::ostringstream truth;
  write_injections_jsonl(truth, generated.ground_truth);
  write_file(data.ground_truth(o.turbine), truth.str());
  std::cout << "generated " << o.turbine << ": " << generated.series.records.size() << " records, "
            << generated.ground_truth.size() << " injected drifts\n";
  return 0;
}

int cmd_train(const Globals& g, const Options& o) {
  validate_identifier(o.model, "model");
  const auto config = config_for(g);
  const DataDir data(g.data_dir);
  auto series = load_series(data, o.turbine);
  const auto from = opt_time(o.from, "from");
  const auto to = opt_time(o.to, "to");
  if (from && to && !(*from < *to)) throw Error(ErrorCode::validation, "from must be before to", "to");
  std::erase_if(series.records, [&](const ScadaRecord& r) {
    return (from && r.timestamp < *from) || (to && r.timestamp >= *to);
  });
  const auto model = train_ensemble(series, config.ensemble, seed_for(g));
  std::ostringstream blob;
  save_ensemble(blob, model);
  write_file(data.model(o.turbine, o.model), blob.str());
  std::cout << "trained " << o.turbine << "/" << o.model << ": " << model.members.size() << " members on "
            << series.records.size() << " records\n";
  return 0;
}

int cmd_residuals(const Globals& g, const Options& o) {
  validate_identifier(o.model, "model");
  const DataDir data(g.data_dir);
  const auto series = load_series(data, o.turbine);
  std::ifstream in(data.model(o.turbine, o.model), std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "no model '" + o.model + "' for turbine '" + o.turbine + "'");
  const auto model = load_ensemble(in);
  const auto residuals = ensemble_residuals(model, series);
  std::ostringstream csv;
  write_residuals_csv(csv, residuals);
  write_file(data.residuals(o.turbine, o.model), csv.str());
  std::cout << "residuals " << o.turbine << "/" << o.model << ": " << residuals.count_present() << " of "
            << residuals.entries.size() << " records covered\n";
  return 0;
}

int cmd_detect(const Globals& g, const Options& o) {
  const auto config = config_for(g);
  Service service(service_config(g));
  const auto detectors = config.detectors.value_or(default_detector_configs());
  std::optional<std::string> key;
  if (!o.idempotency_key.empty()) key = o.idempotency_key;
  const auto result = service.post_detect(o.turbine, o.model, detectors, key);
  std::vector<DetectionEvent> all;
  for (const auto& [kind, events] : result.value.events) all.insert(all.end(), events.begin(), events.end());
  std::ostringstream csv;
  write_events_csv(csv, all);
  write_file(service.data().runs_dir() / (result.value.run_id + ".events.csv"), csv.str());
  std::cout << result.value.run_id << '\n';
  for (const auto& [kind, events] : result.value.events) {
    std::cerr << "  " << to_string(kind) << ": " << events.size() << " events\n";
  }
  return 0;
}

int cmd_evaluate(const Globals& g, const Options& o) {
  const auto config = config_for(g);
  if (o.run_id.empty()) throw Error(ErrorCode::validation, "--run is required", "run");
  const Service service(service_config(g, true));
  EvaluateRequest r;
  r.run_id = o.run_id;
  r.source = o.source.empty() ? config.label_source : parse_label_source(o.source);
  r.tolerance = o.tolerance ? Seconds{*o.tolerance} : config.tolerance;
  r.overlap_threshold = o.overlap.value_or(config.overlap_threshold);
  if (!o.expert.empty()) r.expert_id = o.expert;
  const auto resp = service.post_evaluate(r);
  std::ostringstream csv;
  write_eval_csv(csv, resp.rows);
  emit(o.out, csv.str());
  return 0;
}

LabelFilter filter_from(const Options& o) {
  LabelFilter f;
  if (!o.turbines.empty()) f.turbine_id = o.turbines;
  if (!o.expert.empty()) f.expert_id = o.expert;
  f.from = opt_time(o.from, "from");
  f.to = opt_time(o.to, "to");
  if (!o.cause.empty()) f.cause = parse_drift_cause(o.cause);
  return f;
}

int cmd_labels_export(const Globals& g, const Options& o) {
  LabelStore store(g.data_dir);
  std::ostringstream out;
  const auto labels = store.query(filter_from(o));
  write_labels_jsonl(out, labels);
  emit(o.out, out.str());
  return 0;
}

int cmd_labels_add(const Globals& g, const Options& o) {
  std::string payload;
  if (o.label_file.empty() || o.label_file == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    payload = ss.str();
  } else {
    std::ifstream in(o.label_file, std::ios::binary);
    if (!in) throw Error(ErrorCode::validation, "cannot read label file: " + o.label_file, "file");
    std::ostringstream ss;
    ss << in.rdbuf();
    payload = ss.str();
  }
  Service service(service_config(g));
  std::optional<std::string> key;
  if (!o.idempotency_key.empty()) key = o.idempotency_key;
  const auto result = service.post_label(parse_label_json(payload, false), key);
  std::cout << to_json_line(result.value) << '\n';
  return 0;
}

int cmd_experts_add(const Globals& g, const Options& o) {
  LabelStore store(g.data_dir);
  store.register_expert({o.expert, o.expert_name});
  std::cout << "registered " << o.expert << '\n';
  return 0;
}

int cmd_experts_list(const Globals& g) {
  LabelStore store(g.data_dir);
  for (const auto& e : store.experts()) std::cout << e.expert_id << '\t' << e.display_name << '\n';
  return 0;
}

int cmd_characterize(const Globals& g, const Options& o) {
  const auto config = config_for(g);
  const Service service(service_config(g, true));
  const auto residuals = service.residuals(o.turbine, o.model);
  EvaluateRequest r;
  r.source = o.source.empty() ? config.label_source : parse_label_source(o.source);
  r.overlap_threshold = o.overlap.value_or(config.overlap_threshold);
  if (!o.expert.empty()) r.expert_id = o.expert;
  const auto periods = service.labelled_periods(o.turbine, o.model, r);
  std::vector<DriftCharacterization> rows;
  std::size_t index = 0;
  for (const auto& p : periods) {
    rows.push_back(characterize(*residuals, p.start, p.end, o.steps, Seconds{o.window}, config.metrics,
                                o.turbine + "-" + std::to_string(++index)));
  }
  std::ostringstream out;
  write_characterizations_jsonl(out, rows);
  emit(o.out, out.str());
  return 0;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_benchmark(const Globals& g, const Options& o) {
  const auto config = config_for(g);
  const Service service(service_config(g, true));
  auto ids = o.turbines.empty() ? service.data().turbines() : split_list(o.turbines);
  std::vector<CorpusEntry> corpus;
  EvaluateRequest r;
  r.source = o.source.empty() ? config.label_source : parse_label_source(o.source);
  r.overlap_threshold = o.overlap.value_or(config.overlap_threshold);
  for (const auto& id : ids) {
    CorpusEntry entry;
    entry.series_id = id;
    entry.residuals = *service.residuals(id, o.model);
    entry.periods = service.labelled_periods(id, o.model, r);
    entry.drift_free = entry.periods.empty();
    corpus.push_back(std::move(entry));
  }
  const auto detectors = config.detectors.value_or(default_detector_configs());
  const auto tolerance = o.tolerance ? Seconds{*o.tolerance} : config.tolerance;
  const auto table = benchmark_detectors(corpus, detectors, tolerance);
  std::ostringstream csv;
  write_eval_csv(csv, table.pooled);
  emit(o.out, csv.str());
  if (!o.per_series_out.empty()) {
    std::ostringstream per;
    per << "series_id,detector,precision,sensitivity,tp,fp,fn,tolerance_s\n";
    for (const auto& s : table.per_series) {
      std::ostringstream one;
      write_eval_csv(one, std::span<const EvalResult>(&s.result, 1));
      const auto text = one.str();
      per << s.series_id << ',' << text.substr(text.find('\n') + 1);
    }
    write_file(o.per_series_out, per.str());
  }
  return 0;
}

HttpServer* active_server = nullptr;

void handle_signal(int) {
  if (active_server) active_server->stop();
}

int cmd_serve(const Globals& g, const Options& o) {
  const auto [host, port] = parse_listen_address(o.listen);
  Service service(service_config(g, o.read_only));
  HttpServer server(service);
  const int bound = server.bind(host, port);
  active_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on " << host << ':' << bound << (o.read_only ? " (read-only)" : "") << std::endl;
  const bool ok = server.listen();
  active_server = nullptr;
  return ok ? 0 : 1;
}

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::config:
    case ErrorCode::format:
    case ErrorCode::range:
    case ErrorCode::shape:
    case ErrorCode::input:
    case ErrorCode::ordering:
    case ErrorCode::duplicate_timestamp:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run(int argc, char** argv) {
  Globals g;
  Options o;
  CLI::App app{"Concept-drift workbench for turbine power-model residuals"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--data-dir", g.data_dir, "Data directory");
  app.add_option("--seed", g.seed, "Random seed for generation and training");
  app.add_option("--config", g.config_path, "Pipeline JSON config file")->check(CLI::ExistingFile);

  auto* generate = app.add_subcommand("generate", "Synthesize a turbine series with injected drifts");
  generate->add_option("--turbine", o.turbine, "Turbine id");
  generate->add_option("--records", o.records, "Number of 10-minute records");
  generate->add_option("--scenario", o.scenario, "Built-in injections: mixed or none");
  generate->add_option("--injections", o.injections_path, "Injections JSONL file (overrides --scenario)");

  auto* train = app.add_subcommand("train", "Train the per-batch ELM ensemble");
  train->add_option("--turbine", o.turbine, "Turbine id");
  train->add_option("--model", o.model, "Model id");
  train->add_option("--from", o.from, "First training instant (RFC 3339)");
  train->add_option("--to", o.to, "End of training range, exclusive (RFC 3339)");

  auto* residuals = app.add_subcommand("residuals", "Compute ensemble residuals for a turbine");
  residuals->add_option("--turbine", o.turbine, "Turbine id");
  residuals->add_option("--model", o.model, "Model id");

  auto* detect = app.add_subcommand("detect", "Run drift detectors over residuals and persist the run");
  detect->add_option("--turbine", o.turbine, "Turbine id");
  detect->add_option("--model", o.model, "Model id");
  detect->add_option("--idempotency-key", o.idempotency_key, "Replay key");

  auto* evaluate = app.add_subcommand("evaluate", "Score a detector run against labelled periods");
  evaluate->add_option("--run", o.run_id, "Run id")->required();
  evaluate->add_option("--source", o.source, "Label source: expert, consensus or ground_truth");
  evaluate->add_option("--tolerance", o.tolerance, "Matching tolerance in seconds");
  evaluate->add_option("--overlap-threshold", o.overlap, "Consensus Jaccard threshold");
  evaluate->add_option("--expert", o.expert, "Restrict expert labels to one expert");
  evaluate->add_option("--out", o.out, "Output CSV (default stdout)");

  auto* labels = app.add_subcommand("labels", "Label store operations");
  labels->require_subcommand(1);
  auto* labels_export = labels->add_subcommand("export", "Export labels as JSON lines");
  labels_export->add_option("--turbine", o.turbines, "Turbine id filter");
  labels_export->add_option("--expert", o.expert, "Expert id filter");
  labels_export->add_option("--from", o.from, "Labels ending after this instant");
  labels_export->add_option("--to", o.to, "Labels starting before this instant");
  labels_export->add_option("--cause", o.cause, "Cause filter");
  labels_export->add_option("--out", o.out, "Output file (default stdout)");
  auto* labels_add = labels->add_subcommand("add", "Append one label from a JSON payload");
  labels_add->add_option("--file", o.label_file, "JSON payload file (default stdin)");
  labels_add->add_option("--idempotency-key", o.idempotency_key, "Replay key");

  auto* experts = app.add_subcommand("experts", "Expert registry");
  experts->require_subcommand(1);
  auto* experts_add = experts->add_subcommand("add", "Register an expert");
  experts_add->add_option("--id", o.expert, "Expert id")->required();
  experts_add->add_option("--name", o.expert_name, "Display name");
  auto* experts_list = experts->add_subcommand("list", "List registered experts");

  auto* characterize_cmd = app.add_subcommand("characterize", "Magnitude, duration and path length per period");
  characterize_cmd->add_option("--turbine", o.turbine, "Turbine id");
  characterize_cmd->add_option("--model", o.model, "Model id");
  characterize_cmd->add_option("--source", o.source, "Label source: expert, consensus or ground_truth");
  characterize_cmd->add_option("--overlap-threshold", o.overlap, "Consensus Jaccard threshold");
  characterize_cmd->add_option("--expert", o.expert, "Restrict expert labels to one expert");
  characterize_cmd->add_option("--window", o.window, "Concept window in seconds");
  characterize_cmd->add_option("--steps", o.steps, "Path-length steps");
  characterize_cmd->add_option("--out", o.out, "Output file (default stdout)");

  auto* benchmark = app.add_subcommand("benchmark", "Pooled precision/sensitivity over many turbines");
  benchmark->add_option("--turbines", o.turbines, "Comma-separated turbine ids (default all)");
  benchmark->add_option("--model", o.model, "Model id");
  benchmark->add_option("--source", o.source, "Label source: expert, consensus or ground_truth");
  benchmark->add_option("--tolerance", o.tolerance, "Matching tolerance in seconds");
  benchmark->add_option("--overlap-threshold", o.overlap, "Consensus Jaccard threshold");
  benchmark->add_option("--out", o.out, "Pooled CSV (default stdout)");
  benchmark->add_option("--per-series-out", o.per_series_out, "Per-series CSV");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--listen", o.listen, "host:port");
  serve->add_flag("--read-only", o.read_only, "Reject mutating requests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!fs::is_directory(g.data_dir)) {
      if (generate->parsed() || experts_add->parsed() || labels_add->parsed()) {
        fs::create_directories(g.data_dir);
      } else {
        throw Error(ErrorCode::validation, "data directory does not exist: " + g.data_dir, "data-dir");
      }
    }
    if (generate->parsed()) return cmd_generate(g, o);
    if (train->parsed()) return cmd_train(g, o);
    if (residuals->parsed()) return cmd_residuals(g, o);
    if (detect->parsed()) return cmd_detect(g, o);
    if (evaluate->parsed()) return cmd_evaluate(g, o);
    if (labels_export->parsed()) return cmd_labels_export(g, o);
    if (labels_add->parsed()) return cmd_labels_add(g, o);
    if (experts_add->parsed()) return cmd_experts_add(g, o);
    if (experts_list->parsed()) return cmd_experts_list(g);
    if (characterize_cmd->parsed()) return cmd_characterize(g, o);
    if (benchmark->parsed()) return cmd_benchmark(g, o);
    if (serve->parsed()) return cmd_serve(g, o);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]";
    if (!e.field().empty()) std::cerr << " (" << e.field() << ")";
    std::cerr << ": " << e.what() << '\n';
    return is_validation(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace driftbench::cli

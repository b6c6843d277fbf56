#include "driftbench/http_server.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>

#define CPPHTTPLIB_LISTEN_BACKLOG 512
#include <httplib.h>
#include <json.hpp>

#include "driftbench/random.hpp"

namespace driftbench {

using ojson = nlohmann::ordered_json;

namespace {

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson label_json(const DriftLabel& l) { return ojson::parse(to_json_line(l)); }

ojson event_json(const DetectionEvent& e) {
  return {{"timestamp", format_rfc3339(e.timestamp)}, {"sample_index", e.sample_index}, {"statistic", e.statistic}};
}

ojson events_json(const std::vector<std::pair<DetectorKind, std::vector<DetectionEvent>>>& events) {
  ojson out = ojson::object();
  for (const auto& [kind, list] : events) {
    ojson arr = ojson::array();
    for (const auto& e : list) arr.push_back(event_json(e));
    out[to_string(kind)] = arr;
  }
  return out;
}

ojson run_json(const DetectRun& run) {
  ojson j;
  j["run_id"] = run.run_id;
  j["status"] = run.status;
  j["turbine_id"] = run.turbine_id;
  j["model_id"] = run.model_id;
  j["events"] = events_json(run.events);
  return j;
}

ojson eval_row_json(const EvalResult& r) {
  ojson j;
  j["detector"] = to_string(r.kind);
  j["precision"] = opt(r.precision);
  j["sensitivity"] = opt(r.sensitivity);
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["tolerance_s"] = r.counts.tolerance.count();
  return j;
}

ojson parse_body(const httplib::Request& req) {
  try {
    auto j = ojson::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::format, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string body_string(const ojson& body, const char* field) {
  auto it = body.find(field);
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::validation, std::string(field) + " is required and must be a string", field);
  }
  return it->get<std::string>();
}

std::optional<std::string> idempotency_key(const httplib::Request& req, const ojson* body) {
  if (req.has_header("Idempotency-Key")) return req.get_header_value("Idempotency-Key");
  if (body && body->contains("idempotency_key") && (*body)["idempotency_key"].is_string()) {
    return (*body)["idempotency_key"].get<std::string>();
  }
  return std::nullopt;
}

std::optional<std::string> query_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::optional<Timestamp> time_param(const httplib::Request& req, const char* name) {
  auto v = query_param(req, name);
  if (!v) return std::nullopt;
  try {
    return parse_rfc3339(*v);
  } catch (const Error&) {
    throw Error(ErrorCode::validation, std::string(name) + " must be an RFC 3339 UTC timestamp", name);
  }
}

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

std::pair<std::string, int> parse_listen_address(const std::string& listen) {
  std::string host = "127.0.0.1";
  std::string port_text = listen;
  const auto colon = listen.rfind(':');
  if (colon != std::string::npos) {
    host = listen.substr(0, colon);
    port_text = listen.substr(colon + 1);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  }
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (host.empty() || ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::validation, "listen address must be host:port", "listen");
  }
  return {host, port};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::authorization: return 403;
    case ErrorCode::forbidden: return 403;
    case ErrorCode::precondition: return 409;
    case ErrorCode::validation: return 422;
    case ErrorCode::io: return 500;
    case ErrorCode::no_usable_model: return 500;
    default: return 400;
  }
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::atomic<std::uint64_t> counter{0};
  std::uint64_t salt;

  explicit Impl(Service& s)
      : service(s),
        salt(mix_seed(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()), 0)) {}

  std::string correlation_id(const httplib::Request& req) {
    if (req.has_header("X-Correlation-Id")) return req.get_header_value("X-Correlation-Id");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%08llx-%06llx", static_cast<unsigned long long>(salt & 0xffffffffULL),
                  static_cast<unsigned long long>(++counter));
    return buf;
  }

  void send_error(const httplib::Request& req, httplib::Response& res, int status, std::string_view code,
                  const std::string& message, const std::string& field = {}) {
    const auto cid = correlation_id(req);
    ojson body;
    body["code"] = code;
    body["message"] = message;
    body["correlation_id"] = cid;
    if (!field.empty()) body["field"] = field;
    res.set_header("X-Correlation-Id", cid);
    send_json(res, status, body);
  }

  template <typename F>
  httplib::Server::Handler wrap(F&& handler) {
    return [this, handler = std::forward<F>(handler)](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
        if (!res.has_header("X-Correlation-Id")) res.set_header("X-Correlation-Id", correlation_id(req));
      } catch (const Error& e) {
        send_error(req, res, http_status(e.code()), to_string(e.code()), e.what(), e.field());
      } catch (const std::exception& e) {
        send_error(req, res, 500, "internal_error", e.what());
      }
    };
  }

  void routes() {
    server.Get("/turbines", wrap([this](const httplib::Request&, httplib::Response& res) {
                 ojson arr = ojson::array();
                 for (const auto& t : service.turbines()) {
                   arr.push_back({{"turbine_id", t.turbine_id},
                                  {"models", t.models},
                                  {"has_ground_truth", t.has_ground_truth}});
                 }
                 send_json(res, 200, {{"turbines", arr}});
               }));

    server.Get(R"(/turbines/([^/]+)/models/([^/]+)/residuals)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 ResidualQuery q;
                 q.turbine_id = req.matches[1];
                 q.model_id = req.matches[2];
                 q.from = time_param(req, "from");
                 q.to = time_param(req, "to");
                 if (auto mp = query_param(req, "max_points")) {
                   std::size_t v = 0;
                   auto [ptr, ec] = std::from_chars(mp->data(), mp->data() + mp->size(), v);
                   if (ec != std::errc{} || ptr != mp->data() + mp->size()) {
                     throw Error(ErrorCode::validation, "max_points must be a positive integer", "max_points");
                   }
                   q.max_points = v;
                 }
                 if (auto ov = query_param(req, "overlay")) {
                   std::size_t pos = 0;
                   while (pos <= ov->size()) {
                     auto comma = ov->find(',', pos);
                     if (comma == std::string::npos) comma = ov->size();
                     const auto item = ov->substr(pos, comma - pos);
                     if (item == "labels") {
                       q.overlay_labels = true;
                     } else if (item == "events") {
                       q.overlay_events = true;
                     } else if (!item.empty()) {
                       throw Error(ErrorCode::validation, "overlay accepts labels,events", "overlay");
                     }
                     pos = comma + 1;
                   }
                 }
                 q.run_id = query_param(req, "run_id");
                 const auto page = service.get_residuals(q);

                 ojson points = ojson::array();
                 for (const auto& p : page.points) {
                   points.push_back({{"timestamp", format_rfc3339(p.timestamp)},
                                     {"actual", p.actual},
                                     {"predicted", opt(p.predicted)},
                                     {"residual", opt(p.residual)}});
                 }
                 ojson body;
                 body["turbine_id"] = page.turbine_id;
                 body["model_id"] = page.model_id;
                 body["points_in_range"] = page.points_in_range;
                 body["downsampled"] = page.downsampled;
                 body["points"] = points;
                 if (page.labels) {
                   ojson labels = ojson::array();
                   for (const auto& l : *page.labels) labels.push_back(label_json(l));
                   body["labels"] = labels;
                 }
                 if (page.events) {
                   body["run_id"] = page.run_id ? ojson(*page.run_id) : ojson(nullptr);
                   body["events"] = events_json(*page.events);
                 }
                 send_json(res, 200, body);
               }));

    server.Post("/labels", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  if (service.config().read_only) throw Error(ErrorCode::forbidden, "service is in read-only mode");
                  const auto body = parse_body(req);
                  auto label = parse_label_json(req.body, false);
                  const auto result = service.post_label(std::move(label), idempotency_key(req, &body));
                  send_json(res, result.replayed ? 200 : 201, label_json(result.value));
                }));

    server.Get("/labels", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 LabelFilter f;
                 f.turbine_id = query_param(req, "turbine_id");
                 f.model_id = query_param(req, "model_id");
                 f.expert_id = query_param(req, "expert_id");
                 f.from = time_param(req, "from");
                 f.to = time_param(req, "to");
                 if (auto c = query_param(req, "cause")) f.cause = parse_drift_cause(*c);
                 ojson arr = ojson::array();
                 for (const auto& l : service.labels().query(f)) arr.push_back(label_json(l));
                 send_json(res, 200, {{"labels", arr}});
               }));

    server.Post("/detect", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  if (service.config().read_only) throw Error(ErrorCode::forbidden, "service is in read-only mode");
                  const auto body = parse_body(req);
                  const auto turbine = body_string(body, "turbine_id");
                  const auto model = body_string(body, "model_id");
                  std::vector<DetectorConfig> configs;
                  if (body.contains("detectors")) {
                    const auto& d = body["detectors"];
                    if (!d.is_object()) {
                      throw Error(ErrorCode::validation, "detectors must be an object keyed by kind", "detectors");
                    }
                    try {
                      configs = parse_detector_configs(d.dump());
                    } catch (const Error& e) {
                      throw Error(ErrorCode::validation, e.what(), e.field().empty() ? "detectors" : e.field());
                    }
                  } else {
                    configs = default_detector_configs();
                  }
                  const auto result = service.post_detect(turbine, model, configs, idempotency_key(req, &body));
                  send_json(res, result.replayed ? 200 : 201, run_json(result.value));
                }));

    server.Post("/evaluate", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  EvaluateRequest r;
                  r.run_id = body_string(body, "run_id");
                  r.source = parse_label_source(body.value("label_source", std::string("ground_truth")));
                  if (body.contains("tolerance_s")) {
                    if (!body["tolerance_s"].is_number_integer()) {
                      throw Error(ErrorCode::validation, "tolerance_s must be an integer", "tolerance_s");
                    }
                    r.tolerance = Seconds{body["tolerance_s"].get<long long>()};
                  }
                  if (body.contains("overlap_threshold")) {
                    if (!body["overlap_threshold"].is_number()) {
                      throw Error(ErrorCode::validation, "overlap_threshold must be a number", "overlap_threshold");
                    }
                    r.overlap_threshold = body["overlap_threshold"].get<double>();
                  }
                  if (body.contains("expert_id")) r.expert_id = body_string(body, "expert_id");
                  const auto resp = service.post_evaluate(r);
                  ojson rows = ojson::array();
                  for (const auto& row : resp.rows) rows.push_back(eval_row_json(row));
                  ojson out;
                  out["run_id"] = resp.run_id;
                  out["label_source"] = to_string(resp.source);
                  out["policy"] = kPeriodHitPolicy;
                  out["tolerance_s"] = r.tolerance.count();
                  out["n_periods"] = resp.n_periods;
                  out["rows"] = rows;
                  send_json(res, 200, out);
                }));

    server.Get("/experts", wrap([this](const httplib::Request&, httplib::Response& res) {
                 ojson arr = ojson::array();
                 for (const auto& e : service.labels().experts()) {
                   arr.push_back({{"expert_id", e.expert_id}, {"display_name", e.display_name}});
                 }
                 send_json(res, 200, {{"experts", arr}});
               }));

    server.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const int status = res.status;
      send_error(req, res, status, status == 404 ? "not_found" : "http_error",
                 status == 404 ? "no such endpoint: " + req.path : httplib::status_message(status));
      return httplib::Server::HandlerResponse::Handled;
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace driftbench

#include "dial/service.hpp"

#include "dial/checkpoint.hpp"
#include "dial/loop.hpp"

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace dial {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Session {
  std::string id;
  std::string dir;
  Dataset dataset;
  std::unique_ptr<Engine> engine;

  std::mutex mu;
  std::condition_variable settled;
  SessionState state;
  SessionStatus status = SessionStatus::idle;
  std::string last_error;
  std::jthread worker;

  bool busy() const { return status == SessionStatus::training || status == SessionStatus::blocking; }

  void persist() { save_session(dir, engine->config(), state, status); }

  // Status after a round finished or a session was loaded.
  SessionStatus resting_status() const {
    if (state.pending) return SessionStatus::awaiting_labels;
    return state.finished(engine->config()) ? SessionStatus::done : SessionStatus::idle;
  }
};

void send_json(httplib::Response& res, int code, const json& body) {
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int code, const std::string& msg) {
  send_json(res, code, json{{"error", msg}});
}

json attrs_json(const Record& rec) {
  json a = json::object();
  for (const auto& [name, value] : rec.attributes) a[name] = value;
  return a;
}

std::string new_id() {
  static std::mt19937_64 gen{std::random_device{}()};
  static std::mutex m;
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
  return buf;
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number() || v.is_null()) return v.dump();
  throw ConfigError("config values must be scalars");
}

LabelValue parse_label(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? LabelValue::duplicate : LabelValue::non_duplicate;
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i == 1) return LabelValue::duplicate;
    if (i == 0) return LabelValue::non_duplicate;
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "duplicate" || s == "1") return LabelValue::duplicate;
    if (s == "non_duplicate" || s == "0") return LabelValue::non_duplicate;
  }
  throw ParseError("label must be 0/1, true/false, duplicate or non_duplicate");
}

}  // namespace

struct Service::Impl {
  std::string root;
  httplib::Server server;
  std::jthread listener;

  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  explicit Impl(std::string r) : root(std::move(r)) {
    fs::create_directories(root);
    reload();
    routes();
  }

  ~Impl() {
    server.stop();
    if (listener.joinable()) listener.join();
    std::lock_guard lock(sessions_mu);
    for (auto& [id, s] : sessions)
      if (s->worker.joinable()) s->worker.join();
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void reload() {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / "state.json")) continue;
      try {
        auto s = std::make_shared<Session>();
        s->id = entry.path().filename().string();
        s->dir = entry.path().string();
        const Config cfg = load_config_file((entry.path() / "config.txt").string());
        s->dataset = load_dataset(cfg.data_dir);
        s->engine = std::make_unique<Engine>(s->dataset, cfg);
        s->state = load_session(s->dir, *s->engine);
        s->status = s->resting_status();
        sessions.emplace(s->id, s);
      } catch (const std::exception&) {
        // A directory that cannot be restored is left alone on disk.
      }
    }
  }

  void routes() {
    server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
    server.Get(R"(/v1/sessions/([0-9A-Za-z_-]+))",
               [this](const httplib::Request& req, httplib::Response& res) { get_session(req, res); });
    server.Post(R"(/v1/sessions/([0-9A-Za-z_-]+)/advance)",
                [this](const httplib::Request& req, httplib::Response& res) { advance(req, res); });
    server.Get(R"(/v1/sessions/([0-9A-Za-z_-]+)/queue)",
               [this](const httplib::Request& req, httplib::Response& res) { queue(req, res); });
    server.Post(R"(/v1/sessions/([0-9A-Za-z_-]+)/labels)",
                [this](const httplib::Request& req, httplib::Response& res) { labels(req, res); });
    server.Get(R"(/v1/sessions/([0-9A-Za-z_-]+)/metrics)",
               [this](const httplib::Request& req, httplib::Response& res) { metrics(req, res); });
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return send_error(res, 400, "body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("dataset_dir") || !body["dataset_dir"].is_string())
      return send_error(res, 400, "dataset_dir (string) is required");
    auto s = std::make_shared<Session>();
    try {
      Config cfg;
      if (body.contains("config")) {
        const auto& c = body["config"];
        if (c.is_string()) apply_config_text(cfg, c.get<std::string>());
        else if (c.is_object())
          for (const auto& [k, v] : c.items()) cfg.set(k, config_value(v));
        else if (!c.is_null()) throw ConfigError("config must be an object or a string");
      }
      cfg.data_dir = fs::absolute(body["dataset_dir"].get<std::string>()).string();
      s->id = new_id();
      s->dir = (fs::path(root) / s->id).string();
      cfg.out_dir = s->dir;
      s->dataset = load_dataset(cfg.data_dir);
      s->engine = std::make_unique<Engine>(s->dataset, cfg);
      s->state = s->engine->init_session();
      s->status = SessionStatus::idle;
      s->persist();
    } catch (const Error& e) {
      return send_error(res, 400, e.what());
    }
    {
      std::lock_guard lock(sessions_mu);
      sessions.emplace(s->id, s);
    }
    send_json(res, 201, json{{"id", s->id}});
  }

  void get_session(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    json metrics = json::array();
    for (const auto& m : s->state.history) metrics.push_back(json::parse(metrics_json_line(m)));
    json body{{"id", s->id},
              {"status", to_string(s->status)},
              {"round", s->state.round},
              {"rounds", s->engine->config().loop.rounds},
              {"labeled", s->state.T.human_count()},
              {"remaining", s->state.pending ? s->state.pending->remaining() : 0},
              {"metrics", metrics}};
    if (!s->last_error.empty()) body["error"] = s->last_error;
    send_json(res, 200, body);
  }

  void advance(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    if (s->status != SessionStatus::idle)
      return send_error(res, 409, std::string("session is ") + to_string(s->status));
    if (s->worker.joinable()) s->worker.join();
    s->status = SessionStatus::training;
    s->last_error.clear();
    s->worker = std::jthread([s] { run_advance(s); });
    send_json(res, 202, json{{"id", s->id}, {"status", to_string(s->status)}});
  }

  static void run_advance(const std::shared_ptr<Session>& s) {
    SessionState work;
    {
      std::lock_guard lock(s->mu);
      work = s->state;
    }
    const auto& engine = *s->engine;
    try {
      engine.begin_round(work, [&](SessionStatus phase) {
        std::lock_guard lock(s->mu);
        s->status = phase;
      });
      if (engine.config().loop.oracle == OracleKind::simulated) engine.answer_from_gold(work);
      if (work.pending->remaining() == 0) engine.complete_round(work);
      std::lock_guard lock(s->mu);
      s->state = std::move(work);
      s->status = s->resting_status();
      s->persist();
    } catch (const std::exception& e) {
      std::lock_guard lock(s->mu);
      s->last_error = e.what();
      s->status = s->resting_status();
    }
    s->settled.notify_all();
  }

  void queue(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    json items = json::array();
    if (s->state.pending) {
      const auto& ds = s->dataset;
      for (const auto& p : s->state.pending->queue) {
        if (s->state.pending->answers.count(p)) continue;
        items.push_back({{"pair", {{"r_id", p.r_id}, {"s_id", p.s_id}}},
                         {"r_attrs", attrs_json(ds.R[ds.R.at_id(p.r_id)])},
                         {"s_attrs", attrs_json(ds.S[ds.S.at_id(p.s_id)])}});
      }
    }
    send_json(res, 200, items);
  }

  void labels(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::vector<std::pair<PairId, LabelValue>> batch;
    try {
      const auto body = json::parse(req.body);
      const json items = body.is_array() ? body : json::array({body});
      for (const auto& it : items) {
        if (!it.is_object()) throw ParseError("each label must be an object");
        batch.emplace_back(PairId{it.at("r_id").get<RecordId>(), it.at("s_id").get<RecordId>()},
                           parse_label(it.at("label")));
      }
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("malformed label body: ") + e.what());
    } catch (const Error& e) {
      return send_error(res, 400, e.what());
    }
    if (batch.empty()) return send_error(res, 400, "no labels given");

    std::lock_guard lock(s->mu);
    if (s->status != SessionStatus::awaiting_labels || !s->state.pending)
      return send_error(res, 409, "session is not awaiting labels");
    auto& pending = *s->state.pending;
    PairSet in_batch;
    for (const auto& [p, v] : batch)
      if (!pending.queued(p) || pending.answers.count(p) || !in_batch.insert(p).second)
        return send_error(res, 409, "pair (" + std::to_string(p.r_id) + "," + std::to_string(p.s_id) +
                                        ") is not an open queue item");
    for (const auto& [p, v] : batch) s->engine->answer(s->state, p, v);
    const auto remaining = pending.remaining();
    try {
      if (remaining == 0) s->engine->complete_round(s->state);
      s->status = s->resting_status();
      s->persist();
    } catch (const Error& e) {
      return send_error(res, 500, e.what());
    }
    send_json(res, 200, json{{"accepted", batch.size()}, {"remaining", remaining}});
  }

  void metrics(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    res.status = 200;
    res.set_content(metrics_jsonl(s->state.history), "application/x-ndjson");
  }
};

Service::Service(std::string root) : impl_(std::make_unique<Impl>(std::move(root))) {}

Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::start() {
  impl_->listener = std::jthread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

bool Service::wait_settled(const std::string& id, std::chrono::milliseconds timeout) {
  auto s = impl_->find(id);
  if (!s) return false;
  std::unique_lock lock(s->mu);
  return s->settled.wait_for(lock, timeout, [&] { return !s->busy(); });
}

}  // namespace dial

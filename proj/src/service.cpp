#include "emotod/service.hpp"

#include <map>

#include <httplib.h>
#include <json.hpp>

#include "emotod/report.hpp"

namespace emotod {

using nlohmann::json;

struct AnnotationService::Impl {
  AnnotationStore& store;
  std::vector<EvalExample> examples;
  std::map<std::string, std::size_t> index;
  httplib::Server server;

  Impl(AnnotationStore& s, std::vector<EvalExample> ex) : store(s), examples(std::move(ex)) {
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (!index.emplace(examples[i].example_id, i).second) {
        throw SchemaError("duplicate example id " + examples[i].example_id);
      }
    }
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
  }

  void next(const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return fail(res, 400, "missing rater");
    const auto snap = store.snapshot();
    std::size_t done = 0;
    const EvalExample* pending = nullptr;
    for (const auto& ex : examples) {
      const bool ranked = std::any_of(snap->begin(), snap->end(), [&](const RankingRecord& r) {
        return r.rater_id == rater && r.example_id == ex.example_id;
      });
      if (ranked) {
        ++done;
      } else if (!pending) {
        pending = &ex;
      }
    }
    if (!pending) {
      return reply(res, 200, json{{"done", true}, {"completed", done}, {"total", examples.size()}});
    }
    reply(res, 200,
          json{{"done", false},
               {"completed", done},
               {"total", examples.size()},
               {"example", json::parse(rater_view_json(*pending))}});
  }

  void rankings(const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return fail(res, 400, "body must be a JSON object");
    if (!body.contains("example_id") || !body["example_id"].is_string() ||
        !body.contains("rater_id") || !body["rater_id"].is_string() ||
        body["rater_id"].get<std::string>().empty()) {
      return fail(res, 400, "example_id and rater_id are required strings");
    }
    const std::string example_id = body["example_id"].get<std::string>();
    auto it = index.find(example_id);
    if (it == index.end()) return fail(res, 404, "unknown example " + example_id);
    const EvalExample& ex = examples[it->second];

    if (!body.contains("ranks") || !body["ranks"].is_object()) {
      return fail(res, 422, "ranks must map every response index to a rank");
    }
    const json& ranks = body["ranks"];
    RankingRecord record;
    record.example_id = example_id;
    record.rater_id = body["rater_id"].get<std::string>();
    for (const auto& [key, value] : ranks.items()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        return fail(res, 422, "bad response index '" + key + "'");
      }
      if (idx >= ex.responses.size()) return fail(res, 422, "no response at index " + key);
      if (!value.is_number_integer()) return fail(res, 422, "rank for index " + key + " is not an integer");
      const int rank = value.get<int>();
      if (rank < 1 || rank > kRankLevels) return fail(res, 422, "rank for index " + key + " outside 1..3");
      record.ranks[ex.responses[idx].system] = rank;
    }
    if (record.ranks.size() != ex.responses.size()) {
      return fail(res, 422, "every response needs a rank");
    }
    if (store.add(record) == AddResult::duplicate) {
      return fail(res, 409, "already ranked by this rater");
    }
    reply(res, 200, json{{"status", "accepted"}});
  }

  void results(httplib::Response& res) {
    const auto snap = store.snapshot();
    reply(res, 200, json::parse(rank_report_to_json(rank_summary(*snap))));
  }

  void progress(const httplib::Request& req, httplib::Response& res) {
    const auto snap = store.snapshot();
    std::map<std::string, std::size_t> per_rater;
    for (const auto& r : *snap) {
      if (index.count(r.example_id)) ++per_rater[r.rater_id];
    }
    json body{{"total_examples", examples.size()}, {"records", snap->size()}, {"raters", per_rater}};
    const std::string rater = req.get_param_value("rater");
    if (!rater.empty()) {
      body["rater"] = rater;
      body["completed"] = per_rater.count(rater) ? per_rater[rater] : 0;
    }
    reply(res, 200, body);
  }
};

AnnotationService::AnnotationService(AnnotationStore& store, std::vector<EvalExample> examples,
                                     std::filesystem::path ui_dir)
    : impl_(std::make_unique<Impl>(store, std::move(examples))) {
  auto& s = impl_->server;
  Impl* self = impl_.get();
  s.Get("/api/session/next",
        [self](const httplib::Request& req, httplib::Response& res) { self->next(req, res); });
  s.Post("/api/rankings",
         [self](const httplib::Request& req, httplib::Response& res) { self->rankings(req, res); });
  s.Get("/api/results", [self](const httplib::Request&, httplib::Response& res) { self->results(res); });
  s.Get("/api/progress",
        [self](const httplib::Request& req, httplib::Response& res) { self->progress(req, res); });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    Impl::fail(res, 500, what);
  });
  if (!ui_dir.empty() && !s.set_mount_point("/", ui_dir.string())) {
    throw SchemaError("ui directory not found: " + ui_dir.string());
  }
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::start(const std::string& host, int port) {
  auto& s = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = s.bind_to_any_port(host);
  } else if (!s.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

bool AnnotationService::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

void AnnotationService::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace emotod

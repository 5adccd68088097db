#include "sqlreward/service.hpp"

#include <chrono>
#include <httplib.h>
#include <json.hpp>
#include <unordered_set>

#include "sqlreward/advantage.hpp"

namespace sqlreward {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reply_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& what) {
  reply_json(res, status, ordered_json{{"error", what}});
}

ordered_json result_to_json(const ItemScore& score) {
  const RewardBreakdown& b = score.breakdown;
  ordered_json r;
  r["id"] = score.id;
  r["composite"] = b.composite;
  r["components"] = ordered_json{{"executable", b.executable},
                                 {"ex", b.r_ex},
                                 {"cp", b.r_cp},
                                 {"cr", b.r_cr},
                                 {"tc", b.r_tc},
                                 {"qa", b.r_qa},
                                 {"fr", b.r_fr}};
  if (b.error_class) {
    r["error_class"] = std::string(to_string(*b.error_class));
  } else {
    r["error_class"] = nullptr;
  }
  return r;
}

}  // namespace

RewardService::RewardService(ServiceConfig config)
    : config_(std::move(config)),
      scorer_(config_.scoring),
      server_(std::make_unique<httplib::Server>()) {
  setup_routes();
}

RewardService::~RewardService() { stop(); }

void RewardService::record_request(std::size_t items, double latency_ms) {
  requests_.fetch_add(1, std::memory_order_relaxed);
  items_scored_.fetch_add(items, std::memory_order_relaxed);
  latency_us_total_.fetch_add(static_cast<std::uint64_t>(latency_ms * 1000.0),
                              std::memory_order_relaxed);
}

void RewardService::setup_routes() {
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server_->Get("/v1/stats",
               [this](const httplib::Request&, httplib::Response& res) {
                 const ServiceStats s = stats();
                 reply_json(res, 200,
                            ordered_json{{"requests", s.requests},
                                         {"items_scored", s.items_scored},
                                         {"cache_hits", s.cache_hits},
                                         {"cache_misses", s.cache_misses},
                                         {"mean_latency_ms", s.mean_latency_ms}});
               });

  server_->Post("/v1/score", [this](const httplib::Request& req,
                                    httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      reply_error(res, 400, std::string("invalid JSON: ") + e.what());
      return;
    }
    if (!body.is_object() || !body.contains("items") ||
        !body["items"].is_array()) {
      reply_error(res, 400, "expected {items: [...]}");
      return;
    }

    // Per-request overrides ride on the shared cache; the limits are part of
    // the cache key, so mixing requests stays sound.
    ScoringConfig cfg = scorer_.config();
    if (body.contains("options") && body["options"].is_object()) {
      const json& opt = body["options"];
      if (opt.contains("timeout_ms") && opt["timeout_ms"].is_number()) {
        cfg.limits.timeout =
            std::chrono::milliseconds(opt["timeout_ms"].get<std::int64_t>());
      }
      if (opt.contains("tolerance") && opt["tolerance"].is_number()) {
        cfg.tolerance = opt["tolerance"].get<double>();
      }
    }

    std::vector<ScoreItem> items;
    std::unordered_set<std::string> ids;
    for (const json& entry : body["items"]) {
      if (!entry.is_object() || !entry.contains("id") ||
          !entry.contains("db_id") || !entry.contains("gold_sql") ||
          !entry.contains("completion")) {
        reply_error(res, 400,
                    "each item needs id, db_id, gold_sql, completion");
        return;
      }
      ScoreItem item;
      item.id = entry["id"].is_string()
                    ? entry["id"].get<std::string>()
                    : entry["id"].dump();
      if (!ids.insert(item.id).second) {
        reply_error(res, 400, "duplicate item id: " + item.id);
        return;
      }
      item.db_id = entry["db_id"].get<std::string>();
      item.gold_sql = entry["gold_sql"].get<std::string>();
      item.completion = entry["completion"].get<std::string>();
      item.kind = CompositeKind::Gate;
      if (entry.contains("kind") && entry["kind"].is_string()) {
        const auto kind =
            composite_kind_from_string(entry["kind"].get<std::string>());
        if (!kind) {
          reply_error(res, 400,
                      "unknown kind: " + entry["kind"].get<std::string>());
          return;
        }
        item.kind = *kind;
      }
      items.push_back(std::move(item));
    }

    const std::vector<ItemScore> scores =
        score_items(&scorer_.cache(), cfg, items);

    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();
    record_request(items.size(), elapsed_ms);

    ordered_json out;
    out["results"] = ordered_json::array();
    for (const ItemScore& s : scores) out["results"].push_back(result_to_json(s));
    out["timing_ms"] = elapsed_ms;
    reply_json(res, 200, out);
  });

  server_->Post("/v1/advantages", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      reply_error(res, 400, std::string("invalid JSON: ") + e.what());
      return;
    }
    if (!body.is_object() || !body.contains("groups") ||
        !body["groups"].is_array() || body["groups"].empty()) {
      reply_error(res, 400, "expected {groups: [[numbers]], strategy}");
      return;
    }
    ScalingStrategy strategy = ScalingStrategy::GroupScale;
    if (body.contains("strategy")) {
      if (!body["strategy"].is_string() ||
          !strategy_from_string(body["strategy"].get<std::string>(),
                                strategy)) {
        reply_error(res, 400, "strategy must be group, batch or none");
        return;
      }
    }
    std::vector<RewardGroup> groups;
    for (const json& g : body["groups"]) {
      if (!g.is_array() || g.empty()) {
        reply_error(res, 400, "each group must be a nonempty number array");
        return;
      }
      RewardGroup group;
      for (const json& v : g) {
        if (!v.is_number()) {
          reply_error(res, 400, "rewards must be numbers");
          return;
        }
        group.rewards.push_back(v.get<double>());
      }
      groups.push_back(std::move(group));
    }

    const AdvantageRows rows = compute_advantages(groups, strategy);

    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();
    record_request(0, elapsed_ms);

    ordered_json out;
    out["advantages"] = rows;
    reply_json(res, 200, out);
  });
}

bool RewardService::listen() {
  bound_port_ = config_.port;
  return server_->listen(config_.host, config_.port);
}

int RewardService::start_async() {
  if (config_.port == 0) {
    bound_port_ = server_->bind_to_any_port(config_.host);
    if (bound_port_ < 0) return -1;
  } else {
    if (!server_->bind_to_port(config_.host, config_.port)) return -1;
    bound_port_ = config_.port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound_port_;
}

void RewardService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

ServiceStats RewardService::stats() const {
  ServiceStats s;
  s.requests = requests_.load();
  s.items_scored = items_scored_.load();
  s.cache_hits = scorer_.cache().hits();
  s.cache_misses = scorer_.cache().misses();
  s.mean_latency_ms =
      s.requests == 0
          ? 0.0
          : static_cast<double>(latency_us_total_.load()) / 1000.0 /
                static_cast<double>(s.requests);
  return s;
}

}  // namespace sqlreward

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "sqlreward/scoring.hpp"

namespace httplib {
class Server;
}

namespace sqlreward {

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  ScoringConfig scoring;
};

struct ServiceStats {
  std::uint64_t requests = 0;      // scoring + advantage requests
  std::uint64_t items_scored = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  double mean_latency_ms = 0.0;
};

// HTTP scoring service:
//   POST /v1/score       batch reward computation
//   POST /v1/advantages  grouped advantage normalization
//   GET  /v1/stats       counters snapshot
//   GET  /health         liveness probe
// One instance owns one execution cache, shared across all requests.
class RewardService {
 public:
  explicit RewardService(ServiceConfig config);
  ~RewardService();

  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // Blocks until stop(); false when the port cannot be bound.
  bool listen();

  // Binds (to an ephemeral port when config.port == 0), serves on a
  // background thread and returns the bound port, or -1 on failure.
  int start_async();

  void stop();

  ServiceStats stats() const;
  int port() const { return bound_port_; }

 private:
  void setup_routes();
  void record_request(std::size_t items, double latency_ms);

  ServiceConfig config_;
  Scorer scorer_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int bound_port_ = -1;

  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> items_scored_{0};
  std::atomic<std::uint64_t> latency_us_total_{0};
};

}  // namespace sqlreward

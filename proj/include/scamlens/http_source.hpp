#pragma once

// Report source backed by an HTTP endpoint. Kept out of ingest.hpp so that
// consumers without networking needs do not pull in cpp-httplib.

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "scamlens/ingest.hpp"

namespace scamlens::ingest {

struct HttpEndpoint {
  std::string host = "127.0.0.1";
  int port = 80;
  std::string path_prefix = "/";  // GET <prefix><address>.json
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};  // doubled after each failure
  std::chrono::milliseconds min_interval{0};        // rate limit between requests
  std::chrono::milliseconds timeout{5000};
};

class HttpSource final : public ReportSource {
 public:
  explicit HttpSource(HttpEndpoint endpoint, RetryPolicy policy = {})
      : endpoint_(std::move(endpoint)), policy_(policy) {}

  /// 404 maps to NotFound; transport errors and 5xx are retried with
  /// exponential backoff and raise SourceUnavailable once exhausted.
  std::optional<AddressHistory> fetch(const std::string& address) override {
    std::lock_guard lock(mutex_);
    const std::string path = endpoint_.path_prefix + address + ".json";
    auto backoff = policy_.initial_backoff;
    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < policy_.attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      throttle();
      httplib::Client client(endpoint_.host, endpoint_.port);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      auto res = client.Get(path);
      last_request_ = std::chrono::steady_clock::now();
      ++requests_made_;
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 404) return std::nullopt;
      if (res->status >= 200 && res->status < 300) return parse_address_report(res->body);
      last_error = "HTTP status " + std::to_string(res->status);
      if (res->status < 500) break;
    }
    throw Error("ingest", ErrorKind::SourceUnavailable,
                endpoint_.host + ":" + std::to_string(endpoint_.port) + path + " (" + last_error + ")");
  }

  int requests_made() const {
    std::lock_guard lock(mutex_);
    return requests_made_;
  }

 private:
  void throttle() {
    if (policy_.min_interval.count() <= 0 || requests_made_ == 0) return;
    const auto next = last_request_ + policy_.min_interval;
    const auto now = std::chrono::steady_clock::now();
    if (now < next) std::this_thread::sleep_for(next - now);
  }

  HttpEndpoint endpoint_;
  RetryPolicy policy_;
  mutable std::mutex mutex_;
  std::chrono::steady_clock::time_point last_request_{};
  int requests_made_ = 0;
};

}  // namespace scamlens::ingest

#pragma once

// Include after any Eigen header: <resolv.h> (pulled in by httplib) defines _res.
#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace lawkit::testing {

inline std::string completion_json(const std::string& content) {
  nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                      {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 7}}}};
  return j.dump();
}

// Loopback chat-completions endpoint with scripted status codes.
struct StubServer {
  httplib::Server svr;
  std::thread th;
  int port = 0;
  std::atomic<int> hits{0};
  std::vector<int> statuses;  // per hit; 200 after the list runs out
  std::string content;

  StubServer() {
    svr.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int k = hits++;
      const int st = k < static_cast<int>(statuses.size()) ? statuses[static_cast<std::size_t>(k)] : 200;
      res.status = st;
      (void)nlohmann::json::parse(req.body).at("messages");
      if (st == 200) res.set_content(completion_json(content), "application/json");
      else res.set_content("{\"error\":\"busy\"}", "application/json");
    });
    port = svr.bind_to_any_port("127.0.0.1");
    th = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~StubServer() {
    svr.stop();
    th.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
};

}  // namespace lawkit::testing

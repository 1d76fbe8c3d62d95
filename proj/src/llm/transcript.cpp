#include "lawkit/llm/transcript.hpp"

#include <chrono>
#include <ctime>

#include "lawkit/util/digest.hpp"

namespace lawkit::llm {

using nlohmann::json;

OperatorTranscript::OperatorTranscript(const OperatorTranscript& o) : entries_(o.entries()) {}

OperatorTranscript& OperatorTranscript::operator=(const OperatorTranscript& o) {
  if (this == &o) return *this;
  auto copy = o.entries();
  std::lock_guard lk(mu_);
  entries_ = std::move(copy);
  return *this;
}

void OperatorTranscript::append(TranscriptEntry e) {
  std::lock_guard lk(mu_);
  entries_.push_back(std::move(e));
}

std::vector<TranscriptEntry> OperatorTranscript::entries() const {
  std::lock_guard lk(mu_);
  return entries_;
}

std::size_t OperatorTranscript::size() const {
  std::lock_guard lk(mu_);
  return entries_.size();
}

std::string OperatorTranscript::digest() const {
  json arr = json::array();
  for (const auto& e : entries()) {
    arr.push_back({{"kind", e.kind},
                   {"prompt_digest", e.prompt_digest},
                   {"responses", e.responses},
                   {"sources", e.sources},
                   {"repair_attempts", e.repair_attempts}});
  }
  return util::sha256_hex(arr.dump());
}

json OperatorTranscript::to_json() const {
  json arr = json::array();
  for (const auto& e : entries()) {
    json b = json::array();
    for (const auto& r : e.backoffs)
      b.push_back({{"attempt", r.attempt}, {"status", r.status}, {"delay_s", r.delay_s}, {"reason", r.reason}});
    arr.push_back({{"kind", e.kind},
                   {"prompt_digest", e.prompt_digest},
                   {"responses", e.responses},
                   {"sources", e.sources},
                   {"repair_attempts", e.repair_attempts},
                   {"backoffs", b},
                   {"timestamp", e.timestamp},
                   {"prompt_tokens", e.prompt_tokens},
                   {"completion_tokens", e.completion_tokens},
                   {"from_cache", e.from_cache}});
  }
  return {{"entries", arr}, {"digest", digest()}};
}

OperatorTranscript OperatorTranscript::from_json(const json& j) {
  OperatorTranscript t;
  for (const auto& x : j.at("entries")) {
    TranscriptEntry e;
    e.kind = x.at("kind").get<std::string>();
    e.prompt_digest = x.at("prompt_digest").get<std::string>();
    e.responses = x.at("responses").get<std::vector<std::string>>();
    e.sources = x.at("sources").get<std::vector<std::string>>();
    e.repair_attempts = x.value("repair_attempts", 0);
    for (const auto& b : x.value("backoffs", json::array()))
      e.backoffs.push_back({b.at("attempt").get<int>(), b.at("status").get<int>(),
                            b.at("delay_s").get<double>(), b.value("reason", "")});
    e.timestamp = x.value("timestamp", "");
    e.prompt_tokens = x.value("prompt_tokens", 0);
    e.completion_tokens = x.value("completion_tokens", 0);
    e.from_cache = x.value("from_cache", false);
    t.entries_.push_back(std::move(e));
  }
  return t;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lawkit::llm

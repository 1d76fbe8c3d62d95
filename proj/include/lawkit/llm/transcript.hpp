#pragma once

#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace lawkit::llm {

struct BackoffRecord {
  int attempt = 0;
  int status = 0;  // HTTP status, 0 for transport errors
  double delay_s = 0.0;
  std::string reason;
};

struct TranscriptEntry {
  std::string kind;  // "propose", "repair", "more"
  std::string prompt_digest;
  std::vector<std::string> responses;
  std::vector<std::string> sources;
  int repair_attempts = 0;
  std::vector<BackoffRecord> backoffs;
  std::string timestamp;  // ISO 8601 UTC
  int prompt_tokens = 0;
  int completion_tokens = 0;
  bool from_cache = false;
};

/// Append-only log of operator calls; safe to append from several threads.
class OperatorTranscript {
 public:
  OperatorTranscript() = default;
  OperatorTranscript(const OperatorTranscript& o);
  OperatorTranscript& operator=(const OperatorTranscript& o);

  void append(TranscriptEntry e);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;

  /// Covers kinds, prompt digests, responses and sources; timestamps,
  /// token counts and backoff timing are excluded so record and replay agree.
  std::string digest() const;

  nlohmann::json to_json() const;
  static OperatorTranscript from_json(const nlohmann::json& j);

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

std::string utc_timestamp();

}  // namespace lawkit::llm

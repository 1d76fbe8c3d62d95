#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <thread>

#include "lawkit/llm/operator.hpp"

// after Eigen: <resolv.h> defines a _res macro
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace lawkit::llm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto s = url.find("://");
  if (s == std::string::npos) throw OperatorUnavailable("endpoint '" + url + "' has no scheme");
  const auto p = url.find('/', s + 3);
  if (p == std::string::npos) return {url, "/"};
  return {url.substr(0, p), url.substr(p)};
}

}  // namespace

std::string cache_path(const std::string& dir, const std::string& digest) {
  return (fs::path(dir) / (digest + ".json")).string();
}

struct LiveOperator::Impl {
  explicit Impl(int slots) : sem(std::max(1, slots)) {}
  std::counting_semaphore<1024> sem;
  std::mutex mu;
  std::chrono::steady_clock::time_point not_before{};  // shared rate-limit pause
  int calls = 0;
};

LiveOperator::LiveOperator(LiveConfig cfg) : impl_(new Impl(cfg.max_in_flight)), cfg_(std::move(cfg)) {}

LiveOperator::~LiveOperator() { delete impl_; }

int LiveOperator::network_calls() const {
  std::lock_guard lk(impl_->mu);
  return impl_->calls;
}

LiveResponse LiveOperator::propose_live(const PromptBundle& bundle) {
  const std::string digest = bundle.digest();
  const bool use_cache = cfg_.cache_mode != CacheMode::Off && !cfg_.cache_dir.empty();
  if (use_cache) {
    std::ifstream in(cache_path(cfg_.cache_dir, digest));
    if (in) {
      json j = json::parse(in);
      LiveResponse r;
      r.text = j.at("text").get<std::string>();
      r.prompt_tokens = j.value("prompt_tokens", 0);
      r.completion_tokens = j.value("completion_tokens", 0);
      r.from_cache = true;
      return r;
    }
  }
  if (cfg_.cache_mode == CacheMode::Replay)
    throw CacheMiss("no cached response for prompt " + digest.substr(0, 12));

  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw AuthError("environment variable " + cfg_.api_key_env + " is not set");

  const Url url = split_url(cfg_.endpoint);
  json body = {{"model", cfg_.model},
               {"temperature", cfg_.temperature},
               {"messages", json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                         {{"role", "user"}, {"content", bundle.user_text}}})}};
  const std::string payload = body.dump();
  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

  LiveResponse r;
  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    {
      std::unique_lock lk(impl_->mu);
      auto wait = impl_->not_before - std::chrono::steady_clock::now();
      lk.unlock();
      if (wait > std::chrono::steady_clock::duration::zero()) std::this_thread::sleep_for(wait);
    }
    int status = 0;
    std::string text;
    {
      impl_->sem.acquire();
      httplib::Client cli(url.origin);
      cli.set_connection_timeout(cfg_.timeout_s, 0);
      cli.set_read_timeout(cfg_.timeout_s, 0);
      cli.set_write_timeout(cfg_.timeout_s, 0);
      {
        std::lock_guard lk(impl_->mu);
        ++impl_->calls;
      }
      auto res = cli.Post(url.path, headers, payload, "application/json");
      impl_->sem.release();
      if (res) {
        status = res->status;
        text = res->body;
      } else {
        last_error = "transport error: " + httplib::to_string(res.error());
      }
    }
    if (status == 200) {
      json j;
      try {
        j = json::parse(text);
        r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& e) {
        throw OperatorUnavailable(std::string("malformed completion response: ") + e.what());
      }
      if (j.contains("usage")) {
        r.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        r.completion_tokens = j["usage"].value("completion_tokens", 0);
      }
      if (use_cache) {
        fs::create_directories(cfg_.cache_dir);
        std::ofstream out(cache_path(cfg_.cache_dir, digest));
        out << json{{"digest", digest},
                    {"text", r.text},
                    {"prompt_tokens", r.prompt_tokens},
                    {"completion_tokens", r.completion_tokens}}
                   .dump(1);
      }
      return r;
    }
    if (status == 401 || status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    const bool retry = status == 0 || status == 429 || status >= 500;
    if (status != 0) last_error = "HTTP " + std::to_string(status);
    if (!retry) throw OperatorUnavailable("endpoint returned " + last_error);
    if (attempt == cfg_.max_attempts) break;
    const double delay = cfg_.backoff_base_s * std::pow(2.0, attempt - 1);
    r.backoffs.push_back({attempt, status, delay, last_error});
    {
      std::lock_guard lk(impl_->mu);
      auto until = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(delay));
      if (status == 429) impl_->not_before = std::max(impl_->not_before, until);
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
  }
  throw OperatorUnavailable("giving up after " + std::to_string(cfg_.max_attempts) + " attempts: " + last_error);
}

LiveResponse LiveOperator::complete(const PromptBundle& bundle, const std::string& kind,
                                    std::vector<std::string>* sources, int max_blocks) {
  auto r = propose_live(bundle);
  TranscriptEntry e;
  e.kind = kind;
  e.prompt_digest = bundle.digest();
  e.responses = {r.text};
  try {
    e.sources = extract_offspring(r.text, max_blocks);
  } catch (const NoBlocksFound&) {
  }
  e.backoffs = r.backoffs;
  e.timestamp = utc_timestamp();
  e.prompt_tokens = r.prompt_tokens;
  e.completion_tokens = r.completion_tokens;
  e.from_cache = r.from_cache;
  if (sources) *sources = e.sources;
  transcript_.append(std::move(e));
  return r;
}

std::vector<std::string> LiveOperator::propose(const ProposalRequest& req) {
  auto bundle = build_prompt(req.parents, req.phase, req.offspring, cfg_.prompt);
  std::vector<std::string> out;
  complete(bundle, "propose", &out, req.offspring);
  const int missing = req.offspring - static_cast<int>(out.size());
  if (missing > 0) {
    std::vector<std::string> more;
    complete(build_more_prompt(bundle, missing), "more", &more, missing);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::string LiveOperator::repair(const RepairRequest& req) {
  auto bundle = build_repair_prompt(req.source, req.error, req.phase);
  std::vector<std::string> out;
  auto r = complete(bundle, "repair", &out, 1);
  return out.empty() ? r.text : out.front();
}

}  // namespace lawkit::llm

#pragma once

// Chat-completion client: pluggable backend, response cache, retries with exponential
// backoff, a token-bucket rate limiter, and in-flight de-duplication of identical requests.

#include "mcjudge/criteria.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace mcjudge {

struct ChatRequest {
    std::string model_id;
    std::string system_message;
    std::string user_message;
    double temperature = 0.0;
    int max_tokens = 100;
};

/// Throws ValidationError for negative temperature, max_tokens < 1, or an empty model id.
void validate(const ChatRequest& request);

ChatRequest make_request(const PromptPair& prompt, std::string model_id, double temperature = 0.0,
                         int max_tokens = 100);

/// Cache key: SHA-256 over every field of the request.
std::string cache_key(const ChatRequest& request);

/// SHA-256 over the two prompt messages only; stored with every grade for audit.
std::string prompt_digest(std::string_view system_message, std::string_view user_message);
std::string prompt_digest(const PromptPair& prompt);

struct ChatResponse {
    std::string raw_text;
    std::string model_id;
    bool cached = false;
    int attempts = 0;  ///< backend calls made for this response; 0 on a cache hit
};

/// Transport to a model. Implementations throw TransportError (retryable), ProtocolError
/// (retryable for 408/429/5xx), DecodeError, or ScriptedMissError.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string send(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30'000};

    /// Delay before attempt `attempt + 1`, given `attempt` >= 1 failures so far.
    std::chrono::milliseconds backoff(int attempt) const;
};

bool is_retryable(const std::exception& error);

/// Token bucket. A rate <= 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second, double burst = 1.0);

    void acquire();
    double rate() const { return rate_; }

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

/// digest -> raw model text. Optionally backed by an append-only JSON-lines file
/// `{digest, model_id, raw_text, created_at}`; on load the last line for a digest wins.
class ResponseCache {
public:
    ResponseCache() = default;

    /// Loads `path` if it exists and appends new entries to it. Throws StoreLoadError on corrupt lines.
    explicit ResponseCache(std::string path);

    std::optional<std::string> get(const std::string& digest) const;

    /// Stores the entry once; returns false (and writes nothing) if the digest is already present.
    bool put(const std::string& digest, const std::string& model_id, const std::string& raw_text);

    std::size_t size() const;
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::unordered_map<std::string, std::string> entries_;
    mutable std::mutex mutex_;
};

struct ClientOptions {
    RetryPolicy retry;
    double requests_per_second = 5.0;
};

/// Thread-safe. Concurrent identical requests share one backend call.
class ChatClient {
public:
    struct Stats {
        std::size_t requests = 0;
        std::size_t cache_hits = 0;
        std::size_t backend_calls = 0;
        std::size_t retries = 0;
    };

    explicit ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions options = {},
                        std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>());

    ChatResponse complete(const ChatRequest& request);

    Stats stats() const;
    ResponseCache& cache() { return *cache_; }

private:
    std::pair<std::string, int> call_with_retry(const ChatRequest& request);

    std::shared_ptr<ChatBackend> backend_;
    ClientOptions options_;
    std::shared_ptr<ResponseCache> cache_;
    RateLimiter limiter_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_future<std::string>> in_flight_;

    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> cache_hits_{0};
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> retries_{0};
};

/// First standalone integer token of `raw_text` in [0, scale_max], scanning left to right.
/// Tokens are maximal digit runs, so "10" never yields 1 or 0. nullopt when nothing qualifies.
std::optional<int> extract_grade(std::string_view raw_text, int scale_max = 3);

}  // namespace mcjudge

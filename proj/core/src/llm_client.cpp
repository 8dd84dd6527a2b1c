#include "mcjudge/llm_client.hpp"

#include "mcjudge/digest.hpp"
#include "mcjudge/error.hpp"
#include "mcjudge/grade_records.hpp"
#include "mcjudge/trec_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace mcjudge {

using nlohmann::json;

void validate(const ChatRequest& request)
{
    if (request.model_id.empty()) {
        throw ValidationError("chat request needs a model id");
    }
    if (!(request.temperature >= 0.0)) {
        throw ValidationError("temperature must be >= 0");
    }
    if (request.max_tokens < 1) {
        throw ValidationError("max_tokens must be >= 1");
    }
}

ChatRequest make_request(const PromptPair& prompt, std::string model_id, double temperature, int max_tokens)
{
    ChatRequest req;
    req.model_id = std::move(model_id);
    req.system_message = prompt.system_message;
    req.user_message = prompt.user_message;
    req.temperature = temperature;
    req.max_tokens = max_tokens;
    return req;
}

std::string cache_key(const ChatRequest& request)
{
    char temp[64];
    auto res = std::to_chars(temp, temp + sizeof(temp), request.temperature);
    const std::string tokens = std::to_string(request.max_tokens);
    return digest_fields({request.model_id, request.system_message, request.user_message,
                          std::string_view(temp, static_cast<std::size_t>(res.ptr - temp)), tokens});
}

std::string prompt_digest(std::string_view system_message, std::string_view user_message)
{
    return digest_fields({system_message, user_message});
}

std::string prompt_digest(const PromptPair& prompt)
{
    return prompt_digest(prompt.system_message, prompt.user_message);
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const
{
    const double scaled = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 1);
    const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<long long>(capped));
}

bool is_retryable(const std::exception& error)
{
    if (dynamic_cast<const TransportError*>(&error) != nullptr) {
        return true;
    }
    if (const auto* proto = dynamic_cast<const ProtocolError*>(&error)) {
        const int s = proto->status();
        return s == 408 || s == 429 || (s >= 500 && s <= 599);
    }
    return false;
}

RateLimiter::RateLimiter(double requests_per_second, double burst)
    : rate_(requests_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now())
{
}

void RateLimiter::acquire()
{
    if (rate_ <= 0.0) {
        return;
    }
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        std::this_thread::sleep_for(wait);
    }
}

ResponseCache::ResponseCache(std::string path) : path_(std::move(path))
{
    if (path_.empty() || !std::filesystem::exists(path_)) {
        return;
    }
    const std::string text = detail::read_file(path_);
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::split_fields(lines[i]).empty()) {
            continue;
        }
        try {
            const json j = json::parse(lines[i]);
            entries_[j.at("digest").get<std::string>()] = j.at("raw_text").get<std::string>();
        } catch (const json::exception& e) {
            throw StoreLoadError(path_ + ": line " + std::to_string(i + 1) + ": corrupt cache entry: " + e.what());
        }
    }
}

std::optional<std::string> ResponseCache::get(const std::string& digest) const
{
    std::lock_guard lock(mutex_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool ResponseCache::put(const std::string& digest, const std::string& model_id, const std::string& raw_text)
{
    std::lock_guard lock(mutex_);
    if (entries_.count(digest) != 0) {
        return false;
    }
    if (!path_.empty()) {
        const json j = {{"digest", digest}, {"model_id", model_id}, {"raw_text", raw_text},
                        {"created_at", utc_timestamp()}};
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) {
            throw Error("cannot append to response cache " + path_);
        }
        out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
        out.flush();
    }
    entries_.emplace(digest, raw_text);
    return true;
}

std::size_t ResponseCache::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions options,
                       std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)),
      options_(options),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      limiter_(options.requests_per_second)
{
    if (!backend_) {
        throw ConfigError("chat client needs a backend");
    }
    if (options_.retry.max_attempts < 1) {
        throw ConfigError("retry policy needs at least one attempt");
    }
}

ChatResponse ChatClient::complete(const ChatRequest& request)
{
    validate(request);
    ++requests_;
    const std::string key = cache_key(request);

    std::unique_lock lock(mutex_);
    if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        return {std::move(*hit), request.model_id, true, 0};
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
        auto shared = it->second;
        lock.unlock();
        std::string text = shared.get();
        ++cache_hits_;
        return {std::move(text), request.model_id, true, 0};
    }
    std::promise<std::string> promise;
    in_flight_.emplace(key, promise.get_future().share());
    lock.unlock();

    try {
        auto [text, attempts] = call_with_retry(request);
        cache_->put(key, request.model_id, text);
        promise.set_value(text);
        lock.lock();
        in_flight_.erase(key);
        return {std::move(text), request.model_id, false, attempts};
    } catch (...) {
        promise.set_exception(std::current_exception());
        lock.lock();
        in_flight_.erase(key);
        throw;
    }
}

std::pair<std::string, int> ChatClient::call_with_retry(const ChatRequest& request)
{
    const RetryPolicy& policy = options_.retry;
    for (int attempt = 1;; ++attempt) {
        limiter_.acquire();
        ++backend_calls_;
        try {
            return {backend_->send(request), attempt};
        } catch (const std::exception& e) {
            if (!is_retryable(e) || attempt >= policy.max_attempts) {
                throw;
            }
        }
        ++retries_;
        std::this_thread::sleep_for(policy.backoff(attempt));
    }
}

ChatClient::Stats ChatClient::stats() const
{
    return {requests_.load(), cache_hits_.load(), backend_calls_.load(), retries_.load()};
}

std::optional<int> extract_grade(std::string_view raw_text, int scale_max)
{
    std::size_t i = 0;
    while (i < raw_text.size()) {
        if (raw_text[i] < '0' || raw_text[i] > '9') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < raw_text.size() && raw_text[i] >= '0' && raw_text[i] <= '9') {
            ++i;
        }
        long long value = 0;
        auto [ptr, ec] = std::from_chars(raw_text.data() + start, raw_text.data() + i, value);
        if (ec == std::errc() && value >= 0 && value <= scale_max) {
            return static_cast<int>(value);
        }
    }
    return std::nullopt;
}

}  // namespace mcjudge

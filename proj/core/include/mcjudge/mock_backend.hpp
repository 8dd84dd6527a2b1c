#pragma once

#include "mcjudge/criteria.hpp"
#include "mcjudge/llm_client.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcjudge {

/// Deterministic offline backend. Lookup order: exact prompt digest, then rules in
/// insertion order (first non-empty answer wins), then the default text.
/// Configure before sharing across threads; send() is thread-safe.
class MockBackend : public ChatBackend {
public:
    using Rule = std::function<std::optional<std::string>(const ChatRequest&)>;

    /// Every request answered with `text`.
    static std::shared_ptr<MockBackend> always(std::string text);

    MockBackend& respond(std::string prompt_digest, std::string text);
    MockBackend& add_rule(Rule rule);
    MockBackend& set_default(std::string text);

    /// After `calls` successful answers every further call throws TransportError.
    MockBackend& fail_after(std::size_t calls);

    /// Sleeps this long inside every send().
    MockBackend& set_delay(std::chrono::milliseconds delay);

    std::string send(const ChatRequest& request) override;

    std::size_t calls() const { return calls_.load(); }

private:
    std::map<std::string, std::string> responses_;
    std::vector<Rule> rules_;
    std::optional<std::string> default_;
    std::optional<std::size_t> fail_after_;
    std::chrono::milliseconds delay_{0};
    std::atomic<std::size_t> calls_{0};
};

/// Adapts a rule over decoded prompt fields; prompts the criteria set does not recognise
/// fall through (nullopt).
MockBackend::Rule field_rule(CriteriaSet criteria, std::function<std::optional<std::string>(const PromptFields&)> rule);

/// JSON mock script:
///
///   { "default": "0",
///     "responses": { "<prompt_hash>": "2", ... },
///     "rules": [ { "kind": "criterion|aggregation|direct", "criterion": "<key>",
///                  "query": "...", "passage": "...", "response": "2" },
///                { "kind": "aggregation", "echo": "<criterion key>" } ],
///     "fail_after": 40, "delay_ms": 5 }
///
/// Every rule field is optional and acts as a filter; "echo" answers with that criterion's
/// grade from an aggregation prompt.
std::shared_ptr<MockBackend> parse_mock_script(std::string_view json_text, const CriteriaSet& criteria);
std::shared_ptr<MockBackend> load_mock_script(const std::string& path, const CriteriaSet& criteria);

}  // namespace mcjudge

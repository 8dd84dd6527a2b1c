#include "mcjudge/mock_backend.hpp"

#include "mcjudge/error.hpp"
#include "mcjudge/trec_io.hpp"

#include <thread>

#include <json.hpp>

namespace mcjudge {

std::shared_ptr<MockBackend> MockBackend::always(std::string text)
{
    auto mock = std::make_shared<MockBackend>();
    mock->set_default(std::move(text));
    return mock;
}

MockBackend& MockBackend::respond(std::string prompt_digest, std::string text)
{
    responses_[std::move(prompt_digest)] = std::move(text);
    return *this;
}

MockBackend& MockBackend::add_rule(Rule rule)
{
    rules_.push_back(std::move(rule));
    return *this;
}

MockBackend& MockBackend::set_default(std::string text)
{
    default_ = std::move(text);
    return *this;
}

MockBackend& MockBackend::fail_after(std::size_t calls)
{
    fail_after_ = calls;
    return *this;
}

MockBackend& MockBackend::set_delay(std::chrono::milliseconds delay)
{
    delay_ = delay;
    return *this;
}

std::string MockBackend::send(const ChatRequest& request)
{
    const std::size_t n = calls_.fetch_add(1);
    if (fail_after_ && n >= *fail_after_) {
        throw TransportError("mock backend: simulated connection failure after " + std::to_string(*fail_after_)
                             + " calls");
    }
    if (delay_.count() > 0) {
        std::this_thread::sleep_for(delay_);
    }
    if (!responses_.empty()) {
        auto it = responses_.find(prompt_digest(request.system_message, request.user_message));
        if (it != responses_.end()) {
            return it->second;
        }
    }
    for (const auto& rule : rules_) {
        if (auto answer = rule(request)) {
            return *answer;
        }
    }
    if (default_) {
        return *default_;
    }
    throw ScriptedMissError("mock backend has no answer for prompt "
                            + prompt_digest(request.system_message, request.user_message));
}

MockBackend::Rule field_rule(CriteriaSet criteria, std::function<std::optional<std::string>(const PromptFields&)> rule)
{
    return [criteria = std::move(criteria), rule = std::move(rule)](const ChatRequest& req) -> std::optional<std::string> {
        auto fields = parse_rendered_prompt({req.system_message, req.user_message}, criteria);
        if (!fields) {
            return std::nullopt;
        }
        return rule(*fields);
    };
}

std::shared_ptr<MockBackend> parse_mock_script(std::string_view json_text, const CriteriaSet& criteria)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock script is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("mock script must be a JSON object");
    }
    auto mock = std::make_shared<MockBackend>();
    try {
        if (doc.contains("default")) {
            mock->set_default(doc["default"].get<std::string>());
        }
        if (doc.contains("responses")) {
            for (const auto& [digest, text] : doc["responses"].items()) {
                mock->respond(digest, text.get<std::string>());
            }
        }
        if (doc.contains("fail_after")) {
            mock->fail_after(doc["fail_after"].get<std::size_t>());
        }
        if (doc.contains("delay_ms")) {
            mock->set_delay(std::chrono::milliseconds(doc["delay_ms"].get<long>()));
        }
        if (doc.contains("rules")) {
            for (const auto& r : doc["rules"]) {
                std::optional<PromptKind> kind;
                if (r.contains("kind")) {
                    const auto k = r["kind"].get<std::string>();
                    if (k == "criterion") {
                        kind = PromptKind::criterion;
                    } else if (k == "aggregation") {
                        kind = PromptKind::aggregation;
                    } else if (k == "direct") {
                        kind = PromptKind::direct;
                    } else {
                        throw ConfigError("unknown mock rule kind " + k);
                    }
                }
                auto opt = [&](const char* name) -> std::optional<std::string> {
                    if (!r.contains(name)) {
                        return std::nullopt;
                    }
                    return r[name].get<std::string>();
                };
                const auto criterion = opt("criterion");
                const auto query = opt("query");
                const auto passage = opt("passage");
                const auto response = opt("response");
                const auto echo = opt("echo");
                if (criterion) {
                    criteria.at(*criterion);
                }
                if (echo) {
                    criteria.at(*echo);
                }
                if (!response && !echo) {
                    throw ConfigError("mock rule needs \"response\" or \"echo\"");
                }
                mock->add_rule(field_rule(criteria, [=](const PromptFields& f) -> std::optional<std::string> {
                    if (kind && f.kind != *kind) return std::nullopt;
                    if (criterion && f.criterion_key != *criterion) return std::nullopt;
                    if (query && f.query != *query) return std::nullopt;
                    if (passage && f.passage != *passage) return std::nullopt;
                    if (echo) {
                        auto it = f.grades.find(*echo);
                        if (it == f.grades.end()) return std::nullopt;
                        return std::to_string(it->second);
                    }
                    return response;
                }));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    } catch (const SpecError& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    }
    return mock;
}

std::shared_ptr<MockBackend> load_mock_script(const std::string& path, const CriteriaSet& criteria)
{
    return parse_mock_script(detail::read_file(path), criteria);
}

}  // namespace mcjudge

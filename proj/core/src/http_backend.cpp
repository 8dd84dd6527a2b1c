#include "mcjudge/http_backend.hpp"

#include "mcjudge/error.hpp"

#include <httplib.h>
#include <json.hpp>

namespace mcjudge {

using nlohmann::json;

namespace {

constexpr std::size_t kExcerpt = 300;

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config))
{
    const std::string& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must start with http:// or https://: " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported endpoint scheme " + scheme);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    base_url_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!path.empty() && path.back() == '/') {
        path.pop_back();
    }
    if (path.empty()) {
        path = "/v1";
    }
    constexpr std::string_view suffix = "/chat/completions";
    if (!std::string_view(path).ends_with(suffix)) {
        path += suffix;
    }
    path_ = std::move(path);
    if (base_url_.size() <= scheme_end + 3) {
        throw ConfigError("endpoint has no host: " + url);
    }
}

std::string HttpChatBackend::send(const ChatRequest& request)
{
    httplib::Client client(base_url_);
    const auto timeout = config_.timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto res = client.Post(path_, headers, build_chat_payload(request), "application/json");
    if (!res) {
        throw TransportError("request to " + base_url_ + path_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProtocolError(res->status, res->body.substr(0, kExcerpt));
    }
    return parse_chat_response(res->body);
}

std::string build_chat_payload(const ChatRequest& request)
{
    const json payload = {
        {"model", request.model_id},
        {"messages",
         json::array({
             {{"role", "system"}, {"content", request.system_message}},
             {{"role", "user"}, {"content", request.user_message}},
         })},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    return payload.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string parse_chat_response(std::string_view body)
{
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw DecodeError(std::string("response is not JSON: ") + e.what());
    }
    try {
        const auto& choices = doc.at("choices");
        if (!choices.is_array() || choices.empty()) {
            throw DecodeError("response has no choices");
        }
        const auto& content = choices.at(0).at("message").at("content");
        if (content.is_null()) {
            return {};
        }
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw DecodeError(std::string("unexpected response shape: ") + e.what());
    }
}

}  // namespace mcjudge

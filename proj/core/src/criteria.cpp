#include "mcjudge/criteria.hpp"

#include "mcjudge/error.hpp"
#include "mcjudge/trec_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <json.hpp>

namespace mcjudge {

namespace {

constexpr std::string_view kCriterionSystem =
    "Please assess how well the provided passage meets specific criteria in relation to the query. "
    "Use the following scoring scale (0-3) for evaluation:\n"
    "\n"
    "0: Not relevant at all / No information provided.\n"
    "\n"
    "1: Marginally relevant / Partially addresses the criterion.\n"
    "\n"
    "2: Fairly relevant / Adequately addresses the criterion.\n"
    "\n"
    "3: Highly relevant / Fully satisfies the criterion.";

constexpr std::string_view kRelevanceSystem =
    "You are a search quality rater evaluating the relevance of passages. Given a query and passage, "
    "you must provide a score on an integer scale of 0 to 3 with the following meanings:\n"
    "\n"
    "3 = Perfectly relevant: The passage is dedicated to the query and contains the exact answer.\n"
    "\n"
    "2 = Highly relevant: The passage has some answer for the query, but the answer may be a bit unclear, "
    "or hidden amongst extraneous information.\n"
    "\n"
    "1 = Related: The passage seems related to the query but does not answer it.\n"
    "\n"
    "0 = Irrelevant: The passage has nothing to do with the query.\n"
    "\n"
    "Assume that you are writing an answer to the query. If the passage seems to be related to the query "
    "but does not include any answer to the query, mark it 1. If you would use any of the information "
    "contained in the passage in such an answer, mark it 2. If the passage is primarily about the query, "
    "or contains vital information about the topic, mark it 3. Otherwise, mark it 0.";

constexpr std::string_view kAggregationClosing =
    "Please rate how the given passage is relevant to the query based on the given scores. "
    "The output must be only a score (0-3) that indicates how relevant they are.";

constexpr std::string_view kDirectClosing =
    "Please rate how the given passage is relevant to the query. "
    "The output must be only a score (0-3) that indicates how relevant they are.";

constexpr std::string_view kScoreLine = "Score:";
constexpr std::string_view kBlock = "\n\n";

void require_text(std::string_view value, const char* what)
{
    const bool blank = std::all_of(value.begin(), value.end(), [](unsigned char c) { return std::isspace(c); });
    if (blank) {
        throw ValidationError(std::string(what) + " must be non-empty");
    }
}

std::string criterion_head(const Criterion& c)
{
    std::string head = "Please rate how well the given passage meets the ";
    head += c.display_name;
    head += " criterion in relation to the query. The output should be a single score (0-3) indicating ";
    head += inline_description(c.description);
    head += '.';
    return head;
}

std::string query_passage_block(std::string_view query, std::string_view passage)
{
    std::string out = "Query: ";
    out += query;
    out += kBlock;
    out += "Passage: ";
    out += passage;
    return out;
}

bool split_query_passage(std::string_view body, PromptFields& fields)
{
    constexpr std::string_view query_tag = "Query: ";
    constexpr std::string_view passage_tag = "\n\nPassage: ";
    if (!body.starts_with(query_tag)) {
        return false;
    }
    body.remove_prefix(query_tag.size());
    const auto pos = body.find(passage_tag);
    if (pos == std::string_view::npos) {
        return false;
    }
    fields.query = std::string(body.substr(0, pos));
    fields.passage = std::string(body.substr(pos + passage_tag.size()));
    return true;
}

bool strip_suffix(std::string_view& text, std::string_view suffix)
{
    if (!text.ends_with(suffix)) {
        return false;
    }
    text.remove_suffix(suffix.size());
    return true;
}

}  // namespace

CriteriaSet::CriteriaSet(std::vector<Criterion> criteria) : criteria_(std::move(criteria))
{
    if (criteria_.empty()) {
        throw ValidationError("a criteria set needs at least one criterion");
    }
    std::set<std::string> keys;
    std::set<std::string> codes;
    for (const auto& c : criteria_) {
        if (c.key.empty() || c.display_name.empty() || c.description.empty()) {
            throw ValidationError("criterion key, display_name and description must be non-empty");
        }
        if (c.key.find_first_of(" \t\n,") != std::string::npos) {
            throw ValidationError("criterion key may not contain whitespace or commas: " + c.key);
        }
        if (!keys.insert(c.key).second) {
            throw ValidationError("duplicate criterion key " + c.key);
        }
        if (!c.code.empty() && !codes.insert(c.code).second) {
            throw ValidationError("duplicate criterion code " + c.code);
        }
    }
}

const Criterion* CriteriaSet::find(std::string_view key) const
{
    auto it = std::find_if(criteria_.begin(), criteria_.end(), [&](const Criterion& c) { return c.key == key; });
    return it == criteria_.end() ? nullptr : &*it;
}

const Criterion& CriteriaSet::at(std::string_view key) const
{
    const Criterion* c = find(key);
    if (c == nullptr) {
        throw SpecError("unknown criterion " + std::string(key));
    }
    return *c;
}

std::vector<std::string> CriteriaSet::keys() const
{
    std::vector<std::string> out;
    for (const auto& c : criteria_) {
        out.push_back(c.key);
    }
    return out;
}

CriteriaSet CriteriaSet::subset(const std::vector<std::string>& keys) const
{
    for (const auto& k : keys) {
        at(k);
    }
    std::vector<Criterion> picked;
    for (const auto& c : criteria_) {
        if (std::find(keys.begin(), keys.end(), c.key) != keys.end()) {
            picked.push_back(c);
        }
    }
    return CriteriaSet(std::move(picked));
}

CriteriaSet CriteriaSet::select(std::string_view spec) const
{
    auto by_token = [this](std::string_view token) -> const Criterion* {
        if (const Criterion* c = find(token)) {
            return c;
        }
        for (const auto& c : criteria_) {
            if (!c.code.empty() && c.code == token) {
                return &c;
            }
        }
        return nullptr;
    };

    std::vector<std::string> keys;
    if (spec.find(',') != std::string_view::npos) {
        std::size_t start = 0;
        while (start <= spec.size()) {
            auto end = spec.find(',', start);
            if (end == std::string_view::npos) {
                end = spec.size();
            }
            std::string_view token = spec.substr(start, end - start);
            while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
            while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
            const Criterion* c = by_token(token);
            if (c == nullptr) {
                throw SpecError("unknown criterion '" + std::string(token) + "' in subset " + std::string(spec));
            }
            keys.push_back(c->key);
            start = end + 1;
        }
    } else if (const Criterion* c = by_token(spec)) {
        keys.push_back(c->key);
    } else {
        // Concatenated one-letter codes, e.g. "TCF".
        for (char ch : spec) {
            const Criterion* letter = by_token(std::string_view(&ch, 1));
            if (letter == nullptr) {
                throw SpecError("unknown criterion subset " + std::string(spec));
            }
            keys.push_back(letter->key);
        }
    }
    if (keys.empty()) {
        throw SpecError("empty criterion subset");
    }
    std::set<std::string> unique(keys.begin(), keys.end());
    if (unique.size() != keys.size()) {
        throw SpecError("criterion listed twice in subset " + std::string(spec));
    }
    return subset(keys);
}

CriteriaSet default_criteria()
{
    return CriteriaSet({
        {"exactness", "Exactness", "How precisely does the passage answer the query?", "E"},
        {"topicality", "Topicality",
         "Is the passage about the same subject as the whole query (not only a single word of it)?", "T"},
        {"coverage", "Coverage", "How much of the passage is dedicated to discussing the query and its related topics?",
         "C"},
        {"contextual_fit", "Contextual Fit", "Does the passage provide relevant background or context?", "F"},
    });
}

CriteriaSet parse_criteria_json(std::string_view text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("criteria config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("criteria") || !doc["criteria"].is_array()) {
        throw ConfigError("criteria config needs a \"criteria\" array");
    }
    std::vector<Criterion> out;
    try {
        for (const auto& item : doc["criteria"]) {
            Criterion c;
            c.key = item.at("key").get<std::string>();
            c.display_name = item.at("display_name").get<std::string>();
            c.description = item.at("description").get<std::string>();
            c.code = item.value("code", std::string());
            out.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad criterion entry: ") + e.what());
    }
    try {
        return CriteriaSet(std::move(out));
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

CriteriaSet load_criteria_file(const std::string& path)
{
    return parse_criteria_json(detail::read_file(path));
}

std::string inline_description(std::string_view description)
{
    std::string out(description);
    while (!out.empty() && (out.back() == ' ' || out.back() == '?')) {
        out.pop_back();
    }
    if (!out.empty()) {
        out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
    }
    return out;
}

std::string_view criterion_system_message() { return kCriterionSystem; }
std::string_view relevance_system_message() { return kRelevanceSystem; }

PromptPair render_criterion_prompt(const Criterion& criterion, std::string_view query, std::string_view passage)
{
    require_text(query, "query");
    require_text(passage, "passage");
    std::string user = criterion_head(criterion);
    user += kBlock;
    user += query_passage_block(query, passage);
    user += kBlock;
    user += kScoreLine;
    return {std::string(kCriterionSystem), std::move(user)};
}

PromptPair render_aggregation_prompt(std::string_view query, std::string_view passage, const CriteriaSet& active,
                                     const CriterionGrades& grades)
{
    require_text(query, "query");
    require_text(passage, "passage");
    if (grades.empty()) {
        throw ValidationError("aggregation prompt needs at least one criterion grade");
    }
    for (const auto& [key, grade] : grades) {
        if (!active.contains(key)) {
            throw ValidationError("grade given for criterion outside the active set: " + key);
        }
        if (grade < kMinLabel || grade > kMaxLabel) {
            throw RangeError("grade " + std::to_string(grade) + " for " + key + " outside 0..3");
        }
    }
    std::string user = query_passage_block(query, passage);
    for (const auto& c : active) {
        auto it = grades.find(c.key);
        if (it == grades.end()) {
            throw ValidationError("missing grade for criterion " + c.key);
        }
        user += kBlock;
        user += c.display_name;
        user += ": ";
        user += std::to_string(it->second);
    }
    user += kBlock;
    user += kAggregationClosing;
    user += kBlock;
    user += kScoreLine;
    return {std::string(kRelevanceSystem), std::move(user)};
}

PromptPair render_direct_prompt(std::string_view query, std::string_view passage)
{
    require_text(query, "query");
    require_text(passage, "passage");
    std::string user = query_passage_block(query, passage);
    user += kBlock;
    user += kDirectClosing;
    user += kBlock;
    user += kScoreLine;
    return {std::string(kRelevanceSystem), std::move(user)};
}

std::optional<PromptFields> parse_rendered_prompt(const PromptPair& prompt, const CriteriaSet& criteria)
{
    std::string_view user = prompt.user_message;
    const std::string score_tail = std::string(kBlock) + std::string(kScoreLine);
    if (!strip_suffix(user, score_tail)) {
        return std::nullopt;
    }
    PromptFields fields;

    if (prompt.system_message == kCriterionSystem) {
        for (const auto& c : criteria) {
            const std::string head = criterion_head(c) + std::string(kBlock);
            if (user.starts_with(head)) {
                user.remove_prefix(head.size());
                if (!split_query_passage(user, fields)) {
                    return std::nullopt;
                }
                fields.kind = PromptKind::criterion;
                fields.criterion_key = c.key;
                return fields;
            }
        }
        return std::nullopt;
    }

    if (prompt.system_message != kRelevanceSystem) {
        return std::nullopt;
    }
    if (strip_suffix(user, std::string(kBlock) + std::string(kDirectClosing))) {
        fields.kind = PromptKind::direct;
        return split_query_passage(user, fields) ? std::optional(fields) : std::nullopt;
    }
    if (!strip_suffix(user, std::string(kBlock) + std::string(kAggregationClosing))) {
        return std::nullopt;
    }
    fields.kind = PromptKind::aggregation;
    // Grade lines follow criteria order, so peel them off the end in reverse order.
    const auto& list = criteria.criteria();
    for (auto it = list.rbegin(); it != list.rend(); ++it) {
        const std::string tag = std::string(kBlock) + it->display_name + ": ";
        if (user.size() < tag.size() + 1) {
            continue;
        }
        const char digit = user.back();
        if (digit < '0' || digit > '3') {
            continue;
        }
        std::string_view rest = user.substr(0, user.size() - 1);
        if (rest.ends_with(tag)) {
            fields.grades[it->key] = digit - '0';
            rest.remove_suffix(tag.size());
            user = rest;
        }
    }
    if (fields.grades.empty() || !split_query_passage(user, fields)) {
        return std::nullopt;
    }
    return fields;
}

}  // namespace mcjudge

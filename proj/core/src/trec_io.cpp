#include "mcjudge/trec_io.hpp"

#include "mcjudge/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace mcjudge {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

bool valid_token(std::string_view token)
{
    return !token.empty() && std::none_of(token.begin(), token.end(), [](char c) {
        return is_blank(c) || c == '\n';
    });
}

bool ranks_before(const RunEntry& a, const RunEntry& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

template <typename T>
std::optional<T> parse_number(std::string_view field)
{
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

namespace detail {

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_blank(line[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !is_blank(line[i])) {
            ++i;
        }
        if (i > start) {
            fields.push_back(line.substr(start, i - start));
        }
    }
    return fields;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace detail

void JudgmentSet::add(std::string query_id, std::string doc_id, int relevance)
{
    if (!valid_token(query_id) || !valid_token(doc_id)) {
        throw ValidationError("query and doc ids must be non-empty tokens without whitespace");
    }
    if (relevance < kMinLabel || relevance > kMaxLabel) {
        throw RangeError("relevance label " + std::to_string(relevance) + " outside 0..3 for (" + query_id
                         + ", " + doc_id + ")");
    }
    auto& labels = by_query_[query_id];
    auto [it, inserted] = labels.emplace(std::move(doc_id), relevance);
    if (!inserted) {
        throw DuplicateError(0, "duplicate judgment for (" + query_id + ", " + it->first + ")");
    }
    ++size_;
}

std::optional<int> JudgmentSet::label(std::string_view query_id, std::string_view doc_id) const
{
    const QueryLabels* labels = query(query_id);
    if (labels == nullptr) {
        return std::nullopt;
    }
    auto it = labels->find(doc_id);
    if (it == labels->end()) {
        return std::nullopt;
    }
    return it->second;
}

bool JudgmentSet::contains(std::string_view query_id, std::string_view doc_id) const
{
    return label(query_id, doc_id).has_value();
}

const QueryLabels* JudgmentSet::query(std::string_view query_id) const
{
    auto it = by_query_.find(query_id);
    return it == by_query_.end() ? nullptr : &it->second;
}

std::vector<QrelEntry> JudgmentSet::entries() const
{
    std::vector<QrelEntry> out;
    out.reserve(size_);
    for (const auto& [qid, labels] : by_query_) {
        for (const auto& [doc, rel] : labels) {
            out.push_back({qid, doc, rel});
        }
    }
    return out;
}

void Run::add(RunEntry entry)
{
    std::vector<RunEntry> one;
    one.push_back(std::move(entry));
    add_all(std::move(one));
}

void Run::add_all(std::vector<RunEntry> entries)
{
    std::map<std::string, std::unordered_set<std::string>> batch;
    for (const auto& entry : entries) {
        if (!valid_token(entry.query_id) || !valid_token(entry.doc_id)) {
            throw ValidationError("run entries need non-empty whitespace-free ids");
        }
        auto& docs = batch[entry.query_id];
        bool clash = !docs.insert(entry.doc_id).second;
        if (!clash) {
            auto it = by_query_.find(entry.query_id);
            clash = it != by_query_.end()
                    && std::any_of(it->second.begin(), it->second.end(),
                                   [&](const RunEntry& e) { return e.doc_id == entry.doc_id; });
        }
        if (clash) {
            throw ValidationError("duplicate doc " + entry.doc_id + " for query " + entry.query_id + " in run "
                                  + system_id_);
        }
    }
    for (auto& entry : entries) {
        entry.system_id = system_id_;
        by_query_[entry.query_id].push_back(std::move(entry));
    }
    for (const auto& [qid, docs] : batch) {
        auto& list = by_query_[qid];
        std::sort(list.begin(), list.end(), ranks_before);
    }
}

std::vector<std::string> Run::ranking(std::string_view query_id) const
{
    std::vector<std::string> docs;
    auto it = by_query_.find(query_id);
    if (it == by_query_.end()) {
        return docs;
    }
    docs.reserve(it->second.size());
    for (const auto& e : it->second) {
        docs.push_back(e.doc_id);
    }
    return docs;
}

std::size_t Run::size() const
{
    std::size_t n = 0;
    for (const auto& [qid, list] : by_query_) {
        n += list.size();
    }
    return n;
}

JudgmentSet parse_qrels(std::string_view text, JudgmentSource source)
{
    JudgmentSet out(source);
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto fields = detail::split_fields(lines[i]);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 fields `qid iter docid rel`, got " + std::to_string(fields.size()));
        }
        auto rel = parse_number<int>(fields[3]);
        if (!rel) {
            throw ParseError(line_no, "relevance is not an integer: " + std::string(fields[3]));
        }
        if (*rel < kMinLabel || *rel > kMaxLabel) {
            throw RangeError("line " + std::to_string(line_no) + ": relevance label " + std::to_string(*rel)
                             + " outside 0..3");
        }
        if (out.contains(fields[0], fields[2])) {
            throw DuplicateError(line_no, "duplicate judgment for (" + std::string(fields[0]) + ", "
                                              + std::string(fields[2]) + ")");
        }
        out.add(std::string(fields[0]), std::string(fields[2]), *rel);
    }
    return out;
}

std::string write_qrels(const JudgmentSet& judgments)
{
    std::string out;
    for (const auto& [qid, labels] : judgments.queries()) {
        for (const auto& [doc, rel] : labels) {
            out += qid;
            out += " 0 ";
            out += doc;
            out += ' ';
            out += std::to_string(rel);
            out += '\n';
        }
    }
    return out;
}

Run parse_run(std::string_view text, const std::string& system_id)
{
    Run run(system_id);
    std::vector<RunEntry> entries;
    std::unordered_set<std::string> seen;
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto fields = detail::split_fields(lines[i]);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 6) {
            throw ParseError(line_no,
                             "expected 6 fields `qid Q0 docid rank score tag`, got " + std::to_string(fields.size()));
        }
        auto rank = parse_number<long>(fields[3]);
        if (!rank || *rank < 1) {
            throw ParseError(line_no, "rank is not a positive integer: " + std::string(fields[3]));
        }
        auto score = parse_number<double>(fields[4]);
        if (!score || !std::isfinite(*score)) {
            throw ParseError(line_no, "score is not a finite number: " + std::string(fields[4]));
        }
        std::string key;
        key.reserve(fields[0].size() + fields[2].size() + 1);
        key.append(fields[0]).append(1, '\n').append(fields[2]);
        if (!seen.insert(std::move(key)).second) {
            throw DuplicateError(line_no, "duplicate doc " + std::string(fields[2]) + " for query "
                                              + std::string(fields[0]));
        }
        entries.push_back({std::string(fields[0]), std::string(fields[2]), *rank, *score, system_id});
    }
    run.add_all(std::move(entries));
    return run;
}

std::string write_run(const Run& run)
{
    std::string out;
    char buf[64];
    for (const auto& [qid, list] : run.queries()) {
        for (const auto& e : list) {
            auto res = std::to_chars(buf, buf + sizeof(buf), e.score);
            out += qid;
            out += " Q0 ";
            out += e.doc_id;
            out += ' ';
            out += std::to_string(e.rank);
            out += ' ';
            out.append(buf, res.ptr);
            out += ' ';
            out += run.system_id().empty() ? std::string("run") : run.system_id();
            out += '\n';
        }
    }
    return out;
}

JudgmentSet read_qrels_file(const std::string& path, JudgmentSource source)
{
    try {
        return parse_qrels(detail::read_file(path), source);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.what());
    }
}

Run read_run_file(const std::string& path, const std::string& system_id)
{
    return parse_run(detail::read_file(path), system_id);
}

Run read_run_file(const std::string& path)
{
    return read_run_file(path, std::filesystem::path(path).stem().string());
}

std::vector<Run> read_runs(const std::vector<std::string>& paths)
{
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> inside;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file()) {
                    inside.push_back(entry.path().string());
                }
            }
            std::sort(inside.begin(), inside.end());
            files.insert(files.end(), inside.begin(), inside.end());
        } else {
            files.push_back(p);
        }
    }
    std::vector<Run> runs;
    std::set<std::string> ids;
    for (const auto& f : files) {
        Run run = read_run_file(f);
        if (!ids.insert(run.system_id()).second) {
            throw ValidationError("two run files map to system id " + run.system_id());
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

}  // namespace mcjudge

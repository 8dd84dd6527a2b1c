#include "mcjudge/grading.hpp"

#include "mcjudge/error.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <thread>

namespace mcjudge {

GradeStore GradeStore::open(const std::string& path)
{
    GradeStore store;
    store.path_ = path;
    if (std::filesystem::exists(path)) {
        std::vector<GradeRecord> loaded;
        try {
            loaded = parse_grade_records(detail::read_file(path));
        } catch (const ParseError& e) {
            throw StoreLoadError(path + ": " + e.what());
        }
        for (auto& r : loaded) {
            Key key{r.query_id, r.doc_id, r.criterion_key, r.model_id};
            if (!store.records_.emplace(std::move(key), std::move(r)).second) {
                throw StoreLoadError(path + ": duplicate grade record");
            }
        }
    }
    store.out_.open(path, std::ios::app | std::ios::binary);
    if (!store.out_) {
        throw StoreLoadError("cannot open grade store " + path + " for appending");
    }
    return store;
}

GradeStore::GradeStore(GradeStore&& other) noexcept
{
    std::lock_guard lock(other.mutex_);
    records_ = std::move(other.records_);
    path_ = std::move(other.path_);
    out_ = std::move(other.out_);
}

GradeStore& GradeStore::operator=(GradeStore&& other) noexcept
{
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        records_ = std::move(other.records_);
        path_ = std::move(other.path_);
        out_ = std::move(other.out_);
    }
    return *this;
}

bool GradeStore::add(GradeRecord record)
{
    validate(record);
    Key key{record.query_id, record.doc_id, record.criterion_key, record.model_id};
    std::lock_guard lock(mutex_);
    if (records_.count(key) != 0) {
        return false;
    }
    if (out_.is_open()) {
        out_ << to_json_line(record) << '\n';
        out_.flush();
        if (!out_) {
            throw Error("write to grade store " + path_ + " failed");
        }
    }
    records_.emplace(std::move(key), std::move(record));
    return true;
}

bool GradeStore::contains(const std::string& query_id, const std::string& doc_id, const std::string& criterion_key,
                          const std::string& model_id) const
{
    return find(query_id, doc_id, criterion_key, model_id) != nullptr;
}

const GradeRecord* GradeStore::find(const std::string& query_id, const std::string& doc_id,
                                    const std::string& criterion_key, const std::string& model_id) const
{
    std::lock_guard lock(mutex_);
    auto it = records_.find(Key{query_id, doc_id, criterion_key, model_id});
    return it == records_.end() ? nullptr : &it->second;
}

std::optional<CriterionGrades> GradeStore::grades(const std::string& query_id, const std::string& doc_id,
                                                  const CriteriaSet& criteria, const std::string& model_id) const
{
    CriterionGrades out;
    std::lock_guard lock(mutex_);
    for (const auto& c : criteria) {
        auto it = records_.find(Key{query_id, doc_id, c.key, model_id});
        if (it == records_.end()) {
            return std::nullopt;
        }
        out[c.key] = it->second.grade;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> GradeStore::pairs(const std::string& model_id) const
{
    std::set<std::pair<std::string, std::string>> seen;
    std::lock_guard lock(mutex_);
    for (const auto& [key, r] : records_) {
        if (r.model_id == model_id) {
            seen.emplace(r.query_id, r.doc_id);
        }
    }
    return {seen.begin(), seen.end()};
}

std::vector<std::string> GradeStore::model_ids() const
{
    std::set<std::string> ids;
    std::lock_guard lock(mutex_);
    for (const auto& [key, r] : records_) {
        ids.insert(r.model_id);
    }
    return {ids.begin(), ids.end()};
}

std::vector<GradeRecord> GradeStore::records() const
{
    std::vector<GradeRecord> out;
    std::lock_guard lock(mutex_);
    out.reserve(records_.size());
    for (const auto& [key, r] : records_) {
        out.push_back(r);
    }
    return out;
}

std::size_t GradeStore::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

bool same_judgments(const GradeStore& a, const GradeStore& b)
{
    const auto ra = a.records();
    const auto rb = b.records();
    return std::equal(ra.begin(), ra.end(), rb.begin(), rb.end(), [](const GradeRecord& x, const GradeRecord& y) {
        return x.query_id == y.query_id && x.doc_id == y.doc_id && x.criterion_key == y.criterion_key
               && x.model_id == y.model_id && x.grade == y.grade && x.parse_failed == y.parse_failed
               && x.raw_output == y.raw_output && x.prompt_digest == y.prompt_digest;
    });
}

GradingReport grade_pairs(const std::vector<JudgingPair>& pairs, const CriteriaSet& criteria, ChatClient& client,
                          GradeStore& store, const GradingOptions& options)
{
    if (pairs.empty()) {
        throw ValidationError("nothing to grade: pair list is empty");
    }
    if (options.model_id.empty()) {
        throw ValidationError("grading needs a model id");
    }
    for (const auto& p : pairs) {
        if (p.query.text.empty() || p.passage.text.empty()) {
            throw ValidationError("empty text for pair (" + p.query.query_id + ", " + p.passage.doc_id + ")");
        }
    }

    struct Task {
        std::size_t pair;
        std::size_t criterion;
    };
    GradingReport report;
    std::vector<Task> tasks;
    std::set<std::pair<std::string, std::string>> queued;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        const bool fresh = queued.emplace(p.query.query_id, p.passage.doc_id).second;
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            if (!fresh || store.contains(p.query.query_id, p.passage.doc_id, criteria.criteria()[c].key,
                                         options.model_id)) {
                ++report.skipped;
            } else {
                tasks.push_back({i, c});
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::atomic<std::size_t> graded{0};
    std::atomic<std::size_t> parse_failed{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::mutex callback_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load() || (options.cancel != nullptr && options.cancel->load())) {
                return;
            }
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            try {
                const auto& pair = pairs[tasks[t].pair];
                const auto& crit = criteria.criteria()[tasks[t].criterion];
                const PromptPair prompt = render_criterion_prompt(crit, pair.query.text, pair.passage.text);
                const ChatResponse response = client.complete(
                    make_request(prompt, options.model_id, options.temperature, options.max_tokens));
                const auto grade = extract_grade(response.raw_text);

                GradeRecord record;
                record.query_id = pair.query.query_id;
                record.doc_id = pair.passage.doc_id;
                record.criterion_key = crit.key;
                record.grade = grade.value_or(0);
                record.parse_failed = !grade.has_value();
                record.raw_output = response.raw_text;
                record.model_id = options.model_id;
                record.prompt_digest = prompt_digest(prompt);
                record.timestamp = options.clock ? options.clock() : utc_timestamp();
                if (store.add(record)) {
                    ++graded;
                    if (record.parse_failed) {
                        ++parse_failed;
                    }
                    if (options.on_record) {
                        std::lock_guard lock(callback_mutex);
                        options.on_record(record);
                    }
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                failed.store(true);
                return;
            }
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, tasks.size()));
    {
        std::vector<std::jthread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) {
            threads.emplace_back(worker);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    report.graded = graded.load();
    report.parse_failed = parse_failed.load();
    report.remaining = tasks.size() - std::min(tasks.size(), report.graded);
    return report;
}

bool verify_provenance(const GradeRecord& record, const JudgingPair& pair, const CriteriaSet& criteria)
{
    const Criterion* c = criteria.find(record.criterion_key);
    if (c == nullptr || record.query_id != pair.query.query_id || record.doc_id != pair.passage.doc_id) {
        return false;
    }
    return prompt_digest(render_criterion_prompt(*c, pair.query.text, pair.passage.text)) == record.prompt_digest;
}

std::map<std::string, std::string> parse_tsv_texts(std::string_view text)
{
    std::map<std::string, std::string> out;
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (detail::split_fields(line).empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ParseError(i + 1, "expected `id<TAB>text`");
        }
        std::string id(line.substr(0, tab));
        if (detail::split_fields(id).size() != 1 || detail::split_fields(id)[0].size() != id.size()) {
            throw ParseError(i + 1, "id may not contain whitespace");
        }
        if (!out.emplace(std::move(id), std::string(line.substr(tab + 1))).second) {
            throw DuplicateError(i + 1, "duplicate id " + std::string(line.substr(0, tab)));
        }
    }
    return out;
}

std::map<std::string, std::string> read_tsv_texts(const std::string& path)
{
    try {
        return parse_tsv_texts(detail::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.what());
    }
}

std::map<std::string, std::set<std::string>> pool_top_k(const std::vector<Run>& runs, std::size_t depth)
{
    if (depth < 1) {
        throw ValidationError("pool depth must be >= 1");
    }
    std::map<std::string, std::set<std::string>> pool;
    for (const auto& run : runs) {
        for (const auto& [qid, entries] : run.queries()) {
            auto& docs = pool[qid];
            const std::size_t n = std::min(depth, entries.size());
            for (std::size_t i = 0; i < n; ++i) {
                docs.insert(entries[i].doc_id);
            }
        }
    }
    return pool;
}

std::map<std::string, std::set<std::string>> parse_pair_list(std::string_view text)
{
    std::map<std::string, std::set<std::string>> out;
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto f = detail::split_fields(lines[i]);
        if (f.empty()) {
            continue;
        }
        if (f.size() == 2) {
            out[std::string(f[0])].insert(std::string(f[1]));
        } else if (f.size() == 4) {
            out[std::string(f[0])].insert(std::string(f[2]));
        } else {
            throw ParseError(i + 1, "expected `qid docid` or `qid iter docid rel`");
        }
    }
    return out;
}

PairLoad join_pairs(const std::map<std::string, std::set<std::string>>& wanted,
                    const std::map<std::string, std::string>& queries,
                    const std::map<std::string, std::string>& passages)
{
    PairLoad load;
    for (const auto& [qid, docs] : wanted) {
        auto q = queries.find(qid);
        if (q == queries.end()) {
            load.missing_queries.push_back(qid);
            continue;
        }
        for (const auto& doc : docs) {
            auto p = passages.find(doc);
            if (p == passages.end()) {
                load.missing_passages.emplace_back(qid, doc);
                continue;
            }
            load.pairs.push_back({{qid, q->second}, {doc, p->second}});
        }
    }
    return load;
}

PairLoad load_pairs(const std::string& queries_file, const std::string& passages_file, const std::string& pairs_file)
{
    const auto queries = read_tsv_texts(queries_file);
    const auto passages = read_tsv_texts(passages_file);
    std::map<std::string, std::set<std::string>> wanted;
    try {
        wanted = parse_pair_list(detail::read_file(pairs_file));
    } catch (const ParseError& e) {
        throw ParseError(e.line(), pairs_file + ": " + e.what());
    }
    return join_pairs(wanted, queries, passages);
}

PairLoad load_pairs(const std::string& queries_file, const std::string& passages_file, const std::vector<Run>& runs,
                    std::size_t depth)
{
    const auto queries = read_tsv_texts(queries_file);
    const auto passages = read_tsv_texts(passages_file);
    return join_pairs(pool_top_k(runs, depth), queries, passages);
}

}  // namespace mcjudge

#include "cli.hpp"

#include "mcjudge/aggregation.hpp"
#include "mcjudge/criteria.hpp"
#include "mcjudge/error.hpp"
#include "mcjudge/grading.hpp"
#include "mcjudge/http_backend.hpp"
#include "mcjudge/llm_client.hpp"
#include "mcjudge/meta_eval.hpp"
#include "mcjudge/metrics.hpp"
#include "mcjudge/mock_backend.hpp"
#include "mcjudge/report.hpp"
#include "mcjudge/trec_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

namespace mcjudge::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json* slot(json& root, std::string_view dotted)
{
    json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = dotted.find('.', start);
        const std::string part(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
        if (!node->is_object()) {
            *node = json::object();
        }
        node = &(*node)[part];
        if (dot == std::string_view::npos) {
            return node;
        }
        start = dot + 1;
    }
}

const json* lookup(const json& root, std::string_view dotted)
{
    const json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = dotted.find('.', start);
        const std::string part(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
        if (!node->is_object() || !node->contains(part)) {
            return nullptr;
        }
        node = &(*node)[part];
        if (dot == std::string_view::npos) {
            return node->is_null() ? nullptr : node;
        }
        start = dot + 1;
    }
}

/// Effective settings: the --config file with command-line flags written over it.
class Settings {
public:
    json root = json::object();

    template <typename T>
    std::optional<T> get(std::string_view key) const
    {
        const json* v = lookup(root, key);
        if (v == nullptr) {
            return std::nullopt;
        }
        try {
            return v->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key " + std::string(key) + ": " + e.what());
        }
    }

    template <typename T>
    T get_or(std::string_view key, T fallback) const
    {
        return get<T>(key).value_or(std::move(fallback));
    }

    std::string require(std::string_view key, std::string_view flag) const
    {
        auto v = get<std::string>(key);
        if (!v || v->empty()) {
            throw ConfigError("missing " + std::string(flag) + " (config key " + std::string(key) + ")");
        }
        return *v;
    }

    /// A list may be given as one string or an array of strings.
    std::vector<std::string> list(std::string_view key) const
    {
        const json* v = lookup(root, key);
        if (v == nullptr) {
            return {};
        }
        if (v->is_string()) {
            return {v->get<std::string>()};
        }
        try {
            return v->get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ConfigError("config key " + std::string(key) + ": " + e.what());
        }
    }

    fs::path output_dir() const { return get_or<std::string>("output_dir", "."); }

    fs::path output_path(const std::string& name) const
    {
        const fs::path p(name);
        return p.is_absolute() ? p : output_dir() / p;
    }
};

/// Records flag values and copies the ones actually given into the settings after parsing.
class Bindings {
public:
    template <typename T>
    CLI::Option* option(CLI::App* app, const std::string& flag, std::string key, const std::string& help)
    {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(flag, *value, help);
        apply_.push_back([opt, value, key = std::move(key)](json& root) {
            if (opt->count() > 0) {
                *slot(root, key) = *value;
            }
        });
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& flag, std::string key, const std::string& help)
    {
        CLI::Option* opt = app->add_flag(flag, help);
        apply_.push_back([opt, key = std::move(key)](json& root) {
            if (opt->count() > 0) {
                *slot(root, key) = true;
            }
        });
        return opt;
    }

    void apply(json& root) const
    {
        for (const auto& f : apply_) {
            f(root);
        }
    }

private:
    std::vector<std::function<void(json&)>> apply_;
};

void require_file(const std::string& path, std::string_view what)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec) && !fs::is_directory(path, ec)) {
        throw ConfigError(std::string(what) + " not found: " + path);
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw ConfigError("cannot write " + path.string());
    }
    f << text;
    if (!f.flush()) {
        throw ConfigError("write failed for " + path.string());
    }
}

CriteriaSet load_criteria(const Settings& s)
{
    CriteriaSet all = default_criteria();
    if (auto path = s.get<std::string>("criteria")) {
        require_file(*path, "criteria file");
        all = load_criteria_file(*path);
    }
    return all;
}

CriteriaSet active_criteria(const Settings& s, const CriteriaSet& all)
{
    if (auto subset = s.get<std::string>("criteria_subset")) {
        return all.select(*subset);
    }
    return all;
}

std::vector<Run> load_runs(const Settings& s)
{
    auto paths = s.list("runs");
    if (paths.empty()) {
        throw ConfigError("missing --runs");
    }
    for (const auto& p : paths) {
        require_file(p, "run file");
    }
    return read_runs(paths);
}

MetricSpec load_metric(const Settings& s)
{
    MetricSpec spec = parse_metric(s.get_or<std::string>("metric", "ndcg_cut.10"));
    if (auto b = s.get<int>("binarize")) {
        spec.binarization_cutoff = *b;
        validate(spec);
    }
    return spec;
}

bool has_backend(const Settings& s)
{
    return s.get<std::string>("mock").has_value() || s.get<std::string>("backend.endpoint").has_value();
}

std::unique_ptr<ChatClient> make_client(const Settings& s, const CriteriaSet& criteria)
{
    ClientOptions options;
    options.retry.max_attempts = s.get_or<int>("backend.max_attempts", options.retry.max_attempts);
    if (auto ms = s.get<int>("backend.initial_backoff_ms")) {
        options.retry.initial_backoff = std::chrono::milliseconds(*ms);
    }
    options.requests_per_second = s.get_or<double>("backend.requests_per_second", options.requests_per_second);

    std::shared_ptr<ChatBackend> backend;
    if (auto mock = s.get<std::string>("mock")) {
        require_file(*mock, "mock script");
        backend = load_mock_script(*mock, criteria);
        options.requests_per_second = 0.0;
    } else if (auto endpoint = s.get<std::string>("backend.endpoint")) {
        HttpBackendConfig config;
        config.endpoint = *endpoint;
        config.api_key = s.get_or<std::string>("backend.api_key", "");
        if (config.api_key.empty()) {
            const char* env = std::getenv(s.get_or<std::string>("backend.api_key_env", "MCJUDGE_API_KEY").c_str());
            config.api_key = env != nullptr ? env : "";
        }
        config.timeout = std::chrono::seconds(s.get_or<int>("backend.timeout_s", 60));
        backend = std::make_shared<HttpChatBackend>(config);
    } else {
        throw ConfigError("no backend configured (pass --endpoint or --mock)");
    }

    auto cache = std::make_shared<ResponseCache>();
    if (auto path = s.get<std::string>("cache")) {
        cache = std::make_shared<ResponseCache>(*path);
    }
    return std::make_unique<ChatClient>(std::move(backend), options, std::move(cache));
}

std::string grade_model(const Settings& s)
{
    if (auto m = s.get<std::string>("backend.model")) {
        return *m;
    }
    if (s.get<std::string>("mock")) {
        return "mock";
    }
    throw ConfigError("missing --model");
}

void report_missing(std::ostream& err, const PairLoad& load)
{
    for (const auto& q : load.missing_queries) {
        err << "no text for query " << q << '\n';
    }
    for (const auto& [q, d] : load.missing_passages) {
        err << "no text for passage " << d << " (query " << q << ")\n";
    }
}

int cmd_grade(const Settings& s, std::ostream& out, std::ostream& err)
{
    const std::string queries = s.require("queries", "--queries");
    const std::string passages = s.require("passages", "--passages");
    const std::string store_path = s.require("store", "--store");
    require_file(queries, "queries file");
    require_file(passages, "passages file");
    const auto pairs_file = s.get<std::string>("pairs");
    if (pairs_file) {
        require_file(*pairs_file, "pairs file");
    }
    const CriteriaSet criteria = active_criteria(s, load_criteria(s));
    const bool resume = s.get_or<bool>("resume", false);
    if (fs::exists(store_path) && !resume) {
        throw ConfigError("grade store " + store_path + " already exists; pass --resume to continue it");
    }

    PairLoad load;
    if (pairs_file) {
        load = load_pairs(queries, passages, *pairs_file);
    } else {
        const auto depth = s.get_or<int>("pool_depth", 10);
        if (depth < 1) {
            throw ConfigError("--pool-depth must be >= 1");
        }
        load = load_pairs(queries, passages, load_runs(s), static_cast<std::size_t>(depth));
    }
    report_missing(err, load);
    if (load.pairs.empty()) {
        throw ValidationError("no requested pair has both query and passage text");
    }

    auto client = make_client(s, criteria);
    GradeStore store = GradeStore::open(store_path);

    GradingOptions options;
    options.model_id = grade_model(s);
    options.temperature = s.get_or<double>("backend.temperature", 0.0);
    options.max_tokens = s.get_or<int>("backend.max_tokens", 100);
    options.workers = static_cast<std::size_t>(std::max(1, s.get_or<int>("backend.workers", 4)));
    options.cancel = &cancel_flag();

    GradingReport report;
    try {
        report = grade_pairs(load.pairs, criteria, *client, store, options);
    } catch (const Error&) {
        err << "grading stopped; " << store.size() << " records kept in " << store_path
            << ". Rerun with --resume to continue.\n";
        throw;
    }
    out << "pairs " << load.pairs.size() << ", criteria " << criteria.size() << ": graded " << report.graded
        << ", already present " << report.skipped << ", unparseable " << report.parse_failed << ", remaining "
        << report.remaining << '\n';
    if (!report.complete()) {
        err << "interrupted with " << report.remaining << " grades outstanding. Rerun with --resume to continue.\n";
        return kPartial;
    }
    return kOk;
}

AggregationSpec build_spec(const Settings& s, const CriteriaSet& all)
{
    json doc = s.get<json>("aggregation").value_or(json::object());
    if (!doc.is_object()) {
        throw ConfigError("config key aggregation must be an object");
    }
    if (!doc.contains("method")) {
        doc["method"] = "sum";
    }
    if (!doc.contains("criteria")) {
        doc["criteria"] = active_criteria(s, all).keys();
    }
    if (doc.contains("thresholds") && doc["thresholds"].is_string()) {
        std::vector<int> cuts;
        std::stringstream in(doc["thresholds"].get<std::string>());
        for (std::string part; std::getline(in, part, ',');) {
            try {
                cuts.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw ConfigError("bad --thresholds value; expected t3,t2,t1");
            }
        }
        doc["thresholds"] = cuts;
    }
    return parse_aggregation_spec(doc.dump(), all);
}

std::string single_store_model(const GradeStore& store)
{
    const auto ids = store.model_ids();
    if (ids.size() != 1) {
        throw ConfigError("store holds " + std::to_string(ids.size()) + " model ids; pass --model");
    }
    return ids.front();
}

int cmd_aggregate(const Settings& s, std::ostream& out, std::ostream& err)
{
    const std::string store_path = s.require("store", "--store");
    require_file(store_path, "grade store");
    const CriteriaSet all = load_criteria(s);
    AggregationSpec spec = build_spec(s, all);

    const bool prompted = spec.method == AggregationMethod::prompt;
    if (prompted && !has_backend(s)) {
        throw ConfigError("the prompt method needs a backend (pass --endpoint or --mock)");
    }
    PairTexts texts;
    if (prompted) {
        const std::string queries = s.require("queries", "--queries");
        const std::string passages = s.require("passages", "--passages");
        require_file(queries, "queries file");
        require_file(passages, "passages file");
        texts.queries = read_tsv_texts(queries);
        texts.passages = read_tsv_texts(passages);
    }

    const GradeStore store = GradeStore::open(store_path);
    const std::string model = s.get<std::string>("backend.model").value_or(single_store_model(store));

    if (spec.method == AggregationMethod::naive_bayes) {
        const std::string train = s.require("train_qrels", "--train-qrels");
        require_file(train, "training qrels");
        const auto train_store_path = s.get<std::string>("train_store");
        if (train_store_path) {
            require_file(*train_store_path, "training grade store");
            const GradeStore train_store = GradeStore::open(*train_store_path);
            spec.nb_model = fit_naive_bayes(train_store, model, spec.criteria, read_qrels_file(train), spec.alpha);
        } else {
            spec.nb_model = fit_naive_bayes(store, model, spec.criteria, read_qrels_file(train), spec.alpha);
        }
    }

    std::unique_ptr<ChatClient> client;
    PredictOptions options;
    options.grade_model_id = model;
    if (prompted) {
        client = make_client(s, all);
        options.client = client.get();
        options.texts = &texts;
        options.aggregation_model_id = s.get_or<std::string>("backend.aggregation_model", model);
        options.temperature = s.get_or<double>("backend.temperature", 0.0);
        options.max_tokens = s.get_or<int>("backend.max_tokens", 100);
        options.workers = static_cast<std::size_t>(std::max(1, s.get_or<int>("backend.workers", 4)));
    }

    Prediction prediction;
    try {
        prediction = predict_judgments(store, spec, options);
    } catch (const IncompleteStoreError& e) {
        std::size_t shown = 0;
        for (const auto& m : e.missing()) {
            if (++shown > 20) {
                err << "... " << e.missing().size() - 20 << " more\n";
                break;
            }
            err << "missing grade: " << m.query_id << ' ' << m.doc_id << ' ' << m.criterion_key << '\n';
        }
        throw;
    }

    const fs::path target = s.output_path(s.get_or<std::string>("output", "predicted.qrels"));
    write_text(target, write_qrels(prediction.labels));
    out << "method " << to_string(spec.method) << ", criteria";
    for (const auto& c : spec.criteria) {
        out << ' ' << c.key;
    }
    if (spec.thresholds) {
        out << ", thresholds " << spec.thresholds->t3 << ',' << spec.thresholds->t2 << ',' << spec.thresholds->t1;
    }
    out << ": wrote " << prediction.labels.size() << " labels to " << target.string() << '\n';
    if (!prediction.parse_failed.empty()) {
        err << prediction.parse_failed.size() << " aggregation answers had no grade and were labelled 0\n";
    }
    return kOk;
}

int cmd_evaluate(const Settings& s, std::ostream& out, std::ostream&)
{
    const std::string qrels_path = s.require("qrels", "--qrels");
    require_file(qrels_path, "qrels file");
    const JudgmentSet qrels = read_qrels_file(qrels_path);
    const MetricSpec spec = load_metric(s);
    const auto runs = load_runs(s);
    for (const auto& run : runs) {
        const SystemScore score = evaluate_system(run, qrels, spec);
        for (const auto& [qid, value] : score.per_query) {
            out << run.system_id() << '\t' << spec.name() << '\t' << qid << '\t' << format_fixed(value) << '\n';
        }
        out << run.system_id() << '\t' << spec.name() << "\tall\t" << format_fixed(score.mean) << '\n';
    }
    return kOk;
}

template <typename F>
std::optional<double> defined(F&& f)
{
    try {
        return f();
    } catch (const UndefinedStatisticError&) {
        return std::nullopt;
    }
}

int cmd_compare(const Settings& s, std::ostream& out, std::ostream&)
{
    const std::string gold_path = s.require("qrels", "--qrels");
    const std::string pred_path = s.require("pred", "--pred");
    require_file(gold_path, "gold qrels");
    require_file(pred_path, "predicted qrels");
    const JudgmentSet gold = read_qrels_file(gold_path);
    const JudgmentSet pred = read_qrels_file(pred_path, JudgmentSource::predicted);
    const MetricSpec spec = load_metric(s);
    const auto runs = load_runs(s);

    CompareReport report;
    report.gold = build_leaderboard(runs, gold, spec);
    report.predicted = build_leaderboard(runs, pred, spec);
    report.spearman = defined([&] { return spearman_rho(report.predicted, report.gold); });
    report.kendall = defined([&] { return kendall_tau(report.predicted, report.gold); });
    for (MetricKind kind : {MetricKind::map, MetricKind::recip_rank}) {
        for (int cutoff : {1, 2}) {
            MetricSpec extra{kind, spec.k, cutoff};
            if (extra.name() == spec.name()) {
                continue;
            }
            const Leaderboard g = build_leaderboard(runs, gold, extra);
            const Leaderboard p = build_leaderboard(runs, pred, extra);
            report.binarized.push_back({extra.name(), defined([&] { return spearman_rho(p, g); }),
                                        defined([&] { return kendall_tau(p, g); })});
        }
    }
    report.confusion = confusion(pred, gold);
    report.kappa = defined([&] { return cohen_kappa(report.confusion); });
    report.kappa_zero_vs_rest = defined([&] { return cohen_kappa(report.confusion, [](int l) { return l > 0; }); });
    report.agreement = agreement_stats(report.confusion);

    const fs::path dir = s.output_dir();
    std::ostringstream csv;
    if (auto store_path = s.get<std::string>("store")) {
        require_file(*store_path, "grade store");
        const GradeStore store = GradeStore::open(*store_path);
        const std::string model = s.get<std::string>("backend.model").value_or(single_store_model(store));
        const CriteriaSet criteria = active_criteria(s, load_criteria(s));
        report.patterns = pattern_stats(store, criteria, model);
        write_indicator_csv(csv, indicator_correlations(store, criteria, model, pred, gold));
        write_text(dir / "indicator_correlations.csv", csv.str());
    }

    std::ostringstream md;
    write_compare_markdown(md, report);
    write_text(dir / "compare.md", md.str());
    csv.str("");
    write_leaderboard_csv(csv, report.gold);
    write_text(dir / "leaderboard_gold.csv", csv.str());
    csv.str("");
    write_leaderboard_csv(csv, report.predicted);
    write_text(dir / "leaderboard_predicted.csv", csv.str());
    csv.str("");
    write_confusion_csv(csv, report.confusion);
    write_text(dir / "confusion.csv", csv.str());
    csv.str("");
    write_scatter_csv(csv, scatter_export(runs, pred, gold, spec));
    write_text(dir / "scatter.csv", csv.str());

    out << md.str();
    return kOk;
}

int cmd_tune(const Settings& s, std::ostream& out, std::ostream&)
{
    const std::string store_path = s.require("store", "--store");
    const std::string qrels_path = s.require("qrels", "--qrels");
    require_file(store_path, "grade store");
    require_file(qrels_path, "dev qrels");
    const GradeStore store = GradeStore::open(store_path);
    const std::string model = s.get<std::string>("backend.model").value_or(single_store_model(store));
    const CriteriaSet criteria = active_criteria(s, load_criteria(s));
    const std::string objective_name = s.get_or<std::string>("objective", "kendall");
    TuningObjective objective;
    if (objective_name == "kendall") {
        objective = TuningObjective::kendall;
    } else if (objective_name == "spearman") {
        objective = TuningObjective::spearman;
    } else {
        throw ConfigError("--objective must be kendall or spearman");
    }
    const auto runs = load_runs(s);
    const TuningResult result =
        tune_thresholds(store, model, criteria, read_qrels_file(qrels_path), runs, objective, load_metric(s));

    out << "thresholds " << result.thresholds.t3 << ',' << result.thresholds.t2 << ',' << result.thresholds.t1
        << '\n';
    out << objective_name << ' ' << format_fixed(result.correlation) << '\n';
    out << "candidates " << result.candidates << ", defined " << result.defined << '\n';
    if (auto name = s.get<std::string>("output")) {
        json doc = {{"method", "sum"},
                    {"criteria", criteria.keys()},
                    {"thresholds", {result.thresholds.t3, result.thresholds.t2, result.thresholds.t1}}};
        write_text(s.output_path(*name), doc.dump(2) + "\n");
    }
    return kOk;
}

int cmd_report(const Settings& s, std::ostream& out, std::ostream&)
{
    const std::string input = s.require("input", "--input");
    require_file(input, "results table");
    const ResultTable table = parse_result_csv(detail::read_file(input));
    std::ostringstream md;
    write_annotated_table(md, table, s.get_or<int>("digits", 4));
    if (auto name = s.get<std::string>("output")) {
        write_text(s.output_path(*name), md.str());
    }
    out << md.str();
    return kOk;
}

void backend_flags(Bindings& b, CLI::App* app)
{
    b.option<std::string>(app, "--endpoint", "backend.endpoint", "OpenAI-compatible base URL");
    b.option<std::string>(app, "--model", "backend.model", "model id recorded with each grade");
    b.option<std::string>(app, "--mock", "mock", "JSON script for the offline mock backend");
    b.option<std::string>(app, "--cache", "cache", "response cache file (JSON lines)");
    b.option<double>(app, "--temperature", "backend.temperature", "sampling temperature");
    b.option<int>(app, "--max-tokens", "backend.max_tokens", "completion token limit");
    b.option<double>(app, "--rate", "backend.requests_per_second", "request rate limit, <= 0 for none");
    b.option<int>(app, "--workers", "backend.workers", "concurrent requests");
}

void criteria_flags(Bindings& b, CLI::App* app)
{
    b.option<std::string>(app, "--criteria", "criteria", "criteria definition JSON");
    b.option<std::string>(app, "--criteria-subset", "criteria_subset", "criteria to use, e.g. E,T,C,F or TCF");
}

void metric_flags(Bindings& b, CLI::App* app)
{
    b.option<std::string>(app, "--metric", "metric", "ndcg_cut.K, map or recip_rank");
    b.option<int>(app, "--binarize", "binarize", "minimum label counted relevant by map and recip_rank");
}

}  // namespace

std::atomic<bool>& cancel_flag()
{
    static std::atomic<bool> flag{false};
    return flag;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multi-criteria LLM relevance judging and leaderboard meta-evaluation", "mcjudge"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "JSON settings file; command-line flags take precedence");
    Bindings b;
    b.option<std::string>(&app, "--output-dir", "output_dir", "directory for generated files");

    auto* grade = app.add_subcommand("grade", "grade every pair on every criterion");
    b.option<std::string>(grade, "--queries", "queries", "query_id<TAB>text file");
    b.option<std::string>(grade, "--passages", "passages", "doc_id<TAB>text file");
    b.option<std::string>(grade, "--pairs", "pairs", "pairs to grade: 'qid docid' lines or a qrels file");
    b.option<std::vector<std::string>>(grade, "--runs", "runs", "run files or directories to pool from");
    b.option<int>(grade, "--pool-depth", "pool_depth", "top-k pooling depth per run");
    b.option<std::string>(grade, "--store", "store", "grade store (JSON lines)");
    b.flag(grade, "--resume", "resume", "continue an existing store");
    backend_flags(b, grade);
    criteria_flags(b, grade);

    auto* aggregate = app.add_subcommand("aggregate", "turn criterion grades into relevance labels");
    b.option<std::string>(aggregate, "--store", "store", "grade store");
    b.option<std::string>(aggregate, "--method", "aggregation.method", "prompt, sum, naive_bayes or single");
    b.option<std::string>(aggregate, "--thresholds", "aggregation.thresholds", "sum cut points t3,t2,t1");
    b.option<double>(aggregate, "--alpha", "aggregation.alpha", "naive Bayes smoothing");
    b.option<std::string>(aggregate, "--key", "aggregation.key", "criterion for the single method");
    b.option<std::string>(aggregate, "--train-qrels", "train_qrels", "labels for fitting naive Bayes");
    b.option<std::string>(aggregate, "--train-store", "train_store", "grades for fitting naive Bayes");
    b.option<std::string>(aggregate, "--queries", "queries", "query texts (prompt method)");
    b.option<std::string>(aggregate, "--passages", "passages", "passage texts (prompt method)");
    b.option<std::string>(aggregate, "--aggregation-model", "backend.aggregation_model", "model for the prompt method");
    b.option<std::string>(aggregate, "--output", "output", "predicted qrels file");
    backend_flags(b, aggregate);
    criteria_flags(b, aggregate);

    auto* evaluate = app.add_subcommand("evaluate", "score runs against qrels");
    b.option<std::string>(evaluate, "--qrels", "qrels", "judgments");
    b.option<std::vector<std::string>>(evaluate, "--run,--runs", "runs", "run files or directories");
    metric_flags(b, evaluate);

    auto* compare = app.add_subcommand("compare", "compare predicted judgments with gold judgments");
    b.option<std::string>(compare, "--qrels", "qrels", "gold judgments");
    b.option<std::string>(compare, "--pred", "pred", "predicted judgments");
    b.option<std::vector<std::string>>(compare, "--runs", "runs", "run files or directories");
    b.option<std::string>(compare, "--store", "store", "grade store for pattern and indicator analysis");
    b.option<std::string>(compare, "--model", "backend.model", "model id in the store");
    metric_flags(b, compare);
    criteria_flags(b, compare);

    auto* tune = app.add_subcommand("tune", "search sum thresholds on development data");
    b.option<std::string>(tune, "--store", "store", "development grade store");
    b.option<std::string>(tune, "--qrels", "qrels", "development judgments");
    b.option<std::vector<std::string>>(tune, "--runs", "runs", "development run files or directories");
    b.option<std::string>(tune, "--model", "backend.model", "model id in the store");
    b.option<std::string>(tune, "--objective", "objective", "kendall or spearman");
    b.option<std::string>(tune, "--output", "output", "write the tuned aggregation spec here");
    metric_flags(b, tune);
    criteria_flags(b, tune);

    auto* report = app.add_subcommand("report", "render a results CSV as an annotated markdown table");
    b.option<std::string>(report, "--input", "input", "CSV with a name column and numeric columns");
    b.option<std::string>(report, "--output", "output", "markdown file");
    b.option<int>(report, "--digits", "digits", "decimals shown");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        Settings s;
        if (!config_path.empty()) {
            require_file(config_path, "config file");
            try {
                s.root = json::parse(detail::read_file(config_path));
            } catch (const json::exception& e) {
                throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
            }
            if (!s.root.is_object()) {
                throw ConfigError("config file must hold a JSON object");
            }
        }
        b.apply(s.root);

        if (grade->parsed()) return cmd_grade(s, out, err);
        if (aggregate->parsed()) return cmd_aggregate(s, out, err);
        if (evaluate->parsed()) return cmd_evaluate(s, out, err);
        if (compare->parsed()) return cmd_compare(s, out, err);
        if (tune->parsed()) return cmd_tune(s, out, err);
        if (report->parsed()) return cmd_report(s, out, err);
        return kInvalid;
    } catch (const TransportError& e) {
        err << "error: " << e.what() << '\n';
        return kTransport;
    } catch (const ProtocolError& e) {
        err << "error: " << e.what() << '\n';
        return kTransport;
    } catch (const DecodeError& e) {
        err << "error: " << e.what() << '\n';
        return kTransport;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
}

}  // namespace mcjudge::cli

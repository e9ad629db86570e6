#include "tablesim/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "tablesim/digest.hpp"

namespace tablesim {

using nlohmann::json;

namespace {

constexpr int manifest_version = 1;

void check_keys(const json &obj, std::string_view section, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        throw InputError("config: '" + std::string(section) + "' must be an object");
    }
    for (const auto &[key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InputError("config: unknown key '" + std::string(section) + (section.empty() ? "" : ".") + key + "'");
        }
    }
}

const json &section(const json &doc, const char *name)
{
    static const json empty = json::object();
    auto it = doc.find(name);
    return it == doc.end() ? empty : *it;
}

template <typename T>
void read(const json &obj, const char *key, T &out)
{
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
        out = it->get<T>();
    }
}

template <typename T>
void read_optional(const json &obj, const char *key, std::optional<T> &out)
{
    if (auto it = obj.find(key); it != obj.end()) {
        if (it->is_null()) {
            out.reset();
        } else {
            out = it->get<T>();
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p)
{
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string_view suggester_name(SuggesterKind k)
{
    switch (k) {
    case SuggesterKind::automatic:
        return "auto";
    case SuggesterKind::file:
        return "file";
    case SuggesterKind::tfidf:
        return "tfidf";
    }
    return "?";
}

std::string_view filter_name(IdfFilterDirection d)
{
    return d == IdfFilterDirection::discard_below ? "discard_below" : "keep_below";
}

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

json field_weights_json(const ExperimentConfig &c)
{
    auto fw = field_weights_from(c.field_weights);
    json out = json::object();
    for (auto m : all_modalities) {
        out[std::string(modality_name(m))] = fw[static_cast<std::size_t>(m)];
    }
    return out;
}

json shared_settings_json(const ExperimentConfig &c)
{
    return json{{"retrieval",
                 {{"k1", c.bm25.k1},
                  {"b", c.bm25.b},
                  {"depth", c.retrieval_depth},
                  {"page_size", c.page_size},
                  {"field_weights", field_weights_json(c)}}},
                {"querygen",
                 {{"suggester", suggester_name(c.suggester)},
                  {"tfidf_top_m", c.tfidf_top_m},
                  {"idf_threshold", c.keyword_filter.idf_threshold},
                  {"idf_filter", filter_name(c.keyword_filter.direction)},
                  {"knowledge_source", knowledge_source_name(c.knowledge_source)}}},
                {"costs", c.costs.to_json()},
                {"sdcg", {{"doc_log_base", c.sdcg.doc_log_base}, {"query_log_base", c.sdcg.query_log_base}}},
                {"eval", {{"time_step", c.time_step}, {"time_horizon", effective_time_horizon(c)}}}};
}

}  // namespace

void apply_override(json &doc, std::string_view assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw InputError("override '" + std::string(assignment) + "' must look like key=value");
    }
    auto key = assignment.substr(0, eq);
    auto raw = std::string(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error &) {
        value = raw;
    }
    json *node = &doc;
    std::size_t start = 0;
    while (true) {
        auto dot = key.find('.', start);
        auto part = std::string(key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (part.empty()) {
            throw InputError("override key '" + std::string(key) + "' has an empty component");
        }
        if (!node->is_object()) {
            throw InputError("override key '" + std::string(key) + "' descends into a non-object");
        }
        if (dot == std::string_view::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

ExperimentConfig parse_experiment_config(const json &doc, const std::filesystem::path &base_dir)
{
    ExperimentConfig c;
    try {
        check_keys(doc, "", {"inputs", "retrieval", "querygen", "grid", "session", "costs", "sdcg", "eval", "topics",
                             "seed", "output_dir", "threads"});

        const auto &in = section(doc, "inputs");
        check_keys(in, "inputs", {"corpus", "topics", "qrels", "modality_qrels", "variants", "suggestions", "stopwords",
                                  "stopwords_sha256"});
        auto required = [&](const char *key) {
            if (!in.contains(key) || !in.at(key).is_string()) {
                throw InputError(std::string("config: inputs.") + key + " is required");
            }
            return resolve(base_dir, in.at(key).get<std::string>());
        };
        auto optional_path = [&](const char *key) -> std::optional<std::filesystem::path> {
            if (!in.contains(key) || in.at(key).is_null()) {
                return std::nullopt;
            }
            return resolve(base_dir, in.at(key).get<std::string>());
        };
        c.inputs.corpus = required("corpus");
        c.inputs.topics = required("topics");
        c.inputs.qrels = required("qrels");
        c.inputs.modality_qrels = required("modality_qrels");
        c.inputs.variants = optional_path("variants");
        c.inputs.suggestions = optional_path("suggestions");
        c.inputs.stopwords = optional_path("stopwords");
        read_optional(in, "stopwords_sha256", c.inputs.stopwords_sha256);

        const auto &ret = section(doc, "retrieval");
        check_keys(ret, "retrieval", {"k1", "b", "depth", "page_size", "field_weights"});
        read(ret, "k1", c.bm25.k1);
        read(ret, "b", c.bm25.b);
        read(ret, "depth", c.retrieval_depth);
        read(ret, "page_size", c.page_size);
        read(ret, "field_weights", c.field_weights);

        const auto &qg = section(doc, "querygen");
        check_keys(qg, "querygen", {"suggester", "tfidf_top_m", "idf_threshold", "idf_filter", "knowledge_source"});
        if (auto it = qg.find("suggester"); it != qg.end()) {
            auto s = it->get<std::string>();
            if (s == "auto") {
                c.suggester = SuggesterKind::automatic;
            } else if (s == "file") {
                c.suggester = SuggesterKind::file;
            } else if (s == "tfidf") {
                c.suggester = SuggesterKind::tfidf;
            } else {
                throw InputError("config: querygen.suggester must be auto, file or tfidf");
            }
        }
        read(qg, "tfidf_top_m", c.tfidf_top_m);
        read(qg, "idf_threshold", c.keyword_filter.idf_threshold);
        if (auto it = qg.find("idf_filter"); it != qg.end()) {
            auto s = it->get<std::string>();
            if (s == "discard_below") {
                c.keyword_filter.direction = IdfFilterDirection::discard_below;
            } else if (s == "keep_below") {
                c.keyword_filter.direction = IdfFilterDirection::keep_below;
            } else {
                throw InputError("config: querygen.idf_filter must be discard_below or keep_below");
            }
        }
        if (auto it = qg.find("knowledge_source"); it != qg.end()) {
            c.knowledge_source = knowledge_source_from_name(it->get<std::string>());
        }

        const auto &grid = section(doc, "grid");
        check_keys(grid, "grid",
                   {"strategies", "click_models", "click_probabilities", "modalities", "depths", "judge_accuracies"});
        if (auto it = grid.find("strategies"); it != grid.end()) {
            c.grid.strategies.clear();
            for (const auto &s : *it) {
                c.grid.strategies.push_back(strategy_from_name(s.get<std::string>()));
            }
        }
        if (auto it = grid.find("click_models"); it != grid.end()) {
            c.grid.click_models.clear();
            for (const auto &s : *it) {
                c.grid.click_models.push_back(click_model_from_name(s.get<std::string>()));
            }
        }
        if (auto it = grid.find("click_probabilities"); it != grid.end()) {
            c.grid.click_probabilities.clear();
            for (const auto &pair : *it) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw InputError("config: grid.click_probabilities entries must be [p_rel, p_nonrel]");
                }
                c.grid.click_probabilities.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        }
        if (auto it = grid.find("modalities"); it != grid.end()) {
            c.grid.modalities.clear();
            for (const auto &s : *it) {
                c.grid.modalities.push_back(modality_from_name(s.get<std::string>()));
            }
        }
        read(grid, "depths", c.grid.depths);
        read(grid, "judge_accuracies", c.grid.judge_accuracies);

        const auto &sess = section(doc, "session");
        check_keys(sess, "session", {"max_queries", "time_budget"});
        read(sess, "max_queries", c.max_queries);
        read_optional(sess, "time_budget", c.time_budget);

        const auto &costs = section(doc, "costs");
        check_keys(costs, "costs", {"issue_query", "examine_snippet", "read_table", "judge_table"});
        read(costs, "issue_query", c.costs.issue_query);
        read(costs, "examine_snippet", c.costs.examine_snippet);
        read(costs, "read_table", c.costs.read_table);
        read(costs, "judge_table", c.costs.judge_table);

        const auto &sd = section(doc, "sdcg");
        check_keys(sd, "sdcg", {"doc_log_base", "query_log_base"});
        read(sd, "doc_log_base", c.sdcg.doc_log_base);
        read(sd, "query_log_base", c.sdcg.query_log_base);

        const auto &ev = section(doc, "eval");
        check_keys(ev, "eval", {"time_step", "time_horizon"});
        read(ev, "time_step", c.time_step);
        read_optional(ev, "time_horizon", c.time_horizon);

        read(doc, "topics", c.topics);
        read(doc, "seed", c.seed);
        if (auto it = doc.find("output_dir"); it != doc.end()) {
            c.output_dir = resolve(base_dir, it->get<std::string>());
        } else {
            c.output_dir = resolve(base_dir, "experiment");
        }
        read(doc, "threads", c.threads);
    } catch (const json::exception &e) {
        throw InputError(std::string("config: ") + e.what());
    }

    for (const auto &[name, w] : c.field_weights) {
        (void)w;
        modality_from_name(name);
    }
    auto nonempty = [](bool ok, const char *axis) {
        if (!ok) {
            throw InputError(std::string("config: grid.") + axis + " must not be empty");
        }
    };
    nonempty(!c.grid.strategies.empty(), "strategies");
    nonempty(!c.grid.click_models.empty(), "click_models");
    nonempty(!c.grid.click_probabilities.empty(), "click_probabilities");
    nonempty(!c.grid.modalities.empty(), "modalities");
    nonempty(!c.grid.depths.empty(), "depths");
    nonempty(!c.grid.judge_accuracies.empty(), "judge_accuracies");
    c.costs.validate();
    c.sdcg.validate();
    if (!(c.time_step > 0.0)) {
        throw InputError("config: eval.time_step must be positive");
    }
    if (c.retrieval_depth < 1 || c.page_size < 1 || c.max_queries < 1) {
        throw InputError("config: retrieval.depth, retrieval.page_size and session.max_queries must be >= 1");
    }
    for (const auto &cell : expand_grid(c)) {
        cell.profile.validate();
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path, const std::vector<std::string> &overrides)
{
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error &e) {
        throw InputError(path.string() + ": malformed JSON: " + e.what());
    }
    for (const auto &o : overrides) {
        apply_override(doc, o);
    }
    return parse_experiment_config(doc, path.parent_path());
}

double effective_time_horizon(const ExperimentConfig &config)
{
    if (config.time_horizon) {
        return *config.time_horizon;
    }
    if (config.time_budget) {
        return *config.time_budget;
    }
    return 1800.0;
}

json canonical_config_json(const ExperimentConfig &c)
{
    auto name = [](const std::optional<std::filesystem::path> &p) {
        return p ? json(p->filename().string()) : json(nullptr);
    };
    json grid{{"strategies", json::array()},
              {"click_models", json::array()},
              {"click_probabilities", json::array()},
              {"modalities", json::array()},
              {"depths", c.grid.depths},
              {"judge_accuracies", c.grid.judge_accuracies}};
    for (auto s : c.grid.strategies) {
        grid["strategies"].push_back(strategy_name(s));
    }
    for (auto m : c.grid.click_models) {
        grid["click_models"].push_back(click_model_name(m));
    }
    for (auto [rel, nonrel] : c.grid.click_probabilities) {
        grid["click_probabilities"].push_back(json::array({rel, nonrel}));
    }
    for (auto m : c.grid.modalities) {
        grid["modalities"].push_back(modality_name(m));
    }
    json doc = shared_settings_json(c);
    doc["inputs"] = {{"corpus", c.inputs.corpus.filename().string()},
                     {"topics", c.inputs.topics.filename().string()},
                     {"qrels", c.inputs.qrels.filename().string()},
                     {"modality_qrels", c.inputs.modality_qrels.filename().string()},
                     {"variants", name(c.inputs.variants)},
                     {"suggestions", name(c.inputs.suggestions)},
                     {"stopwords", name(c.inputs.stopwords)}};
    doc["grid"] = grid;
    doc["session"] = {{"max_queries", c.max_queries}, {"time_budget", optional_json(c.time_budget)}};
    doc["topics"] = c.topics;
    doc["seed"] = c.seed;
    return doc;
}

std::vector<GridCell> expand_grid(const ExperimentConfig &c)
{
    std::vector<GridCell> cells;
    const json shared = shared_settings_json(c);
    for (auto strategy : c.grid.strategies) {
        for (auto model : c.grid.click_models) {
            for (auto [p_rel, p_nonrel] : c.grid.click_probabilities) {
                for (auto modality : c.grid.modalities) {
                    for (auto depth : c.grid.depths) {
                        for (auto accuracy : c.grid.judge_accuracies) {
                            GridCell cell;
                            cell.strategy = strategy;
                            cell.profile.click_model = model;
                            cell.profile.snippet_modality = modality;
                            cell.profile.p_click_rel = p_rel;
                            cell.profile.p_click_nonrel = p_nonrel;
                            cell.profile.judge_accuracy = accuracy;
                            cell.profile.browsing_depth = depth;
                            cell.profile.max_queries = c.max_queries;
                            cell.profile.time_budget = c.time_budget;
                            cell.profile.seed = c.seed;
                            cell.canonical = shared;
                            cell.canonical["strategy"] = strategy_name(strategy);
                            cell.canonical["profile"] = cell.profile.to_json();
                            cell.config_id = sha256_hex(cell.canonical.dump()).substr(0, 16);
                            cells.push_back(std::move(cell));
                        }
                    }
                }
            }
        }
    }
    return cells;
}

ExperimentInputs load_experiment_inputs(const ExperimentConfig &config, const WarningSink &warn)
{
    ExperimentInputs in;
    auto record = [&](const char *role, const std::filesystem::path &p, const std::string &contents) {
        in.files[role] = {p.filename().string(), sha256_hex(contents)};
    };
    auto corpus_text = read_file(config.inputs.corpus);
    record("corpus", config.inputs.corpus, corpus_text);
    {
        std::istringstream ss(corpus_text);
        in.corpus = parse_corpus(ss, config.inputs.corpus.string());
    }
    auto tq = read_file(config.inputs.qrels);
    auto mq = read_file(config.inputs.modality_qrels);
    record("qrels", config.inputs.qrels, tq);
    record("modality_qrels", config.inputs.modality_qrels, mq);
    {
        std::istringstream ts(tq);
        std::istringstream ms(mq);
        in.qrels = parse_qrels(ts, ms, &in.corpus, warn);
    }
    auto topics_text = read_file(config.inputs.topics);
    record("topics", config.inputs.topics, topics_text);
    assign_topic_queries(in.qrels, parse_topics(topics_text));

    if (!config.topics.empty()) {
        QrelsByTopic subset;
        for (const auto &id : config.topics) {
            auto it = in.qrels.find(id);
            if (it == in.qrels.end()) {
                throw InputError("config lists topic '" + id + "' which has no qrels");
            }
            subset.insert(*it);
        }
        in.qrels = std::move(subset);
    }
    if (in.qrels.empty()) {
        throw InputError("no topics to simulate");
    }

    if (config.inputs.variants) {
        auto text = read_file(*config.inputs.variants);
        record("variants", *config.inputs.variants, text);
        in.variants = parse_query_variants(text, warn);
    }
    bool needs_variants = std::find(config.grid.strategies.begin(), config.grid.strategies.end(),
                                    StrategyKind::static_variants) != config.grid.strategies.end();
    if (needs_variants) {
        for (const auto &[id, topic] : in.qrels) {
            (void)topic;
            if (!in.variants.contains(id)) {
                throw InputError("static strategy requested but topic '" + id + "' has no query variants");
            }
        }
    }

    if (config.inputs.suggestions) {
        auto text = read_file(*config.inputs.suggestions);
        record("suggestions", *config.inputs.suggestions, text);
        in.suggestions = parse_term_suggestions(text, warn);
        report_unknown_suggestion_ids(*in.suggestions, in.corpus, warn);
    }
    if (config.suggester == SuggesterKind::file && !in.suggestions) {
        throw InputError("querygen.suggester is 'file' but inputs.suggestions is not set");
    }

    std::string stop_text;
    if (config.inputs.stopwords) {
        stop_text = read_file(*config.inputs.stopwords);
        record("stopwords", *config.inputs.stopwords, stop_text);
    } else {
        stop_text = std::string(default_stopwords_text());
    }
    in.stopwords_sha256 = sha256_hex(stop_text);
    if (config.inputs.stopwords_sha256 && *config.inputs.stopwords_sha256 != in.stopwords_sha256) {
        throw InputError("stopword list hash " + in.stopwords_sha256 + " does not match configured " +
                         *config.inputs.stopwords_sha256);
    }
    in.stopwords = parse_stopwords(stop_text);
    return in;
}

std::string topic_file_stem(std::string_view topic_id)
{
    std::string out;
    for (char ch : topic_id) {
        auto c = static_cast<unsigned char>(ch);
        bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
        out.push_back(safe ? ch : '_');
    }
    if (out.empty() || out == "." || out == "..") {
        out = "_" + out;
    }
    return out;
}

std::filesystem::path cell_directory(const std::filesystem::path &experiment_dir, const GridCell &cell)
{
    return experiment_dir / "cells" / cell.config_id;
}

namespace {

struct CellPaths {
    std::filesystem::path dir;

    [[nodiscard]] std::filesystem::path spec() const { return dir / "cell.json"; }
    [[nodiscard]] std::filesystem::path log(const std::string &stem) const { return dir / "logs" / (stem + ".jsonl"); }
    [[nodiscard]] std::filesystem::path session_sdcg(const std::string &stem) const
    {
        return dir / "curves" / (stem + ".sdcg.csv");
    }
    [[nodiscard]] std::filesystem::path session_time(const std::string &stem) const
    {
        return dir / "curves" / (stem + ".timegain.csv");
    }
    [[nodiscard]] std::filesystem::path mean_sdcg() const { return dir / "sdcg.csv"; }
    [[nodiscard]] std::filesystem::path mean_time() const { return dir / "timegain.csv"; }
};

std::vector<std::filesystem::path> cell_files(const CellPaths &paths, const std::vector<std::string> &stems)
{
    std::vector<std::filesystem::path> files{paths.spec(), paths.mean_sdcg(), paths.mean_time()};
    for (const auto &s : stems) {
        files.push_back(paths.log(s));
        files.push_back(paths.session_sdcg(s));
        files.push_back(paths.session_time(s));
    }
    return files;
}

bool cell_complete(const CellPaths &paths, const std::vector<std::string> &stems, const std::string &spec_text)
{
    for (const auto &f : cell_files(paths, stems)) {
        if (!std::filesystem::is_regular_file(f)) {
            return false;
        }
    }
    try {
        return read_file(paths.spec()) == spec_text;
    } catch (const InputError &) {
        return false;
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options)
{
    auto inputs = load_experiment_inputs(config, options.warn);
    auto index = Index::build(inputs.corpus, field_weights_from(config.field_weights), config.bm25);

    std::optional<FileTermSuggester> file_suggester;
    std::optional<TfIdfTermSuggester> tfidf_suggester;
    const TermSuggester *suggester = nullptr;
    bool use_file = config.suggester == SuggesterKind::file ||
                    (config.suggester == SuggesterKind::automatic && inputs.suggestions.has_value());
    if (use_file) {
        suggester = &file_suggester.emplace(*inputs.suggestions);
    } else {
        suggester = &tfidf_suggester.emplace(index, config.tfidf_top_m);
    }

    ExperimentResult result;
    result.directory = config.output_dir;
    result.cells = expand_grid(config);
    const auto &cells = result.cells;

    std::vector<const TopicQrels *> topics;
    std::vector<std::string> stems;
    {
        std::set<std::string> unique;
        for (const auto &[id, topic] : inputs.qrels) {
            topics.push_back(&topic);
            stems.push_back(topic_file_stem(id));
            if (!unique.insert(stems.back()).second) {
                throw InputError("topic ids collide after file-name sanitising: '" + stems.back() + "'");
            }
        }
    }

    const double horizon = effective_time_horizon(config);
    const auto sdcg_points = query_checkpoints(config.max_queries);
    const auto time_points = time_checkpoints(horizon, config.time_step);

    // Cells whose outputs are all present are reused as-is.
    std::vector<CellPaths> paths;
    std::vector<std::string> specs;
    std::vector<bool> pending;
    for (const auto &cell : cells) {
        paths.push_back({cell_directory(config.output_dir, cell)});
        specs.push_back(cell.canonical.dump(2) + "\n");
        bool done = !options.force && cell_complete(paths.back(), stems, specs.back());
        pending.push_back(!done);
        if (done) {
            ++result.cells_reused;
        }
    }

    struct Task {
        std::size_t cell;
        std::size_t topic;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (pending[c]) {
            for (std::size_t t = 0; t < topics.size(); ++t) {
                tasks.push_back({c, t});
            }
        }
    }

    std::vector<GainCurve> sdcg_curves(cells.size() * topics.size());
    std::vector<GainCurve> time_curves(cells.size() * topics.size());
    std::vector<std::string> errors(tasks.size());
    std::vector<std::atomic<std::size_t>> remaining(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        remaining[c] = topics.size();
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::atomic<std::size_t> cells_done{0};
    std::mutex report_mutex;

    auto finish_cell = [&](std::size_t c) {
        std::vector<GainCurve> s(sdcg_curves.begin() + static_cast<std::ptrdiff_t>(c * topics.size()),
                                 sdcg_curves.begin() + static_cast<std::ptrdiff_t>((c + 1) * topics.size()));
        std::vector<GainCurve> t(time_curves.begin() + static_cast<std::ptrdiff_t>(c * topics.size()),
                                 time_curves.begin() + static_cast<std::ptrdiff_t>((c + 1) * topics.size()));
        write_file_atomic(paths[c].mean_sdcg(), curve_csv(mean_curve(s, sdcg_points)));
        write_file_atomic(paths[c].mean_time(), curve_csv(mean_curve(t, time_points)));
        write_file_atomic(paths[c].spec(), specs[c]);
        auto done = ++cells_done;
        if (options.on_cell_done) {
            std::lock_guard lock(report_mutex);
            options.on_cell_done(cells[c], done, cells.size() - result.cells_reused);
        }
    };

    auto worker = [&] {
        while (!failed) {
            auto k = next++;
            if (k >= tasks.size()) {
                return;
            }
            const auto [c, t] = tasks[k];
            const auto &cell = cells[c];
            const auto &topic = *topics[t];
            try {
                std::unique_ptr<QueryStrategy> strategy;
                if (cell.strategy == StrategyKind::static_variants) {
                    strategy = std::make_unique<StaticQueryStrategy>(inputs.variants.at(topic.topic_id).variants);
                } else {
                    strategy = std::make_unique<KnowledgeQueryStrategy>(
                        topic.topic_query, index, *suggester, inputs.stopwords, config.keyword_filter,
                        cell.strategy == StrategyKind::d2q_feedback);
                }
                SessionOptions so;
                so.config_id = cell.config_id;
                so.retrieval_depth = config.retrieval_depth;
                so.page_size = config.page_size;
                so.knowledge_source = config.knowledge_source;
                so.header_extra = {{"strategy", strategy_name(cell.strategy)},
                                   {"sdcg", cell.canonical.at("sdcg")},
                                   {"stopwords_sha256", inputs.stopwords_sha256}};
                auto log = run_session(topic, inputs.corpus, index, *strategy, cell.profile, config.costs, so);
                auto sc = sdcg_curve(log, config.sdcg);
                auto tc = time_gain_curve(log);
                const auto &stem = stems[t];
                write_file_atomic(paths[c].log(stem), session_log_to_jsonl(log));
                std::array<GainCurve, 1> one_s{sc};
                std::array<GainCurve, 1> one_t{tc};
                write_file_atomic(paths[c].session_sdcg(stem), curve_csv(mean_curve(one_s, sdcg_points)));
                write_file_atomic(paths[c].session_time(stem), curve_csv(mean_curve(one_t, time_points)));
                sdcg_curves[c * topics.size() + t] = std::move(sc);
                time_curves[c * topics.size() + t] = std::move(tc);
                if (--remaining[c] == 0) {
                    finish_cell(c);
                }
            } catch (const std::exception &e) {
                errors[k] = "topic '" + topic.topic_id + "' in cell " + cell.config_id + ": " + e.what();
                failed = true;
            }
        }
    };

    std::size_t threads = config.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : config.threads;
    threads = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(1, tasks.size())));
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }
    for (const auto &e : errors) {
        if (!e.empty()) {
            throw RuntimeError("simulation aborted: " + e);
        }
    }
    result.sessions_run = tasks.size();

    json manifest;
    manifest["format_version"] = manifest_version;
    manifest["config"] = canonical_config_json(config);
    manifest["config_sha256"] = sha256_hex(manifest["config"].dump());
    manifest["master_seed"] = config.seed;
    manifest["stopwords_sha256"] = inputs.stopwords_sha256;
    manifest["inputs"] = json::object();
    for (const auto &[role, file] : inputs.files) {
        manifest["inputs"][role] = {{"file", file.first}, {"sha256", file.second}};
    }
    manifest["topics"] = json::array();
    for (const auto *t : topics) {
        manifest["topics"].push_back(t->topic_id);
    }
    manifest["cells"] = json::array();
    json files = json::object();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto rel_dir = std::filesystem::relative(paths[c].dir, config.output_dir).generic_string();
        manifest["cells"].push_back({{"config_id", cells[c].config_id},
                                     {"dir", rel_dir},
                                     {"strategy", strategy_name(cells[c].strategy)},
                                     {"profile", cells[c].profile.to_json()}});
        for (const auto &f : cell_files(paths[c], stems)) {
            files[std::filesystem::relative(f, config.output_dir).generic_string()] = sha256_file(f);
        }
    }
    manifest["files"] = files;
    write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace tablesim

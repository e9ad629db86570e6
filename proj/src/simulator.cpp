#include "tablesim/simulator.hpp"

#include <cmath>

#include "tablesim/digest.hpp"

namespace tablesim {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> click_model_names{"oracle", "random", "modality_deterministic",
                                                            "modality_probabilistic"};
constexpr std::array<std::string_view, 5> action_kind_names{"IssueQuery", "ExamineSnippet", "ClickTable",
                                                            "JudgeTable", "StopSession"};

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_positive(double v, const char *name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InputError(std::string("cost '") + name + "' must be a positive number");
    }
}

}  // namespace

std::string_view click_model_name(ClickModel m) { return click_model_names[static_cast<std::size_t>(m)]; }

ClickModel click_model_from_name(std::string_view name)
{
    for (std::size_t i = 0; i < click_model_names.size(); ++i) {
        if (click_model_names[i] == name) {
            return static_cast<ClickModel>(i);
        }
    }
    throw InputError("unknown click model '" + std::string(name) +
                     "' (expected oracle, random, modality_deterministic or modality_probabilistic)");
}

void UserProfile::validate() const
{
    if (!is_probability(p_click_rel) || !is_probability(p_click_nonrel) || !is_probability(judge_accuracy)) {
        throw InputError("user profile: probabilities must lie in [0, 1]");
    }
    if (browsing_depth < 1) {
        throw InputError("user profile: browsing_depth must be >= 1");
    }
    if (max_queries < 1) {
        throw InputError("user profile: max_queries must be >= 1");
    }
    if (time_budget && !(*time_budget > 0.0)) {
        throw InputError("user profile: time_budget must be positive when set");
    }
}

json UserProfile::to_json() const
{
    return json{{"click_model", click_model_name(click_model)},
                {"snippet_modality", modality_name(snippet_modality)},
                {"p_click_rel", p_click_rel},
                {"p_click_nonrel", p_click_nonrel},
                {"judge_accuracy", judge_accuracy},
                {"browsing_depth", browsing_depth},
                {"max_queries", max_queries},
                {"time_budget", time_budget ? json(*time_budget) : json(nullptr)},
                {"seed", seed}};
}

void CostModel::validate() const
{
    check_positive(issue_query, "issue_query");
    check_positive(examine_snippet, "examine_snippet");
    check_positive(read_table, "read_table");
    check_positive(judge_table, "judge_table");
}

json CostModel::to_json() const
{
    return json{{"issue_query", issue_query},
                {"examine_snippet", examine_snippet},
                {"read_table", read_table},
                {"judge_table", judge_table}};
}

std::string_view knowledge_source_name(KnowledgeSource s)
{
    return s == KnowledgeSource::examined ? "examined" : "clicked";
}

KnowledgeSource knowledge_source_from_name(std::string_view name)
{
    if (name == "examined") {
        return KnowledgeSource::examined;
    }
    if (name == "clicked") {
        return KnowledgeSource::clicked;
    }
    throw InputError("unknown knowledge source '" + std::string(name) + "' (expected examined or clicked)");
}

std::string_view action_kind_name(ActionKind k) { return action_kind_names[static_cast<std::size_t>(k)]; }

std::optional<ActionKind> parse_action_kind(std::string_view name)
{
    for (std::size_t i = 0; i < action_kind_names.size(); ++i) {
        if (action_kind_names[i] == name) {
            return static_cast<ActionKind>(i);
        }
    }
    return std::nullopt;
}

std::string session_log_to_jsonl(const SessionLog &log)
{
    json header = log.header;
    header["type"] = "header";
    header["topic_id"] = log.topic_id;
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto &a : log.actions) {
        out += json{{"kind", action_kind_name(a.kind)}, {"subject", a.subject}, {"t", a.elapsed}, {"gain", a.gain}}.dump();
        out.push_back('\n');
    }
    json summary{{"type", "summary"},
                 {"queries_issued", log.queries_issued},
                 {"tables_seen", log.seen_tables.size()},
                 {"seen_tables", log.seen_tables},
                 {"total_gain", log.total_gain},
                 {"stop_reason", log.stop_reason}};
    out += summary.dump();
    out.push_back('\n');
    return out;
}

SessionLog parse_session_log(std::string_view jsonl, const std::string &source)
{
    SessionLog log;
    bool have_header = false;
    bool have_summary = false;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto where = source + ":" + std::to_string(lineno) + ": ";
        try {
            auto obj = json::parse(line);
            if (have_summary) {
                throw InputError(where + "content after the summary line");
            }
            if (auto type = obj.find("type"); type != obj.end()) {
                if (*type == "header") {
                    if (have_header) {
                        throw InputError(where + "second header line");
                    }
                    have_header = true;
                    log.topic_id = obj.at("topic_id").get<std::string>();
                    obj.erase("type");
                    obj.erase("topic_id");
                    log.header = std::move(obj);
                } else if (*type == "summary") {
                    have_summary = true;
                    log.queries_issued = obj.at("queries_issued").get<std::size_t>();
                    log.total_gain = obj.at("total_gain").get<long long>();
                    log.stop_reason = obj.at("stop_reason").get<std::string>();
                    for (const auto &id : obj.at("seen_tables")) {
                        log.seen_tables.insert(id.get<std::string>());
                    }
                    if (obj.at("tables_seen").get<std::size_t>() != log.seen_tables.size()) {
                        throw InputError(where + "tables_seen disagrees with seen_tables");
                    }
                } else {
                    throw InputError(where + "unknown record type " + type->dump());
                }
                continue;
            }
            if (!have_header) {
                throw InputError(where + "action before header");
            }
            auto kind = parse_action_kind(obj.at("kind").get<std::string>());
            if (!kind) {
                throw InputError(where + "unknown action kind " + obj.at("kind").dump());
            }
            log.actions.push_back({*kind, obj.at("subject").get<std::string>(), obj.at("t").get<double>(),
                                   obj.at("gain").get<int>()});
        } catch (const json::exception &e) {
            throw InputError(where + "malformed record: " + e.what());
        }
    }
    if (!have_header) {
        throw InputError(source + ": missing header line");
    }
    if (!have_summary) {
        throw InputError(source + ": missing summary line");
    }
    return log;
}

SessionLog load_session_log(const std::filesystem::path &path)
{
    return parse_session_log(read_file(path), path.string());
}

std::uint64_t derive_session_seed(std::uint64_t master_seed, std::string_view topic_id, std::string_view config_id)
{
    auto h = fnv1a64(std::to_string(master_seed));
    h = fnv1a64("\x1f", h);
    h = fnv1a64(topic_id, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(config_id, h);
    return splitmix64(h);
}

bool click_decision(bool modality_relevant, int table_grade, const UserProfile &profile, SessionRng &rng)
{
    switch (profile.click_model) {
    case ClickModel::oracle:
        return table_grade > 0;
    case ClickModel::random:
        return rng.bernoulli(0.5);
    case ClickModel::modality_deterministic:
        return modality_relevant;
    case ClickModel::modality_probabilistic:
        return rng.bernoulli(modality_relevant ? profile.p_click_rel : profile.p_click_nonrel);
    }
    return false;
}

bool judge_relevance(int table_grade, const UserProfile &profile, SessionRng &rng)
{
    bool truth = table_grade > 0;
    return rng.bernoulli(profile.judge_accuracy) ? truth : !truth;
}

SessionLog run_session(const TopicQrels &topic, const Corpus &corpus, const Index &index, QueryStrategy &strategy,
                       const UserProfile &profile, const CostModel &costs, const SessionOptions &options)
{
    if (topic.table_grades.empty() && topic.modality_rel.empty()) {
        throw InputError("topic '" + topic.topic_id + "' has no qrels");
    }
    profile.validate();
    costs.validate();
    if (options.retrieval_depth < 1 || options.page_size < 1) {
        throw InputError("retrieval depth and page size must be >= 1");
    }

    const auto session_seed = derive_session_seed(profile.seed, topic.topic_id, options.config_id);
    SessionRng rng(session_seed);

    SessionLog log;
    log.topic_id = topic.topic_id;
    log.header = json{{"format_version", 1},
                      {"config_id", options.config_id},
                      {"master_seed", profile.seed},
                      {"session_seed", session_seed},
                      {"profile", profile.to_json()},
                      {"cost_model", costs.to_json()},
                      {"retrieval_depth", options.retrieval_depth},
                      {"page_size", options.page_size},
                      {"knowledge_source", knowledge_source_name(options.knowledge_source)}};
    for (const auto &[key, value] : options.header_extra.items()) {
        log.header[key] = value;
    }

    double elapsed = 0.0;
    auto record = [&](ActionKind kind, const std::string &subject, double cost, int gain) {
        elapsed += cost;
        log.actions.push_back({kind, subject, elapsed, gain});
    };
    auto over_budget = [&] { return profile.time_budget && elapsed >= *profile.time_budget; };

    std::string reason;
    while (true) {
        if (log.queries_issued >= profile.max_queries) {
            reason = "max_queries";
            break;
        }
        auto query = strategy.next_query();
        if (!query) {
            reason = "exhausted";
            break;
        }
        if (over_budget()) {
            reason = "time_budget";
            break;
        }
        record(ActionKind::IssueQuery, *query, costs.issue_query, 0);
        ++log.queries_issued;

        auto ranking = index.search(*query, options.retrieval_depth);
        std::vector<const Table *> examined;
        std::vector<const Table *> clicked;
        std::vector<const Table *> relevant;
        bool budget_hit = false;
        for (std::size_t page_no = 1; examined.size() < profile.browsing_depth && !budget_hit; ++page_no) {
            auto page = serp_page(ranking, page_no, corpus, profile.snippet_modality, options.page_size);
            if (!page) {
                break;
            }
            for (const auto &item : page->items) {
                if (examined.size() >= profile.browsing_depth) {
                    break;
                }
                if (over_budget()) {
                    budget_hit = true;
                    break;
                }
                record(ActionKind::ExamineSnippet, item.table_id, costs.examine_snippet, 0);
                const Table *table = &corpus.at(item.table_id);
                examined.push_back(table);

                int grade = topic.grade(item.table_id);
                bool modality_rel = topic.modality_relevant(item.table_id, profile.snippet_modality);
                if (!click_decision(modality_rel, grade, profile, rng)) {
                    continue;
                }
                if (over_budget()) {
                    budget_hit = true;
                    break;
                }
                record(ActionKind::ClickTable, item.table_id, costs.read_table, 0);
                clicked.push_back(table);
                if (over_budget()) {
                    budget_hit = true;
                    break;
                }
                int gain = 0;
                if (judge_relevance(grade, profile, rng)) {
                    relevant.push_back(table);
                    if (log.seen_tables.insert(item.table_id).second) {
                        gain = grade;
                        log.total_gain += gain;
                    }
                }
                record(ActionKind::JudgeTable, item.table_id, costs.judge_table, gain);
            }
        }
        if (budget_hit) {
            reason = "time_budget";
            break;
        }
        const auto &source = options.knowledge_source == KnowledgeSource::examined ? examined : clicked;
        strategy.observe(source, relevant);
    }
    log.stop_reason = reason;
    log.actions.push_back({ActionKind::StopSession, reason, elapsed, 0});
    return log;
}

}  // namespace tablesim

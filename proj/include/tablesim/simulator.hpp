#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tablesim/corpus.hpp"
#include "tablesim/querygen.hpp"
#include "tablesim/retrieval.hpp"

namespace tablesim {

enum class ClickModel { oracle, random, modality_deterministic, modality_probabilistic };

std::string_view click_model_name(ClickModel m);
ClickModel click_model_from_name(std::string_view name);

struct UserProfile {
    ClickModel click_model = ClickModel::modality_deterministic;
    Modality snippet_modality = Modality::page_title;
    double p_click_rel = 1.0;
    double p_click_nonrel = 0.0;
    double judge_accuracy = 1.0;
    std::size_t browsing_depth = 10;
    std::size_t max_queries = 10;
    std::optional<double> time_budget;
    std::uint64_t seed = 0;

    /// Throws InputError when a field is out of range.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Seconds charged per action.
struct CostModel {
    double issue_query = 10.0;
    double examine_snippet = 2.0;
    double read_table = 20.0;
    double judge_table = 2.0;

    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Which tables of an iteration feed the knowledge state.
enum class KnowledgeSource { examined, clicked };

std::string_view knowledge_source_name(KnowledgeSource s);
KnowledgeSource knowledge_source_from_name(std::string_view name);

enum class ActionKind { IssueQuery, ExamineSnippet, ClickTable, JudgeTable, StopSession };

std::string_view action_kind_name(ActionKind k);
std::optional<ActionKind> parse_action_kind(std::string_view name);

struct Action {
    ActionKind kind = ActionKind::IssueQuery;
    std::string subject;
    double elapsed = 0.0;  // cumulative seconds after the action
    int gain = 0;

    bool operator==(const Action &) const = default;
};

struct SessionLog {
    nlohmann::json header = nlohmann::json::object();
    std::string topic_id;
    std::vector<Action> actions;
    std::set<std::string> seen_tables;
    long long total_gain = 0;
    std::size_t queries_issued = 0;
    std::string stop_reason;

    bool operator==(const SessionLog &) const = default;
};

/// Serialised as: header line, one line per action, trailing summary line.
std::string session_log_to_jsonl(const SessionLog &log);
SessionLog parse_session_log(std::string_view jsonl, const std::string &source = "<log>");
SessionLog load_session_log(const std::filesystem::path &path);

/// Seeded stream shared by click and judgment decisions of one session.
class SessionRng {
public:
    explicit SessionRng(std::uint64_t seed) : m_engine(seed) {}
    /// Uniform in [0, 1) from the top 53 bits; identical on every platform.
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 m_engine;
};

std::uint64_t derive_session_seed(std::uint64_t master_seed, std::string_view topic_id, std::string_view config_id);

bool click_decision(bool modality_relevant, int table_grade, const UserProfile &profile, SessionRng &rng);
bool judge_relevance(int table_grade, const UserProfile &profile, SessionRng &rng);

struct SessionOptions {
    std::string config_id;
    std::size_t retrieval_depth = 100;
    std::size_t page_size = default_page_size;
    KnowledgeSource knowledge_source = KnowledgeSource::examined;
    /// Merged into the log header (e.g. strategy name, evaluation parameters).
    nlohmann::json header_extra = nlohmann::json::object();
};

/// Runs one simulated session. The profile's seed is the master seed; the
/// session stream is derived from it, the topic id and options.config_id.
SessionLog run_session(const TopicQrels &topic, const Corpus &corpus, const Index &index, QueryStrategy &strategy,
                       const UserProfile &profile, const CostModel &costs, const SessionOptions &options = {});

}  // namespace tablesim

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tablesim/corpus.hpp"
#include "tablesim/eval.hpp"
#include "tablesim/querygen.hpp"
#include "tablesim/retrieval.hpp"
#include "tablesim/simulator.hpp"

namespace tablesim {

/// Axes of the user-profile sweep; the experiment runs their full cross-product.
struct GridSpec {
    std::vector<StrategyKind> strategies{StrategyKind::d2q_feedback};
    std::vector<ClickModel> click_models{ClickModel::modality_deterministic};
    std::vector<std::pair<double, double>> click_probabilities{{1.0, 0.0}};
    std::vector<Modality> modalities{Modality::page_title};
    std::vector<std::size_t> depths{10};
    std::vector<double> judge_accuracies{1.0};
};

enum class SuggesterKind { automatic, file, tfidf };

struct ExperimentConfig {
    struct Inputs {
        std::filesystem::path corpus;
        std::filesystem::path topics;
        std::filesystem::path qrels;
        std::filesystem::path modality_qrels;
        std::optional<std::filesystem::path> variants;
        std::optional<std::filesystem::path> suggestions;
        std::optional<std::filesystem::path> stopwords;
        /// When set, the stopword list must hash to this value.
        std::optional<std::string> stopwords_sha256;
    } inputs;

    std::map<std::string, double> field_weights;
    Bm25Params bm25;
    std::size_t retrieval_depth = 100;
    std::size_t page_size = default_page_size;

    SuggesterKind suggester = SuggesterKind::automatic;
    std::size_t tfidf_top_m = 10;
    KeywordFilter keyword_filter;
    KnowledgeSource knowledge_source = KnowledgeSource::examined;

    GridSpec grid;
    std::size_t max_queries = 10;
    std::optional<double> time_budget;
    CostModel costs;
    SdcgParams sdcg;
    double time_step = 10.0;
    std::optional<double> time_horizon;

    /// Empty means every topic with qrels.
    std::vector<std::string> topics;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "experiment";
    /// 0 selects the number of hardware threads.
    std::size_t threads = 0;
};

/// Sets a dotted key ("grid.depths=[5,10]"); the value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json &doc, std::string_view assignment);

/// Relative input and output paths are resolved against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json &doc, const std::filesystem::path &base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path &path,
                                        const std::vector<std::string> &overrides = {});

/// Fully populated canonical form. Excludes output_dir and threads; input paths become file names.
nlohmann::json canonical_config_json(const ExperimentConfig &config);

struct GridCell {
    StrategyKind strategy = StrategyKind::d2q_feedback;
    UserProfile profile;
    nlohmann::json canonical;
    std::string config_id;
};

std::vector<GridCell> expand_grid(const ExperimentConfig &config);

/// Time-curve horizon: eval.time_horizon, else session.time_budget, else 1800 s.
double effective_time_horizon(const ExperimentConfig &config);

struct ExperimentInputs {
    Corpus corpus;
    QrelsByTopic qrels;
    std::map<std::string, QueryVariantSet> variants;
    std::optional<TermSuggestions> suggestions;
    std::set<std::string> stopwords;
    std::string stopwords_sha256;
    /// role -> (file name, sha256)
    std::map<std::string, std::pair<std::string, std::string>> files;
};

/// Loads and cross-checks every input; any problem is an InputError.
ExperimentInputs load_experiment_inputs(const ExperimentConfig &config, const WarningSink &warn = stderr_warnings());

struct RunOptions {
    /// Regenerate cells whose outputs already exist.
    bool force = false;
    /// Called once per finished cell (from worker threads, serialised).
    std::function<void(const GridCell &, std::size_t done, std::size_t total)> on_cell_done;
    WarningSink warn = stderr_warnings();
};

struct ExperimentResult {
    std::filesystem::path directory;
    std::vector<GridCell> cells;
    std::size_t sessions_run = 0;
    std::size_t cells_reused = 0;
};

std::filesystem::path cell_directory(const std::filesystem::path &experiment_dir, const GridCell &cell);
/// File-system-safe form of a topic id.
std::string topic_file_stem(std::string_view topic_id);

/// Builds the index, runs every (topic x cell) session, writes logs, per-session
/// and per-cell curves and manifest.json. Output bytes do not depend on config.threads.
ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

}  // namespace tablesim

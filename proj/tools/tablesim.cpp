// Command-line front end: index building, single sessions, sweeps, evaluation and curve export.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tablesim/corpus.hpp"
#include "tablesim/digest.hpp"
#include "tablesim/eval.hpp"
#include "tablesim/experiment.hpp"
#include "tablesim/retrieval.hpp"
#include "tablesim/simulator.hpp"
#include "tablesim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tablesim;

namespace {

constexpr int exit_input_error = 1;
constexpr int exit_runtime_error = 2;

std::map<std::string, double> parse_weights(const std::vector<std::string> &specs)
{
    std::map<std::string, double> out;
    for (const auto &s : specs) {
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw InputError("--weight expects modality=value, got '" + s + "'");
        }
        try {
            out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
        } catch (const std::exception &) {
            throw InputError("--weight value in '" + s + "' is not a number");
        }
    }
    return out;
}

std::vector<fs::path> collect_logs(const std::vector<std::string> &args)
{
    std::vector<fs::path> out;
    for (const auto &a : args) {
        fs::path p(a);
        if (fs::is_directory(p)) {
            for (const auto &entry : fs::recursive_directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                    out.push_back(entry.path());
                }
            }
        } else {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) {
        throw InputError("no session logs found");
    }
    return out;
}

void emit(const std::string &text, const std::string &out_path)
{
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        write_file_atomic(out_path, text);
    }
}

std::string raw_curve_csv(const GainCurve &curve, const char *x_name, const char *y_name)
{
    std::string out = std::string(x_name) + "," + y_name + "\n";
    for (const auto &p : curve.points) {
        out += format_double(p.x) + "," + format_double(p.y) + "\n";
    }
    return out;
}

nlohmann::json example_config()
{
    return {{"inputs",
             {{"corpus", "corpus.jsonl"},
              {"topics", "topics.json"},
              {"qrels", "qrels.txt"},
              {"modality_qrels", "modality_qrels.txt"},
              {"variants", "variants.json"},
              {"suggestions", "suggestions.json"}}},
            {"grid",
             {{"strategies", {"d2q_feedback"}},
              {"click_models", {"modality_probabilistic"}},
              {"click_probabilities", {{0.6, 0.3}, {0.7, 0.3}, {0.8, 0.3}, {0.9, 0.3}, {0.5, 0.5}, {1.0, 0.0}}},
              {"modalities", {"page_title"}},
              {"depths", {10}}}},
            {"session", {{"max_queries", 10}}},
            {"seed", 42},
            {"output_dir", "experiment"}};
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"tablesim: simulated interactive web-table retrieval sessions"};
    app.require_subcommand(1);

    // index build
    auto *index_cmd = app.add_subcommand("index", "Inverted index operations");
    index_cmd->require_subcommand(1);
    auto *index_build = index_cmd->add_subcommand("build", "Build and persist a BM25 index");
    std::string corpus_path;
    std::string index_out;
    std::vector<std::string> weight_specs;
    Bm25Params bm25;
    index_build->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    index_build->add_option("--out", index_out, "Index file to write")->required();
    index_build->add_option("--weight", weight_specs, "Field weight, modality=value (repeatable)");
    index_build->add_option("--k1", bm25.k1, "BM25 k1")->capture_default_str();
    index_build->add_option("--b", bm25.b, "BM25 b")->capture_default_str();

    // simulate run / sweep
    auto *sim_cmd = app.add_subcommand("simulate", "Run simulated sessions");
    sim_cmd->require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    auto *sim_run = sim_cmd->add_subcommand("run", "Run one session for one topic and grid cell");
    std::string topic_id;
    std::size_t cell_index = 0;
    std::string log_out;
    sim_run->add_option("--config", config_path, "Experiment config JSON")->required();
    sim_run->add_option("--set", overrides, "Config override key=value (repeatable)");
    sim_run->add_option("--topic", topic_id, "Topic id")->required();
    sim_run->add_option("--cell", cell_index, "Grid cell index")->capture_default_str();
    sim_run->add_option("--out", log_out, "Session log output (default stdout)");

    auto *sim_sweep = sim_cmd->add_subcommand("sweep", "Run the full topic x grid sweep");
    std::size_t threads = 0;
    bool force = false;
    sim_sweep->add_option("--config", config_path, "Experiment config JSON")->required();
    sim_sweep->add_option("--set", overrides, "Config override key=value (repeatable)");
    sim_sweep->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
    sim_sweep->add_flag("--force", force, "Regenerate cells that already have outputs");

    // eval sdcg / timegain
    auto *eval_cmd = app.add_subcommand("eval", "Evaluate a single session log");
    eval_cmd->require_subcommand(1);
    std::string log_path;
    SdcgParams sdcg_params;
    auto *eval_sdcg = eval_cmd->add_subcommand("sdcg", "Query-wise sDCG curve of one log");
    eval_sdcg->add_option("--log", log_path, "Session log JSONL")->required();
    eval_sdcg->add_option("--doc-base", sdcg_params.doc_log_base, "Rank discount log base")->capture_default_str();
    eval_sdcg->add_option("--query-base", sdcg_params.query_log_base, "Query discount log base")->capture_default_str();
    auto *eval_time = eval_cmd->add_subcommand("timegain", "Time-wise cumulative gain curve of one log");
    eval_time->add_option("--log", log_path, "Session log JSONL")->required();

    // export curves
    auto *export_cmd = app.add_subcommand("export", "Aggregate curves over many logs");
    export_cmd->require_subcommand(1);
    auto *export_curves = export_cmd->add_subcommand("curves", "Mean curve CSV (x,mean,n,stddev)");
    std::string paradigm = "sdcg";
    std::vector<std::string> log_args;
    std::string curve_out;
    std::size_t max_queries = 10;
    double horizon = 1800.0;
    double step = 10.0;
    export_curves->add_option("--paradigm", paradigm, "sdcg or timegain")
        ->check(CLI::IsMember({"sdcg", "timegain"}))
        ->capture_default_str();
    export_curves->add_option("--out", curve_out, "CSV output (default stdout)");
    export_curves->add_option("--max-queries", max_queries, "Query checkpoints 1..N")->capture_default_str();
    export_curves->add_option("--horizon", horizon, "Last time checkpoint (seconds)")->capture_default_str();
    export_curves->add_option("--step", step, "Time checkpoint step (seconds)")->capture_default_str();
    export_curves->add_option("--doc-base", sdcg_params.doc_log_base, "Rank discount log base")->capture_default_str();
    export_curves->add_option("--query-base", sdcg_params.query_log_base, "Query discount log base")
        ->capture_default_str();
    export_curves->add_option("logs", log_args, "Log files or directories")->required();

    // data synth
    auto *data_cmd = app.add_subcommand("data", "Input data utilities");
    data_cmd->require_subcommand(1);
    auto *data_synth = data_cmd->add_subcommand("synth", "Write a synthetic collection and an example config");
    SyntheticOptions synth;
    std::string synth_out;
    data_synth->add_option("--out", synth_out, "Output directory")->required();
    data_synth->add_option("--tables", synth.num_tables, "Number of tables")->capture_default_str();
    data_synth->add_option("--topics", synth.num_topics, "Number of topics")->capture_default_str();
    data_synth->add_option("--variants", synth.variants_per_topic, "Static query variants per topic")
        ->capture_default_str();
    data_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : exit_input_error;
    }

    try {
        if (*index_build) {
            auto corpus = load_corpus(corpus_path);
            auto index = Index::build(corpus, field_weights_from(parse_weights(weight_specs)), bm25);
            index.save(index_out);
            std::cerr << "indexed " << index.size() << " tables, " << index.lexicon().df.size() << " terms, avgdl "
                      << index.lexicon().avg_doc_length << "\n";
        } else if (*sim_run) {
            auto config = load_experiment_config(config_path, overrides);
            config.topics = {topic_id};
            auto cells = expand_grid(config);
            if (cell_index >= cells.size()) {
                throw InputError("--cell " + std::to_string(cell_index) + " out of range (grid has " +
                                 std::to_string(cells.size()) + " cells)");
            }
            const auto &cell = cells[cell_index];
            auto inputs = load_experiment_inputs(config);
            auto index = Index::build(inputs.corpus, field_weights_from(config.field_weights), config.bm25);
            std::unique_ptr<TermSuggester> suggester;
            bool use_file = config.suggester == SuggesterKind::file ||
                            (config.suggester == SuggesterKind::automatic && inputs.suggestions);
            if (use_file) {
                suggester = std::make_unique<FileTermSuggester>(*inputs.suggestions);
            } else {
                suggester = std::make_unique<TfIdfTermSuggester>(index, config.tfidf_top_m);
            }
            const auto &topic = inputs.qrels.at(topic_id);
            std::unique_ptr<QueryStrategy> strategy;
            if (cell.strategy == StrategyKind::static_variants) {
                strategy = std::make_unique<StaticQueryStrategy>(inputs.variants.at(topic_id).variants);
            } else {
                strategy = std::make_unique<KnowledgeQueryStrategy>(topic.topic_query, index, *suggester,
                                                                    inputs.stopwords, config.keyword_filter,
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
            emit(session_log_to_jsonl(log), log_out);
        } else if (*sim_sweep) {
            auto config = load_experiment_config(config_path, overrides);
            if (sim_sweep->count("--threads") > 0) {
                config.threads = threads;
            }
            RunOptions ro;
            ro.force = force;
            ro.on_cell_done = [](const GridCell &cell, std::size_t done, std::size_t total) {
                std::cerr << "cell " << cell.config_id << " done (" << done << "/" << total << ")\n";
            };
            auto result = run_experiment(config, ro);
            std::cerr << "wrote " << (result.directory / "manifest.json").string() << " (" << result.cells.size()
                      << " cells, " << result.sessions_run << " sessions run, " << result.cells_reused
                      << " cells reused)\n";
        } else if (*eval_sdcg) {
            std::cout << raw_curve_csv(sdcg_curve(load_session_log(log_path), sdcg_params), "query", "sdcg");
        } else if (*eval_time) {
            std::cout << raw_curve_csv(time_gain_curve(load_session_log(log_path)), "seconds", "gain");
        } else if (*export_curves) {
            std::vector<GainCurve> curves;
            for (const auto &p : collect_logs(log_args)) {
                auto log = load_session_log(p);
                curves.push_back(paradigm == "sdcg" ? sdcg_curve(log, sdcg_params) : time_gain_curve(log));
            }
            auto checkpoints = paradigm == "sdcg" ? query_checkpoints(max_queries) : time_checkpoints(horizon, step);
            emit(curve_csv(mean_curve(curves, checkpoints)), curve_out);
        } else if (*data_synth) {
            auto ds = make_synthetic_dataset(synth);
            ds.write(synth_out);
            write_file_atomic(fs::path(synth_out) / "config.json", example_config().dump(2) + "\n");
            std::cerr << "wrote " << ds.corpus.size() << " tables and " << ds.qrels.size() << " topics to "
                      << synth_out << "\n";
        }
    } catch (const InputError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime_error;
    }
    return 0;
}

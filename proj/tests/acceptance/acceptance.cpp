// Acceptance gate: one PASS/FAIL line per check, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bm25_oracle.hpp"
#include "sdcg_oracle.hpp"
#include "tablesim/eval.hpp"
#include "tablesim/experiment.hpp"
#include "tablesim/querygen.hpp"
#include "tablesim/simulator.hpp"
#include "tablesim/synthetic.hpp"
#include "test_support.hpp"

using namespace tablesim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream os;
    os.precision(precision);
    os << std::fixed << v;
    return os.str();
}

/// Shared synthetic collection: 500 tables, 30 topics.
struct World {
    SyntheticDataset data = make_synthetic_dataset();
    Index index = Index::build(data.corpus, uniform_field_weights());
    FileTermSuggester suggester{data.suggestions};
    std::set<std::string> stopwords = default_stopwords();

    std::unique_ptr<QueryStrategy> strategy(StrategyKind kind, const TopicQrels &topic,
                                            std::size_t static_variants = 0) const
    {
        if (kind == StrategyKind::static_variants) {
            auto v = data.variants.at(topic.topic_id).variants;
            if (static_variants > 0 && v.size() > static_variants) {
                v.resize(static_variants);
            }
            return std::make_unique<StaticQueryStrategy>(std::move(v));
        }
        return std::make_unique<KnowledgeQueryStrategy>(topic.topic_query, index, suggester, stopwords,
                                                        KeywordFilter{}, kind == StrategyKind::d2q_feedback);
    }

    SessionLog run(StrategyKind kind, const TopicQrels &topic, const UserProfile &profile,
                   std::size_t static_variants = 0) const
    {
        auto s = strategy(kind, topic, static_variants);
        SessionOptions opts;
        opts.config_id = std::string(strategy_name(kind));
        return run_session(topic, data.corpus, index, *s, profile, CostModel{}, opts);
    }
};

double final_value(const GainCurve &c)
{
    return c.points.empty() ? 0.0 : c.points.back().y;
}

Outcome c1_sdcg_oracle()
{
    auto start = Clock::now();
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        SessionGains g(1 + rng() % 5);
        for (auto &row : g) {
            row.resize(rng() % 11);
            for (auto &v : row) {
                v = static_cast<double>(rng() % 3);
            }
        }
        double a = sdcg(g);
        double b = test::brute_force_sdcg(g);
        double rel = a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
        worst = std::max(worst, rel);
    }
    double t = seconds_since(start);
    return {worst <= 1e-12 && t < 5.0, "max rel err " + std::to_string(worst) + ", " + fmt(t, 3) + " s"};
}

Outcome c2_constants()
{
    double a = sdcg({{1, 0, 2}});
    double b = sdcg({{}, {1, 0, 2}});
    bool ok = std::abs(a - 1.7737) <= 1e-4 && std::abs(b - 1.1825) <= 1e-4;
    return {ok, "q1 " + fmt(a) + ", q2 " + fmt(b)};
}

Outcome c3_bm25_oracle()
{
    auto start = Clock::now();
    std::mt19937_64 rng(303);
    std::vector<std::string> vocab;
    for (int i = 0; i < 30; ++i) {
        vocab.push_back("w" + std::to_string(i));
    }
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Table> tables;
        for (int d = 0, n = 1 + static_cast<int>(rng() % 20); d < n; ++d) {
            std::string title, before;
            for (int k = 0, len = static_cast<int>(rng() % 8); k < len; ++k) {
                title += vocab[rng() % vocab.size()] + " ";
            }
            for (int k = 0, len = static_cast<int>(rng() % 6); k < len; ++k) {
                before += vocab[rng() % vocab.size()] + " ";
            }
            if (title.empty() && before.empty()) {
                title = vocab[rng() % vocab.size()];
            }
            tables.push_back(test::make_table("d" + std::to_string(d), title, before));
        }
        Corpus corpus(std::move(tables));
        auto index = Index::build(corpus, uniform_field_weights());
        test::BruteForceBm25 oracle(corpus);
        std::vector<std::string> query;
        std::string text;
        for (int k = 0, len = 1 + static_cast<int>(rng() % 5); k < len; ++k) {
            query.push_back(vocab[rng() % vocab.size()]);
            text += query.back() + " ";
        }
        auto ranking = index.search(text, corpus.size());
        std::vector<std::string> ids;
        for (const auto &e : ranking.entries) {
            ids.push_back(e.table_id);
        }
        mismatches += ids != oracle.ranking(query);
    }
    double t = seconds_since(start);
    return {mismatches == 0 && t < 10.0, std::to_string(mismatches) + "/100 mismatches, " + fmt(t, 3) + " s"};
}

Outcome c4_keyword_filter()
{
    Corpus corpus({test::make_table("a", "common rare the"), test::make_table("b", "common"),
                   test::make_table("c", "common"), test::make_table("d", "other")});
    auto index = Index::build(corpus, uniform_field_weights());
    FileTermSuggester sugg({{"a", {"common", "rare", "the"}}});
    std::vector<const Table *> tables{&corpus.at("a")};
    auto kept = extract_keywords(tables, sugg, index, default_stopwords());
    bool idf_ok = std::abs(index.idf("common") - 0.2877) < 1e-4 && std::abs(index.idf("rare") - 1.3863) < 1e-4;
    bool ok = idf_ok && kept == std::set<std::string>{"rare"};
    std::string got;
    for (const auto &k : kept) {
        got += k + " ";
    }
    return {ok, "idf(common) " + fmt(index.idf("common")) + ", idf(rare) " + fmt(index.idf("rare")) + ", kept { " +
                    got + "}"};
}

Outcome c5_strategy_order(const World &w)
{
    auto start = Clock::now();
    std::map<StrategyKind, double> mean;
    for (auto kind : {StrategyKind::static_variants, StrategyKind::d2q, StrategyKind::d2q_feedback}) {
        double total = 0.0;
        std::size_t n = 0;
        for (const auto &[id, topic] : w.data.qrels) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                UserProfile p;
                p.click_model = ClickModel::modality_probabilistic;
                p.p_click_rel = 0.8;
                p.p_click_nonrel = 0.3;
                p.seed = seed;
                total += final_value(sdcg_curve(w.run(kind, topic, p)));
                ++n;
            }
        }
        mean[kind] = total / static_cast<double>(n);
    }
    double t = seconds_since(start);
    double st = mean[StrategyKind::static_variants];
    double d2q = mean[StrategyKind::d2q];
    double fb = mean[StrategyKind::d2q_feedback];
    bool ok = fb >= d2q && d2q >= st && fb >= 1.05 * st && t < 120.0;
    return {ok, "d2q_feedback " + fmt(fb) + " >= d2q " + fmt(d2q) + " >= static " + fmt(st) + " (+" +
                    fmt(100.0 * (fb / st - 1.0), 1) + " %), " + fmt(t, 2) + " s"};
}

Outcome c6_plateau(const World &w)
{
    const double budget = 3600.0;
    auto grid = time_checkpoints(budget, 10.0);
    auto run_all = [&](StrategyKind kind, std::size_t variants, double &last_action) {
        std::vector<GainCurve> curves;
        last_action = 0.0;
        for (const auto &[id, topic] : w.data.qrels) {
            UserProfile p;
            p.click_model = ClickModel::modality_probabilistic;
            p.p_click_rel = 0.8;
            p.p_click_nonrel = 0.3;
            p.max_queries = 100;
            p.time_budget = budget;
            p.seed = 6;
            auto log = w.run(kind, topic, p, variants);
            last_action = std::max(last_action, log.actions.back().elapsed);
            curves.push_back(time_gain_curve(log));
        }
        return mean_curve(curves, grid).means();
    };
    double static_end = 0.0, fb_end = 0.0;
    auto st = run_all(StrategyKind::static_variants, 5, static_end);
    auto fb = run_all(StrategyKind::d2q_feedback, 0, fb_end);

    bool flat = true;
    double plateau = evaluate_step(st, static_end);
    for (const auto &pt : st.points) {
        if (pt.x >= static_end && pt.y != plateau) {
            flat = false;
        }
    }
    std::size_t growth = 0;
    for (std::size_t i = 1; i < fb.points.size(); ++i) {
        if (fb.points[i].x > static_end && fb.points[i].y > fb.points[i - 1].y) {
            ++growth;
        }
    }
    bool ok = flat && growth >= 1 && static_end < budget;
    return {ok, "static ends at " + fmt(static_end, 0) + " s (plateau " + fmt(plateau) + ", " +
                    (flat ? "flat" : "NOT flat") + "); d2q_feedback grows at " + std::to_string(growth) +
                    " later checkpoints, final " + fmt(fb.points.back().y)};
}

Outcome c7_depth_order(const World &w)
{
    const std::vector<std::size_t> depths{5, 10, 20};
    std::vector<std::vector<GainCurve>> curves(depths.size());
    std::size_t topic_violations = 0;
    std::string first_violation;
    for (const auto &[id, topic] : w.data.qrels) {
        std::vector<double> finals;
        for (std::size_t d = 0; d < depths.size(); ++d) {
            UserProfile p;
            p.click_model = ClickModel::oracle;
            p.browsing_depth = depths[d];
            p.seed = 7;
            curves[d].push_back(sdcg_curve(w.run(StrategyKind::static_variants, topic, p)));
            finals.push_back(final_value(curves[d].back()));
        }
        if (!(finals[0] <= finals[1] && finals[1] <= finals[2])) {
            if (topic_violations++ == 0) {
                first_violation = " (first: " + id + " " + fmt(finals[0]) + "/" + fmt(finals[1]) + "/" +
                                  fmt(finals[2]) + ")";
            }
        }
    }
    auto grid = query_checkpoints(10);
    std::vector<GainCurve> means;
    for (auto &c : curves) {
        means.push_back(mean_curve(c, grid).means());
    }
    std::size_t point_violations = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t d = 1; d < depths.size(); ++d) {
            point_violations += means[d].points[i].y < means[d - 1].points[i].y;
        }
    }
    bool ok = topic_violations == 0 && point_violations == 0;
    return {ok, std::to_string(topic_violations) + " topic violations" + first_violation + ", " +
                    std::to_string(point_violations) + " checkpoint violations; final means " +
                    fmt(means[0].points.back().y) + " <= " + fmt(means[1].points.back().y) + " <= " +
                    fmt(means[2].points.back().y)};
}

Outcome c8_click_calibration()
{
    UserProfile p;
    p.click_model = ClickModel::modality_probabilistic;
    p.p_click_rel = 0.7;
    p.p_click_nonrel = 0.7;
    SessionRng rng(derive_session_seed(8, "calibration", ""));
    const int n = 100000;
    int clicks = 0;
    for (int i = 0; i < n; ++i) {
        clicks += click_decision(i % 2 == 0, 0, p, rng);
    }
    double rate = clicks / static_cast<double>(n);
    return {std::abs(rate - 0.7) <= 0.01, "click rate " + fmt(rate)};
}

std::map<std::string, std::string> snapshot(const fs::path &dir)
{
    std::map<std::string, std::string> out;
    for (const auto &e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
        }
    }
    return out;
}

json synthetic_config(const json &click_probabilities)
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
              {"click_probabilities", click_probabilities}}},
            {"session", {{"max_queries", 10}}},
            {"seed", 42}};
}

RunOptions quiet()
{
    RunOptions o;
    o.warn = [](const std::string &) {};
    return o;
}

Outcome c9_dedup_determinism(const World &w, const fs::path &data_dir)
{
    // (a) A relevant table retrieved by both queries versus by only one of them.
    auto build = [](const std::string &shared_text) {
        return Corpus({test::make_table("a", "alpha"), test::make_table("b", "beta"),
                       test::make_table("shared", shared_text), test::make_table("noise", "gamma alpha beta gamma")});
    };
    TopicQrels q;
    q.topic_id = "dup";
    q.table_grades = {{"a", 1}, {"b", 2}, {"shared", 2}, {"noise", 0}};
    UserProfile oracle;
    oracle.click_model = ClickModel::oracle;
    long long gains[2];
    int idx = 0;
    for (const auto *text : {"alpha beta", "alpha delta"}) {
        auto corpus = build(text);
        auto index = Index::build(corpus, uniform_field_weights());
        StaticQueryStrategy s({"alpha", "beta"});
        gains[idx++] = run_session(q, corpus, index, s, oracle, CostModel{}).total_gain;
    }
    bool dedup = gains[0] == 5 && gains[1] == 5;

    // Same check on every synthetic session: gain is the sum of distinct credited grades.
    std::size_t inconsistent = 0;
    for (const auto &[id, topic] : w.data.qrels) {
        UserProfile p;
        p.click_model = ClickModel::random;
        p.seed = 9;
        auto log = w.run(StrategyKind::static_variants, topic, p, 10);
        long long distinct = 0;
        for (const auto &t : log.seen_tables) {
            distinct += topic.grade(t);
        }
        inconsistent += distinct != log.total_gain;
    }
    dedup = dedup && inconsistent == 0;

    // (b) Two runs with 1 and 8 worker threads.
    auto cfg_json = synthetic_config({{0.8, 0.3}, {0.5, 0.5}});
    cfg_json["grid"]["strategies"] = {"static", "d2q_feedback"};
    auto config = parse_experiment_config(cfg_json, data_dir);
    config.output_dir = data_dir / "det_1";
    config.threads = 1;
    run_experiment(config, quiet());
    config.output_dir = data_dir / "det_8";
    config.threads = 8;
    run_experiment(config, quiet());
    config.output_dir = data_dir / "det_8b";
    run_experiment(config, quiet());
    auto s1 = snapshot(data_dir / "det_1");
    bool identical = s1 == snapshot(data_dir / "det_8") && s1 == snapshot(data_dir / "det_8b");

    return {dedup && identical, "dup gains " + std::to_string(gains[0]) + "/" + std::to_string(gains[1]) + ", " +
                                    std::to_string(inconsistent) + " inconsistent sessions; " +
                                    std::to_string(s1.size()) + " files " +
                                    (identical ? "byte-identical" : "DIFFER") + " across runs and threads 1/8"};
}

Outcome c10_click_grid(const fs::path &data_dir)
{
    auto start = Clock::now();
    auto cfg = synthetic_config({{0.6, 0.3}, {0.7, 0.3}, {0.8, 0.3}, {0.9, 0.3}, {0.5, 0.5}, {1.0, 0.0}});
    auto config = parse_experiment_config(cfg, data_dir);
    config.output_dir = data_dir / "click_grid";
    auto result = run_experiment(config, quiet());
    double t = seconds_since(start);

    std::size_t csvs = 0, parse_errors = 0, missing = 0;
    for (const auto &cell : result.cells) {
        auto dir = cell_directory(config.output_dir, cell);
        for (const auto *name : {"sdcg.csv", "timegain.csv"}) {
            if (!fs::exists(dir / name)) {
                ++missing;
                continue;
            }
            ++csvs;
            try {
                auto curve = parse_curve_csv(read_file(dir / name), (dir / name).string());
                if (curve.points.empty() || curve.points.front().n != 30) {
                    ++parse_errors;
                }
            } catch (const std::exception &) {
                ++parse_errors;
            }
        }
    }
    bool ok = result.cells.size() == 6 && missing == 0 && parse_errors == 0 && t < 300.0;
    return {ok, std::to_string(result.cells.size()) + " cells, " + std::to_string(result.sessions_run) +
                    " sessions, " + std::to_string(csvs) + " curve CSVs, " + std::to_string(parse_errors) +
                    " parse errors, " + fmt(t, 2) + " s"};
}

}  // namespace

int main()
{
    test::TempDir dir("acceptance");
    World world;
    world.data.write(dir.path());

    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1 sDCG oracle equivalence", c1_sdcg_oracle},
        {"C2 sDCG hand-checked constants", c2_constants},
        {"C3 BM25 brute-force oracle", c3_bm25_oracle},
        {"C4 keyword idf filter", c4_keyword_filter},
        {"C5 strategy ordering", [&] { return c5_strategy_order(world); }},
        {"C6 variant-exhaustion plateau", [&] { return c6_plateau(world); }},
        {"C7 browsing-depth ordering", [&] { return c7_depth_order(world); }},
        {"C8 click-frequency calibration", c8_click_calibration},
        {"C9 dedup and determinism", [&] { return c9_dedup_determinism(world, dir.path()); }},
        {"C10 six-cell click-model sweep", [&] { return c10_click_grid(dir.path()); }},
    };

    int failures = 0;
    for (const auto &[name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}

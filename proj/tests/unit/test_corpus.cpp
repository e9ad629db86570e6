#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "tablesim/corpus.hpp"
#include "test_support.hpp"

using namespace tablesim;

namespace {

Corpus corpus_from(const std::string &jsonl)
{
    std::istringstream in(jsonl);
    return parse_corpus(in, "test.jsonl");
}

std::string error_of(auto &&fn)
{
    try {
        fn();
    } catch (const InputError &e) {
        return e.what();
    }
    return {};
}

QrelsByTopic qrels_from(const std::string &tables, const std::string &modalities, const Corpus *corpus,
                        std::vector<std::string> *warnings = nullptr)
{
    std::istringstream t(tables);
    std::istringstream m(modalities);
    return parse_qrels(t, m, corpus, [&](const std::string &w) {
        if (warnings != nullptr) {
            warnings->push_back(w);
        }
    });
}

}  // namespace

TEST_CASE("load_corpus reads one table per line")
{
    test::TempDir dir("corpus");
    auto path = dir.write("c.jsonl", R"({"id":"t1","page_title":"a"}
{"id":"t2","page_title":"b","entities":["x","y"]}
{"id":"t3","table":{"headers":["h1","h2"],"rows":[["1","2"]]}}
)");
    auto corpus = load_corpus(path);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus[0].id == "t1");
    CHECK(corpus.at("t2").entities == std::vector<std::string>{"x", "y"});
    CHECK(corpus.at("t3").table.rows.size() == 1);
}

TEST_CASE("missing modality fields default to empty")
{
    auto corpus = corpus_from(R"({"id":"t1","page_title":"p","text_after":"after"})");
    const auto &t = corpus.at("t1");
    CHECK(t.text_before.empty());
    CHECK(t.entities.empty());
    CHECK(t.table.headers.empty());
    CHECK(modality_text(t, Modality::text_after) == "after");
}

TEST_CASE("corpus loading errors")
{
    SUBCASE("duplicate id names the id")
    {
        auto msg = error_of([] { corpus_from("{\"id\":\"t1\",\"page_title\":\"a\"}\n{\"id\":\"t1\",\"page_title\":\"b\"}\n"); });
        CHECK(msg.find("duplicate") != std::string::npos);
        CHECK(msg.find("'t1'") != std::string::npos);
        CHECK(msg.find(":2:") != std::string::npos);
    }
    SUBCASE("malformed line reports its number")
    {
        auto msg = error_of([] { corpus_from("{\"id\":\"t1\",\"page_title\":\"a\"}\n\n{not json\n"); });
        CHECK(msg.find("test.jsonl:3:") != std::string::npos);
    }
    SUBCASE("missing id")
    {
        auto msg = error_of([] { corpus_from("{\"page_title\":\"a\"}\n"); });
        CHECK(msg.find("id") != std::string::npos);
    }
    SUBCASE("ragged rows")
    {
        auto msg = error_of([] { corpus_from(R"({"id":"t","table":{"headers":["a","b"],"rows":[["1"]]}})"); });
        CHECK(msg.find("headers") != std::string::npos);
    }
    SUBCASE("all fields empty")
    {
        CHECK_FALSE(error_of([] { corpus_from(R"({"id":"t"})"); }).empty());
    }
}

TEST_CASE("modality text joins list fields")
{
    Table t;
    t.id = "x";
    t.entities = {"Lionel Messi", "Argentina"};
    t.table.headers = {"year", "host"};
    t.table.rows = {{"2018", "Russia"}, {"2022", "Qatar"}};
    CHECK(modality_text(t, Modality::entities) == "Lionel Messi Argentina");
    CHECK(modality_text(t, Modality::table_content) == "year host 2018 Russia 2022 Qatar");
}

TEST_CASE("serialize and reload reproduces random corpora")
{
    std::mt19937_64 rng(7);
    auto word = [&] {
        static const char *pool[] = {"fifa", "world", "cup", "\"quoted\"", "tab\there", "ünïcode", "", "a b"};
        return std::string(pool[rng() % 8]);
    };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Table> tables;
        auto n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            Table t;
            t.id = "id" + std::to_string(i);
            t.page_title = word() + "x";
            t.text_before = word();
            t.text_after = word();
            for (auto k = rng() % 3; k > 0; --k) {
                t.entities.push_back(word());
            }
            auto cols = rng() % 3;
            for (std::size_t c = 0; c < cols; ++c) {
                t.table.headers.push_back(word());
            }
            for (auto r = rng() % 3; r > 0; --r) {
                std::vector<std::string> row;
                for (std::size_t c = 0; c < cols; ++c) {
                    row.push_back(word());
                }
                if (cols > 0) {
                    t.table.rows.push_back(row);
                }
            }
            tables.push_back(t);
        }
        Corpus original(tables);
        CHECK(corpus_from(serialize_corpus(original)) == original);
    }
}

TEST_CASE("load_qrels parses grades and modality flags")
{
    auto corpus = corpus_from("{\"id\":\"t1\",\"page_title\":\"a\"}\n");
    std::vector<std::string> warnings;
    auto q = qrels_from("T1 t1 2\nT1 t9 1\n", "T1 t1 page_title 1\nT1 t1 entities 0\n", &corpus, &warnings);
    const auto &topic = q.at("T1");
    CHECK(topic.grade("t1") == 2);
    CHECK(topic.grade("t9") == 1);
    CHECK(topic.grade("nope") == 0);
    CHECK(topic.modality_relevant("t1", Modality::page_title));
    CHECK_FALSE(topic.modality_relevant("t1", Modality::entities));
    CHECK_FALSE(topic.modality_relevant("t1", Modality::text_after));
    CHECK(topic.unpooled == std::set<std::string>{"t9"});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("t9") != std::string::npos);
}

TEST_CASE("qrels errors")
{
    CHECK(error_of([] { qrels_from("T1 t1 -1\n", "", nullptr); }).find("negative") != std::string::npos);
    auto msg = error_of([] { qrels_from("", "T1 t1 title 1\n", nullptr); });
    for (auto m : all_modalities) {
        CHECK(msg.find(std::string(modality_name(m))) != std::string::npos);
    }
    CHECK_FALSE(error_of([] { qrels_from("T1 t1 x\n", "", nullptr); }).empty());
    CHECK_FALSE(error_of([] { qrels_from("T1 t1 1\nT1 t1 2\n", "", nullptr); }).empty());
    CHECK_FALSE(error_of([] { qrels_from("", "T1 t1 page_title 2\n", nullptr); }).empty());
}

TEST_CASE("modality-only ids are flagged unpooled")
{
    std::vector<std::string> warnings;
    auto q = qrels_from("T1 t1 1\n", "T1 t2 page_title 1\n", nullptr, &warnings);
    CHECK(q.at("T1").unpooled.contains("t2"));
    CHECK(warnings.size() == 1);
}

TEST_CASE("qrels loading is independent of line order")
{
    std::vector<std::string> tq;
    std::vector<std::string> mq;
    for (int t = 1; t <= 3; ++t) {
        for (int d = 1; d <= 6; ++d) {
            auto topic = "T" + std::to_string(t);
            auto id = "d" + std::to_string(d);
            tq.push_back(topic + " " + id + " " + std::to_string((t * d) % 3));
            mq.push_back(topic + " " + id + " page_title " + std::to_string((t + d) % 2));
            mq.push_back(topic + " " + id + " entities " + std::to_string(d % 2));
        }
    }
    tq.push_back("T1 d99 1");
    auto join = [](const std::vector<std::string> &lines) {
        std::string s;
        for (const auto &l : lines) {
            s += l + "\n";
        }
        return s;
    };
    auto corpus = corpus_from("{\"id\":\"d1\",\"page_title\":\"a\"}\n");
    auto reference = qrels_from(join(tq), join(mq), &corpus);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(tq.begin(), tq.end(), rng);
        std::shuffle(mq.begin(), mq.end(), rng);
        CHECK(qrels_from(join(tq), join(mq), &corpus) == reference);
    }
}

TEST_CASE("topic queries attach to qrels")
{
    auto q = qrels_from("T1 t1 1\n", "", nullptr);
    assign_topic_queries(q, parse_topics(R"({"T1": "world cup", "T2": "unused"})"));
    CHECK(q.at("T1").topic_query == "world cup");
    auto q2 = qrels_from("T3 t1 1\n", "", nullptr);
    CHECK_THROWS_AS(assign_topic_queries(q2, parse_topics(R"({"T1": "x"})")), InputError);
    CHECK_THROWS_AS(parse_topics(R"({"T1": ""})"), InputError);
}

TEST_CASE("query variants keep order and drop empty strings")
{
    std::vector<std::string> warnings;
    auto sink = [&](const std::string &w) { warnings.push_back(w); };
    auto v = parse_query_variants(R"({"T1": ["a b", "c"]})", sink);
    CHECK(v.at("T1").variants == std::vector<std::string>{"a b", "c"});
    CHECK(warnings.empty());

    auto dropped = parse_query_variants(R"({"T1": ["a", "", "a"]})", sink);
    CHECK(dropped.at("T1").variants == std::vector<std::string>{"a", "a"});
    CHECK(warnings.size() == 1);

    CHECK_THROWS_AS(parse_query_variants(R"({"T1": []})", sink), InputError);
    CHECK_THROWS_AS(parse_query_variants(R"({"T1": [""]})", sink), InputError);
    CHECK_THROWS_AS(parse_query_variants(R"(["a"])", sink), InputError);
}

TEST_CASE("term suggestions are trimmed and unknown ids reported once")
{
    std::vector<std::string> warnings;
    auto sink = [&](const std::string &w) { warnings.push_back(w); };
    auto s = parse_term_suggestions(R"({"t1": ["  fifa ", "", "cup"], "ghost": ["x"], "ghost2": []})", sink);
    CHECK(s.at("t1") == std::vector<std::string>{"fifa", "cup"});
    CHECK(warnings.size() == 1);

    warnings.clear();
    auto corpus = corpus_from("{\"id\":\"t1\",\"page_title\":\"a\"}\n");
    auto unknown = report_unknown_suggestion_ids(s, corpus, sink);
    CHECK(unknown == std::vector<std::string>{"ghost", "ghost2"});
    CHECK(warnings.size() == 2);
}

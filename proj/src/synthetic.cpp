#include "tablesim/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "tablesim/digest.hpp"

namespace tablesim {

namespace {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : m_engine(splitmix64(seed)) {}

    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return uniform() < p; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    template <typename T>
    const T &pick(const std::vector<T> &v) { return v[below(v.size())]; }

    template <typename T>
    void shuffle(std::vector<T> &v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// k distinct elements, in draw order.
    template <typename T>
    std::vector<T> sample(const std::vector<T> &v, std::size_t k)
    {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        k = std::min(k, v.size());
        std::vector<T> out;
        for (std::size_t i = 0; i < k; ++i) {
            auto j = i + below(idx.size() - i);
            std::swap(idx[i], idx[j]);
            out.push_back(v[idx[i]]);
        }
        return out;
    }

private:
    std::mt19937_64 m_engine;
};

constexpr std::array<std::string_view, 16> syllables{"ka", "lo", "mi", "nu", "pe", "ra", "si", "to",
                                                     "vu", "ze", "bo", "di", "fa", "gu", "ho", "ja"};

std::string pseudo_word(std::size_t i)
{
    std::string w;
    for (int k = 0; k < 3; ++k) {
        w += syllables[i % syllables.size()];
        i /= syllables.size();
    }
    if (i > 0) {
        w += syllables[i % syllables.size()];
    }
    return w;
}

const std::vector<std::string> fillers{"data", "table", "list"};
const std::vector<std::string> function_words{"the", "of", "and", "in", "for"};

std::string sentence(std::vector<std::string> words, Draw &draw)
{
    draw.shuffle(words);
    std::string out;
    for (const auto &w : words) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += w;
    }
    return out;
}

struct TopicPlan {
    std::string id;
    std::vector<std::string> query_words;
    std::vector<std::string> injected;
    std::vector<std::string> distractor_words;
};

enum class Role { background, relevant, distractor };

struct TablePlan {
    Role role = Role::background;
    std::size_t topic = 0;
    int grade = 0;
};

}  // namespace

SyntheticDataset make_synthetic_dataset(const SyntheticOptions &o)
{
    const std::size_t per_topic = o.relevant_per_topic + o.distractors_per_topic;
    if (o.num_topics == 0 || o.num_tables < o.num_topics * per_topic) {
        throw InputError("synthetic: num_tables must cover relevant and distractor tables of every topic");
    }
    Draw draw(o.seed);

    std::vector<std::string> general;
    for (std::size_t i = 0; i < o.general_vocabulary; ++i) {
        general.push_back(pseudo_word(i));
    }
    std::size_t next_word = o.general_vocabulary;
    auto fresh = [&](std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(pseudo_word(next_word++));
        }
        return out;
    };

    std::vector<TopicPlan> topics;
    for (std::size_t t = 0; t < o.num_topics; ++t) {
        topics.push_back({"T" + std::to_string(t + 1), fresh(2), fresh(o.injected_terms_per_topic),
                          fresh(o.distractor_terms_per_topic)});
    }

    std::vector<TablePlan> plan(o.num_tables);
    {
        std::size_t k = 0;
        for (std::size_t t = 0; t < o.num_topics; ++t) {
            for (std::size_t r = 0; r < o.relevant_per_topic; ++r) {
                plan[k++] = {Role::relevant, t, draw.chance(0.5) ? 2 : 1};
            }
            for (std::size_t r = 0; r < o.distractors_per_topic; ++r) {
                plan[k++] = {Role::distractor, t, 0};
            }
        }
        draw.shuffle(plan);
    }

    SyntheticDataset ds;
    std::vector<Table> tables;
    for (std::size_t i = 0; i < o.num_tables; ++i) {
        const auto &p = plan[i];
        Table t;
        t.id = "tab" + std::to_string(i + 1);
        auto gen = [&](std::size_t n) { return draw.sample(general, n); };

        std::vector<std::string> title = gen(2);
        std::vector<std::string> before = gen(4);
        std::vector<std::string> after = gen(4);
        std::vector<std::string> entities = gen(3);
        std::vector<std::string> cells = gen(9);
        std::vector<std::string> key_terms;

        before.push_back(draw.pick(function_words));
        after.push_back(draw.pick(function_words));
        if (draw.chance(0.9)) {
            before.push_back(draw.pick(fillers));
        }
        if (draw.chance(0.9)) {
            after.push_back("data");
        }

        if (p.role == Role::relevant) {
            const auto &topic = topics[p.topic];
            for (const auto &q : topic.query_words) {
                if (draw.chance(o.query_word_coverage)) {
                    (draw.chance(0.5) ? title : before).push_back(q);
                    key_terms.push_back(q);
                }
            }
            for (const auto &w : draw.sample(topic.injected, o.injected_terms_per_table)) {
                switch (draw.below(3)) {
                case 0:
                    title.push_back(w);
                    break;
                case 1:
                    cells[draw.below(cells.size())] = w;
                    break;
                default:
                    after.push_back(w);
                    break;
                }
                key_terms.push_back(w);
            }
        } else if (p.role == Role::distractor) {
            const auto &topic = topics[p.topic];
            for (const auto &q : topic.query_words) {
                title.push_back(q);
                key_terms.push_back(q);
            }
            for (const auto &w : draw.sample(topic.distractor_words, 2)) {
                before.push_back(w);
                key_terms.push_back(w);
            }
        }
        // A couple of incidental content words, as a document-expansion model would emit.
        key_terms.push_back(title.front());
        key_terms.push_back(cells.front());
        key_terms.push_back("data");
        key_terms.push_back("the");

        t.page_title = sentence(title, draw);
        t.text_before = sentence(before, draw);
        t.text_after = sentence(after, draw);
        t.entities = entities;
        t.table.headers = {cells[0], cells[1], cells[2]};
        t.table.rows = {{cells[3], cells[4], cells[5]}, {cells[6], cells[7], cells[8]}};
        ds.suggestions[t.id] = key_terms;
        tables.push_back(std::move(t));
    }
    ds.corpus = Corpus(std::move(tables));

    std::ostringstream tq;
    std::ostringstream mq;
    for (std::size_t tp = 0; tp < topics.size(); ++tp) {
        const auto &topic = topics[tp];
        ds.topics[topic.id] = topic.query_words[0] + " " + topic.query_words[1];
        std::vector<std::size_t> judged;
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (plan[i].role != Role::background && plan[i].topic == tp) {
                judged.push_back(i);
            }
        }
        for (int extra = 0; extra < 3; ++extra) {
            auto i = draw.below(plan.size());
            if (std::find(judged.begin(), judged.end(), i) == judged.end() &&
                (plan[i].role == Role::background || plan[i].topic != tp)) {
                judged.push_back(i);
            }
        }
        std::sort(judged.begin(), judged.end());
        for (auto i : judged) {
            const auto &id = ds.corpus[i].id;
            int grade = plan[i].topic == tp ? plan[i].grade : 0;
            tq << topic.id << ' ' << id << ' ' << grade << '\n';
            for (auto m : all_modalities) {
                bool rel = grade > 0;
                if (draw.chance(o.modality_flip[static_cast<std::size_t>(m)])) {
                    rel = !rel;
                }
                mq << topic.id << ' ' << id << ' ' << modality_name(m) << ' ' << (rel ? 1 : 0) << '\n';
            }
        }

        QueryVariantSet vs{topic.id, {}};
        for (std::size_t v = 0; v < o.variants_per_topic; ++v) {
            vs.variants.push_back(ds.topics[topic.id] + " " + draw.pick(general));
        }
        ds.variants.emplace(topic.id, std::move(vs));
    }
    ds.table_qrels_text = tq.str();
    ds.modality_qrels_text = mq.str();
    std::istringstream tin(ds.table_qrels_text);
    std::istringstream min(ds.modality_qrels_text);
    ds.qrels = parse_qrels(tin, min, &ds.corpus, [](const std::string &) {});
    assign_topic_queries(ds.qrels, ds.topics);
    return ds;
}

void SyntheticDataset::write(const std::filesystem::path &dir) const
{
    using nlohmann::json;
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "corpus.jsonl", serialize_corpus(corpus));
    write_file_atomic(dir / "topics.json", json(topics).dump(2) + "\n");
    write_file_atomic(dir / "qrels.txt", table_qrels_text);
    write_file_atomic(dir / "modality_qrels.txt", modality_qrels_text);
    json v = json::object();
    for (const auto &[id, set] : variants) {
        v[id] = set.variants;
    }
    write_file_atomic(dir / "variants.json", v.dump(2) + "\n");
    write_file_atomic(dir / "suggestions.json", json(suggestions).dump(2) + "\n");
}

}  // namespace tablesim

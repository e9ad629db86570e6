#include "tablesim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "tablesim/digest.hpp"

namespace tablesim {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> modality_names{"page_title", "text_before", "text_after",
                                                         "entities", "table_content"};

std::string join(const std::vector<std::string> &parts)
{
    std::string out;
    for (const auto &p : parts) {
        if (p.empty()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += p;
    }
    return out;
}

std::string string_field(const json &obj, const char *key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return {};
    }
    if (!it->is_string()) {
        throw InputError(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json &value, const char *what)
{
    if (value.is_null()) {
        return {};
    }
    if (!value.is_array()) {
        throw InputError(std::string("field '") + what + "' must be an array of strings");
    }
    std::vector<std::string> out;
    out.reserve(value.size());
    for (const auto &v : value) {
        if (!v.is_string()) {
            throw InputError(std::string("field '") + what + "' must be an array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

Table table_from_json(const json &obj)
{
    if (!obj.is_object()) {
        throw InputError("expected a JSON object");
    }
    Table t;
    auto id = obj.find("id");
    if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
        throw InputError("missing or empty 'id'");
    }
    t.id = id->get<std::string>();
    t.page_title = string_field(obj, "page_title");
    t.text_before = string_field(obj, "text_before");
    t.text_after = string_field(obj, "text_after");
    if (auto e = obj.find("entities"); e != obj.end()) {
        t.entities = string_list(*e, "entities");
    }
    if (auto tab = obj.find("table"); tab != obj.end() && !tab->is_null()) {
        if (!tab->is_object()) {
            throw InputError("field 'table' must be an object");
        }
        if (auto h = tab->find("headers"); h != tab->end()) {
            t.table.headers = string_list(*h, "table.headers");
        }
        if (auto r = tab->find("rows"); r != tab->end() && !r->is_null()) {
            if (!r->is_array()) {
                throw InputError("field 'table.rows' must be an array of arrays");
            }
            for (const auto &row : *r) {
                t.table.rows.push_back(string_list(row, "table.rows"));
            }
        }
    }
    return t;
}

json table_to_json(const Table &t)
{
    return json{{"id", t.id},
                {"page_title", t.page_title},
                {"text_before", t.text_before},
                {"text_after", t.text_after},
                {"entities", t.entities},
                {"table", json{{"headers", t.table.headers}, {"rows", t.table.rows}}}};
}

json parse_json_document(std::string_view text, const std::string &what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw InputError(what + ": malformed JSON: " + e.what());
    }
}

}  // namespace

std::string_view modality_name(Modality m) { return modality_names[static_cast<std::size_t>(m)]; }

std::optional<Modality> parse_modality(std::string_view name)
{
    for (std::size_t i = 0; i < modality_names.size(); ++i) {
        if (modality_names[i] == name) {
            return all_modalities[i];
        }
    }
    return std::nullopt;
}

Modality modality_from_name(std::string_view name)
{
    if (auto m = parse_modality(name)) {
        return *m;
    }
    std::string msg = "unknown modality '" + std::string(name) + "' (legal names:";
    for (auto n : modality_names) {
        msg += ' ';
        msg += n;
    }
    msg += ')';
    throw InputError(msg);
}

std::string modality_text(const Table &table, Modality m)
{
    switch (m) {
    case Modality::page_title:
        return table.page_title;
    case Modality::text_before:
        return table.text_before;
    case Modality::text_after:
        return table.text_after;
    case Modality::entities:
        return join(table.entities);
    case Modality::table_content: {
        std::string out = join(table.table.headers);
        for (const auto &row : table.table.rows) {
            auto r = join(row);
            if (!r.empty()) {
                if (!out.empty()) {
                    out.push_back(' ');
                }
                out += r;
            }
        }
        return out;
    }
    }
    return {};
}

std::string validate_table(const Table &t)
{
    if (t.id.empty()) {
        return "empty id";
    }
    if (!t.table.headers.empty()) {
        for (std::size_t i = 0; i < t.table.rows.size(); ++i) {
            if (t.table.rows[i].size() != t.table.headers.size()) {
                return "table '" + t.id + "' row " + std::to_string(i) + " has " +
                       std::to_string(t.table.rows[i].size()) + " cells but " +
                       std::to_string(t.table.headers.size()) + " headers";
            }
        }
    }
    bool any = !t.page_title.empty() || !t.text_before.empty() || !t.text_after.empty() ||
               !t.entities.empty() || !t.table.headers.empty() || !t.table.rows.empty();
    if (!any) {
        return "table '" + t.id + "' has no non-empty field";
    }
    return {};
}

Corpus::Corpus(std::vector<Table> tables) : m_tables(std::move(tables))
{
    m_by_id.reserve(m_tables.size());
    for (std::size_t i = 0; i < m_tables.size(); ++i) {
        if (auto err = validate_table(m_tables[i]); !err.empty()) {
            throw InputError(err);
        }
        if (!m_by_id.emplace(m_tables[i].id, i).second) {
            throw InputError("duplicate table id '" + m_tables[i].id + "'");
        }
    }
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const
{
    auto it = m_by_id.find(std::string(id));
    if (it == m_by_id.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Table &Corpus::at(std::string_view id) const
{
    auto idx = index_of(id);
    if (!idx) {
        throw InputError("unknown table id '" + std::string(id) + "'");
    }
    return m_tables[*idx];
}

Corpus parse_corpus(std::istream &in, const std::string &source)
{
    std::vector<Table> tables;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto where = source + ":" + std::to_string(lineno) + ": ";
        Table t;
        try {
            t = table_from_json(json::parse(line));
        } catch (const json::exception &e) {
            throw InputError(where + "malformed line: " + e.what());
        } catch (const InputError &e) {
            throw InputError(where + e.what());
        }
        if (auto err = validate_table(t); !err.empty()) {
            throw InputError(where + err);
        }
        if (auto [it, fresh] = first_line.emplace(t.id, lineno); !fresh) {
            throw InputError(where + "duplicate table id '" + t.id + "' (first seen on line " +
                             std::to_string(it->second) + ")");
        }
        tables.push_back(std::move(t));
    }
    return Corpus(std::move(tables));
}

Corpus load_corpus(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open corpus " + path.string());
    }
    return parse_corpus(in, path.string());
}

std::string serialize_table(const Table &table) { return table_to_json(table).dump(); }

std::string serialize_corpus(const Corpus &corpus)
{
    std::string out;
    for (const auto &t : corpus.tables()) {
        out += serialize_table(t);
        out.push_back('\n');
    }
    return out;
}

int TopicQrels::grade(std::string_view table_id) const
{
    auto it = table_grades.find(std::string(table_id));
    return it == table_grades.end() ? 0 : it->second;
}

bool TopicQrels::modality_relevant(std::string_view table_id, Modality m) const
{
    auto it = modality_rel.find({std::string(table_id), m});
    return it != modality_rel.end() && it->second;
}

namespace {

std::vector<std::string> split_ws(const std::string &line)
{
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) {
        out.push_back(tok);
    }
    return out;
}

long long parse_int(const std::string &s, const std::string &where)
{
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception &) {
        throw InputError(where + "'" + s + "' is not an integer");
    }
    if (pos != s.size()) {
        throw InputError(where + "'" + s + "' is not an integer");
    }
    return v;
}

template <typename Fn>
void for_each_record(std::istream &in, const char *what, Fn &&fn)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = split_ws(line);
        if (fields.empty() || fields.front().starts_with('#')) {
            continue;
        }
        fn(fields, std::string(what) + ":" + std::to_string(lineno) + ": ");
    }
}

}  // namespace

QrelsByTopic parse_qrels(std::istream &table_qrels, std::istream &modality_qrels, const Corpus *corpus,
                         const WarningSink &warn)
{
    QrelsByTopic out;
    for_each_record(table_qrels, "table qrels", [&](const std::vector<std::string> &f, const std::string &where) {
        if (f.size() != 3) {
            throw InputError(where + "expected 'topic_id table_id grade'");
        }
        auto grade = parse_int(f[2], where);
        if (grade < 0) {
            throw InputError(where + "negative grade " + f[2]);
        }
        auto &topic = out[f[0]];
        topic.topic_id = f[0];
        auto [it, fresh] = topic.table_grades.emplace(f[1], static_cast<int>(grade));
        if (!fresh && it->second != grade) {
            throw InputError(where + "conflicting grades for (" + f[0] + ", " + f[1] + ")");
        }
    });
    for_each_record(modality_qrels, "modality qrels", [&](const std::vector<std::string> &f, const std::string &where) {
        if (f.size() != 4) {
            throw InputError(where + "expected 'topic_id table_id modality 0|1'");
        }
        Modality m;
        try {
            m = modality_from_name(f[2]);
        } catch (const InputError &e) {
            throw InputError(where + e.what());
        }
        if (f[3] != "0" && f[3] != "1") {
            throw InputError(where + "modality relevance must be 0 or 1, got '" + f[3] + "'");
        }
        bool rel = f[3] == "1";
        auto &topic = out[f[0]];
        topic.topic_id = f[0];
        auto [it, fresh] = topic.modality_rel.emplace(std::make_pair(f[1], m), rel);
        if (!fresh && it->second != rel) {
            throw InputError(where + "conflicting modality relevance for (" + f[0] + ", " + f[1] + ", " +
                             f[2] + ")");
        }
    });

    // Flagging happens after parsing so the result does not depend on line order.
    for (auto &[topic_id, topic] : out) {
        for (const auto &[key, rel] : topic.modality_rel) {
            (void)rel;
            if (!topic.table_grades.contains(key.first) && topic.unpooled.insert(key.first).second) {
                warn("topic " + topic_id + ": table '" + key.first +
                     "' has modality judgments but no table grade; flagged unpooled");
            }
        }
        if (corpus != nullptr) {
            for (const auto &[table_id, grade] : topic.table_grades) {
                (void)grade;
                if (!corpus->contains(table_id) && topic.unpooled.insert(table_id).second) {
                    warn("topic " + topic_id + ": table '" + table_id + "' is not in the corpus; flagged unpooled");
                }
            }
        }
    }
    return out;
}

QrelsByTopic load_qrels(const std::filesystem::path &table_path, const std::filesystem::path &modality_path,
                        const Corpus *corpus, const WarningSink &warn)
{
    std::ifstream tq(table_path);
    if (!tq) {
        throw InputError("cannot open table qrels " + table_path.string());
    }
    std::ifstream mq(modality_path);
    if (!mq) {
        throw InputError("cannot open modality qrels " + modality_path.string());
    }
    return parse_qrels(tq, mq, corpus, warn);
}

std::map<std::string, std::string> parse_topics(std::string_view json_text)
{
    auto doc = parse_json_document(json_text, "topics");
    if (!doc.is_object()) {
        throw InputError("topics: expected an object topic_id -> query");
    }
    std::map<std::string, std::string> out;
    for (const auto &[id, q] : doc.items()) {
        if (!q.is_string() || trim(q.get<std::string>()).empty()) {
            throw InputError("topics: topic '" + id + "' needs a non-empty query string");
        }
        out.emplace(id, q.get<std::string>());
    }
    return out;
}

std::map<std::string, std::string> load_topics(const std::filesystem::path &path)
{
    return parse_topics(read_file(path));
}

void assign_topic_queries(QrelsByTopic &qrels, const std::map<std::string, std::string> &topics)
{
    for (auto &[id, topic] : qrels) {
        auto it = topics.find(id);
        if (it == topics.end()) {
            throw InputError("topic '" + id + "' has qrels but no query");
        }
        topic.topic_query = it->second;
    }
}

std::map<std::string, QueryVariantSet> parse_query_variants(std::string_view json_text, const WarningSink &warn)
{
    auto doc = parse_json_document(json_text, "query variants");
    if (!doc.is_object()) {
        throw InputError("query variants: expected an object topic_id -> [query, ...]");
    }
    std::map<std::string, QueryVariantSet> out;
    for (const auto &[id, arr] : doc.items()) {
        if (!arr.is_array()) {
            throw InputError("query variants: topic '" + id + "' must map to an array");
        }
        QueryVariantSet set{id, {}};
        for (const auto &v : arr) {
            if (!v.is_string()) {
                throw InputError("query variants: topic '" + id + "' has a non-string variant");
            }
            auto q = v.get<std::string>();
            if (trim(q).empty()) {
                warn("query variants: dropped empty variant for topic " + id);
                continue;
            }
            set.variants.push_back(std::move(q));
        }
        if (set.variants.empty()) {
            throw InputError("query variants: topic '" + id + "' has no non-empty variants");
        }
        out.emplace(id, std::move(set));
    }
    return out;
}

std::map<std::string, QueryVariantSet> load_query_variants(const std::filesystem::path &path,
                                                           const WarningSink &warn)
{
    return parse_query_variants(read_file(path), warn);
}

TermSuggestions parse_term_suggestions(std::string_view json_text, const WarningSink &warn)
{
    auto doc = parse_json_document(json_text, "term suggestions");
    if (!doc.is_object()) {
        throw InputError("term suggestions: expected an object table_id -> [term, ...]");
    }
    TermSuggestions out;
    for (const auto &[id, arr] : doc.items()) {
        if (!arr.is_array()) {
            throw InputError("term suggestions: table '" + id + "' must map to an array");
        }
        auto &terms = out[id];
        for (const auto &v : arr) {
            if (!v.is_string()) {
                throw InputError("term suggestions: table '" + id + "' has a non-string term");
            }
            auto t = trim(v.get<std::string>());
            if (t.empty()) {
                warn("term suggestions: dropped empty term for table " + id);
                continue;
            }
            terms.push_back(std::move(t));
        }
    }
    return out;
}

TermSuggestions load_term_suggestions(const std::filesystem::path &path, const WarningSink &warn)
{
    return parse_term_suggestions(read_file(path), warn);
}

std::vector<std::string> report_unknown_suggestion_ids(const TermSuggestions &suggestions, const Corpus &corpus,
                                                       const WarningSink &warn)
{
    std::vector<std::string> unknown;
    for (const auto &[id, terms] : suggestions) {
        (void)terms;
        if (!corpus.contains(id)) {
            warn("term suggestions reference table '" + id + "' which is not in the corpus");
            unknown.push_back(id);
        }
    }
    return unknown;
}

std::string trim(std::string_view s)
{
    auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return std::string(s);
}

}  // namespace tablesim

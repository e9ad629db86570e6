#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tablesim/errors.hpp"

namespace tablesim {

/// The five contextual facets of a web table.
enum class Modality { page_title, text_before, text_after, entities, table_content };

inline constexpr std::array<Modality, 5> all_modalities{Modality::page_title, Modality::text_before,
                                                        Modality::text_after, Modality::entities,
                                                        Modality::table_content};

std::string_view modality_name(Modality m);
std::optional<Modality> parse_modality(std::string_view name);
/// Like parse_modality, but throws InputError listing the legal names.
Modality modality_from_name(std::string_view name);

struct TableContent {
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const TableContent &) const = default;
};

struct Table {
    std::string id;
    std::string page_title;
    std::string text_before;
    std::string text_after;
    std::vector<std::string> entities;
    TableContent table;

    bool operator==(const Table &) const = default;
};

/// Text of one modality; list-valued fields are joined with single spaces.
std::string modality_text(const Table &table, Modality m);

/// Immutable, validated collection of tables addressable by id.
class Corpus {
public:
    Corpus() = default;
    /// Throws InputError on an empty/duplicate id or a table violating its shape invariants.
    explicit Corpus(std::vector<Table> tables);

    [[nodiscard]] std::size_t size() const { return m_tables.size(); }
    [[nodiscard]] bool empty() const { return m_tables.empty(); }
    [[nodiscard]] const std::vector<Table> &tables() const { return m_tables; }
    [[nodiscard]] const Table &operator[](std::size_t i) const { return m_tables[i]; }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view id) const;
    [[nodiscard]] bool contains(std::string_view id) const { return index_of(id).has_value(); }
    /// Throws InputError for unknown ids.
    [[nodiscard]] const Table &at(std::string_view id) const;

    bool operator==(const Corpus &other) const { return m_tables == other.m_tables; }

private:
    std::vector<Table> m_tables;
    std::unordered_map<std::string, std::size_t> m_by_id;
};

/// Checks the per-table invariants; returns an empty string when valid.
std::string validate_table(const Table &table);

Corpus parse_corpus(std::istream &in, const std::string &source = "<corpus>");
Corpus load_corpus(const std::filesystem::path &path);
std::string serialize_table(const Table &table);
/// JSONL, one table per line, in corpus order.
std::string serialize_corpus(const Corpus &corpus);

struct TopicQrels {
    std::string topic_id;
    std::string topic_query;
    std::map<std::string, int> table_grades;
    std::map<std::pair<std::string, Modality>, bool> modality_rel;
    /// Referenced ids that are absent from the corpus or lack a table grade.
    std::set<std::string> unpooled;

    [[nodiscard]] int grade(std::string_view table_id) const;
    [[nodiscard]] bool modality_relevant(std::string_view table_id, Modality m) const;

    bool operator==(const TopicQrels &) const = default;
};

using QrelsByTopic = std::map<std::string, TopicQrels>;

/// `corpus` may be null, in which case only modality-only ids are flagged unpooled.
QrelsByTopic parse_qrels(std::istream &table_qrels, std::istream &modality_qrels,
                         const Corpus *corpus = nullptr, const WarningSink &warn = stderr_warnings());
QrelsByTopic load_qrels(const std::filesystem::path &table_path,
                        const std::filesystem::path &modality_path, const Corpus *corpus = nullptr,
                        const WarningSink &warn = stderr_warnings());

/// Topic file: JSON object topic_id -> initial query text.
std::map<std::string, std::string> parse_topics(std::string_view json_text);
std::map<std::string, std::string> load_topics(const std::filesystem::path &path);
/// Sets topic_query for every topic with qrels; a topic without a query is an InputError.
void assign_topic_queries(QrelsByTopic &qrels, const std::map<std::string, std::string> &topics);

struct QueryVariantSet {
    std::string topic_id;
    std::vector<std::string> variants;

    bool operator==(const QueryVariantSet &) const = default;
};

std::map<std::string, QueryVariantSet> parse_query_variants(std::string_view json_text,
                                                            const WarningSink &warn = stderr_warnings());
std::map<std::string, QueryVariantSet> load_query_variants(const std::filesystem::path &path,
                                                           const WarningSink &warn = stderr_warnings());

/// Precomputed expansion terms per table id.
using TermSuggestions = std::map<std::string, std::vector<std::string>>;

TermSuggestions parse_term_suggestions(std::string_view json_text,
                                       const WarningSink &warn = stderr_warnings());
TermSuggestions load_term_suggestions(const std::filesystem::path &path,
                                      const WarningSink &warn = stderr_warnings());
/// Emits one warning per suggestion table id missing from the corpus and returns those ids.
std::vector<std::string> report_unknown_suggestion_ids(const TermSuggestions &suggestions,
                                                       const Corpus &corpus,
                                                       const WarningSink &warn = stderr_warnings());

std::string trim(std::string_view s);

}  // namespace tablesim

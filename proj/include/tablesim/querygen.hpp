#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablesim/corpus.hpp"
#include "tablesim/retrieval.hpp"

namespace tablesim {

/// Contents of the bundled data/stopwords.txt (embedded at build time).
std::string_view default_stopwords_text();
/// One term per line; blank lines and lines starting with '#' are ignored; terms are lowercased.
std::set<std::string> parse_stopwords(std::string_view text);
std::set<std::string> default_stopwords();

/// Source of expansion terms for a table (the d2q(d) function).
class TermSuggester {
public:
    virtual ~TermSuggester() = default;
    [[nodiscard]] virtual std::set<std::string> suggest(const Table &table) const = 0;
};

/// Serves precomputed suggestions. Each suggestion string is tokenized, so a
/// multi-word suggestion contributes each of its terms.
class FileTermSuggester final : public TermSuggester {
public:
    explicit FileTermSuggester(TermSuggestions suggestions);
    [[nodiscard]] std::set<std::string> suggest(const Table &table) const override;

private:
    TermSuggestions m_suggestions;
};

/// Fallback: the table's top-m indexed terms by tf * ln(N/df), ties by term.
class TfIdfTermSuggester final : public TermSuggester {
public:
    explicit TfIdfTermSuggester(const Index &index, std::size_t top_m = 10);
    [[nodiscard]] std::set<std::string> suggest(const Table &table) const override;

private:
    const Index *m_index;
    std::size_t m_top_m;
};

enum class IdfFilterDirection {
    discard_below,  // drop terms with idf < threshold (default)
    keep_below,     // keep only terms with idf < threshold
};

struct KeywordFilter {
    double idf_threshold = 0.5;
    IdfFilterDirection direction = IdfFilterDirection::discard_below;
};

using TableRefs = std::span<const Table *const>;

/// Union of suggested terms over `tables`, minus stopwords, minus terms failing the idf filter.
std::set<std::string> extract_keywords(TableRefs tables, const TermSuggester &suggester, const Index &index,
                                       const std::set<std::string> &stopwords, const KeywordFilter &filter = {});

struct KnowledgeState {
    std::vector<std::string> base_query;
    std::set<std::string> all_terms;
    std::set<std::string> rel_terms;
    std::set<std::string> used_terms;
    std::set<std::string> stopwords;

    KnowledgeState() = default;
    KnowledgeState(std::string_view initial_query, std::set<std::string> stopword_set);

    bool operator==(const KnowledgeState &) const = default;
};

/// Folds the keywords of the examined tables into all_terms and those of the
/// relevant-judged tables into rel_terms. `judged_relevant` must be a subset of `serp_tables`.
KnowledgeState update_knowledge_state(KnowledgeState ks, TableRefs serp_tables, TableRefs judged_relevant,
                                      const TermSuggester &suggester, const Index &index,
                                      const KeywordFilter &filter = {});

/// Appends the unused, highest-idf term of all_terms that is not already in the base query.
std::optional<std::string> next_query_knowledge(KnowledgeState &ks, const Index &index);
/// Prefers unused rel_terms; falls back to next_query_knowledge when none remain.
std::optional<std::string> next_query_feedback(KnowledgeState &ks, const Index &index);
std::optional<std::string> next_query_static(std::span<const std::string> variants, std::size_t issued);

enum class StrategyKind { static_variants, d2q, d2q_feedback };

std::string_view strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(std::string_view name);

/// Session-local query source. `observe` is called once per query iteration.
class QueryStrategy {
public:
    virtual ~QueryStrategy() = default;
    [[nodiscard]] virtual std::optional<std::string> next_query() = 0;
    virtual void observe(TableRefs examined, TableRefs judged_relevant) = 0;
};

class StaticQueryStrategy final : public QueryStrategy {
public:
    explicit StaticQueryStrategy(std::vector<std::string> variants) : m_variants(std::move(variants)) {}
    [[nodiscard]] std::optional<std::string> next_query() override;
    void observe(TableRefs, TableRefs) override {}

private:
    std::vector<std::string> m_variants;
    std::size_t m_issued = 0;
};

/// Issues the initial query first, then one knowledge-state expansion per call.
class KnowledgeQueryStrategy final : public QueryStrategy {
public:
    KnowledgeQueryStrategy(std::string initial_query, const Index &index, const TermSuggester &suggester,
                           std::set<std::string> stopwords, KeywordFilter filter, bool use_feedback);
    [[nodiscard]] std::optional<std::string> next_query() override;
    void observe(TableRefs examined, TableRefs judged_relevant) override;

    [[nodiscard]] const KnowledgeState &state() const { return m_state; }

private:
    std::string m_initial_query;
    const Index *m_index;
    const TermSuggester *m_suggester;
    KeywordFilter m_filter;
    bool m_use_feedback;
    bool m_issued_initial = false;
    KnowledgeState m_state;
};

}  // namespace tablesim

#include "tablesim/querygen.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace tablesim {

std::set<std::string> parse_stopwords(std::string_view text)
{
    std::set<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        if (!line.empty() && line.front() != '#') {
            std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) {
                return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
            });
            out.insert(std::move(line));
        }
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return out;
}

std::set<std::string> default_stopwords() { return parse_stopwords(default_stopwords_text()); }

FileTermSuggester::FileTermSuggester(TermSuggestions suggestions) : m_suggestions(std::move(suggestions)) {}

std::set<std::string> FileTermSuggester::suggest(const Table &table) const
{
    std::set<std::string> out;
    auto it = m_suggestions.find(table.id);
    if (it == m_suggestions.end()) {
        return out;
    }
    for (const auto &s : it->second) {
        for (auto &t : tokenize(s)) {
            out.insert(std::move(t));
        }
    }
    return out;
}

TfIdfTermSuggester::TfIdfTermSuggester(const Index &index, std::size_t top_m) : m_index(&index), m_top_m(top_m) {}

std::set<std::string> TfIdfTermSuggester::suggest(const Table &table) const
{
    auto doc = m_index->doc_index(table.id);
    if (!doc) {
        return {};
    }
    std::vector<std::pair<double, const std::string *>> scored;
    for (const auto &[term, tf] : m_index->doc_terms(*doc)) {
        scored.emplace_back(tf * m_index->idf(term), &term);
    }
    auto keep = std::min(m_top_m, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const auto &a, const auto &b) { return a.first != b.first ? a.first > b.first : *a.second < *b.second; });
    std::set<std::string> out;
    for (std::size_t i = 0; i < keep; ++i) {
        out.insert(*scored[i].second);
    }
    return out;
}

std::set<std::string> extract_keywords(TableRefs tables, const TermSuggester &suggester, const Index &index,
                                       const std::set<std::string> &stopwords, const KeywordFilter &filter)
{
    std::set<std::string> out;
    for (const Table *table : tables) {
        for (auto &term : suggester.suggest(*table)) {
            if (stopwords.contains(term)) {
                continue;
            }
            bool below = index.idf(term) < filter.idf_threshold;
            bool keep = filter.direction == IdfFilterDirection::discard_below ? !below : below;
            if (keep) {
                out.insert(term);
            }
        }
    }
    return out;
}

KnowledgeState::KnowledgeState(std::string_view initial_query, std::set<std::string> stopword_set)
    : base_query(tokenize(initial_query)), stopwords(std::move(stopword_set))
{
}

KnowledgeState update_knowledge_state(KnowledgeState ks, TableRefs serp_tables, TableRefs judged_relevant,
                                      const TermSuggester &suggester, const Index &index, const KeywordFilter &filter)
{
    for (const Table *rel : judged_relevant) {
        bool found = std::any_of(serp_tables.begin(), serp_tables.end(),
                                 [&](const Table *t) { return t->id == rel->id; });
        if (!found) {
            throw std::invalid_argument("update_knowledge_state: relevant table '" + rel->id +
                                        "' is not among the examined tables");
        }
    }
    ks.all_terms.merge(extract_keywords(serp_tables, suggester, index, ks.stopwords, filter));
    ks.rel_terms.merge(extract_keywords(judged_relevant, suggester, index, ks.stopwords, filter));
    return ks;
}

namespace {

std::optional<std::string> pick_term(const std::set<std::string> &pool, const KnowledgeState &ks, const Index &index)
{
    const std::string *best = nullptr;
    double best_idf = 0.0;
    // std::set iterates in ascending order, so a strict '>' keeps the lexicographically first on ties.
    for (const auto &term : pool) {
        if (ks.used_terms.contains(term) ||
            std::find(ks.base_query.begin(), ks.base_query.end(), term) != ks.base_query.end()) {
            continue;
        }
        double v = index.idf(term);
        if (best == nullptr || v > best_idf) {
            best = &term;
            best_idf = v;
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    return *best;
}

std::string expand(KnowledgeState &ks, const std::string &term)
{
    ks.used_terms.insert(term);
    std::string q;
    for (const auto &t : ks.base_query) {
        q += t;
        q.push_back(' ');
    }
    q += term;
    return q;
}

}  // namespace

std::optional<std::string> next_query_knowledge(KnowledgeState &ks, const Index &index)
{
    auto term = pick_term(ks.all_terms, ks, index);
    if (!term) {
        return std::nullopt;
    }
    return expand(ks, *term);
}

std::optional<std::string> next_query_feedback(KnowledgeState &ks, const Index &index)
{
    if (auto term = pick_term(ks.rel_terms, ks, index)) {
        return expand(ks, *term);
    }
    return next_query_knowledge(ks, index);
}

std::optional<std::string> next_query_static(std::span<const std::string> variants, std::size_t issued)
{
    if (issued >= variants.size()) {
        return std::nullopt;
    }
    return variants[issued];
}

std::string_view strategy_name(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::static_variants:
        return "static";
    case StrategyKind::d2q:
        return "d2q";
    case StrategyKind::d2q_feedback:
        return "d2q_feedback";
    }
    return "?";
}

StrategyKind strategy_from_name(std::string_view name)
{
    for (auto k : {StrategyKind::static_variants, StrategyKind::d2q, StrategyKind::d2q_feedback}) {
        if (strategy_name(k) == name) {
            return k;
        }
    }
    throw InputError("unknown strategy '" + std::string(name) + "' (expected static, d2q or d2q_feedback)");
}

std::optional<std::string> StaticQueryStrategy::next_query()
{
    auto q = next_query_static(m_variants, m_issued);
    if (q) {
        ++m_issued;
    }
    return q;
}

KnowledgeQueryStrategy::KnowledgeQueryStrategy(std::string initial_query, const Index &index,
                                               const TermSuggester &suggester, std::set<std::string> stopwords,
                                               KeywordFilter filter, bool use_feedback)
    : m_initial_query(std::move(initial_query)),
      m_index(&index),
      m_suggester(&suggester),
      m_filter(filter),
      m_use_feedback(use_feedback),
      m_state(m_initial_query, std::move(stopwords))
{
}

std::optional<std::string> KnowledgeQueryStrategy::next_query()
{
    if (!m_issued_initial) {
        m_issued_initial = true;
        return m_initial_query;
    }
    return m_use_feedback ? next_query_feedback(m_state, *m_index) : next_query_knowledge(m_state, *m_index);
}

void KnowledgeQueryStrategy::observe(TableRefs examined, TableRefs judged_relevant)
{
    m_state = update_knowledge_state(std::move(m_state), examined, judged_relevant, *m_suggester, *m_index, m_filter);
}

}  // namespace tablesim

#include "tablesim/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tablesim/digest.hpp"

namespace tablesim {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

FieldWeights uniform_field_weights(double w)
{
    FieldWeights fw{};
    fw.fill(w);
    return fw;
}

FieldWeights field_weights_from(const std::map<std::string, double> &named)
{
    auto fw = uniform_field_weights(1.0);
    for (const auto &[name, w] : named) {
        fw[static_cast<std::size_t>(modality_from_name(name))] = w;
    }
    return fw;
}

std::optional<SerpPage> serp_page(const Ranking &ranking, std::size_t page_index, const Corpus &corpus,
                                  Modality snippet_modality, std::size_t page_size)
{
    if (page_index < 1 || page_size < 1) {
        throw std::invalid_argument("serp_page: page_index and page_size must be >= 1");
    }
    auto begin = (page_index - 1) * page_size;
    if (begin >= ranking.entries.size()) {
        return std::nullopt;
    }
    auto end = std::min(begin + page_size, ranking.entries.size());
    SerpPage page{page_index, {}};
    page.items.reserve(end - begin);
    for (auto i = begin; i < end; ++i) {
        const auto &id = ranking.entries[i].table_id;
        auto idx = corpus.index_of(id);
        page.items.push_back({id, i + 1, idx ? modality_text(corpus[*idx], snippet_modality) : std::string{}});
    }
    return page;
}

Index Index::build(const Corpus &corpus, const FieldWeights &weights, Bm25Params params)
{
    if (corpus.empty()) {
        throw InputError("cannot index an empty corpus");
    }
    bool any_positive = false;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw InputError("field weights must be finite and >= 0");
        }
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) {
        throw InputError("at least one field weight must be positive");
    }
    if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
        throw InputError("BM25 parameters require k1 >= 0 and 0 <= b <= 1");
    }

    Index idx;
    idx.m_params = params;
    idx.m_weights = weights;
    idx.m_doc_ids.reserve(corpus.size());
    idx.m_lexicon.field_lengths.resize(corpus.size());
    idx.m_lexicon.doc_lengths.resize(corpus.size());
    idx.m_forward.resize(corpus.size());

    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto &table = corpus[d];
        idx.m_doc_ids.push_back(table.id);
        std::map<std::string, double> tf;
        double length = 0.0;
        for (auto m : all_modalities) {
            auto f = static_cast<std::size_t>(m);
            auto tokens = tokenize(modality_text(table, m));
            idx.m_lexicon.field_lengths[d][f] = static_cast<std::uint32_t>(tokens.size());
            double w = weights[f];
            if (w == 0.0) {
                continue;
            }
            length += w * static_cast<double>(tokens.size());
            for (auto &t : tokens) {
                tf[std::move(t)] += w;
            }
        }
        idx.m_lexicon.doc_lengths[d] = length;
        auto &fwd = idx.m_forward[d];
        fwd.reserve(tf.size());
        for (auto &[term, freq] : tf) {
            idx.m_postings[term].push_back({static_cast<std::uint32_t>(d), freq});
            fwd.emplace_back(term, freq);
        }
    }
    idx.finalize();
    return idx;
}

void Index::finalize()
{
    auto n = m_doc_ids.size();
    m_doc_by_id.clear();
    for (std::size_t d = 0; d < n; ++d) {
        m_doc_by_id.emplace(m_doc_ids[d], static_cast<std::uint32_t>(d));
    }
    m_lexicon.num_docs = n;
    m_lexicon.df.clear();
    for (const auto &[term, plist] : m_postings) {
        m_lexicon.df.emplace(term, static_cast<std::uint32_t>(plist.size()));
    }
    m_lexicon.total_length = 0.0;
    for (double len : m_lexicon.doc_lengths) {
        m_lexicon.total_length += len;
    }
    m_lexicon.avg_doc_length = n == 0 ? 0.0 : m_lexicon.total_length / static_cast<double>(n);
}

std::optional<std::size_t> Index::doc_index(std::string_view table_id) const
{
    auto it = m_doc_by_id.find(std::string(table_id));
    if (it == m_doc_by_id.end()) {
        return std::nullopt;
    }
    return it->second;
}

double Index::idf(std::string_view term) const
{
    auto it = m_lexicon.df.find(std::string(term));
    if (it == m_lexicon.df.end()) {
        return unseen_idf;
    }
    return std::log(static_cast<double>(m_lexicon.num_docs) / static_cast<double>(it->second));
}

double Index::bm25_idf(std::string_view term) const
{
    auto it = m_lexicon.df.find(std::string(term));
    if (it == m_lexicon.df.end()) {
        return 0.0;
    }
    auto n = static_cast<double>(m_lexicon.num_docs);
    auto df = static_cast<double>(it->second);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Index::term_frequency(std::size_t doc, std::string_view term) const
{
    const auto &fwd = m_forward.at(doc);
    auto it = std::lower_bound(fwd.begin(), fwd.end(), term,
                               [](const auto &entry, std::string_view t) { return entry.first < t; });
    return (it != fwd.end() && it->first == term) ? it->second : 0.0;
}

double Index::term_weight(double idf, double tf, double doc_length) const
{
    double norm = m_lexicon.avg_doc_length > 0.0 ? doc_length / m_lexicon.avg_doc_length : 0.0;
    return idf * (tf * (m_params.k1 + 1.0)) / (tf + m_params.k1 * (1.0 - m_params.b + m_params.b * norm));
}

double Index::bm25_score_doc(std::span<const std::string> query_terms, std::size_t doc) const
{
    double score = 0.0;
    for (const auto &t : query_terms) {
        double tf = term_frequency(doc, t);
        if (tf > 0.0) {
            score += term_weight(bm25_idf(t), tf, m_lexicon.doc_lengths[doc]);
        }
    }
    return score;
}

double Index::bm25_score(std::span<const std::string> query_terms, std::string_view table_id) const
{
    auto doc = doc_index(table_id);
    if (!doc) {
        throw InputError("bm25_score: unknown table id '" + std::string(table_id) + "'");
    }
    return bm25_score_doc(query_terms, *doc);
}

Ranking Index::search(std::string_view query, std::size_t k) const
{
    auto terms = tokenize(query);
    return search_terms(terms, k, std::string(query));
}

Ranking Index::search_terms(std::span<const std::string> query_terms, std::size_t k, std::string query_text) const
{
    if (k < 1) {
        throw std::invalid_argument("search: k must be >= 1");
    }
    Ranking ranking{std::move(query_text), {}};
    std::vector<double> acc(m_doc_ids.size(), 0.0);
    std::vector<std::uint32_t> touched;
    // Accumulate term by term in query order: per document this adds the same
    // non-zero contributions in the same order as bm25_score_doc.
    for (const auto &t : query_terms) {
        auto it = m_postings.find(t);
        if (it == m_postings.end()) {
            continue;
        }
        double w_idf = bm25_idf(t);
        for (const auto &p : it->second) {
            if (acc[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += term_weight(w_idf, p.tf, m_lexicon.doc_lengths[p.doc]);
        }
    }
    std::vector<RankedTable> entries;
    entries.reserve(touched.size());
    for (auto d : touched) {
        if (acc[d] > 0.0) {
            entries.push_back({m_doc_ids[d], acc[d]});
        }
    }
    auto better = [](const RankedTable &a, const RankedTable &b) {
        return a.score != b.score ? a.score > b.score : a.table_id < b.table_id;
    };
    auto keep = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(), better);
    entries.resize(keep);
    ranking.entries = std::move(entries);
    return ranking;
}

std::string Index::to_json() const
{
    json weights = json::object();
    for (auto m : all_modalities) {
        weights[std::string(modality_name(m))] = m_weights[static_cast<std::size_t>(m)];
    }
    std::map<std::string, const std::vector<Posting> *> sorted;
    for (const auto &[term, plist] : m_postings) {
        sorted.emplace(term, &plist);
    }
    json postings = json::object();
    for (const auto &[term, plist] : sorted) {
        json arr = json::array();
        for (const auto &p : *plist) {
            arr.push_back(json::array({p.doc, p.tf}));
        }
        postings[term] = std::move(arr);
    }
    json doc = {{"format_version", format_version},
                {"bm25", {{"k1", m_params.k1}, {"b", m_params.b}}},
                {"field_weights", weights},
                {"doc_ids", m_doc_ids},
                {"field_lengths", m_lexicon.field_lengths},
                {"doc_lengths", m_lexicon.doc_lengths},
                {"postings", postings}};
    return doc.dump();
}

Index Index::from_json(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw InputError(std::string("index: malformed JSON: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != format_version) {
            throw InputError("index: unsupported format_version " + doc.at("format_version").dump());
        }
        Index idx;
        idx.m_params.k1 = doc.at("bm25").at("k1").get<double>();
        idx.m_params.b = doc.at("bm25").at("b").get<double>();
        for (auto m : all_modalities) {
            idx.m_weights[static_cast<std::size_t>(m)] =
                doc.at("field_weights").at(std::string(modality_name(m))).get<double>();
        }
        idx.m_doc_ids = doc.at("doc_ids").get<std::vector<std::string>>();
        idx.m_lexicon.field_lengths =
            doc.at("field_lengths").get<std::vector<std::array<std::uint32_t, all_modalities.size()>>>();
        idx.m_lexicon.doc_lengths = doc.at("doc_lengths").get<std::vector<double>>();
        auto n = idx.m_doc_ids.size();
        if (idx.m_lexicon.field_lengths.size() != n || idx.m_lexicon.doc_lengths.size() != n) {
            throw InputError("index: per-document arrays disagree with doc_ids");
        }
        idx.m_forward.assign(n, {});
        // JSON objects iterate in key order, which keeps each forward list sorted by term.
        for (const auto &[term, arr] : doc.at("postings").items()) {
            auto &plist = idx.m_postings[term];
            for (const auto &p : arr) {
                Posting post{p.at(0).get<std::uint32_t>(), p.at(1).get<double>()};
                if (post.doc >= n) {
                    throw InputError("index: posting for '" + term + "' references document " +
                                     std::to_string(post.doc) + " out of range");
                }
                plist.push_back(post);
                idx.m_forward[post.doc].emplace_back(term, post.tf);
            }
        }
        idx.finalize();
        return idx;
    } catch (const json::exception &e) {
        throw InputError(std::string("index: ") + e.what());
    }
}

void Index::save(const std::filesystem::path &path) const { write_file_atomic(path, to_json()); }

Index Index::load(const std::filesystem::path &path) { return from_json(read_file(path)); }

}  // namespace tablesim

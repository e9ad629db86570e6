#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tablesim/corpus.hpp"

namespace tablesim {

/// Lowercases ASCII and splits on every non-alphanumeric byte. Bytes >= 0x80 are
/// kept inside terms so UTF-8 words are not torn apart.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(const Bm25Params &) const = default;
};

/// Weight per modality, indexed by static_cast<size_t>(Modality).
using FieldWeights = std::array<double, all_modalities.size()>;

FieldWeights uniform_field_weights(double w = 1.0);
/// Starts from uniform weights of 1 and overrides the named modalities.
FieldWeights field_weights_from(const std::map<std::string, double> &named);

inline constexpr double unseen_idf = std::numeric_limits<double>::infinity();

struct Lexicon {
    std::unordered_map<std::string, std::uint32_t> df;
    std::size_t num_docs = 0;
    /// Raw token counts per modality, per document.
    std::vector<std::array<std::uint32_t, all_modalities.size()>> field_lengths;
    /// Weighted lengths used for BM25 length normalisation.
    std::vector<double> doc_lengths;
    double total_length = 0.0;
    double avg_doc_length = 0.0;

    bool operator==(const Lexicon &) const = default;
};

struct RankedTable {
    std::string table_id;
    double score = 0.0;

    bool operator==(const RankedTable &) const = default;
};

struct Ranking {
    std::string query;
    std::vector<RankedTable> entries;

    bool operator==(const Ranking &) const = default;
};

struct SerpItem {
    std::string table_id;
    std::size_t rank = 0;  // 1-based, global across pages
    std::string snippet;
};

struct SerpPage {
    std::size_t page_index = 1;
    std::vector<SerpItem> items;
};

inline constexpr std::size_t default_page_size = 10;

/// Slice of `ranking` for 1-based `page_index`; nullopt once past the last result.
std::optional<SerpPage> serp_page(const Ranking &ranking, std::size_t page_index, const Corpus &corpus,
                                  Modality snippet_modality = Modality::page_title,
                                  std::size_t page_size = default_page_size);

/// Immutable multi-field inverted index. Each document is the weight-scaled
/// concatenation of its tokenized modality fields.
class Index {
public:
    struct Posting {
        std::uint32_t doc = 0;
        double tf = 0.0;

        bool operator==(const Posting &) const = default;
    };

    static Index build(const Corpus &corpus, const FieldWeights &weights, Bm25Params params = {});

    [[nodiscard]] const Lexicon &lexicon() const { return m_lexicon; }
    [[nodiscard]] const Bm25Params &params() const { return m_params; }
    [[nodiscard]] const FieldWeights &field_weights() const { return m_weights; }
    [[nodiscard]] std::size_t size() const { return m_doc_ids.size(); }
    [[nodiscard]] const std::string &doc_id(std::size_t doc) const { return m_doc_ids[doc]; }
    [[nodiscard]] std::optional<std::size_t> doc_index(std::string_view table_id) const;

    /// ln(N / df); unseen_idf for terms not in the lexicon.
    [[nodiscard]] double idf(std::string_view term) const;
    /// ln(1 + (N - df + 0.5) / (df + 0.5)); 0 for unseen terms.
    [[nodiscard]] double bm25_idf(std::string_view term) const;
    [[nodiscard]] double term_frequency(std::size_t doc, std::string_view term) const;
    /// Forward view of one document, sorted by term.
    [[nodiscard]] const std::vector<std::pair<std::string, double>> &doc_terms(std::size_t doc) const
    {
        return m_forward[doc];
    }

    /// Throws InputError for an unknown table id.
    [[nodiscard]] double bm25_score(std::span<const std::string> query_terms, std::string_view table_id) const;
    [[nodiscard]] double bm25_score_doc(std::span<const std::string> query_terms, std::size_t doc) const;

    /// Top-k by BM25, ties by table id ascending; zero-score documents are excluded.
    [[nodiscard]] Ranking search(std::string_view query, std::size_t k) const;
    [[nodiscard]] Ranking search_terms(std::span<const std::string> query_terms, std::size_t k,
                                       std::string query_text = {}) const;

    [[nodiscard]] std::string to_json() const;
    static Index from_json(std::string_view text);
    void save(const std::filesystem::path &path) const;
    static Index load(const std::filesystem::path &path);

    bool operator==(const Index &) const = default;

    static constexpr int format_version = 1;

private:
    void finalize();
    [[nodiscard]] double term_weight(double idf, double tf, double doc_length) const;

    Bm25Params m_params;
    FieldWeights m_weights{};
    std::vector<std::string> m_doc_ids;
    std::unordered_map<std::string, std::uint32_t> m_doc_by_id;
    std::unordered_map<std::string, std::vector<Posting>> m_postings;
    std::vector<std::vector<std::pair<std::string, double>>> m_forward;
    Lexicon m_lexicon;
};

}  // namespace tablesim

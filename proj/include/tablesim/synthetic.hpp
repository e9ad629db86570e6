#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tablesim/corpus.hpp"

namespace tablesim {

/// Knobs for the desk-scale synthetic collection used by tests, benchmarks and demos.
///
/// Every topic owns a two-word initial query, a pool of "injected" terms that
/// only its relevant tables carry, and a pool of distractor terms carried by
/// non-relevant tables that match the initial query strongly. Modality labels
/// are copies of the table label with per-modality flip noise.
struct SyntheticOptions {
    std::size_t num_tables = 500;
    std::size_t num_topics = 30;
    std::size_t relevant_per_topic = 10;
    std::size_t distractors_per_topic = 4;
    std::size_t injected_terms_per_topic = 8;
    std::size_t injected_terms_per_table = 3;
    std::size_t distractor_terms_per_topic = 4;
    std::size_t general_vocabulary = 2000;
    std::size_t variants_per_topic = 100;
    /// Probability that a relevant table carries a given initial-query word.
    double query_word_coverage = 0.5;
    /// Per-modality probability of flipping the table label (indexed by Modality).
    std::array<double, 5> modality_flip{0.2, 0.25, 0.25, 0.4, 0.15};
    std::uint64_t seed = 1;
};

struct SyntheticDataset {
    Corpus corpus;
    std::map<std::string, std::string> topics;
    QrelsByTopic qrels;
    std::string table_qrels_text;
    std::string modality_qrels_text;
    std::map<std::string, QueryVariantSet> variants;
    TermSuggestions suggestions;

    /// Writes corpus.jsonl, topics.json, qrels.txt, modality_qrels.txt,
    /// variants.json and suggestions.json into `dir`.
    void write(const std::filesystem::path &dir) const;
};

SyntheticDataset make_synthetic_dataset(const SyntheticOptions &options = {});

}  // namespace tablesim

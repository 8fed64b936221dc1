#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psyprof/types.hpp"

namespace psyprof::features {

// Token stream of one user, contiguity kept per tweet (n-grams never cross
// tweet boundaries).
struct TokenDoc {
    std::vector<std::vector<std::string>> tweets;

    std::vector<std::string> flattened() const;
    std::size_t token_count() const;
};

enum class VocabKind { word, bigram, trigram, pos1, pos2, pos3 };

const char* vocab_kind_name(VocabKind kind);
std::optional<VocabKind> vocab_kind_from_name(const std::string& name);
int vocab_arity(VocabKind kind); // 1 for word/pos1, 2 for bigram/pos2, ...

struct Vocabulary {
    VocabKind kind = VocabKind::word;
    std::vector<std::string> terms; // sorted; n-gram terms are tokens joined by '_'
    std::vector<int> doc_freq;      // per term, number of documents containing it
    std::size_t n_docs = 0;
    int min_df = 1;

    // index into terms, or -1 when absent
    long long index_of(const std::string& term) const;
    double idf(std::size_t term_index) const; // ln((1+N)/(1+df)) + 1
};

// Document frequency over per-user documents; terms below min_df dropped.
Vocabulary fit_vocabulary(VocabKind kind, const std::vector<TokenDoc>& docs, int min_df);

// Raw counts of the vocabulary's terms in one document.
std::vector<double> count_row(const TokenDoc& doc, const Vocabulary& vocab);

// tf * idf with tf = raw count, then the whole row L2-normalized.
// Out-of-vocabulary terms are ignored.
std::vector<double> tfidf_row(const TokenDoc& doc, const Vocabulary& vocab);

// Counts divided by the document's total token count; zero row for an empty
// document.
std::vector<double> freq_row(const TokenDoc& doc, const Vocabulary& vocab);

// The fifteen profile attributes, in their documented order. The bio length
// appears twice upstream (expressivity and platform use both list it), so two
// identical columns come out; they are kept separate on purpose.
std::vector<std::pair<std::string, double>> behavioral_vector(const UserRecord& user);

struct FeatureColumn {
    std::string name;
    std::string family; // behavioral | tfidf | ngram | pos | emotion
    std::vector<double> values;

    std::string key() const { return family + ":" + name; }
};

struct Bounds {
    double min = 0.0;
    double max = 0.0;
};

struct FeatureMatrix {
    std::vector<std::string> user_handles;
    std::vector<FeatureColumn> columns;   // kept sorted by (family, name)
    std::map<std::string, Bounds> bounds; // fitted min-max per column key

    std::size_t n_rows() const { return user_handles.size(); }
    std::size_t n_cols() const { return columns.size(); }
    const FeatureColumn* find(const std::string& family, const std::string& name) const;

    void add_column(FeatureColumn column); // keeps the (family, name) order
    void sort_columns();

    // Min-max bounds from fit_rows only, then all rows rescaled with clamping;
    // a constant column maps to all zeros.
    void minmax_fit_transform(const std::vector<std::size_t>& fit_rows);
    // Rescale with previously fitted bounds (for rows built after fitting).
    static double apply_bounds(double x, const Bounds& b);

    void save_csv(const std::string& path) const;
    static FeatureMatrix load_csv(const std::string& path);
};

// Column names of the k strongest |Pearson| correlates of target, computed
// over the given rows. Ties (including the all-constant case) break by
// lexicographic name. Fewer than k columns: all of them.
std::vector<std::string> select_top_k(const std::vector<FeatureColumn>& columns,
                                      const std::vector<double>& target, std::size_t k,
                                      const std::vector<std::size_t>& rows);

} // namespace psyprof::features

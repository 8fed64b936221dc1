#include "psyprof/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "psyprof/csvio.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/textprep.hpp"

namespace psyprof::features {

std::vector<std::string> TokenDoc::flattened() const {
    std::vector<std::string> all;
    for (const auto& t : tweets) all.insert(all.end(), t.begin(), t.end());
    return all;
}

std::size_t TokenDoc::token_count() const {
    std::size_t n = 0;
    for (const auto& t : tweets) n += t.size();
    return n;
}

const char* vocab_kind_name(VocabKind kind) {
    switch (kind) {
    case VocabKind::word: return "word";
    case VocabKind::bigram: return "bigram";
    case VocabKind::trigram: return "trigram";
    case VocabKind::pos1: return "pos1";
    case VocabKind::pos2: return "pos2";
    case VocabKind::pos3: return "pos3";
    }
    return "word";
}

std::optional<VocabKind> vocab_kind_from_name(const std::string& name) {
    for (const VocabKind k : {VocabKind::word, VocabKind::bigram, VocabKind::trigram,
                              VocabKind::pos1, VocabKind::pos2, VocabKind::pos3}) {
        if (name == vocab_kind_name(k)) return k;
    }
    return std::nullopt;
}

int vocab_arity(VocabKind kind) {
    switch (kind) {
    case VocabKind::word:
    case VocabKind::pos1: return 1;
    case VocabKind::bigram:
    case VocabKind::pos2: return 2;
    case VocabKind::trigram:
    case VocabKind::pos3: return 3;
    }
    return 1;
}

long long Vocabulary::index_of(const std::string& term) const {
    const auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it == terms.end() || *it != term) return -1;
    return it - terms.begin();
}

double Vocabulary::idf(std::size_t term_index) const {
    return std::log((1.0 + static_cast<double>(n_docs)) /
                    (1.0 + static_cast<double>(doc_freq[term_index]))) +
           1.0;
}

namespace {

template <typename Fn>
void each_term(const TokenDoc& doc, int arity, Fn&& fn) {
    for (const auto& tweet : doc.tweets) {
        if (static_cast<int>(tweet.size()) < arity) continue;
        for (std::size_t i = 0; i + arity <= tweet.size(); ++i) {
            std::string term = tweet[i];
            for (int j = 1; j < arity; ++j) {
                term += '_';
                term += tweet[i + j];
            }
            fn(term);
        }
    }
}

} // namespace

Vocabulary fit_vocabulary(VocabKind kind, const std::vector<TokenDoc>& docs, int min_df) {
    if (docs.empty()) throw DataError("cannot fit a vocabulary on an empty corpus");
    if (min_df < 1) throw ConfigError("min_df must be >= 1");
    const int arity = vocab_arity(kind);
    std::map<std::string, int> df;
    for (const auto& doc : docs) {
        std::set<std::string> seen;
        each_term(doc, arity, [&seen](const std::string& t) { seen.insert(t); });
        for (const auto& t : seen) df[t] += 1;
    }
    Vocabulary vocab;
    vocab.kind = kind;
    vocab.n_docs = docs.size();
    vocab.min_df = min_df;
    for (const auto& [term, n] : df) {
        if (n >= min_df) {
            vocab.terms.push_back(term);
            vocab.doc_freq.push_back(n);
        }
    }
    return vocab;
}

std::vector<double> count_row(const TokenDoc& doc, const Vocabulary& vocab) {
    std::vector<double> row(vocab.terms.size(), 0.0);
    each_term(doc, vocab_arity(vocab.kind), [&](const std::string& t) {
        const long long i = vocab.index_of(t);
        if (i >= 0) row[static_cast<std::size_t>(i)] += 1.0;
    });
    return row;
}

std::vector<double> tfidf_row(const TokenDoc& doc, const Vocabulary& vocab) {
    std::vector<double> row = count_row(doc, vocab);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        row[i] *= vocab.idf(i);
        norm_sq += row[i] * row[i];
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& v : row) v *= inv;
    }
    return row;
}

std::vector<double> freq_row(const TokenDoc& doc, const Vocabulary& vocab) {
    std::vector<double> row = count_row(doc, vocab);
    const std::size_t total = doc.token_count();
    if (total == 0) return row; // already all zeros
    for (auto& v : row) v /= static_cast<double>(total);
    return row;
}

namespace {

bool is_upper_word(const std::string& token) {
    int letters = 0;
    for (char c : token) {
        if (c >= 'a' && c <= 'z') return false;
        if (c >= 'A' && c <= 'Z') ++letters;
    }
    return letters >= 2;
}

} // namespace

std::vector<std::pair<std::string, double>> behavioral_vector(const UserRecord& user) {
    const UserProfile& p = user.profile;
    double urls = 0, hashtags = 0, mentions = 0, retweets = 0;
    double chars = 0, words = 0, upper = 0;
    for (const Tweet& t : user.tweets) {
        hashtags += t.hashtag_count;
        mentions += t.mention_count;
        retweets += t.is_retweet ? 1.0 : 0.0;
        chars += static_cast<double>(t.text.size());
        for (const auto& tok : textprep::tokenize(t.text)) {
            words += 1.0;
            if (textprep::is_url_token(tok)) urls += 1.0;
            if (is_upper_word(tok)) upper += 1.0;
        }
    }
    const double n_tweets = user.tweets.empty() ? 1.0 : static_cast<double>(user.tweets.size());
    const double age = static_cast<double>(p.account_age_days < 1 ? 1 : p.account_age_days);
    const double bio_len = static_cast<double>(p.bio.size());
    return {
        {"statuses_total", static_cast<double>(p.statuses_count)},
        {"tweets_per_day", static_cast<double>(p.statuses_count) / age},
        {"urls_shared", urls},
        {"hashtags_used", hashtags},
        {"bio_length", bio_len},
        {"tweet_length_mean", chars / n_tweets},
        {"words_per_tweet_mean", words / n_tweets},
        {"uppercase_words_mean", upper / n_tweets},
        {"followers", static_cast<double>(p.followers_count)},
        {"listed", static_cast<double>(p.listed_count)},
        {"mentions_made", mentions},
        {"retweets_made", retweets},
        {"account_age_days", age},
        {"favourites", static_cast<double>(p.favourites_count)},
        // the source attribute table lists the bio length twice; both columns
        // are emitted rather than silently merged
        {"bio_length_profile", bio_len},
    };
}

const FeatureColumn* FeatureMatrix::find(const std::string& family,
                                         const std::string& name) const {
    for (const auto& c : columns) {
        if (c.family == family && c.name == name) return &c;
    }
    return nullptr;
}

namespace {

bool column_order(const FeatureColumn& a, const FeatureColumn& b) {
    if (a.family != b.family) return a.family < b.family;
    return a.name < b.name;
}

} // namespace

void FeatureMatrix::add_column(FeatureColumn column) {
    if (column.values.size() != n_rows()) {
        throw DataError("column " + column.key() + " has " +
                        std::to_string(column.values.size()) + " values for " +
                        std::to_string(n_rows()) + " users");
    }
    const auto it = std::lower_bound(columns.begin(), columns.end(), column, column_order);
    if (it != columns.end() && it->family == column.family && it->name == column.name) {
        throw DataError("duplicate feature column " + column.key());
    }
    columns.insert(it, std::move(column));
}

void FeatureMatrix::sort_columns() { std::sort(columns.begin(), columns.end(), column_order); }

double FeatureMatrix::apply_bounds(double x, const Bounds& b) {
    if (!(b.max > b.min)) return 0.0;
    return clamp01((x - b.min) / (b.max - b.min));
}

void FeatureMatrix::minmax_fit_transform(const std::vector<std::size_t>& fit_rows) {
    if (fit_rows.empty()) throw DataError("min-max fitting needs at least one row");
    bounds.clear();
    for (auto& col : columns) {
        Bounds b{col.values[fit_rows[0]], col.values[fit_rows[0]]};
        for (const std::size_t r : fit_rows) {
            b.min = std::min(b.min, col.values[r]);
            b.max = std::max(b.max, col.values[r]);
        }
        bounds[col.key()] = b;
        for (auto& v : col.values) v = apply_bounds(v, b);
    }
}

void FeatureMatrix::save_csv(const std::string& path) const {
    std::vector<std::string> header;
    header.push_back("user");
    for (const auto& c : columns) header.push_back(c.key());
    std::vector<std::vector<std::string>> rows;
    rows.reserve(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(columns.size() + 1);
        row.push_back(user_handles[r]);
        for (const auto& c : columns) row.push_back(format_double(c.values[r]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

FeatureMatrix FeatureMatrix::load_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "user") {
        throw DataError("not a feature matrix CSV: " + path);
    }
    FeatureMatrix m;
    const std::size_t n_cols = rows[0].size() - 1;
    std::vector<FeatureColumn> cols(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        const std::string& key = rows[0][c + 1];
        const auto colon = key.find(':');
        if (colon == std::string::npos) throw DataError("bad column header '" + key + "'");
        cols[c].family = key.substr(0, colon);
        cols[c].name = key.substr(colon + 1);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) {
            throw DataError("ragged feature matrix row " + std::to_string(r + 1));
        }
        m.user_handles.push_back(rows[r][0]);
        for (std::size_t c = 0; c < n_cols; ++c) {
            cols[c].values.push_back(parse_double(rows[r][c + 1], "feature value"));
        }
    }
    m.columns = std::move(cols); // header order is already (family, name) sorted
    return m;
}

std::vector<std::string> select_top_k(const std::vector<FeatureColumn>& columns,
                                      const std::vector<double>& target, std::size_t k,
                                      const std::vector<std::size_t>& rows) {
    std::vector<double> y;
    y.reserve(rows.size());
    for (const std::size_t r : rows) y.push_back(target[r]);

    struct Scored {
        double score;
        const std::string* name;
    };
    std::vector<Scored> scored;
    scored.reserve(columns.size());
    std::vector<double> x(rows.size());
    for (const auto& col : columns) {
        for (std::size_t i = 0; i < rows.size(); ++i) x[i] = col.values[rows[i]];
        scored.push_back({std::fabs(pearson_r(x, y)), &col.name});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return *a.name < *b.name;
    });
    const std::size_t take = std::min(k, scored.size());
    std::vector<std::string> names;
    names.reserve(take);
    for (std::size_t i = 0; i < take; ++i) names.push_back(*scored[i].name);
    return names;
}

} // namespace psyprof::features

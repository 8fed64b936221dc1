#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "psyprof/features.hpp"
#include "psyprof/types.hpp"

namespace psyprof::emotion {

// Word-level affect resources. Keys are stemmed at load time so that lookups
// match the stemmed tokens coming out of the text pipeline ("joyful" and
// "joy" both arrive as "joi").
struct AffectLexicon {
    // stemmed word -> strength per emotion (0 = no entry)
    std::map<std::string, std::array<double, kEmotionCount>> emotions;
    // stemmed word -> (positive score, negative score)
    std::map<std::string, std::pair<double, double>> sentiment;
    // synset id -> stemmed member words
    std::map<std::string, std::vector<std::string>> synsets;

    bool has_emotion_entry(const std::string& stemmed_word) const;
};

// TSV rows, three kinds distinguished by shape:
//   word <TAB> emotion <TAB> strength        (strength in (0,1], max on duplicates)
//   word <TAB> pos_score <TAB> neg_score     (both numeric)
//   synset_id <TAB> word,word,...            (two columns)
// Lines with an unknown emotion label or a bad strength are skipped with a
// diagnostic. '#' starts a comment.
AffectLexicon load_lexicon(const std::string& path,
                           std::vector<std::string>* diagnostics = nullptr);

// Every word in a synonym group inherits the emotion entries of every labeled
// member (max strength on conflict). Only adds entries; idempotent.
AffectLexicon expand_lexicon(const AffectLexicon& lex);

struct EmojiMap {
    // emoji byte sequence -> emotion
    std::map<std::string, Emotion> entries;
};

// TSV `emoji<TAB>emotion`; unknown labels skipped with a diagnostic.
EmojiMap load_emoji_map(const std::string& path,
                        std::vector<std::string>* diagnostics = nullptr);

// Per emotion, the summed strengths of matching stemmed tokens divided by the
// total token count. Zero vector when there are no tokens.
std::array<double, kEmotionCount>
text_emotion_freq(const std::vector<std::vector<std::string>>& tweet_tokens,
                  const AffectLexicon& lex);

// Per emotion, mapped-emoji count divided by the total mapped-emoji count.
// Scans the raw (uncleaned) text with longest-match so that multi-codepoint
// sequences win over their prefixes. Zero vector when nothing maps.
std::array<double, kEmotionCount> emoji_emotion_freq(const std::vector<std::string>& raw_texts,
                                                     const EmojiMap& map);

// Positive and negative scores summed per tweet, then averaged over tweets.
std::pair<double, double>
sentiment_scores(const std::vector<std::vector<std::string>>& tweet_tokens,
                 const AffectLexicon& lex);

// One text with six binary emotion flags, the training corpus row.
struct EmotionExample {
    std::string id;
    std::string text;
    std::array<int, kEmotionCount> labels{};
};

// TSV `id<TAB>text<TAB>j,s,a,d,f,s` with binary flags in canonical order.
std::vector<EmotionExample> load_emotion_corpus(const std::string& path);

struct SvmHead {
    std::vector<double> weights; // over the attribute layout, bias apart
    double bias = 0.0;
    // A head with no positive training examples predicts 0 outright.
    bool constant_negative = false;
};

// Six one-vs-rest linear SVMs over [text freq 6 | emoji freq 6 | sentiment 2 |
// tfidf block]. Attributes are min-max normalized with bounds fitted on the
// training split.
struct EmotionClassifier {
    features::Vocabulary vocab; // tfidf block vocabulary, fitted on the split
    std::vector<features::Bounds> bounds;
    std::array<SvmHead, kEmotionCount> heads;
    double lambda = 1e-4;
    int epochs = 10;

    std::size_t attribute_count() const { return 14 + vocab.terms.size(); }

    std::string to_json() const;
    static EmotionClassifier from_json(const std::string& text);
    void save(const std::string& path) const;
    static EmotionClassifier load(const std::string& path);
};

// Raw (un-normalized) attribute vector for a bundle of texts: one tweet for a
// corpus example, all of a user's tweets for prediction.
std::vector<double> emotion_attributes(const std::vector<std::string>& raw_texts,
                                       const AffectLexicon& lex, const EmojiMap& emoji,
                                       const features::Vocabulary& vocab);

struct EmotionTrainConfig {
    double train_fraction = 0.8;
    double lambda = 1e-4;
    int epochs = 10;
    int min_df = 2;
    std::uint64_t seed = 0;
};

struct EmotionTrainReport {
    double micro_precision = 0.0; // on the held-out split
    std::size_t train_count = 0;
    std::size_t heldout_count = 0;
    std::array<int, kEmotionCount> positive_train_counts{};
    std::vector<std::string> warnings;
    // regularized hinge objective of the averaged iterate after each epoch
    std::array<std::vector<double>, kEmotionCount> epoch_objectives;
};

// Pegasos-style primal subgradient descent (eta_t = 1/(lambda t)) on each
// head, returning the averaged iterate. The seed fixes the split and the
// per-epoch example order, so training is bit-reproducible.
EmotionClassifier train_emotion_classifier(const std::vector<EmotionExample>& corpus,
                                           const AffectLexicon& lex, const EmojiMap& emoji,
                                           const EmotionTrainConfig& config,
                                           EmotionTrainReport* report = nullptr);

// Margins squashed through the logistic; raw attributes are normalized with
// the classifier's fitted bounds first. Layout mismatch is rejected.
EmotionVector predict_emotion_vector(const std::vector<double>& raw_attributes,
                                     const EmotionClassifier& clf);

} // namespace psyprof::emotion

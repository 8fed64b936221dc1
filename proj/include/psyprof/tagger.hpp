#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace psyprof::tagger {

// Universal 12-tag set, kept sorted: tie breaks in decoding are "first tag in
// lexicographic order", which greedy iteration over this array gives for free.
inline constexpr std::array<const char*, 12> kTagset = {
    "ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN",
    "NUM", "PRON", "PRT", "PUNCT", "VERB", "X",
};

bool is_known_tag(const std::string& tag);

struct TaggedToken {
    std::string word;
    std::string tag;
};
using Sentence = std::vector<TaggedToken>;

// word<TAB>tag per line, blank line between sentences, '#' comments allowed.
std::vector<Sentence> load_tagged_corpus(const std::string& path);

struct TaggerModel {
    std::vector<std::string> tagset;                              // sorted
    std::map<std::string, std::string> lexicon;                   // closed-class words
    std::map<std::string, std::map<std::string, double>> weights; // feature -> tag -> w
    bool trained = false;

    // Untrained model carrying only the builtin closed-class lexicon; tag()
    // then falls back to suffix rules.
    static TaggerModel rule_fallback();

    std::string to_json() const;
    static TaggerModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static TaggerModel load(const std::string& path);
};

struct TrainReport {
    double heldout_accuracy = 0.0;
    std::size_t train_sentences = 0;
    std::size_t heldout_sentences = 0; // 0 means accuracy was measured on train
    std::size_t heldout_tokens = 0;
};

// Averaged perceptron over features {word, suffixes 1..3, prev tag, prev
// word, next word}. Sentences are shuffled per epoch with the given seed.
TaggerModel train_tagger(const std::vector<Sentence>& corpus, int epochs, std::uint64_t seed,
                         double heldout_fraction = 0.2, TrainReport* report = nullptr);

// One tag per token. Closed-class lexicon wins; otherwise perceptron scores
// (or suffix rules for an untrained model when fallback is allowed).
std::vector<std::string> tag(const std::vector<std::string>& tokens, const TaggerModel& model,
                             bool fallback_enabled = true);

} // namespace psyprof::tagger

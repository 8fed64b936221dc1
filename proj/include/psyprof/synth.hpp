#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "psyprof/types.hpp"

namespace psyprof::synth {

// Marginal generator for one trait: a Beta matched to (mean, std), a uniform
// range, or a recipe tying it to another trait. A recipe draws
//   clamp01(weight * source + (1 - weight) * mean + sqrt(1 - weight^2) * std * z)
// so weight 1 reproduces the source exactly and the marginal moments stay
// near (mean, std) for smaller weights.
struct TraitMarginal {
    std::string dist = "beta"; // beta | uniform
    double mean = 0.5;
    double std_dev = 0.15;
    double low = 0.0; // uniform only
    double high = 1.0;
    bool has_recipe = false;
    Trait source = Trait::anxiety;
    double weight = 0.0;
};

// One planted relationship. family picks the mechanism:
//   tfidf   - single words from a named word bank, rate grows with the trait
//   ngram   - adjacent pairs from a named word bank (creates phrases)
//   pos     - words from a named word bank whose tags carry the signal
//   emotion - words from the emotion bank for `bank` (a label name)
//   emoji   - emojis from the emoji bank for `bank`
//   behavioral - scales the profile counter named by `bank`
struct PlantedSignal {
    std::string family;
    std::string bank;
    Trait trait = Trait::anxiety;
    double effect = 0.0; // in [0,1]
};

struct SynthSpec {
    std::size_t n_users = 100;
    std::uint64_t seed = 0;
    int min_tweets = 15;
    int max_tweets = 30;
    int min_tokens = 5;
    int max_tokens = 12;
    int spam_users = 0;
    std::array<TraitMarginal, kTraitCount> traits{};
    std::vector<PlantedSignal> signals;
    std::vector<std::string> neutral_words;
    std::map<std::string, std::vector<std::string>> word_banks;
    std::array<std::vector<std::string>, kEmotionCount> emotion_words{};
    std::array<std::vector<std::string>, kEmotionCount> emojis{};

    static SynthSpec from_json(const std::string& text);
    static SynthSpec load(const std::string& path);
};

// Deterministic corpus: user u draws traits from stream 2u and text from
// stream 2u+1, so records are independent of generation order.
std::vector<UserRecord> generate(const SynthSpec& spec);

// The exact label generate() gave user_index, recomputed from the seed. Goes
// through the same raw-scale round trip the corpus loader applies, so the
// value matches a reloaded archive bit for bit.
TraitProfile oracle_traits(const SynthSpec& spec, std::size_t user_index);

// One JSON object per line in the archive format corpus.load_users reads.
void write_users_jsonl(const std::vector<UserRecord>& users, const std::string& path);

} // namespace psyprof::synth

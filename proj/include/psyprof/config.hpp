#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "psyprof/corpus.hpp"
#include "psyprof/types.hpp"

namespace psyprof::config {

// Input artifacts and the output directory. Paths are used as given, so
// relative paths resolve against the working directory. Nothing here is
// checked for existence at parse time; each command validates the inputs it
// actually opens.
struct PathsConfig {
    std::string corpus;            // users JSONL archive
    std::string stopwords;
    std::string emotion_lexicon;
    std::string emoji_map;
    std::string tagger_corpus;     // tagged sentences TSV
    std::string tagger_model;      // optional pretrained tagger; skips training
    std::string emotion_corpus;    // labeled emotion examples TSV
    std::string questionnaire_key; // optional; empty when archives carry raw_traits
    std::string synth_spec;        // generator spec JSON
    std::string out_dir = "out";
};

struct FeatureConfig {
    int min_df = 2;  // document-frequency floor for every fitted vocabulary
    int top_k = 100; // columns kept per trait by univariate selection
};

struct EmotionConfig {
    double lambda = 1e-4;
    int epochs = 10;
    double train_fraction = 0.8;
    int min_df = 2;
};

struct TaggerConfig {
    int epochs = 10;
    double heldout_fraction = 0.2;
};

struct ModelConfig {
    int n_trees = 100;
    int max_depth = -1; // -1: grow until the leaf floor
    int min_samples_leaf = 5;
    double max_features = 1.0 / 3.0;
    int n_chains = 10;
    bool teacher_forcing = true;
    int n_threads = 0; // 0: hardware concurrency
};

// evaluate's protocol: "cv" runs k-fold cross-validation with per-fold
// feature fitting; "holdout" uses a single seeded split of test_fraction.
struct SplitConfig {
    std::string protocol = "cv";
    int k = 5;
    double test_fraction = 0.2;
};

struct EmbedConfig {
    std::string method = "tsne"; // tsne | pca
    double perplexity = 30.0;
    int iterations = 1000;
    std::string group_trait = "anxiety"; // users split at the threshold
    double group_threshold = 0.5;
};

struct CurveConfig {
    std::vector<double> fractions{0.4, 0.6, 0.8, 1.0};
};

// Everything the commands need, read from a small TOML-style file: [section]
// headers, key = value lines, '#' comments, quoted strings, numbers, booleans
// and flat arrays. Unknown sections or keys are rejected so a typo cannot
// silently fall back to a default.
struct PipelineConfig {
    PathsConfig paths;
    corpus::SpamPolicy spam;
    FeatureConfig features;
    EmotionConfig emotion;
    TaggerConfig tagger;
    ModelConfig model;
    SplitConfig split;
    std::array<std::vector<std::string>, kTraitCount> routes; // families per trait
    std::uint64_t master_seed = 0;
    EmbedConfig embed;
    CurveConfig curve;

    PipelineConfig();

    static PipelineConfig from_string(const std::string& text);
    static PipelineConfig load(const std::string& path);
};

// Per-trait feature families reported best by validation; the [routes]
// section overrides any subset of them.
std::array<std::vector<std::string>, kTraitCount> default_routes();

} // namespace psyprof::config

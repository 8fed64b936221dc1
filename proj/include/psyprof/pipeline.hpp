#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "psyprof/analysis.hpp"
#include "psyprof/config.hpp"
#include "psyprof/emotion.hpp"
#include "psyprof/features.hpp"
#include "psyprof/ml.hpp"
#include "psyprof/tagger.hpp"
#include "psyprof/types.hpp"

namespace psyprof::pipeline {

// Every command draws its randomness from a fixed stream off the master
// seed, so interleaving or repeating commands never shifts another command's
// results.
enum class SeedStream : std::uint64_t {
    tagger = 11,
    emotion = 12,
    split = 13,
    model = 14,
    embed = 15,
    curve = 16,
};

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream);

// "<out_dir>/<name>", creating out_dir on demand.
std::string artifact_path(const config::PipelineConfig& cfg, const std::string& name);

// Static word-level resources shared by featurization and prediction.
struct Resources {
    std::vector<std::string> stoplist; // empty: builtin list
    emotion::AffectLexicon lexicon;    // synonym groups already expanded
    emotion::EmojiMap emoji;
};

Resources load_resources(const config::PipelineConfig& cfg);

// Per-user raw material every feature family draws from. Building it needs
// only fold-independent state (tagger, emotion classifier), so evaluation
// computes it once and refits vocabularies per fold on top.
struct UserMaterial {
    features::TokenDoc words; // cleaned, stopword-free, stemmed, per tweet
    features::TokenDoc tags;  // POS tags of the cleaned unstemmed stream
    std::vector<std::pair<std::string, double>> behavioral;
    EmotionVector emotions;
};

std::vector<UserMaterial> build_materials(const std::vector<UserRecord>& users,
                                          const Resources& res,
                                          const tagger::TaggerModel& tagger_model,
                                          const emotion::EmotionClassifier& clf, int n_threads);

// The frozen featurization state: applying it to any archive reproduces the
// exact column layout it was fitted with.
struct FeaturePipeline {
    int min_df = 2;
    tagger::TaggerModel tagger_model;
    emotion::EmotionClassifier emotion_clf;
    features::Vocabulary word_vocab, bigram_vocab, trigram_vocab;
    features::Vocabulary pos1_vocab, pos2_vocab, pos3_vocab;
    std::map<std::string, features::Bounds> bounds;
    std::vector<std::string> column_keys; // matrix column order

    // FNV-1a over the layout, vocabularies and bounds; models remember it so
    // a prediction against a differently fitted layout is rejected.
    std::string layout_hash() const;

    std::string to_json() const;
    static FeaturePipeline from_json(const std::string& text);
    void save(const std::string& path) const;
    static FeaturePipeline load(const std::string& path);
};

// Fits vocabularies on fit_rows, assembles the matrix for all users, fits
// min-max bounds on fit_rows and rescales every row.
std::pair<FeaturePipeline, features::FeatureMatrix>
fit_pipeline(const std::vector<UserRecord>& users, const std::vector<UserMaterial>& materials,
             const std::vector<std::size_t>& fit_rows, int min_df,
             tagger::TaggerModel tagger_model, emotion::EmotionClassifier clf);

// Matrix for new users under an already-fitted pipeline: frozen vocabularies,
// stored bounds, identical column order.
features::FeatureMatrix transform_users(const std::vector<UserRecord>& users,
                                        const std::vector<UserMaterial>& materials,
                                        const FeaturePipeline& fp);

// Row-major copy of the matrix in its column order, the layout ml expects.
ml::Matrix to_rows(const features::FeatureMatrix& fm);

// Per-trait targets of labeled users; throws when any label is missing.
ml::TraitTargets targets_of(const std::vector<UserRecord>& users);

// Univariate selection per trait over the routed families. Returns matrix
// column indices for the models plus the selected keys for the reports.
std::pair<ml::Routes, std::array<std::vector<std::string>, kTraitCount>>
route_columns(const features::FeatureMatrix& fm, const ml::TraitTargets& targets,
              const std::array<std::vector<std::string>, kTraitCount>& families, int top_k,
              const std::vector<std::size_t>& fit_rows);

// The trained predictors plus the layout hash of the pipeline they expect.
struct ModelBundle {
    std::string pipeline_hash;
    std::array<double, kTraitCount> baseline_means{};
    std::array<std::vector<std::string>, kTraitCount> selected; // column keys
    ml::IndependentModel independent;
    ml::HolisticModel holistic;

    std::string to_json() const;
    static ModelBundle from_json(const std::string& text);
    void save(const std::string& path) const;
    static ModelBundle load(const std::string& path);
};

// Command drivers. Each is a pure function of (config, input files): it
// writes its artifacts into out_dir and returns a small summary.

struct SynthSummary {
    std::size_t n_users = 0;
    std::string path;
};
SynthSummary run_synth(const config::PipelineConfig& cfg);

struct IngestSummary {
    std::size_t loaded = 0;
    std::size_t kept = 0;
    std::size_t removals = 0;
    std::vector<std::string> diagnostics;
};
IngestSummary run_ingest(const config::PipelineConfig& cfg);

struct TrainEmotionSummary {
    double micro_precision = 0.0;
    std::size_t train_count = 0;
    std::size_t heldout_count = 0;
};
TrainEmotionSummary run_train_emotion(const config::PipelineConfig& cfg);

struct FeaturizeSummary {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::string layout_hash;
    double tagger_heldout_accuracy = 0.0;
};
FeaturizeSummary run_featurize(const config::PipelineConfig& cfg);

struct TrainSummary {
    std::size_t n_rows = 0;
    std::array<std::size_t, kTraitCount> routed_counts{};
};
TrainSummary run_train(const config::PipelineConfig& cfg);

struct EvaluateSummary {
    std::array<double, kTraitCount> baseline{};
    std::array<double, kTraitCount> independent{};
    std::array<double, kTraitCount> holistic{};
    double mean_baseline = 0.0;
    double mean_independent = 0.0;
    double mean_holistic = 0.0;
    std::size_t folds = 0;
    bool baseline_only = false;
};
EvaluateSummary run_evaluate(const config::PipelineConfig& cfg, bool baseline_only = false);

struct PredictSummary {
    std::size_t n_users = 0;
};
PredictSummary run_predict(const config::PipelineConfig& cfg);

struct AnalyzeSummary {
    std::size_t n_users = 0;
    std::size_t n_features = 0;
};
AnalyzeSummary run_analyze(const config::PipelineConfig& cfg);

struct EmbedSummary {
    std::size_t n_points = 0;
    double final_kl = 0.0; // 0 for pca
};
EmbedSummary run_embed(const config::PipelineConfig& cfg);

struct CurveSummary {
    std::vector<ml::LearningCurvePoint> points;
};
CurveSummary run_learning_curve(const config::PipelineConfig& cfg);

} // namespace psyprof::pipeline

#include "psyprof/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psyprof/corpus.hpp"
#include "psyprof/csvio.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/parallel.hpp"
#include "psyprof/rng.hpp"
#include "psyprof/synth.hpp"
#include "psyprof/textprep.hpp"

namespace psyprof::pipeline {

using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) {
    return derive_seed(master, static_cast<std::uint64_t>(stream));
}

std::string artifact_path(const config::PipelineConfig& cfg, const std::string& name) {
    const std::string dir = cfg.paths.out_dir.empty() ? "." : cfg.paths.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw MissingInputError("cannot create output directory '" + dir + "'");
    return dir + "/" + name;
}

namespace {

const std::string& require_path(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("paths.") + key + " is not set");
    return value;
}

// Artifact names under out_dir. Fixed so commands can find each other's work.
constexpr const char* kUsersFile = "users.jsonl";
constexpr const char* kCleanFile = "users_clean.jsonl";
constexpr const char* kRemovalsFile = "removals.csv";
constexpr const char* kEmotionFile = "emotion.json";
constexpr const char* kEmotionReportFile = "emotion_report.csv";
constexpr const char* kFeaturesFile = "features.csv";
constexpr const char* kPipelineFile = "pipeline.json";
constexpr const char* kModelFile = "model.json";
constexpr const char* kEvaluateFile = "evaluate.csv";
constexpr const char* kPredictionsFile = "predictions.csv";
constexpr const char* kTraitStatsFile = "trait_stats.csv";
constexpr const char* kFeatureTraitFile = "feature_trait.csv";
constexpr const char* kTraitTraitFile = "trait_trait.csv";
constexpr const char* kGroupCdfFile = "group_cdf.csv";
constexpr const char* kEmbeddingFile = "embedding.csv";
constexpr const char* kCurveFile = "learning_curve.csv";

std::vector<UserRecord> load_clean_users(const config::PipelineConfig& cfg) {
    const auto result = corpus::load_users(artifact_path(cfg, kCleanFile));
    if (!result.diagnostics.empty()) {
        throw DataError("cleaned archive has invalid lines; rerun ingest");
    }
    return result.users;
}

// Trains from paths.tagger_corpus unless a pretrained model is configured.
std::pair<tagger::TaggerModel, double> tagger_for(const config::PipelineConfig& cfg) {
    if (!cfg.paths.tagger_model.empty()) {
        return {tagger::TaggerModel::load(cfg.paths.tagger_model), 0.0};
    }
    const auto sentences =
        tagger::load_tagged_corpus(require_path(cfg.paths.tagger_corpus, "tagger_corpus"));
    tagger::TrainReport report;
    auto model = tagger::train_tagger(sentences, cfg.tagger.epochs,
                                      stream_seed(cfg.master_seed, SeedStream::tagger),
                                      cfg.tagger.heldout_fraction, &report);
    return {std::move(model), report.heldout_accuracy};
}

emotion::EmotionTrainConfig emotion_train_config(const config::PipelineConfig& cfg) {
    emotion::EmotionTrainConfig tc;
    tc.train_fraction = cfg.emotion.train_fraction;
    tc.lambda = cfg.emotion.lambda;
    tc.epochs = cfg.emotion.epochs;
    tc.min_df = cfg.emotion.min_df;
    tc.seed = stream_seed(cfg.master_seed, SeedStream::emotion);
    return tc;
}

ml::ForestParams forest_params(const config::PipelineConfig& cfg) {
    ml::ForestParams p;
    p.n_trees = cfg.model.n_trees;
    p.tree.max_depth = cfg.model.max_depth;
    p.tree.min_samples_leaf = cfg.model.min_samples_leaf;
    p.tree.max_features = cfg.model.max_features;
    p.n_threads = cfg.model.n_threads;
    return p;
}

// Full-length per-trait targets (zeros where the label is missing) plus the
// labeled row indices.
std::pair<ml::TraitTargets, std::vector<std::size_t>>
labeled_targets(const std::vector<UserRecord>& users) {
    ml::TraitTargets targets;
    for (auto& t : targets) t.assign(users.size(), 0.0);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (!users[i].label) continue;
        rows.push_back(i);
        for (int t = 0; t < kTraitCount; ++t) {
            targets[t][i] = users[i].label->values[t];
        }
    }
    return {std::move(targets), std::move(rows)};
}

ml::Matrix take(const ml::Matrix& X, const std::vector<std::size_t>& rows) {
    ml::Matrix out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) out.push_back(X[r]);
    return out;
}

ml::TraitTargets take(const ml::TraitTargets& Y, const std::vector<std::size_t>& rows) {
    ml::TraitTargets out;
    for (int t = 0; t < kTraitCount; ++t) {
        out[t].reserve(rows.size());
        for (const std::size_t r : rows) out[t].push_back(Y[t][r]);
    }
    return out;
}

std::vector<TraitProfile> labels_of(const std::vector<UserRecord>& users) {
    std::vector<TraitProfile> labels;
    labels.reserve(users.size());
    for (const auto& u : users) {
        if (!u.label) {
            throw DataError("user '" + u.profile.handle +
                            "' has no trait label; this report needs labeled users");
        }
        labels.push_back(*u.label);
    }
    return labels;
}

std::vector<UserRecord> keep_labeled(std::vector<UserRecord> users) {
    users.erase(std::remove_if(users.begin(), users.end(),
                               [](const UserRecord& u) { return !u.label.has_value(); }),
                users.end());
    return users;
}

json vocab_payload(const features::Vocabulary& v) {
    return json{{"kind", features::vocab_kind_name(v.kind)},
                {"terms", v.terms},
                {"doc_freq", v.doc_freq},
                {"n_docs", v.n_docs},
                {"min_df", v.min_df}};
}

features::Vocabulary vocab_from_payload(const json& j) {
    features::Vocabulary v;
    const auto kind = features::vocab_kind_from_name(j.at("kind").get<std::string>());
    if (!kind) throw DataError("unknown vocabulary kind in pipeline file");
    v.kind = *kind;
    v.terms = j.at("terms").get<std::vector<std::string>>();
    v.doc_freq = j.at("doc_freq").get<std::vector<int>>();
    v.n_docs = j.at("n_docs").get<std::size_t>();
    v.min_df = j.at("min_df").get<int>();
    if (v.terms.size() != v.doc_freq.size()) {
        throw DataError("vocabulary terms and doc_freq lengths differ");
    }
    return v;
}

// The hash covers everything that determines column meaning: layout, the
// vocabularies behind it and the fitted bounds.
json layout_payload(const FeaturePipeline& fp) {
    json bounds = json::object();
    for (const auto& [key, b] : fp.bounds) bounds[key] = json::array({b.min, b.max});
    return json{{"min_df", fp.min_df},
                {"columns", fp.column_keys},
                {"bounds", std::move(bounds)},
                {"vocabs",
                 json{{"word", vocab_payload(fp.word_vocab)},
                      {"bigram", vocab_payload(fp.bigram_vocab)},
                      {"trigram", vocab_payload(fp.trigram_vocab)},
                      {"pos1", vocab_payload(fp.pos1_vocab)},
                      {"pos2", vocab_payload(fp.pos2_vocab)},
                      {"pos3", vocab_payload(fp.pos3_vocab)}}}};
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

json parse_artifact_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw MissingInputError(std::string("cannot open ") + what + ": " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot write " + path);
    out << content;
}

// Builds the unnormalized matrix for the pipeline's layout; bounds are
// applied (fit path) or reused (transform path) by the callers.
features::FeatureMatrix assemble_matrix(const std::vector<UserRecord>& users,
                                        const std::vector<UserMaterial>& materials,
                                        const FeaturePipeline& fp) {
    if (users.size() != materials.size()) {
        throw DataError("user and material counts differ");
    }
    const std::size_t n = users.size();
    features::FeatureMatrix fm;
    fm.user_handles.reserve(n);
    for (const auto& u : users) fm.user_handles.push_back(u.profile.handle);

    if (n > 0) {
        const std::size_t n_behavioral = materials[0].behavioral.size();
        for (std::size_t j = 0; j < n_behavioral; ++j) {
            features::FeatureColumn col;
            col.family = "behavioral";
            col.name = materials[0].behavioral[j].first;
            col.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) col.values[i] = materials[i].behavioral[j].second;
            fm.add_column(std::move(col));
        }
    }

    const auto block = [&](const features::Vocabulary& vocab, const char* family,
                           std::vector<double> (*row_of)(const features::TokenDoc&,
                                                         const features::Vocabulary&),
                           bool use_words) {
        if (vocab.terms.empty()) return;
        std::vector<std::vector<double>> rows(n);
        for (std::size_t i = 0; i < n; ++i) {
            rows[i] = row_of(use_words ? materials[i].words : materials[i].tags, vocab);
        }
        for (std::size_t j = 0; j < vocab.terms.size(); ++j) {
            features::FeatureColumn col;
            col.family = family;
            col.name = vocab.terms[j];
            col.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) col.values[i] = rows[i][j];
            fm.add_column(std::move(col));
        }
    };
    block(fp.word_vocab, "tfidf", features::tfidf_row, true);
    block(fp.bigram_vocab, "ngram", features::count_row, true);
    block(fp.trigram_vocab, "ngram", features::count_row, true);
    block(fp.pos1_vocab, "pos", features::freq_row, false);
    block(fp.pos2_vocab, "pos", features::freq_row, false);
    block(fp.pos3_vocab, "pos", features::freq_row, false);

    for (int e = 0; e < kEmotionCount; ++e) {
        features::FeatureColumn col;
        col.family = "emotion";
        col.name = kEmotionNames[e];
        col.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) col.values[i] = materials[i].emotions.values[e];
        fm.add_column(std::move(col));
    }
    return fm;
}

std::vector<std::string> column_keys_of(const features::FeatureMatrix& fm) {
    std::vector<std::string> keys;
    keys.reserve(fm.columns.size());
    for (const auto& c : fm.columns) keys.push_back(c.key());
    return keys;
}

void write_evaluate_csv(const std::string& path, const config::PipelineConfig& cfg,
                        const EvaluateSummary& s) {
    std::vector<std::string> header = {"trait", "features", "baseline_rmse"};
    if (!s.baseline_only) {
        header.push_back("independent_rmse");
        header.push_back("holistic_rmse");
    }
    std::vector<std::vector<std::string>> rows;
    const auto family_label = [&](int t) {
        std::string label;
        for (const auto& fam : cfg.routes[t]) {
            if (!label.empty()) label += '+';
            label += fam;
        }
        return label;
    };
    for (int t = 0; t < kTraitCount; ++t) {
        std::vector<std::string> row = {kTraitNames[t], family_label(t),
                                        format_fixed(s.baseline[t])};
        if (!s.baseline_only) {
            row.push_back(format_fixed(s.independent[t]));
            row.push_back(format_fixed(s.holistic[t]));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::string> mean_row = {"mean", "", format_fixed(s.mean_baseline)};
    if (!s.baseline_only) {
        mean_row.push_back(format_fixed(s.mean_independent));
        mean_row.push_back(format_fixed(s.mean_holistic));
    }
    rows.push_back(std::move(mean_row));
    write_csv(path, header, rows);
}

} // namespace

Resources load_resources(const config::PipelineConfig& cfg) {
    Resources res;
    if (!cfg.paths.stopwords.empty()) {
        res.stoplist = textprep::load_stopword_file(cfg.paths.stopwords);
    }
    res.lexicon = emotion::expand_lexicon(
        emotion::load_lexicon(require_path(cfg.paths.emotion_lexicon, "emotion_lexicon")));
    res.emoji = emotion::load_emoji_map(require_path(cfg.paths.emoji_map, "emoji_map"));
    return res;
}

std::vector<UserMaterial> build_materials(const std::vector<UserRecord>& users,
                                          const Resources& res,
                                          const tagger::TaggerModel& tagger_model,
                                          const emotion::EmotionClassifier& clf, int n_threads) {
    std::vector<UserMaterial> materials(users.size());
    parallel_for(users.size(), n_threads, [&](std::size_t i) {
        const UserRecord& user = users[i];
        UserMaterial m;
        std::vector<std::string> raw_texts;
        raw_texts.reserve(user.tweets.size());
        m.words.tweets.reserve(user.tweets.size());
        m.tags.tweets.reserve(user.tweets.size());
        for (const Tweet& tweet : user.tweets) {
            raw_texts.push_back(tweet.text);
            const auto tokens = textprep::tokenize(textprep::clean(tweet.text));
            const auto kept = res.stoplist.empty()
                                  ? textprep::drop_stopwords(tokens)
                                  : textprep::drop_stopwords(tokens, res.stoplist);
            m.words.tweets.push_back(textprep::stem_all(kept));
            m.tags.tweets.push_back(tagger::tag(tokens, tagger_model));
        }
        m.behavioral = features::behavioral_vector(user);
        m.emotions = emotion::predict_emotion_vector(
            emotion::emotion_attributes(raw_texts, res.lexicon, res.emoji, clf.vocab), clf);
        materials[i] = std::move(m);
    });
    return materials;
}

std::string FeaturePipeline::layout_hash() const {
    return fnv1a_hex(layout_payload(*this).dump());
}

std::string FeaturePipeline::to_json() const {
    json j = layout_payload(*this);
    j["kind"] = "feature_pipeline";
    j["version"] = 1;
    j["tagger"] = parse_artifact_json(tagger_model.to_json(), "tagger model");
    j["emotion"] = parse_artifact_json(emotion_clf.to_json(), "emotion classifier");
    return j.dump();
}

FeaturePipeline FeaturePipeline::from_json(const std::string& text) {
    const json j = parse_artifact_json(text, "feature pipeline");
    try {
        if (j.at("kind") != "feature_pipeline" || j.at("version") != 1) {
            throw DataError("not a feature pipeline document");
        }
        FeaturePipeline fp;
        fp.min_df = j.at("min_df").get<int>();
        fp.tagger_model = tagger::TaggerModel::from_json(j.at("tagger").dump());
        fp.emotion_clf = emotion::EmotionClassifier::from_json(j.at("emotion").dump());
        const json& vocabs = j.at("vocabs");
        fp.word_vocab = vocab_from_payload(vocabs.at("word"));
        fp.bigram_vocab = vocab_from_payload(vocabs.at("bigram"));
        fp.trigram_vocab = vocab_from_payload(vocabs.at("trigram"));
        fp.pos1_vocab = vocab_from_payload(vocabs.at("pos1"));
        fp.pos2_vocab = vocab_from_payload(vocabs.at("pos2"));
        fp.pos3_vocab = vocab_from_payload(vocabs.at("pos3"));
        for (const auto& [key, value] : j.at("bounds").items()) {
            if (!value.is_array() || value.size() != 2) {
                throw DataError("bounds entries must be [min,max] pairs");
            }
            fp.bounds[key] = {value.at(0).get<double>(), value.at(1).get<double>()};
        }
        fp.column_keys = j.at("columns").get<std::vector<std::string>>();
        return fp;
    } catch (const json::exception& e) {
        throw DataError(std::string("feature pipeline JSON malformed: ") + e.what());
    }
}

void FeaturePipeline::save(const std::string& path) const {
    write_file(path, to_json() + "\n");
}

FeaturePipeline FeaturePipeline::load(const std::string& path) {
    return from_json(read_file(path, "feature pipeline"));
}

std::pair<FeaturePipeline, features::FeatureMatrix>
fit_pipeline(const std::vector<UserRecord>& users, const std::vector<UserMaterial>& materials,
             const std::vector<std::size_t>& fit_rows, int min_df,
             tagger::TaggerModel tagger_model, emotion::EmotionClassifier clf) {
    if (fit_rows.empty()) throw DataError("cannot fit a feature pipeline on no rows");
    FeaturePipeline fp;
    fp.min_df = min_df;
    fp.tagger_model = std::move(tagger_model);
    fp.emotion_clf = std::move(clf);

    std::vector<features::TokenDoc> word_docs, tag_docs;
    word_docs.reserve(fit_rows.size());
    tag_docs.reserve(fit_rows.size());
    for (const std::size_t r : fit_rows) {
        word_docs.push_back(materials.at(r).words);
        tag_docs.push_back(materials.at(r).tags);
    }
    fp.word_vocab = features::fit_vocabulary(features::VocabKind::word, word_docs, min_df);
    fp.bigram_vocab = features::fit_vocabulary(features::VocabKind::bigram, word_docs, min_df);
    fp.trigram_vocab = features::fit_vocabulary(features::VocabKind::trigram, word_docs, min_df);
    fp.pos1_vocab = features::fit_vocabulary(features::VocabKind::pos1, tag_docs, min_df);
    fp.pos2_vocab = features::fit_vocabulary(features::VocabKind::pos2, tag_docs, min_df);
    fp.pos3_vocab = features::fit_vocabulary(features::VocabKind::pos3, tag_docs, min_df);

    features::FeatureMatrix fm = assemble_matrix(users, materials, fp);
    fm.minmax_fit_transform(fit_rows);
    fp.bounds = fm.bounds;
    fp.column_keys = column_keys_of(fm);
    return {std::move(fp), std::move(fm)};
}

features::FeatureMatrix transform_users(const std::vector<UserRecord>& users,
                                        const std::vector<UserMaterial>& materials,
                                        const FeaturePipeline& fp) {
    features::FeatureMatrix fm = assemble_matrix(users, materials, fp);
    if (column_keys_of(fm) != fp.column_keys) {
        throw LayoutError("assembled columns do not match the fitted pipeline layout");
    }
    fm.bounds = fp.bounds;
    for (auto& col : fm.columns) {
        const auto it = fp.bounds.find(col.key());
        if (it == fp.bounds.end()) {
            throw LayoutError("column '" + col.key() + "' has no fitted bounds");
        }
        for (double& v : col.values) v = features::FeatureMatrix::apply_bounds(v, it->second);
    }
    return fm;
}

ml::Matrix to_rows(const features::FeatureMatrix& fm) {
    ml::Matrix X(fm.n_rows(), std::vector<double>(fm.n_cols(), 0.0));
    for (std::size_t j = 0; j < fm.n_cols(); ++j) {
        const auto& values = fm.columns[j].values;
        for (std::size_t i = 0; i < fm.n_rows(); ++i) X[i][j] = values[i];
    }
    return X;
}

ml::TraitTargets targets_of(const std::vector<UserRecord>& users) {
    const auto labels = labels_of(users);
    ml::TraitTargets targets;
    for (int t = 0; t < kTraitCount; ++t) {
        targets[t].reserve(labels.size());
        for (const auto& l : labels) targets[t].push_back(l.values[t]);
    }
    return targets;
}

std::pair<ml::Routes, std::array<std::vector<std::string>, kTraitCount>>
route_columns(const features::FeatureMatrix& fm, const ml::TraitTargets& targets,
              const std::array<std::vector<std::string>, kTraitCount>& families, int top_k,
              const std::vector<std::size_t>& fit_rows) {
    std::map<std::string, std::size_t> index_of;
    for (std::size_t j = 0; j < fm.columns.size(); ++j) index_of[fm.columns[j].key()] = j;

    ml::Routes routes;
    std::array<std::vector<std::string>, kTraitCount> selected;
    for (int t = 0; t < kTraitCount; ++t) {
        const std::set<std::string> wanted(families[t].begin(), families[t].end());
        // candidates carry their full key as the name so selection output maps
        // straight back to matrix columns
        std::vector<features::FeatureColumn> candidates;
        for (const auto& col : fm.columns) {
            if (!wanted.count(col.family)) continue;
            features::FeatureColumn c;
            c.family = col.family;
            c.name = col.key();
            c.values = col.values;
            candidates.push_back(std::move(c));
        }
        if (candidates.empty()) {
            throw ConfigError(std::string("no feature columns in the routed families of ") +
                              kTraitNames[t]);
        }
        selected[t] = features::select_top_k(candidates, targets[t],
                                             static_cast<std::size_t>(top_k), fit_rows);
        for (const auto& key : selected[t]) routes[t].push_back(index_of.at(key));
    }
    return {std::move(routes), std::move(selected)};
}

std::string ModelBundle::to_json() const {
    json selected_json = json::object();
    for (int t = 0; t < kTraitCount; ++t) selected_json[kTraitNames[t]] = selected[t];
    const json j{{"kind", "model_bundle"},
                 {"version", 1},
                 {"pipeline_hash", pipeline_hash},
                 {"baseline", baseline_means},
                 {"selected", std::move(selected_json)},
                 {"independent", parse_artifact_json(independent.to_json(), "independent model")},
                 {"holistic", parse_artifact_json(holistic.to_json(), "holistic model")}};
    return j.dump();
}

ModelBundle ModelBundle::from_json(const std::string& text) {
    const json j = parse_artifact_json(text, "model bundle");
    try {
        if (j.at("kind") != "model_bundle" || j.at("version") != 1) {
            throw DataError("not a model bundle document");
        }
        ModelBundle bundle;
        bundle.pipeline_hash = j.at("pipeline_hash").get<std::string>();
        const auto means = j.at("baseline").get<std::vector<double>>();
        if (means.size() != kTraitCount) throw DataError("baseline must have 7 means");
        std::copy(means.begin(), means.end(), bundle.baseline_means.begin());
        for (int t = 0; t < kTraitCount; ++t) {
            bundle.selected[t] =
                j.at("selected").at(kTraitNames[t]).get<std::vector<std::string>>();
        }
        bundle.independent = ml::IndependentModel::from_json(j.at("independent").dump());
        bundle.holistic = ml::HolisticModel::from_json(j.at("holistic").dump());
        return bundle;
    } catch (const json::exception& e) {
        throw DataError(std::string("model bundle JSON malformed: ") + e.what());
    }
}

void ModelBundle::save(const std::string& path) const {
    write_file(path, to_json() + "\n");
}

ModelBundle ModelBundle::load(const std::string& path) {
    return from_json(read_file(path, "model bundle"));
}

SynthSummary run_synth(const config::PipelineConfig& cfg) {
    const auto spec = synth::SynthSpec::load(require_path(cfg.paths.synth_spec, "synth_spec"));
    const auto users = synth::generate(spec);
    SynthSummary summary;
    summary.n_users = users.size();
    summary.path = artifact_path(cfg, kUsersFile);
    synth::write_users_jsonl(users, summary.path);
    return summary;
}

IngestSummary run_ingest(const config::PipelineConfig& cfg) {
    corpus::QuestionnaireKey key;
    const corpus::QuestionnaireKey* key_ptr = nullptr;
    if (!cfg.paths.questionnaire_key.empty()) {
        key = corpus::QuestionnaireKey::load(cfg.paths.questionnaire_key);
        key_ptr = &key;
    }
    const auto loaded = corpus::load_users(require_path(cfg.paths.corpus, "corpus"), key_ptr);
    auto filtered = corpus::filter_spam(loaded.users, cfg.spam);

    IngestSummary summary;
    summary.loaded = loaded.users.size();
    summary.kept = filtered.kept.size();
    summary.removals = filtered.removals.size();
    summary.diagnostics = loaded.diagnostics;
    synth::write_users_jsonl(filtered.kept, artifact_path(cfg, kCleanFile));
    corpus::write_removal_report(artifact_path(cfg, kRemovalsFile), filtered.removals);
    return summary;
}

TrainEmotionSummary run_train_emotion(const config::PipelineConfig& cfg) {
    const Resources res = load_resources(cfg);
    const auto corpus_rows =
        emotion::load_emotion_corpus(require_path(cfg.paths.emotion_corpus, "emotion_corpus"));
    emotion::EmotionTrainReport report;
    const auto clf = emotion::train_emotion_classifier(corpus_rows, res.lexicon, res.emoji,
                                                       emotion_train_config(cfg), &report);
    clf.save(artifact_path(cfg, kEmotionFile));

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"micro_precision", format_fixed(report.micro_precision)});
    rows.push_back({"train_count", std::to_string(report.train_count)});
    rows.push_back({"heldout_count", std::to_string(report.heldout_count)});
    for (int e = 0; e < kEmotionCount; ++e) {
        rows.push_back({std::string("train_positives_") + kEmotionNames[e],
                        std::to_string(report.positive_train_counts[e])});
    }
    write_csv(artifact_path(cfg, kEmotionReportFile), {"metric", "value"}, rows);

    TrainEmotionSummary summary;
    summary.micro_precision = report.micro_precision;
    summary.train_count = report.train_count;
    summary.heldout_count = report.heldout_count;
    return summary;
}

FeaturizeSummary run_featurize(const config::PipelineConfig& cfg) {
    const auto users = load_clean_users(cfg);
    if (users.empty()) throw DataError("no users to featurize; ingest produced an empty archive");
    const Resources res = load_resources(cfg);
    auto [tagger_model, tagger_accuracy] = tagger_for(cfg);
    auto clf = emotion::EmotionClassifier::load(artifact_path(cfg, kEmotionFile));

    const auto materials =
        build_materials(users, res, tagger_model, clf, cfg.model.n_threads);
    std::vector<std::size_t> all_rows(users.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    auto [fp, fm] = fit_pipeline(users, materials, all_rows, cfg.features.min_df,
                                 std::move(tagger_model), std::move(clf));

    fm.save_csv(artifact_path(cfg, kFeaturesFile));
    fp.save(artifact_path(cfg, kPipelineFile));

    FeaturizeSummary summary;
    summary.n_rows = fm.n_rows();
    summary.n_cols = fm.n_cols();
    summary.layout_hash = fp.layout_hash();
    summary.tagger_heldout_accuracy = tagger_accuracy;
    return summary;
}

TrainSummary run_train(const config::PipelineConfig& cfg) {
    const auto fm = features::FeatureMatrix::load_csv(artifact_path(cfg, kFeaturesFile));
    const auto fp = FeaturePipeline::load(artifact_path(cfg, kPipelineFile));
    const auto users = load_clean_users(cfg);
    if (users.size() != fm.n_rows()) {
        throw LayoutError("features.csv row count does not match the cleaned archive");
    }

    const auto [targets, labeled_rows] = labeled_targets(users);
    if (labeled_rows.empty()) throw DataError("no labeled users to train on");

    auto [routes, selected] =
        route_columns(fm, targets, cfg.routes, cfg.features.top_k, labeled_rows);

    const ml::Matrix X_all = to_rows(fm);
    const ml::Matrix X = take(X_all, labeled_rows);
    const ml::TraitTargets Y = take(targets, labeled_rows);

    const std::uint64_t model_seed = stream_seed(cfg.master_seed, SeedStream::model);
    ModelBundle bundle;
    bundle.pipeline_hash = fp.layout_hash();
    bundle.selected = selected;
    for (int t = 0; t < kTraitCount; ++t) {
        bundle.baseline_means[t] = ml::fit_baseline(Y[t]).value;
    }
    const auto params = forest_params(cfg);
    bundle.independent = ml::fit_independent(X, Y, routes, params, derive_seed(model_seed, 1));
    bundle.holistic = ml::fit_holistic(X, Y, routes, params, cfg.model.n_chains,
                                       derive_seed(model_seed, 2), cfg.model.teacher_forcing);
    bundle.save(artifact_path(cfg, kModelFile));

    TrainSummary summary;
    summary.n_rows = labeled_rows.size();
    for (int t = 0; t < kTraitCount; ++t) summary.routed_counts[t] = routes[t].size();
    return summary;
}

EvaluateSummary run_evaluate(const config::PipelineConfig& cfg, bool baseline_only) {
    const auto users = keep_labeled(load_clean_users(cfg));
    if (users.size() < 3) throw DataError("evaluation needs at least 3 labeled users");
    const auto targets = targets_of(users);

    const std::uint64_t split_seed = stream_seed(cfg.master_seed, SeedStream::split);
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
    if (cfg.split.protocol == "cv") {
        const auto parts = ml::k_fold(users.size(), cfg.split.k, split_seed);
        for (std::size_t f = 0; f < parts.size(); ++f) {
            std::vector<std::size_t> train;
            for (std::size_t g = 0; g < parts.size(); ++g) {
                if (g == f) continue;
                train.insert(train.end(), parts[g].begin(), parts[g].end());
            }
            std::sort(train.begin(), train.end());
            folds.emplace_back(std::move(train), parts[f]);
        }
    } else {
        folds.push_back(ml::train_test_split(users.size(), cfg.split.test_fraction, split_seed));
    }

    // fold-independent state, computed once
    Resources res;
    tagger::TaggerModel tagger_model;
    emotion::EmotionClassifier clf;
    std::vector<UserMaterial> materials;
    if (!baseline_only) {
        res = load_resources(cfg);
        tagger_model = tagger_for(cfg).first;
        clf = emotion::EmotionClassifier::load(artifact_path(cfg, kEmotionFile));
        materials = build_materials(users, res, tagger_model, clf, cfg.model.n_threads);
    }

    EvaluateSummary summary;
    summary.baseline_only = baseline_only;
    summary.folds = folds.size();
    const std::uint64_t model_seed = stream_seed(cfg.master_seed, SeedStream::model);
    const auto params = forest_params(cfg);

    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& [train_rows, test_rows] = folds[f];
        if (train_rows.empty() || test_rows.empty()) {
            throw DataError("too few labeled users for the split protocol");
        }
        const auto Y_train = take(targets, train_rows);

        std::array<double, kTraitCount> baseline_means{};
        for (int t = 0; t < kTraitCount; ++t) {
            baseline_means[t] = ml::fit_baseline(Y_train[t]).value;
        }

        ml::Matrix X_all;
        ml::IndependentModel im;
        ml::HolisticModel hm;
        if (!baseline_only) {
            auto [fp, fm] = fit_pipeline(users, materials, train_rows, cfg.features.min_df,
                                         tagger_model, clf);
            auto [routes, selected] =
                route_columns(fm, targets, cfg.routes, cfg.features.top_k, train_rows);
            (void)selected;
            X_all = to_rows(fm);
            const ml::Matrix X_train = take(X_all, train_rows);
            im = ml::fit_independent(X_train, Y_train, routes, params,
                                     derive_seed(model_seed, 100 + f));
            hm = ml::fit_holistic(X_train, Y_train, routes, params, cfg.model.n_chains,
                                  derive_seed(model_seed, 200 + f), cfg.model.teacher_forcing);
        }

        for (int t = 0; t < kTraitCount; ++t) {
            std::vector<double> truth, base, pred_im, pred_hm;
            truth.reserve(test_rows.size());
            for (const std::size_t r : test_rows) {
                truth.push_back(targets[t][r]);
                base.push_back(baseline_means[t]);
            }
            summary.baseline[t] += ml::rmse(truth, base);
            if (!baseline_only) {
                for (const std::size_t r : test_rows) {
                    pred_im.push_back(im.predict(X_all[r]).values[t]);
                    pred_hm.push_back(hm.predict(X_all[r]).values[t]);
                }
                summary.independent[t] += ml::rmse(truth, pred_im);
                summary.holistic[t] += ml::rmse(truth, pred_hm);
            }
        }
    }

    const double n_folds = static_cast<double>(folds.size());
    for (int t = 0; t < kTraitCount; ++t) {
        summary.baseline[t] /= n_folds;
        summary.independent[t] /= n_folds;
        summary.holistic[t] /= n_folds;
        summary.mean_baseline += summary.baseline[t] / kTraitCount;
        summary.mean_independent += summary.independent[t] / kTraitCount;
        summary.mean_holistic += summary.holistic[t] / kTraitCount;
    }

    write_evaluate_csv(artifact_path(cfg, kEvaluateFile), cfg, summary);
    return summary;
}

PredictSummary run_predict(const config::PipelineConfig& cfg) {
    const auto fp = FeaturePipeline::load(artifact_path(cfg, kPipelineFile));
    const auto bundle = ModelBundle::load(artifact_path(cfg, kModelFile));
    if (bundle.pipeline_hash != fp.layout_hash()) {
        throw LayoutError("model was trained against a different feature layout; re-run train");
    }

    const auto loaded = corpus::load_users(require_path(cfg.paths.corpus, "corpus"));
    const auto filtered = corpus::filter_spam(loaded.users, cfg.spam);
    const Resources res = load_resources(cfg);
    const auto materials =
        build_materials(filtered.kept, res, fp.tagger_model, fp.emotion_clf, cfg.model.n_threads);
    const auto fm = transform_users(filtered.kept, materials, fp);
    const ml::Matrix X = to_rows(fm);

    std::vector<std::string> header = {"user"};
    for (const auto* name : kTraitNames) header.push_back(name);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto profile = bundle.holistic.predict(X[i]);
        std::vector<std::string> row = {fm.user_handles[i]};
        for (int t = 0; t < kTraitCount; ++t) row.push_back(format_fixed(profile.values[t]));
        rows.push_back(std::move(row));
    }
    write_csv(artifact_path(cfg, kPredictionsFile), header, rows);

    PredictSummary summary;
    summary.n_users = X.size();
    return summary;
}

AnalyzeSummary run_analyze(const config::PipelineConfig& cfg) {
    const auto fm = features::FeatureMatrix::load_csv(artifact_path(cfg, kFeaturesFile));
    const auto users = load_clean_users(cfg);
    if (users.size() != fm.n_rows()) {
        throw LayoutError("features.csv row count does not match the cleaned archive");
    }
    const auto labels = labels_of(users);

    analysis::save_trait_stats_csv(analysis::trait_stats(labels),
                                   artifact_path(cfg, kTraitStatsFile));
    analysis::save_correlation_csv(analysis::trait_trait_matrix(labels),
                                   artifact_path(cfg, kTraitTraitFile));
    analysis::save_correlation_csv(analysis::feature_trait_matrix(fm, labels),
                                   artifact_path(cfg, kFeatureTraitFile));

    const Trait group_trait = *trait_from_name(cfg.embed.group_trait);
    std::vector<TraitProfile> low, high;
    for (const auto& l : labels) {
        (l.get(group_trait) < cfg.embed.group_threshold ? low : high).push_back(l);
    }
    analysis::save_group_compare_csv(analysis::group_compare(low, high),
                                     artifact_path(cfg, kGroupCdfFile));

    AnalyzeSummary summary;
    summary.n_users = users.size();
    summary.n_features = fm.n_cols();
    return summary;
}

EmbedSummary run_embed(const config::PipelineConfig& cfg) {
    const auto users = keep_labeled(load_clean_users(cfg));
    if (users.empty()) throw DataError("no labeled users to embed");
    const Trait group_trait = *trait_from_name(cfg.embed.group_trait);

    analysis::Matrix points;
    std::vector<std::string> ids, groups;
    for (const auto& u : users) {
        points.emplace_back(u.label->values.begin(), u.label->values.end());
        ids.push_back(u.profile.handle);
        groups.push_back(u.label->get(group_trait) < cfg.embed.group_threshold ? "low" : "high");
    }

    analysis::Embedding2D embedding;
    if (cfg.embed.method == "tsne") {
        analysis::TsneParams params;
        params.perplexity = cfg.embed.perplexity;
        params.iterations = cfg.embed.iterations;
        params.seed = stream_seed(cfg.master_seed, SeedStream::embed);
        params.n_threads = cfg.model.n_threads;
        embedding = analysis::tsne(points, params);
    } else {
        embedding = analysis::pca2d(points);
    }
    analysis::save_embedding_csv(embedding, ids, groups, artifact_path(cfg, kEmbeddingFile));

    EmbedSummary summary;
    summary.n_points = points.size();
    summary.final_kl = embedding.final_kl;
    return summary;
}

CurveSummary run_learning_curve(const config::PipelineConfig& cfg) {
    const auto fm = features::FeatureMatrix::load_csv(artifact_path(cfg, kFeaturesFile));
    const auto users = load_clean_users(cfg);
    if (users.size() != fm.n_rows()) {
        throw LayoutError("features.csv row count does not match the cleaned archive");
    }
    const auto [targets, labeled_rows] = labeled_targets(users);
    if (labeled_rows.empty()) throw DataError("no labeled users for a learning curve");

    auto [routes, selected] =
        route_columns(fm, targets, cfg.routes, cfg.features.top_k, labeled_rows);
    (void)selected;
    const ml::Matrix X = take(to_rows(fm), labeled_rows);
    const ml::TraitTargets Y = take(targets, labeled_rows);

    CurveSummary summary;
    summary.points = ml::learning_curve(X, Y, routes, forest_params(cfg), cfg.model.n_chains,
                                        cfg.curve.fractions,
                                        stream_seed(cfg.master_seed, SeedStream::curve));

    std::vector<std::string> header = {"fraction", "train_count"};
    for (const auto* name : kTraitNames) header.push_back(name);
    header.push_back("mean");
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : summary.points) {
        std::vector<std::string> row = {format_double(p.fraction), std::to_string(p.train_count)};
        for (int t = 0; t < kTraitCount; ++t) row.push_back(format_fixed(p.rmse_per_trait[t]));
        row.push_back(format_fixed(p.mean_rmse));
        rows.push_back(std::move(row));
    }
    write_csv(artifact_path(cfg, kCurveFile), header, rows);
    return summary;
}

} // namespace psyprof::pipeline

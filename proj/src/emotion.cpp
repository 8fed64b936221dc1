#include "psyprof/emotion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/rng.hpp"
#include "psyprof/textprep.hpp"

namespace psyprof::emotion {

using json = nlohmann::json;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == '\t') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_number(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

void note(std::vector<std::string>* diagnostics, const std::string& path, std::size_t line_no,
          const std::string& what) {
    if (diagnostics) {
        diagnostics->push_back(path + ":" + std::to_string(line_no) + ": " + what);
    }
}

void merge_emotion(AffectLexicon& lex, const std::string& stemmed, Emotion e, double strength) {
    auto& row = lex.emotions[stemmed];
    double& slot = row[static_cast<int>(e)];
    slot = std::max(slot, strength);
}

} // namespace

bool AffectLexicon::has_emotion_entry(const std::string& stemmed_word) const {
    return emotions.count(stemmed_word) > 0;
}

AffectLexicon load_lexicon(const std::string& path, std::vector<std::string>* diagnostics) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open lexicon file: " + path);
    AffectLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() == 2) {
            // synset row: id <TAB> comma-separated members
            std::vector<std::string> members;
            std::stringstream ss(fields[1]);
            std::string word;
            while (std::getline(ss, word, ',')) {
                if (!word.empty()) members.push_back(textprep::stem(word));
            }
            if (members.empty()) {
                note(diagnostics, path, line_no, "synset row with no members");
                continue;
            }
            lex.synsets[fields[0]] = std::move(members);
            continue;
        }
        if (fields.size() != 3) {
            note(diagnostics, path, line_no, "expected 2 or 3 tab-separated fields");
            continue;
        }
        const std::string stemmed = textprep::stem(fields[0]);
        if (const auto e = emotion_from_name(fields[1])) {
            double strength = 0.0;
            if (!parse_number(fields[2], strength) || strength <= 0.0 || strength > 1.0) {
                note(diagnostics, path, line_no, "strength must be in (0,1]: " + fields[2]);
                continue;
            }
            merge_emotion(lex, stemmed, *e, strength);
            continue;
        }
        double pos = 0.0, neg = 0.0;
        if (parse_number(fields[1], pos) && parse_number(fields[2], neg)) {
            if (pos < 0.0 || neg < 0.0) {
                note(diagnostics, path, line_no, "sentiment scores must be non-negative");
                continue;
            }
            auto& slot = lex.sentiment[stemmed];
            slot.first = std::max(slot.first, pos);
            slot.second = std::max(slot.second, neg);
            continue;
        }
        note(diagnostics, path, line_no, "unknown emotion label: " + fields[1]);
    }
    return lex;
}

AffectLexicon expand_lexicon(const AffectLexicon& lex) {
    AffectLexicon out = lex;
    for (const auto& [id, members] : lex.synsets) {
        (void)id;
        std::array<double, kEmotionCount> group{};
        for (const auto& w : members) {
            const auto it = lex.emotions.find(w);
            if (it == lex.emotions.end()) continue;
            for (int e = 0; e < kEmotionCount; ++e) {
                group[e] = std::max(group[e], it->second[e]);
            }
        }
        for (const auto& w : members) {
            for (int e = 0; e < kEmotionCount; ++e) {
                if (group[e] > 0.0) {
                    merge_emotion(out, w, static_cast<Emotion>(e), group[e]);
                }
            }
        }
    }
    return out;
}

EmojiMap load_emoji_map(const std::string& path, std::vector<std::string>* diagnostics) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open emoji map: " + path);
    EmojiMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty()) {
            note(diagnostics, path, line_no, "expected emoji<TAB>emotion");
            continue;
        }
        const auto e = emotion_from_name(fields[1]);
        if (!e) {
            note(diagnostics, path, line_no, "unknown emotion label: " + fields[1]);
            continue;
        }
        map.entries[fields[0]] = *e;
    }
    return map;
}

std::array<double, kEmotionCount>
text_emotion_freq(const std::vector<std::vector<std::string>>& tweet_tokens,
                  const AffectLexicon& lex) {
    std::array<double, kEmotionCount> sums{};
    std::size_t total = 0;
    for (const auto& tokens : tweet_tokens) {
        total += tokens.size();
        for (const auto& tok : tokens) {
            const auto it = lex.emotions.find(tok);
            if (it == lex.emotions.end()) continue;
            for (int e = 0; e < kEmotionCount; ++e) sums[e] += it->second[e];
        }
    }
    if (total == 0) return sums;
    for (auto& v : sums) v /= static_cast<double>(total);
    return sums;
}

std::array<double, kEmotionCount> emoji_emotion_freq(const std::vector<std::string>& raw_texts,
                                                     const EmojiMap& map) {
    std::array<double, kEmotionCount> counts{};
    if (map.entries.empty()) return counts;
    std::size_t max_len = 0;
    for (const auto& [k, e] : map.entries) max_len = std::max(max_len, k.size());
    double total = 0.0;
    for (const auto& text : raw_texts) {
        std::size_t i = 0;
        while (i < text.size()) {
            // longest match first so sequences beat their own prefixes
            std::size_t limit = std::min(max_len, text.size() - i);
            std::size_t matched = 0;
            Emotion which = Emotion::joy;
            for (std::size_t len = limit; len >= 1; --len) {
                const auto it = map.entries.find(text.substr(i, len));
                if (it != map.entries.end()) {
                    matched = len;
                    which = it->second;
                    break;
                }
            }
            if (matched > 0) {
                counts[static_cast<int>(which)] += 1.0;
                total += 1.0;
                i += matched;
            } else {
                ++i;
            }
        }
    }
    if (total == 0.0) return counts;
    for (auto& v : counts) v /= total;
    return counts;
}

std::pair<double, double>
sentiment_scores(const std::vector<std::vector<std::string>>& tweet_tokens,
                 const AffectLexicon& lex) {
    if (tweet_tokens.empty()) return {0.0, 0.0};
    double pos_sum = 0.0, neg_sum = 0.0;
    for (const auto& tokens : tweet_tokens) {
        for (const auto& tok : tokens) {
            const auto it = lex.sentiment.find(tok);
            if (it == lex.sentiment.end()) continue;
            pos_sum += it->second.first;
            neg_sum += it->second.second;
        }
    }
    const double n = static_cast<double>(tweet_tokens.size());
    return {pos_sum / n, neg_sum / n};
}

std::vector<EmotionExample> load_emotion_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open emotion corpus: " + path);
    std::vector<EmotionExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected id<TAB>text<TAB>flags");
        }
        EmotionExample ex;
        ex.id = fields[0];
        ex.text = fields[1];
        std::stringstream ss(fields[2]);
        std::string flag;
        int count = 0;
        while (std::getline(ss, flag, ',')) {
            if (count >= kEmotionCount || (flag != "0" && flag != "1")) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": labels must be six comma-separated 0/1 flags");
            }
            ex.labels[count++] = (flag == "1") ? 1 : 0;
        }
        if (count != kEmotionCount) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": labels must be six comma-separated 0/1 flags");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<double> emotion_attributes(const std::vector<std::string>& raw_texts,
                                       const AffectLexicon& lex, const EmojiMap& emoji,
                                       const features::Vocabulary& vocab) {
    features::TokenDoc doc;
    for (const auto& raw : raw_texts) doc.tweets.push_back(textprep::prepare(raw));
    const auto text_freq = text_emotion_freq(doc.tweets, lex);
    const auto emoji_freq = emoji_emotion_freq(raw_texts, emoji);
    const auto senti = sentiment_scores(doc.tweets, lex);
    std::vector<double> attrs;
    attrs.reserve(14 + vocab.terms.size());
    for (const double v : text_freq) attrs.push_back(v);
    for (const double v : emoji_freq) attrs.push_back(v);
    attrs.push_back(senti.first);
    attrs.push_back(senti.second);
    const auto tfidf = features::tfidf_row(doc, vocab);
    attrs.insert(attrs.end(), tfidf.begin(), tfidf.end());
    return attrs;
}

namespace {

double head_margin(const SvmHead& head, const std::vector<double>& x) {
    double m = head.bias;
    for (std::size_t i = 0; i < x.size(); ++i) m += head.weights[i] * x[i];
    return m;
}

// lambda/2 * ||w||^2 + mean hinge loss; the bias counts as a regularized
// coordinate because training treats it as a constant attribute
double svm_objective(const std::vector<double>& w, double bias, double lambda,
                     const std::vector<const std::vector<double>*>& xs,
                     const std::vector<int>& ys) {
    double sq = bias * bias;
    for (const double v : w) sq += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double m = bias;
        const auto& x = *xs[i];
        for (std::size_t j = 0; j < x.size(); ++j) m += w[j] * x[j];
        hinge += std::max(0.0, 1.0 - ys[i] * m);
    }
    return 0.5 * lambda * sq + hinge / static_cast<double>(xs.size());
}

} // namespace

EmotionClassifier train_emotion_classifier(const std::vector<EmotionExample>& corpus,
                                           const AffectLexicon& lex, const EmojiMap& emoji,
                                           const EmotionTrainConfig& config,
                                           EmotionTrainReport* report) {
    if (corpus.empty()) throw DataError("emotion corpus is empty");
    if (config.epochs < 1) throw ConfigError("emotion epochs must be >= 1");
    if (config.lambda <= 0.0) throw ConfigError("emotion lambda must be > 0");
    if (config.train_fraction <= 0.0 || config.train_fraction > 1.0) {
        throw ConfigError("emotion train_fraction must be in (0,1]");
    }

    Rng rng(config.seed);
    auto order = shuffled_indices(corpus.size(), rng);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(config.train_fraction * static_cast<double>(corpus.size())));
    n_train = std::min(std::max<std::size_t>(n_train, 1), corpus.size());
    const std::vector<std::size_t> train_idx(order.begin(),
                                             order.begin() + static_cast<long>(n_train));
    const std::vector<std::size_t> held_idx(order.begin() + static_cast<long>(n_train),
                                            order.end());

    EmotionClassifier clf;
    clf.lambda = config.lambda;
    clf.epochs = config.epochs;

    // tfidf vocabulary from the training texts only
    std::vector<features::TokenDoc> train_docs;
    train_docs.reserve(train_idx.size());
    for (const std::size_t i : train_idx) {
        features::TokenDoc d;
        d.tweets.push_back(textprep::prepare(corpus[i].text));
        train_docs.push_back(std::move(d));
    }
    clf.vocab = features::fit_vocabulary(features::VocabKind::word, train_docs, config.min_df);

    std::vector<std::vector<double>> attrs(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        attrs[i] = emotion_attributes({corpus[i].text}, lex, emoji, clf.vocab);
    }

    const std::size_t dim = clf.attribute_count();
    clf.bounds.assign(dim, {});
    for (std::size_t j = 0; j < dim; ++j) {
        double lo = attrs[train_idx[0]][j], hi = lo;
        for (const std::size_t i : train_idx) {
            lo = std::min(lo, attrs[i][j]);
            hi = std::max(hi, attrs[i][j]);
        }
        clf.bounds[j] = {lo, hi};
    }
    for (auto& row : attrs) {
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = features::FeatureMatrix::apply_bounds(row[j], clf.bounds[j]);
        }
    }

    EmotionTrainReport local;
    EmotionTrainReport& rep = report ? *report : local;
    rep.train_count = train_idx.size();
    rep.heldout_count = held_idx.size();

    std::vector<const std::vector<double>*> train_xs;
    for (const std::size_t i : train_idx) train_xs.push_back(&attrs[i]);

    for (int e = 0; e < kEmotionCount; ++e) {
        std::vector<int> ys;
        int positives = 0;
        for (const std::size_t i : train_idx) {
            const int y = corpus[i].labels[e] ? 1 : -1;
            positives += (y == 1);
            ys.push_back(y);
        }
        rep.positive_train_counts[e] = positives;
        SvmHead& head = clf.heads[e];
        head.weights.assign(dim, 0.0);
        head.bias = 0.0;
        if (positives == 0) {
            head.constant_negative = true;
            rep.warnings.push_back(std::string("head ") + kEmotionNames[e] +
                                   ": no positive training examples, constant-negative");
            continue;
        }

        // Pegasos on the augmented vector [x, 1]; bias is the last coordinate
        std::vector<double> w(dim + 1, 0.0);
        std::vector<double> wsum(dim + 1, 0.0);
        double steps = 0.0;
        std::uint64_t t = 0;
        Rng head_rng = rng.derive(static_cast<std::uint64_t>(100 + e));
        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            auto epoch_order = shuffled_indices(train_xs.size(), head_rng);
            for (const std::size_t k : epoch_order) {
                ++t;
                const double eta = 1.0 / (config.lambda * static_cast<double>(t));
                const auto& x = *train_xs[k];
                double margin = w[dim];
                for (std::size_t j = 0; j < dim; ++j) margin += w[j] * x[j];
                const double scale = 1.0 - eta * config.lambda; // = 1 - 1/t
                for (auto& v : w) v *= scale;
                if (ys[k] * margin < 1.0) {
                    const double step = eta * ys[k];
                    for (std::size_t j = 0; j < dim; ++j) w[j] += step * x[j];
                    w[dim] += step;
                }
                for (std::size_t j = 0; j <= dim; ++j) wsum[j] += w[j];
                steps += 1.0;
            }
            std::vector<double> wavg(dim);
            for (std::size_t j = 0; j < dim; ++j) wavg[j] = wsum[j] / steps;
            rep.epoch_objectives[e].push_back(
                svm_objective(wavg, wsum[dim] / steps, config.lambda, train_xs, ys));
        }
        for (std::size_t j = 0; j < dim; ++j) head.weights[j] = wsum[j] / steps;
        head.bias = wsum[dim] / steps;
    }

    // micro-averaged precision over all heads on the held-out split (training
    // split when nothing is held out)
    const std::vector<std::size_t>& eval_idx = held_idx.empty() ? train_idx : held_idx;
    if (held_idx.empty()) {
        rep.warnings.push_back("no held-out examples, precision measured on the training split");
    }
    long long tp = 0, fp = 0;
    for (const std::size_t i : eval_idx) {
        for (int e = 0; e < kEmotionCount; ++e) {
            const SvmHead& head = clf.heads[e];
            if (head.constant_negative) continue;
            if (head_margin(head, attrs[i]) > 0.0) {
                if (corpus[i].labels[e]) {
                    ++tp;
                } else {
                    ++fp;
                }
            }
        }
    }
    if (tp + fp == 0) {
        rep.micro_precision = 0.0;
        rep.warnings.push_back("no positive predictions on the evaluation split");
    } else {
        rep.micro_precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    return clf;
}

EmotionVector predict_emotion_vector(const std::vector<double>& raw_attributes,
                                     const EmotionClassifier& clf) {
    if (raw_attributes.size() != clf.attribute_count()) {
        throw LayoutError("emotion attribute vector has " +
                          std::to_string(raw_attributes.size()) + " entries, classifier needs " +
                          std::to_string(clf.attribute_count()));
    }
    std::vector<double> x(raw_attributes.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = features::FeatureMatrix::apply_bounds(raw_attributes[j], clf.bounds[j]);
    }
    EmotionVector out;
    for (int e = 0; e < kEmotionCount; ++e) {
        const SvmHead& head = clf.heads[e];
        out.values[e] = head.constant_negative ? 0.0 : logistic(head_margin(head, x));
    }
    return out;
}

std::string EmotionClassifier::to_json() const {
    json j;
    j["kind"] = "emotion_classifier";
    j["version"] = 1;
    j["lambda"] = lambda;
    j["epochs"] = epochs;
    j["vocab"] = {{"kind", features::vocab_kind_name(vocab.kind)},
                  {"terms", vocab.terms},
                  {"doc_freq", vocab.doc_freq},
                  {"n_docs", vocab.n_docs},
                  {"min_df", vocab.min_df}};
    json b = json::array();
    for (const auto& bd : bounds) b.push_back({bd.min, bd.max});
    j["bounds"] = std::move(b);
    json hs = json::array();
    for (int e = 0; e < kEmotionCount; ++e) {
        hs.push_back({{"emotion", kEmotionNames[e]},
                      {"weights", heads[e].weights},
                      {"bias", heads[e].bias},
                      {"constant_negative", heads[e].constant_negative}});
    }
    j["heads"] = std::move(hs);
    return j.dump(1);
}

EmotionClassifier EmotionClassifier::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("emotion classifier is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("kind") != "emotion_classifier" || j.at("version") != 1) {
            throw DataError("not an emotion classifier file");
        }
        EmotionClassifier clf;
        clf.lambda = j.at("lambda").get<double>();
        clf.epochs = j.at("epochs").get<int>();
        const auto& v = j.at("vocab");
        const auto kind = features::vocab_kind_from_name(v.at("kind").get<std::string>());
        if (!kind) throw DataError("unknown vocabulary kind");
        clf.vocab.kind = *kind;
        clf.vocab.terms = v.at("terms").get<std::vector<std::string>>();
        clf.vocab.doc_freq = v.at("doc_freq").get<std::vector<int>>();
        clf.vocab.n_docs = v.at("n_docs").get<std::size_t>();
        clf.vocab.min_df = v.at("min_df").get<int>();
        if (clf.vocab.doc_freq.size() != clf.vocab.terms.size()) {
            throw DataError("vocabulary terms and doc_freq differ in length");
        }
        for (const auto& bd : j.at("bounds")) {
            clf.bounds.push_back({bd.at(0).get<double>(), bd.at(1).get<double>()});
        }
        const auto& hs = j.at("heads");
        if (hs.size() != kEmotionCount) throw DataError("expected six heads");
        for (int e = 0; e < kEmotionCount; ++e) {
            const auto& h = hs.at(e);
            if (h.at("emotion") != kEmotionNames[e]) {
                throw DataError("heads out of canonical emotion order");
            }
            clf.heads[e].weights = h.at("weights").get<std::vector<double>>();
            clf.heads[e].bias = h.at("bias").get<double>();
            clf.heads[e].constant_negative = h.at("constant_negative").get<bool>();
        }
        const std::size_t dim = clf.attribute_count();
        if (clf.bounds.size() != dim) throw DataError("bounds do not match the layout");
        for (const auto& h : clf.heads) {
            if (h.weights.size() != dim) throw DataError("weights do not match the layout");
        }
        return clf;
    } catch (const json::exception& e) {
        throw DataError(std::string("emotion classifier JSON malformed: ") + e.what());
    }
}

void EmotionClassifier::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json() << '\n';
}

EmotionClassifier EmotionClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open emotion classifier: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace psyprof::emotion

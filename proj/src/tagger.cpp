#include "psyprof/tagger.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "psyprof/errors.hpp"
#include "psyprof/rng.hpp"

namespace psyprof::tagger {

using nlohmann::json;

bool is_known_tag(const std::string& tag) {
    for (const char* t : kTagset) {
        if (tag == t) return true;
    }
    return false;
}

std::vector<Sentence> load_tagged_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open " + path);
    std::vector<Sentence> corpus;
    Sentence current;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) {
            if (!current.empty()) corpus.push_back(std::move(current));
            current.clear();
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("tagged corpus line " + std::to_string(lineno) +
                            " has no tab separator");
        }
        TaggedToken tok{line.substr(0, tab), line.substr(tab + 1)};
        if (!is_known_tag(tok.tag)) {
            throw DataError("unknown tag '" + tok.tag + "' at line " + std::to_string(lineno));
        }
        current.push_back(std::move(tok));
    }
    if (!current.empty()) corpus.push_back(std::move(current));
    return corpus;
}

namespace {

constexpr const char* kBoundary = "-START-";

// The feature template is fixed: current word, its suffixes up to length 3,
// previous tag, previous word, next word.
std::vector<std::string> features_at(const std::vector<std::string>& words, std::size_t i,
                                     const std::string& prev_tag) {
    const std::string& w = words[i];
    std::vector<std::string> fs;
    fs.reserve(7);
    fs.push_back("w=" + w);
    for (std::size_t len = 1; len <= 3 && len <= w.size(); ++len) {
        fs.push_back("s" + std::to_string(len) + "=" + w.substr(w.size() - len));
    }
    fs.push_back("pt=" + prev_tag);
    fs.push_back("pw=" + (i == 0 ? std::string(kBoundary) : words[i - 1]));
    fs.push_back("nw=" + (i + 1 == words.size() ? std::string(kBoundary) : words[i + 1]));
    return fs;
}

std::string argmax_tag(const std::vector<std::string>& fs,
                       const std::map<std::string, std::map<std::string, double>>& weights,
                       const std::vector<std::string>& tagset) {
    std::string best = tagset.front();
    double best_score = -1e300;
    for (const auto& tag : tagset) { // sorted, so strict > keeps the first of a tie
        double score = 0.0;
        for (const auto& f : fs) {
            const auto wit = weights.find(f);
            if (wit == weights.end()) continue;
            const auto tit = wit->second.find(tag);
            if (tit != wit->second.end()) score += tit->second;
        }
        if (score > best_score) {
            best_score = score;
            best = tag;
        }
    }
    return best;
}

struct WeightCell {
    double value = 0.0;
    double total = 0.0;     // running sum for averaging
    long long stamp = 0;    // last step `total` was brought up to date
};

struct Trainer {
    std::map<std::string, std::map<std::string, WeightCell>> cells;
    long long step = 0;

    void bump(const std::string& f, const std::string& tag, double delta) {
        WeightCell& c = cells[f][tag];
        c.total += static_cast<double>(step - c.stamp) * c.value;
        c.stamp = step;
        c.value += delta;
    }

    double current(const std::vector<std::string>& fs, const std::string& tag) const {
        double score = 0.0;
        for (const auto& f : fs) {
            const auto wit = cells.find(f);
            if (wit == cells.end()) continue;
            const auto tit = wit->second.find(tag);
            if (tit != wit->second.end()) score += tit->second.value;
        }
        return score;
    }

    std::map<std::string, std::map<std::string, double>> averaged() const {
        std::map<std::string, std::map<std::string, double>> out;
        if (step == 0) return out;
        for (const auto& [f, tags] : cells) {
            for (const auto& [tag, c] : tags) {
                const double avg =
                    (c.total + static_cast<double>(step - c.stamp) * c.value) /
                    static_cast<double>(step);
                if (avg != 0.0) out[f][tag] = avg;
            }
        }
        return out;
    }
};

// Words that are frequent and almost unambiguous become lexicon entries and
// bypass the perceptron entirely.
std::map<std::string, std::string> build_lexicon(const std::vector<const Sentence*>& corpus,
                                                 int min_freq = 5, double purity = 0.97) {
    std::map<std::string, std::map<std::string, int>> counts;
    for (const Sentence* sent : corpus) {
        for (const auto& tok : *sent) counts[tok.word][tok.tag] += 1;
    }
    std::map<std::string, std::string> lexicon;
    for (const auto& [word, tags] : counts) {
        int total = 0, best = 0;
        std::string best_tag;
        for (const auto& [tag, n] : tags) {
            total += n;
            if (n > best) {
                best = n;
                best_tag = tag;
            }
        }
        if (total >= min_freq && static_cast<double>(best) >= purity * total) {
            lexicon[word] = best_tag;
        }
    }
    return lexicon;
}

} // namespace

TaggerModel train_tagger(const std::vector<Sentence>& corpus, int epochs, std::uint64_t seed,
                         double heldout_fraction, TrainReport* report) {
    if (corpus.empty()) throw DataError("tagged corpus is empty");
    if (epochs < 1) throw ConfigError("tagger epochs must be >= 1");

    Rng rng(seed);
    auto order = shuffled_indices(corpus.size(), rng);
    std::size_t heldout_n = static_cast<std::size_t>(heldout_fraction * corpus.size());
    if (heldout_n >= corpus.size()) heldout_n = corpus.size() - 1;
    std::vector<const Sentence*> train, heldout;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < order.size() - heldout_n ? train : heldout).push_back(&corpus[order[i]]);
    }

    TaggerModel model;
    model.tagset.assign(kTagset.begin(), kTagset.end());
    model.lexicon = build_lexicon(train);

    Trainer trainer;
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(idx);
        for (const std::size_t si : idx) {
            const Sentence& sent = *train[si];
            std::vector<std::string> words;
            words.reserve(sent.size());
            for (const auto& tok : sent) words.push_back(tok.word);
            std::string prev_tag = kBoundary;
            for (std::size_t i = 0; i < sent.size(); ++i) {
                trainer.step += 1;
                const auto lex = model.lexicon.find(words[i]);
                if (lex != model.lexicon.end()) {
                    prev_tag = lex->second;
                    continue;
                }
                const auto fs = features_at(words, i, prev_tag);
                std::string guess = model.tagset.front();
                double best_score = -1e300;
                for (const auto& tag : model.tagset) {
                    const double s = trainer.current(fs, tag);
                    if (s > best_score) {
                        best_score = s;
                        guess = tag;
                    }
                }
                if (guess != sent[i].tag) {
                    for (const auto& f : fs) {
                        trainer.bump(f, sent[i].tag, 1.0);
                        trainer.bump(f, guess, -1.0);
                    }
                }
                prev_tag = guess; // decode with own history, like at inference
            }
        }
    }
    model.weights = trainer.averaged();
    model.trained = true;

    if (report) {
        report->train_sentences = train.size();
        report->heldout_sentences = heldout.size();
        // with nothing held out, fall back to training accuracy
        const auto& eval = heldout.empty() ? train : heldout;
        std::size_t hits = 0, total = 0;
        for (const Sentence* sent : eval) {
            std::vector<std::string> words;
            for (const auto& tok : *sent) words.push_back(tok.word);
            const auto tags = tag(words, model);
            for (std::size_t i = 0; i < words.size(); ++i) {
                total += 1;
                hits += tags[i] == (*sent)[i].tag;
            }
        }
        report->heldout_tokens = heldout.empty() ? 0 : total;
        report->heldout_accuracy =
            total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
    return model;
}

namespace {

// Minimal suffix heuristics for the untrained fallback path.
std::string rule_tag(const std::string& w) {
    if (!w.empty() && (w[0] >= '0' && w[0] <= '9')) return "NUM";
    auto ends = [&w](const char* suf) {
        const std::size_t n = std::string(suf).size();
        return w.size() > n && w.compare(w.size() - n, n, suf) == 0;
    };
    if (ends("ly")) return "ADV";
    if (ends("ing") || ends("ed")) return "VERB";
    if (ends("ous") || ends("ful") || ends("ive") || ends("able") || ends("al") ||
        ends("ic")) {
        return "ADJ";
    }
    return "NOUN";
}

const std::map<std::string, std::string>& builtin_closed_class() {
    static const std::map<std::string, std::string> map = {
        {"the", "DET"},   {"a", "DET"},     {"an", "DET"},    {"this", "DET"},
        {"that", "DET"},  {"these", "DET"}, {"those", "DET"}, {"some", "DET"},
        {"any", "DET"},   {"each", "DET"},  {"every", "DET"}, {"no", "DET"},
        {"i", "PRON"},    {"you", "PRON"},  {"he", "PRON"},   {"she", "PRON"},
        {"it", "PRON"},   {"we", "PRON"},   {"they", "PRON"}, {"me", "PRON"},
        {"him", "PRON"},  {"her", "PRON"},  {"us", "PRON"},   {"them", "PRON"},
        {"my", "PRON"},   {"your", "PRON"}, {"his", "PRON"},  {"its", "PRON"},
        {"our", "PRON"},  {"their", "PRON"},{"who", "PRON"},  {"what", "PRON"},
        {"in", "ADP"},    {"on", "ADP"},    {"at", "ADP"},    {"of", "ADP"},
        {"for", "ADP"},   {"with", "ADP"},  {"from", "ADP"},  {"by", "ADP"},
        {"about", "ADP"}, {"into", "ADP"},  {"over", "ADP"},  {"under", "ADP"},
        {"after", "ADP"}, {"before", "ADP"},{"between", "ADP"}, {"through", "ADP"},
        {"and", "CONJ"},  {"or", "CONJ"},   {"but", "CONJ"},  {"nor", "CONJ"},
        {"so", "CONJ"},   {"yet", "CONJ"},  {"because", "CONJ"}, {"while", "CONJ"},
        {"if", "CONJ"},   {"although", "CONJ"},
        {"to", "PRT"},    {"not", "PRT"},   {"up", "PRT"},    {"out", "PRT"},
        {"off", "PRT"},   {"down", "PRT"},
        {"is", "VERB"},   {"are", "VERB"},  {"was", "VERB"},  {"were", "VERB"},
        {"be", "VERB"},   {"been", "VERB"}, {"am", "VERB"},   {"do", "VERB"},
        {"does", "VERB"}, {"did", "VERB"},  {"have", "VERB"}, {"has", "VERB"},
        {"had", "VERB"},  {"will", "VERB"}, {"would", "VERB"},{"can", "VERB"},
        {"could", "VERB"},{"should", "VERB"},
        {"one", "NUM"},   {"two", "NUM"},   {"three", "NUM"}, {"four", "NUM"},
        {"five", "NUM"},  {"six", "NUM"},   {"seven", "NUM"}, {"eight", "NUM"},
        {"nine", "NUM"},  {"ten", "NUM"},
    };
    return map;
}

} // namespace

TaggerModel TaggerModel::rule_fallback() {
    TaggerModel model;
    model.tagset.assign(kTagset.begin(), kTagset.end());
    model.lexicon = builtin_closed_class();
    model.trained = false;
    return model;
}

std::vector<std::string> tag(const std::vector<std::string>& tokens, const TaggerModel& model,
                             bool fallback_enabled) {
    if (!model.trained && !fallback_enabled) {
        throw ConfigError("tagger model is untrained and rule fallback is disabled");
    }
    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    std::string prev_tag = kBoundary;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto lex = model.lexicon.find(tokens[i]);
        std::string t;
        if (lex != model.lexicon.end()) {
            t = lex->second;
        } else if (model.trained) {
            t = argmax_tag(features_at(tokens, i, prev_tag), model.weights, model.tagset);
        } else {
            t = rule_tag(tokens[i]);
        }
        tags.push_back(t);
        prev_tag = t;
    }
    return tags;
}

std::string TaggerModel::to_json() const {
    json j;
    j["kind"] = "pos_tagger";
    j["version"] = 1;
    j["tagset"] = tagset;
    j["lexicon"] = lexicon;
    j["trained"] = trained;
    json w = json::object();
    for (const auto& [f, tags] : weights) {
        json inner = json::object();
        for (const auto& [t, v] : tags) inner[t] = v;
        w[f] = std::move(inner);
    }
    j["weights"] = std::move(w);
    return j.dump(1);
}

TaggerModel TaggerModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("tagger model is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("kind", "") != "pos_tagger") {
        throw DataError("not a tagger model file");
    }
    TaggerModel model;
    model.tagset = j.at("tagset").get<std::vector<std::string>>();
    model.lexicon = j.at("lexicon").get<std::map<std::string, std::string>>();
    model.trained = j.at("trained").get<bool>();
    for (const auto& [f, tags] : j.at("weights").items()) {
        for (const auto& [t, v] : tags.items()) {
            if (!is_known_tag(t)) throw DataError("unknown tag '" + t + "' in model weights");
            model.weights[f][t] = v.get<double>();
        }
    }
    return model;
}

void TaggerModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw MissingInputError("cannot write " + path);
    out << to_json() << '\n';
}

TaggerModel TaggerModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace psyprof::tagger

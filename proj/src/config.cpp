#include "psyprof/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "psyprof/errors.hpp"

namespace psyprof::config {

namespace {

struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::string;
    std::string text; // string contents, or the raw number token
    bool flag = false;
    std::vector<Value> items; // scalar elements only
    int line = 0;
};

using Section = std::map<std::string, Value>;
using Table = std::map<std::string, Section>;

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Drops a trailing '# ...' comment, honoring quotes.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (const char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

std::string parse_quoted(const std::string& token, int line) {
    std::string out;
    std::size_t i = 1;
    for (; i < token.size(); ++i) {
        const char c = token[i];
        if (c == '"') break;
        if (c == '\\') {
            if (i + 1 >= token.size()) fail_line(line, "dangling escape in string");
            const char e = token[++i];
            if (e == '"') out += '"';
            else if (e == '\\') out += '\\';
            else if (e == 'n') out += '\n';
            else if (e == 't') out += '\t';
            else fail_line(line, std::string("unsupported escape '\\") + e + "'");
        } else {
            out += c;
        }
    }
    if (i >= token.size()) fail_line(line, "unterminated string");
    if (i + 1 != token.size()) fail_line(line, "trailing characters after string");
    return out;
}

Value parse_scalar(const std::string& token, int line) {
    Value v;
    v.line = line;
    if (token.empty()) fail_line(line, "missing value");
    if (token[0] == '"') {
        v.kind = Value::Kind::string;
        v.text = parse_quoted(token, line);
        return v;
    }
    if (token == "true" || token == "false") {
        v.kind = Value::Kind::boolean;
        v.flag = token == "true";
        return v;
    }
    char* end = nullptr;
    std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        fail_line(line, "cannot parse value '" + token + "'");
    }
    v.kind = Value::Kind::number;
    v.text = token;
    return v;
}

// Splits the inside of [ ... ] on top-level commas, honoring quotes.
std::vector<std::string> split_elements(const std::string& body, int line) {
    std::vector<std::string> parts;
    std::string current;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (in_string) {
            current += c;
            if (c == '\\' && i + 1 < body.size()) current += body[++i];
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
            current += c;
        } else if (c == ',') {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (in_string) fail_line(line, "unterminated string in array");
    parts.push_back(current);
    return parts;
}

Value parse_value(const std::string& token, int line) {
    if (!token.empty() && token[0] == '[') {
        if (token.back() != ']') fail_line(line, "unterminated array");
        Value v;
        v.kind = Value::Kind::array;
        v.line = line;
        const std::string body = trim(token.substr(1, token.size() - 2));
        if (body.empty()) fail_line(line, "empty array");
        for (const auto& part : split_elements(body, line)) {
            const std::string element = trim(part);
            if (element.empty()) fail_line(line, "empty array element");
            if (!element.empty() && element[0] == '[') fail_line(line, "nested arrays unsupported");
            v.items.push_back(parse_scalar(element, line));
        }
        return v;
    }
    return parse_scalar(token, line);
}

Table parse_table(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line[0] == '[') {
            if (line.back() != ']') fail_line(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_name(section)) fail_line(line_no, "bad section name '" + section + "'");
            if (table.count(section)) fail_line(line_no, "duplicate section [" + section + "]");
            table[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_name(key)) fail_line(line_no, "bad key name '" + key + "'");
        if (section.empty()) fail_line(line_no, "key '" + key + "' appears before any [section]");
        if (table[section].count(key)) {
            fail_line(line_no, "duplicate key '" + section + "." + key + "'");
        }
        table[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return table;
}

std::string as_string(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::string) throw ConfigError(ctx + " must be a quoted string");
    return v.text;
}

bool as_bool(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::boolean) throw ConfigError(ctx + " must be true or false");
    return v.flag;
}

double as_double(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::number) throw ConfigError(ctx + " must be a number");
    return std::strtod(v.text.c_str(), nullptr);
}

bool integral_token(const std::string& t) {
    return t.find('.') == std::string::npos && t.find('e') == std::string::npos &&
           t.find('E') == std::string::npos;
}

long long as_int(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::number || !integral_token(v.text)) {
        throw ConfigError(ctx + " must be an integer");
    }
    try {
        return std::stoll(v.text);
    } catch (const std::exception&) {
        throw ConfigError(ctx + " is out of integer range");
    }
}

std::uint64_t as_u64(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::number || !integral_token(v.text) || v.text[0] == '-') {
        throw ConfigError(ctx + " must be a non-negative integer");
    }
    try {
        return std::stoull(v.text);
    } catch (const std::exception&) {
        throw ConfigError(ctx + " is out of range");
    }
}

std::vector<std::string> as_string_array(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::array) throw ConfigError(ctx + " must be an array");
    std::vector<std::string> out;
    for (const auto& item : v.items) out.push_back(as_string(item, ctx + " element"));
    return out;
}

std::vector<double> as_double_array(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::array) throw ConfigError(ctx + " must be an array");
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(as_double(item, ctx + " element"));
    return out;
}

// Hands keys out one by one and remembers what was never asked for.
class Reader {
public:
    explicit Reader(Table table) : table_(std::move(table)) {}

    const Value* take(const std::string& section, const std::string& key) {
        const auto s = table_.find(section);
        if (s == table_.end()) return nullptr;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        taken_.push_back(std::move(k->second));
        s->second.erase(k);
        return &taken_.back();
    }

    void check_sections(const std::set<std::string>& known) const {
        for (const auto& [name, keys] : table_) {
            (void)keys;
            if (!known.count(name)) throw ConfigError("unknown config section [" + name + "]");
        }
    }

    void finish() const {
        for (const auto& [name, keys] : table_) {
            if (!keys.empty()) {
                throw ConfigError("unknown config key '" + name + "." + keys.begin()->first +
                                  "'");
            }
        }
    }

private:
    Table table_;
    std::deque<Value> taken_;
};

const std::set<std::string> kFamilies = {"behavioral", "tfidf", "ngram", "pos", "emotion"};

void check_positive_int(long long v, const std::string& ctx) {
    if (v < 1) throw ConfigError(ctx + " must be >= 1");
}

void check_fraction(double v, const std::string& ctx) {
    if (!(v > 0.0) || !(v < 1.0)) throw ConfigError(ctx + " must be in (0,1)");
}

void validate(const PipelineConfig& c) {
    check_positive_int(c.spam.hashtag_threshold, "spam.hashtag_threshold");
    if (c.spam.repetition_count < 2) throw ConfigError("spam.repetition_count must be >= 2");
    if (c.spam.jaccard_threshold < 0.0 || c.spam.jaccard_threshold > 1.0) {
        throw ConfigError("spam.jaccard_threshold must be in [0,1]");
    }
    if (c.spam.ghost_min_followers < 0) {
        throw ConfigError("spam.ghost_min_followers must be >= 0");
    }

    check_positive_int(c.features.min_df, "features.min_df");
    check_positive_int(c.features.top_k, "features.top_k");

    if (!(c.emotion.lambda > 0.0)) throw ConfigError("emotion.lambda must be > 0");
    check_positive_int(c.emotion.epochs, "emotion.epochs");
    check_fraction(c.emotion.train_fraction, "emotion.train_fraction");
    check_positive_int(c.emotion.min_df, "emotion.min_df");

    check_positive_int(c.tagger.epochs, "tagger.epochs");
    if (c.tagger.heldout_fraction < 0.0 || c.tagger.heldout_fraction >= 1.0) {
        throw ConfigError("tagger.heldout_fraction must be in [0,1)");
    }

    check_positive_int(c.model.n_trees, "model.n_trees");
    if (c.model.max_depth != -1 && c.model.max_depth < 1) {
        throw ConfigError("model.max_depth must be -1 or >= 1");
    }
    check_positive_int(c.model.min_samples_leaf, "model.min_samples_leaf");
    if (!(c.model.max_features > 0.0) || c.model.max_features > 1.0) {
        throw ConfigError("model.max_features must be in (0,1]");
    }
    check_positive_int(c.model.n_chains, "model.n_chains");
    if (c.model.n_threads < 0) throw ConfigError("model.n_threads must be >= 0");

    if (c.split.protocol != "cv" && c.split.protocol != "holdout") {
        throw ConfigError("split.protocol must be \"cv\" or \"holdout\"");
    }
    if (c.split.k < 2) throw ConfigError("split.k must be >= 2");
    check_fraction(c.split.test_fraction, "split.test_fraction");

    for (int t = 0; t < kTraitCount; ++t) {
        const auto& families = c.routes[t];
        const std::string ctx = std::string("routes.") + kTraitNames[t];
        if (families.empty()) throw ConfigError(ctx + " must list at least one family");
        std::set<std::string> seen;
        for (const auto& f : families) {
            if (!kFamilies.count(f)) throw ConfigError(ctx + ": unknown family '" + f + "'");
            if (!seen.insert(f).second) throw ConfigError(ctx + ": family '" + f + "' repeated");
        }
    }

    if (c.embed.method != "tsne" && c.embed.method != "pca") {
        throw ConfigError("embed.method must be \"tsne\" or \"pca\"");
    }
    if (!(c.embed.perplexity > 0.0)) throw ConfigError("embed.perplexity must be > 0");
    check_positive_int(c.embed.iterations, "embed.iterations");
    if (!trait_from_name(c.embed.group_trait)) {
        throw ConfigError("embed.group_trait: unknown trait '" + c.embed.group_trait + "'");
    }
    if (c.embed.group_threshold < 0.0 || c.embed.group_threshold > 1.0) {
        throw ConfigError("embed.group_threshold must be in [0,1]");
    }

    if (c.curve.fractions.empty()) {
        throw ConfigError("curve.fractions must list at least one fraction");
    }
    for (const double f : c.curve.fractions) {
        if (!(f > 0.0) || f > 1.0) throw ConfigError("curve.fractions must be in (0,1]");
    }
}

} // namespace

std::array<std::vector<std::string>, kTraitCount> default_routes() {
    const std::vector<std::string> all = {"behavioral", "tfidf", "ngram", "pos", "emotion"};
    std::array<std::vector<std::string>, kTraitCount> routes;
    routes[static_cast<int>(Trait::anxiety)] = {"ngram"};
    routes[static_cast<int>(Trait::avoidance)] = {"pos"};
    routes[static_cast<int>(Trait::openness)] = {"pos"};
    routes[static_cast<int>(Trait::conscientiousness)] = all;
    routes[static_cast<int>(Trait::extraversion)] = all;
    routes[static_cast<int>(Trait::agreeableness)] = {"tfidf"};
    routes[static_cast<int>(Trait::neuroticism)] = {"emotion"};
    return routes;
}

PipelineConfig::PipelineConfig() : routes(default_routes()) {}

PipelineConfig PipelineConfig::from_string(const std::string& text) {
    Reader reader(parse_table(text));
    reader.check_sections({"paths", "spam", "features", "emotion", "tagger", "model", "split",
                           "routes", "seeds", "embed", "curve"});

    PipelineConfig c;
    const auto str = [&](const char* sec, const char* key, std::string& dst) {
        if (const Value* v = reader.take(sec, key)) {
            dst = as_string(*v, std::string(sec) + "." + key);
        }
    };
    const auto num = [&](const char* sec, const char* key, double& dst) {
        if (const Value* v = reader.take(sec, key)) {
            dst = as_double(*v, std::string(sec) + "." + key);
        }
    };
    const auto integer = [&](const char* sec, const char* key, auto& dst) {
        if (const Value* v = reader.take(sec, key)) {
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(
                as_int(*v, std::string(sec) + "." + key));
        }
    };
    const auto boolean = [&](const char* sec, const char* key, bool& dst) {
        if (const Value* v = reader.take(sec, key)) {
            dst = as_bool(*v, std::string(sec) + "." + key);
        }
    };

    str("paths", "corpus", c.paths.corpus);
    str("paths", "stopwords", c.paths.stopwords);
    str("paths", "emotion_lexicon", c.paths.emotion_lexicon);
    str("paths", "emoji_map", c.paths.emoji_map);
    str("paths", "tagger_corpus", c.paths.tagger_corpus);
    str("paths", "tagger_model", c.paths.tagger_model);
    str("paths", "emotion_corpus", c.paths.emotion_corpus);
    str("paths", "questionnaire_key", c.paths.questionnaire_key);
    str("paths", "synth_spec", c.paths.synth_spec);
    str("paths", "out_dir", c.paths.out_dir);

    integer("spam", "hashtag_threshold", c.spam.hashtag_threshold);
    integer("spam", "repetition_count", c.spam.repetition_count);
    num("spam", "jaccard_threshold", c.spam.jaccard_threshold);
    integer("spam", "ghost_min_followers", c.spam.ghost_min_followers);

    integer("features", "min_df", c.features.min_df);
    integer("features", "top_k", c.features.top_k);

    num("emotion", "lambda", c.emotion.lambda);
    integer("emotion", "epochs", c.emotion.epochs);
    num("emotion", "train_fraction", c.emotion.train_fraction);
    integer("emotion", "min_df", c.emotion.min_df);

    integer("tagger", "epochs", c.tagger.epochs);
    num("tagger", "heldout_fraction", c.tagger.heldout_fraction);

    integer("model", "n_trees", c.model.n_trees);
    integer("model", "max_depth", c.model.max_depth);
    integer("model", "min_samples_leaf", c.model.min_samples_leaf);
    num("model", "max_features", c.model.max_features);
    integer("model", "n_chains", c.model.n_chains);
    boolean("model", "teacher_forcing", c.model.teacher_forcing);
    integer("model", "n_threads", c.model.n_threads);

    str("split", "protocol", c.split.protocol);
    integer("split", "k", c.split.k);
    num("split", "test_fraction", c.split.test_fraction);

    for (int t = 0; t < kTraitCount; ++t) {
        if (const Value* v = reader.take("routes", kTraitNames[t])) {
            c.routes[t] = as_string_array(*v, std::string("routes.") + kTraitNames[t]);
        }
    }

    if (const Value* v = reader.take("seeds", "master")) {
        c.master_seed = as_u64(*v, "seeds.master");
    }

    str("embed", "method", c.embed.method);
    num("embed", "perplexity", c.embed.perplexity);
    integer("embed", "iterations", c.embed.iterations);
    str("embed", "group_trait", c.embed.group_trait);
    num("embed", "group_threshold", c.embed.group_threshold);

    if (const Value* v = reader.take("curve", "fractions")) {
        c.curve.fractions = as_double_array(*v, "curve.fractions");
    }

    reader.finish();
    validate(c);
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

} // namespace psyprof::config

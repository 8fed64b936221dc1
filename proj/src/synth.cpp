#include "psyprof/synth.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psyprof/corpus.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/parallel.hpp"
#include "psyprof/rng.hpp"

namespace psyprof::synth {

using json = nlohmann::json;

namespace {

// per-slot hit rate multiplier for text signals; keeps the total signal mass
// below the neutral mass for typical trait values
constexpr double kTokenSignalRate = 0.30;
constexpr double kEmojiSignalRate = 0.8;
constexpr std::int64_t kBaseEpoch = 1704067200; // 2024-01-01T00:00:00Z

const std::set<std::string>& behavioral_counters() {
    static const std::set<std::string> counters = {"followers_count", "listed_count",
                                                   "favourites_count"};
    return counters;
}

void validate_spec(const SynthSpec& spec) {
    if (spec.n_users < 1) throw ConfigError("synth spec: n_users must be >= 1");
    if (spec.spam_users < 0) throw ConfigError("synth spec: spam_users must be >= 0");
    if (spec.min_tweets < 1 || spec.max_tweets < spec.min_tweets) {
        throw ConfigError("synth spec: tweets_per_user must satisfy 1 <= min <= max");
    }
    if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) {
        throw ConfigError("synth spec: tokens_per_tweet must satisfy 1 <= min <= max");
    }
    if (spec.neutral_words.empty()) throw ConfigError("synth spec: neutral word bank is empty");
    for (int t = 0; t < kTraitCount; ++t) {
        const auto& g = spec.traits[t];
        const std::string where = std::string("synth spec: trait ") + kTraitNames[t];
        if (g.has_recipe) {
            if (g.weight < 0.0 || g.weight > 1.0) throw ConfigError(where + ": weight not in [0,1]");
            if (g.source == static_cast<Trait>(t)) {
                throw ConfigError(where + ": recipe source is itself");
            }
            if (spec.traits[static_cast<int>(g.source)].has_recipe) {
                throw ConfigError(where + ": recipe source has a recipe of its own");
            }
            if (g.std_dev < 0.0) throw ConfigError(where + ": std must be >= 0");
            continue;
        }
        if (g.dist == "beta") {
            if (g.mean <= 0.0 || g.mean >= 1.0) throw ConfigError(where + ": mean not in (0,1)");
            if (g.std_dev <= 0.0 || g.std_dev * g.std_dev >= g.mean * (1.0 - g.mean)) {
                throw ConfigError(where + ": std incompatible with a Beta on [0,1]");
            }
        } else if (g.dist == "uniform") {
            if (g.low < 0.0 || g.high > 1.0 || g.low > g.high) {
                throw ConfigError(where + ": uniform range not inside [0,1]");
            }
        } else {
            throw ConfigError(where + ": unknown dist '" + g.dist + "'");
        }
    }
    for (const auto& s : spec.signals) {
        const std::string where = "synth spec: signal on " + std::string(trait_name(s.trait));
        if (s.effect < 0.0 || s.effect > 1.0) throw ConfigError(where + ": effect not in [0,1]");
        if (s.family == "tfidf" || s.family == "ngram" || s.family == "pos") {
            const auto it = spec.word_banks.find(s.bank);
            if (it == spec.word_banks.end() || it->second.empty()) {
                throw ConfigError(where + ": word bank '" + s.bank + "' is missing or empty");
            }
        } else if (s.family == "emotion" || s.family == "emoji") {
            const auto label = emotion_from_name(s.bank);
            if (!label) throw ConfigError(where + ": unknown emotion label '" + s.bank + "'");
            const auto& bank = s.family == "emotion"
                                   ? spec.emotion_words[static_cast<int>(*label)]
                                   : spec.emojis[static_cast<int>(*label)];
            if (bank.empty()) {
                throw ConfigError(where + ": " + s.family + " bank '" + s.bank + "' is empty");
            }
        } else if (s.family == "behavioral") {
            if (behavioral_counters().count(s.bank) == 0) {
                throw ConfigError(where + ": unknown counter '" + s.bank + "'");
            }
        } else {
            throw ConfigError(where + ": unknown family '" + s.family + "'");
        }
    }
}

// Traits live on a 1/1024 grid. Dyadic values survive the [0,1] <-> raw
// questionnaire-scale conversion exactly (the scale factors 4 and 6 keep all
// products and quotients representable), so labels are stable through any
// number of save/load round trips.
double quantize(double v) { return std::round(v * 1024.0) / 1024.0; }

std::array<double, kTraitCount> draw_traits(const SynthSpec& spec, Rng& rng) {
    std::array<double, kTraitCount> t{};
    for (int i = 0; i < kTraitCount; ++i) {
        const auto& g = spec.traits[i];
        if (g.has_recipe) continue;
        if (g.dist == "uniform") {
            t[i] = quantize(rng.uniform(g.low, g.high));
        } else {
            const double common = g.mean * (1.0 - g.mean) / (g.std_dev * g.std_dev) - 1.0;
            t[i] = quantize(rng.beta(g.mean * common, (1.0 - g.mean) * common));
        }
    }
    for (int i = 0; i < kTraitCount; ++i) {
        const auto& g = spec.traits[i];
        if (!g.has_recipe) continue;
        const double src = t[static_cast<int>(g.source)];
        const double z = rng.normal();
        t[i] = quantize(clamp01(g.weight * src + (1.0 - g.weight) * g.mean +
                                std::sqrt(1.0 - g.weight * g.weight) * g.std_dev * z));
    }
    return t;
}

// Labels travel through the questionnaire raw scale and back, exactly like a
// reloaded archive, so oracle values match loaded labels bit for bit.
TraitProfile label_from(const std::array<double, kTraitCount>& traits,
                        std::map<Trait, double>* raw_out = nullptr) {
    std::map<Trait, double> raw;
    for (int i = 0; i < kTraitCount; ++i) {
        const Trait t = static_cast<Trait>(i);
        raw[t] = 1.0 + traits[i] * (trait_scale_max(t) - 1);
    }
    if (raw_out) *raw_out = raw;
    return corpus::normalize_traits(raw);
}

std::string epoch_to_iso(std::int64_t secs) {
    std::int64_t days = secs / 86400;
    std::int64_t rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const std::uint64_t doe = static_cast<std::uint64_t>(days - era * 146097);
    const std::uint64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const std::uint64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::uint64_t mp = (5 * doy + 2) / 153;
    const std::uint64_t day = doy - (153 * mp + 2) / 5 + 1;
    const std::uint64_t month = mp < 10 ? mp + 3 : mp - 9;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04lld-%02llu-%02lluT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y + (month <= 2)),
                  static_cast<unsigned long long>(month), static_cast<unsigned long long>(day),
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

struct ResolvedSignal {
    const PlantedSignal* sig = nullptr;
    const std::vector<std::string>* bank = nullptr;
};

const std::string& pick(const std::vector<std::string>& bank, Rng& rng) {
    return bank[rng.below(bank.size())];
}

std::string make_tweet_text(const SynthSpec& spec, const std::array<double, kTraitCount>& traits,
                            const std::vector<ResolvedSignal>& text_signals,
                            const std::vector<ResolvedSignal>& emoji_signals, Rng& rng) {
    std::vector<std::string> tokens;
    const int n_tokens = rng.range_int(spec.min_tokens, spec.max_tokens);
    int filled = 0;
    while (filled < n_tokens) {
        const double r = rng.uniform01();
        double acc = 0.0;
        const ResolvedSignal* hit = nullptr;
        for (const auto& ts : text_signals) {
            acc += kTokenSignalRate * ts.sig->effect * traits[static_cast<int>(ts.sig->trait)];
            if (r < acc) {
                hit = &ts;
                break;
            }
        }
        if (!hit) {
            tokens.push_back(pick(spec.neutral_words, rng));
            ++filled;
        } else if (hit->sig->family == "ngram") {
            tokens.push_back(pick(*hit->bank, rng));
            tokens.push_back(pick(*hit->bank, rng));
            filled += 2;
        } else {
            tokens.push_back(pick(*hit->bank, rng));
            ++filled;
        }
    }
    // shouting is trait-independent: applied uniformly so the uppercase rate
    // does not echo how much signal mass displaced neutral words
    for (auto& w : tokens) {
        if (rng.uniform01() < 0.04) {
            for (auto& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
    }
    if (rng.uniform01() < 0.15) tokens.push_back("#" + pick(spec.neutral_words, rng));
    if (rng.uniform01() < 0.10) tokens.push_back("@user" + std::to_string(100 + rng.below(900)));
    if (rng.uniform01() < 0.08) {
        std::string tail;
        for (int i = 0; i < 3; ++i) tail += static_cast<char>('a' + rng.below(26));
        tokens.push_back("http://t.co/" + tail);
    }
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) text += ' ';
        text += tokens[i];
    }
    for (const auto& es : emoji_signals) {
        const double rate =
            kEmojiSignalRate * es.sig->effect * traits[static_cast<int>(es.sig->trait)];
        if (rng.uniform01() < rate) text += " " + pick(*es.bank, rng);
    }
    return text;
}

UserRecord make_user(const SynthSpec& spec, std::size_t index,
                     const std::vector<ResolvedSignal>& text_signals,
                     const std::vector<ResolvedSignal>& emoji_signals,
                     const std::vector<ResolvedSignal>& behavioral_signals) {
    Rng trait_rng(derive_seed(spec.seed, 2 * index));
    Rng rng(derive_seed(spec.seed, 2 * index + 1));
    const auto traits = draw_traits(spec, trait_rng);

    UserRecord rec;
    char handle[32];
    std::snprintf(handle, sizeof handle, "user%04zu", index);
    rec.profile.handle = handle;

    const int n_tweets = rng.range_int(spec.min_tweets, spec.max_tweets);
    const std::int64_t age_days = 200 + static_cast<std::int64_t>(rng.below(1200));
    rec.profile.account_created = kBaseEpoch - age_days * 86400;
    rec.profile.account_created_iso = epoch_to_iso(rec.profile.account_created);
    rec.profile.account_age_days = age_days;
    rec.profile.statuses_count = n_tweets + static_cast<std::int64_t>(rng.below(50));
    rec.profile.followers_count = 2 + static_cast<std::int64_t>(rng.below(300));
    rec.profile.listed_count = static_cast<std::int64_t>(rng.below(40));
    rec.profile.favourites_count = static_cast<std::int64_t>(rng.below(800));
    for (const auto& bs : behavioral_signals) {
        const double scaled = 0.15 + 0.8 * bs.sig->effect * traits[static_cast<int>(bs.sig->trait)] +
                              0.05 * rng.uniform01();
        const std::int64_t value = 2 + static_cast<std::int64_t>(std::llround(scaled * 600.0));
        if (bs.sig->bank == "followers_count") rec.profile.followers_count = value;
        if (bs.sig->bank == "listed_count") rec.profile.listed_count = value;
        if (bs.sig->bank == "favourites_count") rec.profile.favourites_count = value;
    }
    const int bio_words = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < bio_words; ++i) {
        if (i > 0) rec.profile.bio += ' ';
        rec.profile.bio += pick(spec.neutral_words, rng);
    }

    for (int i = 0; i < n_tweets; ++i) {
        const std::string text = make_tweet_text(spec, traits, text_signals, emoji_signals, rng);
        const std::int64_t at =
            rec.profile.account_created + ((i + 1) * age_days * 86400) / n_tweets;
        const bool retweet = rng.uniform01() < 0.10;
        rec.tweets.push_back(Tweet::make("t" + std::to_string(index) + "_" + std::to_string(i),
                                         text, epoch_to_iso(at), at, retweet));
    }
    rec.label = label_from(traits);
    return rec;
}

UserRecord make_spam_user(const SynthSpec& spec, std::size_t index) {
    Rng trait_rng(derive_seed(spec.seed, 2 * index));
    Rng rng(derive_seed(spec.seed, 2 * index + 1));
    const auto traits = draw_traits(spec, trait_rng);

    UserRecord rec;
    char handle[32];
    std::snprintf(handle, sizeof handle, "spam%04zu", index);
    rec.profile.handle = handle;
    rec.profile.account_created = kBaseEpoch - 400 * 86400;
    rec.profile.account_created_iso = epoch_to_iso(rec.profile.account_created);
    rec.profile.account_age_days = 400;
    rec.profile.statuses_count = 3;
    rec.profile.followers_count = 2 + static_cast<std::int64_t>(rng.below(50));
    rec.profile.listed_count = 0;
    rec.profile.favourites_count = rng.below(10);
    rec.profile.bio = pick(spec.neutral_words, rng);
    const std::string text = "win prize now #free #deal #cash #win #fast #offer";
    for (int i = 0; i < 3; ++i) {
        const std::int64_t at = rec.profile.account_created + (i + 1) * 100 * 86400;
        rec.tweets.push_back(Tweet::make("t" + std::to_string(index) + "_" + std::to_string(i),
                                         text, epoch_to_iso(at), at, false));
    }
    rec.label = label_from(traits);
    return rec;
}

std::vector<ResolvedSignal> resolve(const SynthSpec& spec,
                                    const std::set<std::string>& families) {
    std::vector<ResolvedSignal> out;
    for (const auto& s : spec.signals) {
        if (families.count(s.family) == 0) continue;
        ResolvedSignal rs;
        rs.sig = &s;
        if (s.family == "emotion") {
            rs.bank = &spec.emotion_words[static_cast<int>(*emotion_from_name(s.bank))];
        } else if (s.family == "emoji") {
            rs.bank = &spec.emojis[static_cast<int>(*emotion_from_name(s.bank))];
        } else if (s.family != "behavioral") {
            rs.bank = &spec.word_banks.at(s.bank);
        }
        out.push_back(rs);
    }
    return out;
}

} // namespace

std::vector<UserRecord> generate(const SynthSpec& spec) {
    validate_spec(spec);
    const auto text_signals = resolve(spec, {"tfidf", "ngram", "pos", "emotion"});
    const auto emoji_signals = resolve(spec, {"emoji"});
    const auto behavioral_signals = resolve(spec, {"behavioral"});

    const std::size_t total = spec.n_users + static_cast<std::size_t>(spec.spam_users);
    std::vector<UserRecord> users(total);
    parallel_for(total, 0, [&](std::size_t u) {
        users[u] = u < spec.n_users
                       ? make_user(spec, u, text_signals, emoji_signals, behavioral_signals)
                       : make_spam_user(spec, u);
    });
    return users;
}

TraitProfile oracle_traits(const SynthSpec& spec, std::size_t user_index) {
    validate_spec(spec);
    if (user_index >= spec.n_users + static_cast<std::size_t>(spec.spam_users)) {
        throw DataError("oracle_traits: user index out of range");
    }
    Rng trait_rng(derive_seed(spec.seed, 2 * user_index));
    return label_from(draw_traits(spec, trait_rng));
}

void write_users_jsonl(const std::vector<UserRecord>& users, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open '" + path + "' for writing");
    for (const auto& rec : users) {
        json j;
        j["handle"] = rec.profile.handle;
        j["statuses_count"] = rec.profile.statuses_count;
        j["followers_count"] = rec.profile.followers_count;
        j["listed_count"] = rec.profile.listed_count;
        j["favourites_count"] = rec.profile.favourites_count;
        j["bio"] = rec.profile.bio;
        j["account_created"] = rec.profile.account_created_iso;
        json tweets = json::array();
        for (const auto& t : rec.tweets) {
            json tj;
            tj["id"] = t.id;
            tj["text"] = t.text;
            tj["created_at"] = t.created_at_iso;
            tj["is_retweet"] = t.is_retweet;
            tweets.push_back(std::move(tj));
        }
        j["tweets"] = std::move(tweets);
        if (rec.label) {
            json raw;
            for (int i = 0; i < kTraitCount; ++i) {
                const Trait t = static_cast<Trait>(i);
                raw[kTraitNames[i]] = 1.0 + rec.label->values[i] * (trait_scale_max(t) - 1);
            }
            j["raw_traits"] = std::move(raw);
        }
        out << j.dump() << "\n";
    }
}

namespace {

double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(where + ": missing numeric '" + key + "'");
    }
    return j.at(key).get<double>();
}

std::pair<int, int> parse_range(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2 ||
        !j.at(key)[0].is_number_integer() || !j.at(key)[1].is_number_integer()) {
        throw ConfigError("synth spec: '" + key + "' must be [min, max]");
    }
    return {j.at(key)[0].get<int>(), j.at(key)[1].get<int>()};
}

std::vector<std::string> parse_bank(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw ConfigError(where + " must contain only strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (known.count(key) == 0) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

} // namespace

SynthSpec SynthSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("synth spec: top level must be an object");
    reject_unknown_keys(j,
                        {"n_users", "seed", "tweets_per_user", "tokens_per_tweet", "spam_users",
                         "traits", "signals", "banks"},
                        "synth spec");

    SynthSpec spec;
    if (!j.contains("n_users") || !j.at("n_users").is_number_integer() ||
        j.at("n_users").get<long long>() < 1) {
        throw ConfigError("synth spec: 'n_users' must be a positive integer");
    }
    spec.n_users = j.at("n_users").get<std::size_t>();
    if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
        throw ConfigError("synth spec: missing integer 'seed'");
    }
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("spam_users")) {
        if (!j.at("spam_users").is_number_integer()) {
            throw ConfigError("synth spec: 'spam_users' must be an integer");
        }
        spec.spam_users = j.at("spam_users").get<int>();
    }
    std::tie(spec.min_tweets, spec.max_tweets) = parse_range(j, "tweets_per_user");
    std::tie(spec.min_tokens, spec.max_tokens) = parse_range(j, "tokens_per_tweet");

    if (!j.contains("traits") || !j.at("traits").is_object()) {
        throw ConfigError("synth spec: missing object 'traits'");
    }
    std::set<std::string> seen;
    for (const auto& [name, tj] : j.at("traits").items()) {
        const auto t = trait_from_name(name);
        if (!t) throw ConfigError("synth spec: unknown trait '" + name + "'");
        seen.insert(name);
        const std::string where = "synth spec: trait " + name;
        if (!tj.is_object()) throw ConfigError(where + " must be an object");
        reject_unknown_keys(tj, {"dist", "mean", "std", "low", "high", "recipe"}, where);
        TraitMarginal g;
        if (tj.contains("recipe")) {
            const auto& rj = tj.at("recipe");
            if (!rj.is_object()) throw ConfigError(where + ": 'recipe' must be an object");
            reject_unknown_keys(rj, {"source", "weight"}, where + " recipe");
            if (!rj.contains("source") || !rj.at("source").is_string()) {
                throw ConfigError(where + ": recipe needs a 'source' trait name");
            }
            const auto src = trait_from_name(rj.at("source").get<std::string>());
            if (!src) throw ConfigError(where + ": unknown recipe source");
            g.has_recipe = true;
            g.source = *src;
            g.weight = require_number(rj, "weight", where + " recipe");
            g.mean = require_number(tj, "mean", where);
            g.std_dev = require_number(tj, "std", where);
        } else if (tj.contains("dist") && tj.at("dist").is_string() &&
                   tj.at("dist").get<std::string>() == "uniform") {
            g.dist = "uniform";
            g.low = require_number(tj, "low", where);
            g.high = require_number(tj, "high", where);
        } else {
            g.dist = "beta";
            g.mean = require_number(tj, "mean", where);
            g.std_dev = require_number(tj, "std", where);
        }
        spec.traits[static_cast<int>(*t)] = g;
    }
    if (seen.size() != kTraitCount) {
        throw ConfigError("synth spec: all seven traits must be configured");
    }

    if (j.contains("signals")) {
        if (!j.at("signals").is_array()) throw ConfigError("synth spec: 'signals' must be an array");
        for (const auto& sj : j.at("signals")) {
            if (!sj.is_object()) throw ConfigError("synth spec: each signal must be an object");
            reject_unknown_keys(sj, {"family", "bank", "trait", "effect"}, "synth spec: signal");
            PlantedSignal s;
            if (!sj.contains("family") || !sj.at("family").is_string() ||
                !sj.contains("bank") || !sj.at("bank").is_string() || !sj.contains("trait") ||
                !sj.at("trait").is_string()) {
                throw ConfigError("synth spec: signal needs string family, bank and trait");
            }
            s.family = sj.at("family").get<std::string>();
            s.bank = sj.at("bank").get<std::string>();
            const auto t = trait_from_name(sj.at("trait").get<std::string>());
            if (!t) throw ConfigError("synth spec: signal names an unknown trait");
            s.trait = *t;
            s.effect = require_number(sj, "effect", "synth spec: signal");
            spec.signals.push_back(std::move(s));
        }
    }

    if (!j.contains("banks") || !j.at("banks").is_object()) {
        throw ConfigError("synth spec: missing object 'banks'");
    }
    const auto& banks = j.at("banks");
    reject_unknown_keys(banks, {"neutral", "words", "emotion_words", "emojis"},
                        "synth spec: banks");
    if (!banks.contains("neutral")) throw ConfigError("synth spec: banks need 'neutral'");
    spec.neutral_words = parse_bank(banks.at("neutral"), "synth spec: banks.neutral");
    if (banks.contains("words")) {
        if (!banks.at("words").is_object()) {
            throw ConfigError("synth spec: banks.words must be an object");
        }
        for (const auto& [name, bj] : banks.at("words").items()) {
            spec.word_banks[name] = parse_bank(bj, "synth spec: banks.words." + name);
        }
    }
    for (const char* field : {"emotion_words", "emojis"}) {
        if (!banks.contains(field)) continue;
        if (!banks.at(field).is_object()) {
            throw ConfigError(std::string("synth spec: banks.") + field + " must be an object");
        }
        for (const auto& [name, bj] : banks.at(field).items()) {
            const auto label = emotion_from_name(name);
            if (!label) {
                throw ConfigError(std::string("synth spec: banks.") + field +
                                  " has unknown label '" + name + "'");
            }
            auto bank = parse_bank(bj, std::string("synth spec: banks.") + field + "." + name);
            if (std::string(field) == "emotion_words") {
                spec.emotion_words[static_cast<int>(*label)] = std::move(bank);
            } else {
                spec.emojis[static_cast<int>(*label)] = std::move(bank);
            }
        }
    }

    validate_spec(spec);
    return spec;
}

SynthSpec SynthSpec::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open synth spec '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

} // namespace psyprof::synth

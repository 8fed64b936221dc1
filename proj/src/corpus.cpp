#include "psyprof/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "psyprof/csvio.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/textprep.hpp"

namespace psyprof::corpus {

using nlohmann::json;

const QuestionnaireItem* QuestionnaireKey::find(const std::string& item_id) const {
    for (const auto& item : items) {
        if (item.item_id == item_id) return &item;
    }
    return nullptr;
}

QuestionnaireKey QuestionnaireKey::load(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw DataError("questionnaire key is empty: " + path);
    const std::vector<std::string> expected = {"item_id", "trait", "reversed", "scale_max"};
    if (rows[0] != expected) {
        throw DataError("questionnaire key header must be item_id,trait,reversed,scale_max");
    }
    QuestionnaireKey key;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 4) {
            throw DataError("questionnaire key row " + std::to_string(r + 1) + " has " +
                            std::to_string(row.size()) + " fields, expected 4");
        }
        QuestionnaireItem item;
        item.item_id = row[0];
        const auto trait = trait_from_name(row[1]);
        if (!trait) throw DataError("unknown trait '" + row[1] + "' in questionnaire key");
        item.trait = *trait;
        if (row[2] == "true" || row[2] == "1") item.reversed = true;
        else if (row[2] == "false" || row[2] == "0") item.reversed = false;
        else throw DataError("reversed flag must be true/false, got '" + row[2] + "'");
        item.scale_max = static_cast<int>(parse_int(row[3], "scale_max"));
        if (item.scale_max != 5 && item.scale_max != 7) {
            throw DataError("scale_max must be 5 or 7, got " + row[3]);
        }
        if (key.find(item.item_id)) {
            throw DataError("duplicate questionnaire item '" + item.item_id + "'");
        }
        key.items.push_back(item);
    }
    return key;
}

namespace {

// Howard Hinnant's civil-date algorithm; valid over the whole int range.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int digits(const std::string& s, std::size_t pos, std::size_t count) {
    int v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') {
            throw DataError("bad timestamp '" + s + "'");
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

} // namespace

std::int64_t parse_iso8601(const std::string& text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("bad timestamp '" + text + "'");
    }
    const int y = digits(text, 0, 4);
    const int mo = digits(text, 5, 2);
    const int d = digits(text, 8, 2);
    if (mo < 1 || mo > 12 || d < 1 || d > 31) throw DataError("bad timestamp '" + text + "'");
    int h = 0, mi = 0, sec = 0;
    if (text.size() > 10) {
        if (text[10] != 'T' || text.size() < 19 || text[13] != ':' || text[16] != ':') {
            throw DataError("bad timestamp '" + text + "'");
        }
        h = digits(text, 11, 2);
        mi = digits(text, 14, 2);
        sec = digits(text, 17, 2);
        if (h > 23 || mi > 59 || sec > 60) throw DataError("bad timestamp '" + text + "'");
        std::size_t pos = 19;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
        if (pos < text.size() && (text.compare(pos, std::string::npos, "Z") != 0 &&
                                  text.compare(pos, std::string::npos, "+00:00") != 0)) {
            throw DataError("bad timestamp '" + text + "' (UTC only)");
        }
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

namespace {

std::int64_t require_count(const json& j, const char* field) {
    if (!j.contains(field)) throw DataError(std::string("missing field '") + field + "'");
    const auto& v = j.at(field);
    if (!v.is_number_integer()) {
        throw DataError(std::string("field '") + field + "' must be an integer");
    }
    const std::int64_t n = v.get<std::int64_t>();
    if (n < 0) throw DataError(std::string("field '") + field + "' must be >= 0");
    return n;
}

std::string require_string(const json& j, const char* field) {
    if (!j.contains(field)) throw DataError(std::string("missing field '") + field + "'");
    const auto& v = j.at(field);
    if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

UserRecord parse_record(const json& j, const QuestionnaireKey* key,
                        std::vector<std::string>* diagnostics, int lineno) {
    UserRecord rec;
    rec.profile.handle = require_string(j, "handle");
    rec.profile.statuses_count = require_count(j, "statuses_count");
    rec.profile.followers_count = require_count(j, "followers_count");
    rec.profile.listed_count = require_count(j, "listed_count");
    rec.profile.favourites_count = require_count(j, "favourites_count");
    rec.profile.bio = require_string(j, "bio");
    rec.profile.account_created_iso = require_string(j, "account_created");
    rec.profile.account_created = parse_iso8601(rec.profile.account_created_iso);

    if (!j.contains("tweets") || !j.at("tweets").is_array()) {
        throw DataError("missing field 'tweets'");
    }
    std::int64_t latest = rec.profile.account_created;
    for (const auto& tj : j.at("tweets")) {
        const std::string iso = require_string(tj, "created_at");
        Tweet t = Tweet::make(require_string(tj, "id"), require_string(tj, "text"), iso,
                              parse_iso8601(iso),
                              tj.contains("is_retweet") && tj.at("is_retweet").is_boolean()
                                  ? tj.at("is_retweet").get<bool>()
                                  : false);
        latest = std::max(latest, t.created_at);
        rec.tweets.push_back(std::move(t));
    }
    // No wall clock in the pipeline: account age is measured to the newest
    // tweet in the archive, clamped to one day.
    rec.profile.account_age_days =
        std::max<std::int64_t>(1, (latest - rec.profile.account_created) / 86400);

    if (j.contains("raw_traits")) {
        std::map<Trait, double> raw;
        for (const auto& [name, value] : j.at("raw_traits").items()) {
            const auto t = trait_from_name(name);
            if (!t) throw DataError("unknown trait '" + name + "' in raw_traits");
            if (!value.is_number()) throw DataError("trait '" + name + "' must be a number");
            raw[*t] = value.get<double>();
        }
        rec.label = normalize_traits(raw);
    } else if (j.contains("responses")) {
        if (!key) {
            diagnostics->push_back("line " + std::to_string(lineno) + ": user '" +
                                   rec.profile.handle +
                                   "' has responses but no questionnaire key was given; "
                                   "loading unlabeled");
        } else {
            std::map<std::string, long long> responses;
            for (const auto& [item, value] : j.at("responses").items()) {
                if (!value.is_number_integer()) {
                    throw DataError("response for item '" + item + "' must be an integer");
                }
                responses[item] = value.get<long long>();
            }
            rec.label = normalize_traits(score_questionnaire(responses, *key));
        }
    }
    return rec;
}

} // namespace

LoadResult load_users(const std::string& path, const QuestionnaireKey* key) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open " + path);
    LoadResult result;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (!j.is_object()) throw DataError("line is not a JSON object");
            result.users.push_back(parse_record(j, key, &result.diagnostics, lineno));
        } catch (const json::parse_error&) {
            result.diagnostics.push_back("line " + std::to_string(lineno) +
                                         ": unparsable JSON, record skipped");
        } catch (const std::exception& e) {
            result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + e.what() +
                                         ", record skipped");
        }
    }
    return result;
}

std::map<Trait, double> score_questionnaire(const std::map<std::string, long long>& responses,
                                            const QuestionnaireKey& key) {
    std::map<Trait, double> sums;
    std::map<Trait, int> counts;
    for (const auto& [item_id, r] : responses) {
        const QuestionnaireItem* item = key.find(item_id);
        if (!item) throw DataError("unknown questionnaire item '" + item_id + "'");
        if (r < 1 || r > item->scale_max) {
            throw DataError("response for item '" + item_id + "' outside 1.." +
                            std::to_string(item->scale_max));
        }
        const double v = item->reversed ? static_cast<double>(item->scale_max + 1 - r)
                                        : static_cast<double>(r);
        sums[item->trait] += v;
        counts[item->trait] += 1;
    }
    std::map<Trait, double> scores;
    for (const auto& [trait, sum] : sums) scores[trait] = sum / counts[trait];
    return scores;
}

TraitProfile normalize_traits(const std::map<Trait, double>& raw) {
    TraitProfile profile;
    for (int i = 0; i < kTraitCount; ++i) {
        const Trait t = static_cast<Trait>(i);
        const auto it = raw.find(t);
        if (it == raw.end()) {
            throw DataError(std::string("missing trait '") + trait_name(t) + "'");
        }
        const int smax = trait_scale_max(t);
        const double x = it->second;
        if (!(x >= 1.0 && x <= smax)) {
            throw DataError(std::string("trait '") + trait_name(t) + "' value " +
                            format_double(x) + " outside [1," + std::to_string(smax) + "]");
        }
        profile.set(t, (x - 1.0) / (smax - 1.0));
    }
    return profile;
}

double token_jaccard(const std::string& text_a, const std::string& text_b) {
    const auto ta = textprep::tokenize(textprep::clean(text_a));
    const auto tb = textprep::tokenize(textprep::clean(text_b));
    const std::set<std::string> a(ta.begin(), ta.end());
    const std::set<std::string> b(tb.begin(), tb.end());
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& w : a) inter += b.count(w);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Largest group of near-duplicates among the given tweets: greedy clustering
// in input order, each tweet joins the first cluster it matches entirely.
std::size_t largest_duplicate_cluster(const std::vector<const Tweet*>& tweets,
                                      double jaccard_threshold) {
    std::vector<std::vector<const Tweet*>> clusters;
    for (const Tweet* t : tweets) {
        bool placed = false;
        for (auto& cluster : clusters) {
            bool all = true;
            for (const Tweet* o : cluster) {
                if (token_jaccard(t->text, o->text) < jaccard_threshold) {
                    all = false;
                    break;
                }
            }
            if (all) {
                cluster.push_back(t);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({t});
    }
    std::size_t best = 0;
    for (const auto& c : clusters) best = std::max(best, c.size());
    return best;
}

} // namespace

FilterResult filter_spam(std::vector<UserRecord> users, const SpamPolicy& policy) {
    FilterResult result;
    for (auto& user : users) {
        const std::string& handle = user.profile.handle;
        if (user.profile.statuses_count == 0) {
            result.removals.push_back({handle, "ghost", "statuses_count=0"});
            continue;
        }
        if (user.profile.followers_count < policy.ghost_min_followers) {
            result.removals.push_back(
                {handle, "ghost",
                 "followers_count=" + std::to_string(user.profile.followers_count)});
            continue;
        }
        if (user.tweets.empty()) {
            result.removals.push_back({handle, "ghost", "no tweets in archive"});
            continue;
        }

        std::vector<const Tweet*> spammy;
        for (const auto& t : user.tweets) {
            if (t.hashtag_count >= policy.hashtag_threshold) spammy.push_back(&t);
        }
        if (static_cast<int>(spammy.size()) >= policy.repetition_count) {
            const std::size_t cluster =
                largest_duplicate_cluster(spammy, policy.jaccard_threshold);
            if (cluster >= static_cast<std::size_t>(policy.repetition_count)) {
                result.removals.push_back(
                    {handle, "repetitive",
                     std::to_string(cluster) + " near-duplicate tweets with >=" +
                         std::to_string(policy.hashtag_threshold) + " hashtags"});
                continue;
            }
        }

        std::vector<Tweet> kept;
        for (auto& t : user.tweets) {
            if (t.hashtag_count >= policy.hashtag_threshold) {
                result.removals.push_back({handle, "spam_tweet",
                                           "tweet " + t.id + " has " +
                                               std::to_string(t.hashtag_count) + " hashtags"});
            } else {
                kept.push_back(std::move(t));
            }
        }
        if (kept.empty()) {
            result.removals.push_back({handle, "emptied", "all tweets dropped as spam"});
            continue;
        }
        user.tweets = std::move(kept);
        result.kept.push_back(std::move(user));
    }
    return result;
}

void write_removal_report(const std::string& path, const std::vector<Removal>& removals) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(removals.size());
    for (const auto& r : removals) rows.push_back({r.handle, r.rule, r.detail});
    write_csv(path, {"handle", "rule", "detail"}, rows);
}

} // namespace psyprof::corpus

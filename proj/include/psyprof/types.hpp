#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace psyprof {

// Canonical trait order. Everything that stores per-trait values uses this
// order; never reorder.
enum class Trait : int {
    anxiety = 0,
    avoidance,
    openness,
    conscientiousness,
    extraversion,
    agreeableness,
    neuroticism,
};

inline constexpr int kTraitCount = 7;

inline constexpr std::array<const char*, kTraitCount> kTraitNames = {
    "anxiety",          "avoidance",    "openness", "conscientiousness",
    "extraversion",     "agreeableness", "neuroticism",
};

inline const char* trait_name(Trait t) { return kTraitNames[static_cast<int>(t)]; }

// Attachment traits come from a 7-point instrument, Big Five from a 5-point one.
inline int trait_scale_max(Trait t) {
    return (t == Trait::anxiety || t == Trait::avoidance) ? 7 : 5;
}

std::optional<Trait> trait_from_name(const std::string& name);

// Seven trait scores, each in [0,1].
struct TraitProfile {
    std::array<double, kTraitCount> values{};

    double get(Trait t) const { return values[static_cast<int>(t)]; }
    void set(Trait t, double v) { values[static_cast<int>(t)] = v; }
    bool in_unit_range() const;
};

struct Tweet {
    std::string id;
    std::string text;           // raw UTF-8, untouched
    std::string created_at_iso; // as read from the archive
    std::int64_t created_at = 0; // unix seconds
    bool is_retweet = false;
    int hashtag_count = 0; // '#'-prefixed tokens in raw text
    int mention_count = 0; // '@'-prefixed tokens in raw text

    // Builds a tweet and derives the hashtag/mention counts from the text.
    static Tweet make(std::string id, std::string text, std::string created_at_iso,
                      std::int64_t created_at, bool is_retweet);
};

struct UserProfile {
    std::string handle;
    std::int64_t statuses_count = 0;
    std::int64_t followers_count = 0;
    std::int64_t listed_count = 0;
    std::int64_t favourites_count = 0;
    std::string bio;
    std::string account_created_iso;
    std::int64_t account_created = 0; // unix seconds
    std::int64_t account_age_days = 1; // derived at load time, always >= 1
};

struct UserRecord {
    UserProfile profile;
    std::vector<Tweet> tweets;
    std::optional<TraitProfile> label;
};

enum class Emotion : int { joy = 0, sadness, anger, disgust, fear, surprise };

inline constexpr int kEmotionCount = 6;

inline constexpr std::array<const char*, kEmotionCount> kEmotionNames = {
    "joy", "sadness", "anger", "disgust", "fear", "surprise",
};

std::optional<Emotion> emotion_from_name(const std::string& name);

// Six scores in [0,1], canonical order joy..surprise.
struct EmotionVector {
    std::array<double, kEmotionCount> values{};

    double get(Emotion e) const { return values[static_cast<int>(e)]; }
    void set(Emotion e, double v) { values[static_cast<int>(e)] = v; }
};

} // namespace psyprof

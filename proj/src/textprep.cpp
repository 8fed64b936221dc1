#include "psyprof/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "psyprof/errors.hpp"

namespace psyprof::textprep {

namespace {

bool has_prefix_ci(const std::string& s, const char* prefix) {
    std::size_t i = 0;
    for (; prefix[i]; ++i) {
        if (i >= s.size()) return false;
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    return true;
}

} // namespace

bool is_url_token(const std::string& token) {
    return has_prefix_ci(token, "http://") || has_prefix_ci(token, "https://") ||
           has_prefix_ci(token, "www.") || has_prefix_ci(token, "t.co/");
}

std::string clean(const std::string& raw) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : raw) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) toks.push_back(cur);

    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string& tok = toks[i];
        // "RT" must match exactly: lowercase "rt" is an ordinary word
        if (i == 0 && tok == "RT") continue;
        if (is_url_token(tok)) continue;
        if (tok[0] == '@') continue;
        std::string kept;
        for (char c : tok) {
            const unsigned char uc = static_cast<unsigned char>(c);
            if (uc >= 'A' && uc <= 'Z') kept += static_cast<char>(uc - 'A' + 'a');
            else if (uc >= 'a' && uc <= 'z') kept += c;
            // everything else (punctuation, digits, '#', non-ASCII) is dropped
        }
        if (kept.empty()) continue;
        if (!out.empty()) out += ' ';
        out += kept;
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "cannot", "could", "did", "do", "does",
        "doing", "down", "during", "each", "few", "for", "from", "further", "had",
        "has", "have", "having", "he", "her", "here", "hers", "herself", "him",
        "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself",
        "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of",
        "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
        "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
        "the", "their", "theirs", "them", "themselves", "then", "there", "these",
        "they", "this", "those", "through", "to", "too", "under", "until", "up",
        "very", "was", "we", "were", "what", "when", "where", "which", "while", "who",
        "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
        "yourselves",
    };
    return words;
}

bool is_stopword(const std::string& word) {
    static const std::unordered_set<std::string> set(stopword_list().begin(),
                                                     stopword_list().end());
    return set.count(word) != 0;
}

std::vector<std::string> drop_stopwords(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!is_stopword(t)) out.push_back(t);
    }
    return out;
}

std::vector<std::string> drop_stopwords(const std::vector<std::string>& tokens,
                                        const std::vector<std::string>& stoplist) {
    const std::unordered_set<std::string> set(stoplist.begin(), stoplist.end());
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!set.count(t)) out.push_back(t);
    }
    return out;
}

std::vector<std::string> load_stopword_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        words.push_back(line.substr(first, last - first + 1));
    }
    return words;
}

// ---------------------------------------------------------------------------
// Porter stemmer. One pass of the classic step cascade; stem() below iterates
// passes until the word stops changing, which makes the whole thing
// idempotent (single-pass Porter is not: "preceded" -> "preced" -> "prece").

namespace {

bool is_vowel_at(const std::string& w, std::size_t i) {
    const char c = w[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    if (c == 'y') return i > 0 && !is_vowel_at(w, i - 1);
    return false;
}

// Porter's m: number of VC blocks in the prefix w[0..len).
int measure(const std::string& w, std::size_t len) {
    int m = 0;
    std::size_t i = 0;
    while (i < len && !is_vowel_at(w, i)) ++i;
    for (;;) {
        if (i >= len) return m;
        while (i < len && is_vowel_at(w, i)) ++i;
        if (i >= len) return m;
        ++m;
        while (i < len && !is_vowel_at(w, i)) ++i;
    }
}

bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
        if (is_vowel_at(w, i)) return true;
    }
    return false;
}

bool ends_double_cons(const std::string& w) {
    const std::size_t n = w.size();
    if (n < 2 || w[n - 1] != w[n - 2]) return false;
    return !is_vowel_at(w, n - 1);
}

// consonant-vowel-consonant at the end, final consonant not w/x/y
bool ends_cvc(const std::string& w, std::size_t len) {
    if (len < 3) return false;
    if (is_vowel_at(w, len - 3) || !is_vowel_at(w, len - 2) || is_vowel_at(w, len - 1)) {
        return false;
    }
    const char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, const char* suf, std::size_t* stem_len) {
    std::size_t n = 0;
    while (suf[n]) ++n;
    if (w.size() < n) return false;
    if (w.compare(w.size() - n, n, suf) != 0) return false;
    *stem_len = w.size() - n;
    return true;
}

struct Rule {
    const char* suffix;
    const char* replacement;
};

// Applies the first matching rule whose stem has measure > min_m.
bool apply_rules(std::string& w, const Rule* rules, std::size_t count, int min_m) {
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t stem_len = 0;
        if (!ends_with(w, rules[i].suffix, &stem_len)) continue;
        if (measure(w, stem_len) > min_m) {
            w = w.substr(0, stem_len) + rules[i].replacement;
        }
        return true; // longest-match semantics: stop after the first hit
    }
    return false;
}

void porter_pass(std::string& w) {
    std::size_t st = 0;

    // step 1a
    if (ends_with(w, "sses", &st)) w = w.substr(0, st) + "ss";
    else if (ends_with(w, "ies", &st)) w = w.substr(0, st) + "i";
    else if (ends_with(w, "ss", &st)) { /* keep */ }
    else if (ends_with(w, "s", &st)) w = w.substr(0, st);

    // step 1b
    bool repaired = false;
    if (ends_with(w, "eed", &st)) {
        if (measure(w, st) > 0) w = w.substr(0, st) + "ee";
    } else if (ends_with(w, "ed", &st) && has_vowel(w, st)) {
        w = w.substr(0, st);
        repaired = true;
    } else if (ends_with(w, "ing", &st) && has_vowel(w, st)) {
        w = w.substr(0, st);
        repaired = true;
    }
    if (repaired) {
        if (ends_with(w, "at", &st) || ends_with(w, "bl", &st) || ends_with(w, "iz", &st)) {
            w += 'e';
        } else if (ends_double_cons(w)) {
            const char last = w.back();
            if (last != 'l' && last != 's' && last != 'z') w.pop_back();
        } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
            w += 'e';
        }
    }

    // step 1c
    if (ends_with(w, "y", &st) && has_vowel(w, st)) w[w.size() - 1] = 'i';

    // step 2 (m > 0)
    static const Rule step2[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
        {"logi", "log"},
    };
    apply_rules(w, step2, sizeof(step2) / sizeof(step2[0]), 0);

    // step 3 (m > 0)
    static const Rule step3[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    apply_rules(w, step3, sizeof(step3) / sizeof(step3[0]), 0);

    // step 4 (m > 1); "ion" only after s or t
    static const Rule step4[] = {
        {"al", ""},   {"ance", ""}, {"ence", ""}, {"er", ""},    {"ic", ""},
        {"able", ""}, {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""},
        {"ent", ""},  {"ou", ""},   {"ism", ""},  {"ate", ""},   {"iti", ""},
        {"ous", ""},  {"ive", ""},  {"ize", ""},
    };
    if (!apply_rules(w, step4, sizeof(step4) / sizeof(step4[0]), 1)) {
        if (ends_with(w, "ion", &st) && st > 0 && (w[st - 1] == 's' || w[st - 1] == 't') &&
            measure(w, st) > 1) {
            w = w.substr(0, st);
        }
    }

    // step 5a
    if (ends_with(w, "e", &st)) {
        const int m = measure(w, st);
        if (m > 1 || (m == 1 && !ends_cvc(w, st))) w = w.substr(0, st);
    }

    // step 5b
    if (ends_with(w, "ll", &st) && measure(w, w.size()) > 1) w.pop_back();
}

} // namespace

std::string stem(const std::string& word) {
    if (word.size() <= 2) return word;
    std::string w = word;
    for (int iter = 0; iter < 16; ++iter) {
        std::string prev = w;
        porter_pass(w);
        if (w.empty()) return prev;
        if (w.size() <= 2) return w; // stem() leaves short words alone, so still a fixpoint
        if (w == prev) break;
    }
    return w;
}

std::vector<std::string> stem_all(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(stem(t));
    return out;
}

std::vector<std::string> prepare(const std::string& raw) {
    return stem_all(drop_stopwords(tokenize(clean(raw))));
}

} // namespace psyprof::textprep

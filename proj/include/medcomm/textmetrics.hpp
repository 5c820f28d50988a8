#pragma once

// Word/sentence/syllable/complex-word counting and the two readability
// formulas built on them (Flesch-Kincaid Grade Level, Gunning Fog Index).
//
// Tokenization rules:
//   word      maximal run of letters, digits, apostrophes and internal
//             hyphens; leading/trailing apostrophes are not part of the word.
//   sentence  ends at '.', '!' or '?' (optionally followed by closing quotes
//             or brackets) when followed by whitespace or end of text. A '.'
//             ending a known abbreviation does not end a sentence. A number
//             like "3.5" never splits since no whitespace follows the point.
//   syllable  contiguous vowel groups over a,e,i,o,u,y, minus one for a
//             silent terminal 'e' (consonant + e, but not consonant + "le"),
//             floored at 1. Tokens without letters count as one syllable.
//   complex   >= 3 syllables, unless the third syllable comes only from an
//             "-es"/"-ed"/"-ing" suffix on a <= 2 syllable stem, or the
//             token is capitalized but not sentence-initial.

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "medcomm/error.hpp"

namespace medcomm::textmetrics {

struct TextStats {
    std::int64_t words = 0;
    std::int64_t sentences = 0;
    std::int64_t syllables = 0;
    std::int64_t complex_words = 0;

    friend bool operator==(const TextStats&, const TextStats&) = default;
};

struct ReadabilityScores {
    double fkgl = 0.0;
    double gfi = 0.0;
};

struct Word {
    std::string text;
    std::size_t sentence = 0;
    bool sentence_initial = false;
};

struct Segmentation {
    std::vector<Word> words;
    std::size_t sentences = 0;
};

namespace detail {

inline constexpr std::array<std::string_view, 16> kAbbreviations = {
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.",
    "vs.", "e.g.", "i.e.", "approx.", "fig.", "no.", "cf.", "mt.",
};

inline bool is_apostrophe(UChar32 c) { return c == '\'' || c == 0x2019; }

inline bool is_closer(UChar32 c) {
    return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}' || c == 0x201D || c == 0x2019 ||
           c == 0x00BB;
}

inline bool is_opener(UChar32 c) {
    return c == '"' || c == '\'' || c == '(' || c == '[' || c == '{' || c == 0x201C || c == 0x2018 ||
           c == 0x00AB;
}

inline bool is_alnum(UChar32 c) { return u_isalnum(c) != 0; }

struct Cp {
    UChar32 c;
    std::int32_t begin;
    std::int32_t end;
};

inline std::vector<Cp> decode(std::string_view text) {
    std::vector<Cp> out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
    auto len = static_cast<std::int32_t>(text.size());
    std::int32_t i = 0;
    while (i < len) {
        std::int32_t start = i;
        UChar32 c;
        U8_NEXT(s, i, len, c);
        if (c < 0) c = 0xFFFD;
        out.push_back({c, start, i});
    }
    return out;
}

inline std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

inline bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

inline bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace detail

/// Syllable estimate for one token; always >= 1.
inline int count_syllables(std::string_view word) {
    std::string w = detail::lower_ascii(word);
    int groups = 0;
    bool in_group = false;
    bool any_letter = false;
    for (char c : w) {
        bool letter = detail::is_ascii_letter(c) || static_cast<unsigned char>(c) >= 0x80;
        any_letter = any_letter || letter;
        bool v = detail::is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (!any_letter) return 1;
    auto n = w.size();
    if (n >= 2 && w[n - 1] == 'e' && detail::is_ascii_letter(w[n - 2]) && !detail::is_vowel(w[n - 2])) {
        bool syllabic_le = n >= 3 && w[n - 2] == 'l' && detail::is_ascii_letter(w[n - 3]) &&
                           !detail::is_vowel(w[n - 3]);
        if (!syllabic_le) --groups;
    }
    return groups < 1 ? 1 : groups;
}

/// Splits text into words and sentences per the rules in the file header.
inline Segmentation segment(std::string_view text) {
    Segmentation seg;
    auto cps = detail::decode(text);
    std::size_t words_in_sentence = 0;
    std::size_t i = 0;
    const std::size_t n = cps.size();

    while (i < n) {
        while (i < n && u_isUWhiteSpace(cps[i].c)) ++i;
        if (i >= n) break;
        std::size_t chunk_begin = i;
        while (i < n && !u_isUWhiteSpace(cps[i].c)) ++i;
        std::size_t chunk_end = i;

        // Words inside the chunk.
        std::size_t j = chunk_begin;
        while (j < chunk_end) {
            auto word_char = [&](std::size_t k) {
                UChar32 c = cps[k].c;
                if (detail::is_alnum(c) || detail::is_apostrophe(c)) return true;
                return c == '-' && k > chunk_begin && k + 1 < chunk_end && detail::is_alnum(cps[k - 1].c) &&
                       detail::is_alnum(cps[k + 1].c);
            };
            if (!word_char(j)) {
                ++j;
                continue;
            }
            std::size_t b = j;
            while (j < chunk_end && word_char(j)) ++j;
            std::size_t e = j;
            while (b < e && detail::is_apostrophe(cps[b].c)) ++b;
            while (e > b && detail::is_apostrophe(cps[e - 1].c)) --e;
            bool has_alnum = false;
            for (std::size_t k = b; k < e; ++k) has_alnum = has_alnum || detail::is_alnum(cps[k].c);
            if (!has_alnum) continue;
            Word w;
            w.text = std::string(text.substr(cps[b].begin, cps[e - 1].end - cps[b].begin));
            w.sentence = seg.sentences;
            w.sentence_initial = words_in_sentence == 0;
            seg.words.push_back(std::move(w));
            ++words_in_sentence;
        }

        // Sentence boundary at the end of the chunk?
        std::size_t last = chunk_end;
        while (last > chunk_begin && detail::is_closer(cps[last - 1].c)) --last;
        if (last == chunk_begin) continue;
        UChar32 term = cps[last - 1].c;
        if (term != '.' && term != '!' && term != '?') continue;
        if (term == '.') {
            std::size_t first = chunk_begin;
            while (first < last && detail::is_opener(cps[first].c)) ++first;
            if (first < last) {
                std::string token = detail::lower_ascii(text.substr(cps[first].begin, cps[last - 1].end - cps[first].begin));
                bool abbreviation = false;
                for (auto a : detail::kAbbreviations) abbreviation = abbreviation || token == a;
                if (abbreviation) continue;
            }
        }
        if (words_in_sentence > 0) {
            ++seg.sentences;
            words_in_sentence = 0;
        }
    }
    if (words_in_sentence > 0) ++seg.sentences;
    return seg;
}

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool starts_upper(std::string_view word) {
    auto cps = decode(word);
    return !cps.empty() && u_isupper(cps.front().c);
}

}  // namespace detail

/// Complex-word test used for the Gunning Fog count.
inline bool is_complex(const Word& word) {
    int syl = count_syllables(word.text);
    if (syl < 3) return false;
    if (!word.sentence_initial && detail::starts_upper(word.text)) return false;
    std::string lw = detail::lower_ascii(word.text);
    for (std::string_view suffix : {std::string_view("es"), std::string_view("ed"), std::string_view("ing")}) {
        if (detail::ends_with(lw, suffix)) {
            auto stem = std::string_view(lw).substr(0, lw.size() - suffix.size());
            if (count_syllables(stem) <= 2) return false;
        }
    }
    return true;
}

inline TextStats analyze_text(std::string_view text) {
    auto seg = segment(text);
    TextStats st;
    st.words = static_cast<std::int64_t>(seg.words.size());
    st.sentences = static_cast<std::int64_t>(seg.sentences);
    for (const auto& w : seg.words) {
        st.syllables += count_syllables(w.text);
        if (is_complex(w)) ++st.complex_words;
    }
    return st;
}

namespace detail {
inline void require_scorable(const TextStats& s, const char* what) {
    if (s.words <= 0 || s.sentences <= 0) {
        throw UndefinedScoreError(std::string(what) + " undefined: text has " + std::to_string(s.words) +
                                  " words and " + std::to_string(s.sentences) + " sentences");
    }
}
}  // namespace detail

/// Flesch-Kincaid Grade Level: 0.39 (W/S) + 11.8 (Sy/W) - 15.59.
inline double fkgl(const TextStats& s) {
    detail::require_scorable(s, "FKGL");
    double w = static_cast<double>(s.words);
    return 0.39 * (w / static_cast<double>(s.sentences)) + 11.8 * (static_cast<double>(s.syllables) / w) - 15.59;
}

/// Gunning Fog Index: 0.4 (W/S + 100 C/W).
inline double gfi(const TextStats& s) {
    detail::require_scorable(s, "GFI");
    double w = static_cast<double>(s.words);
    return 0.4 * (w / static_cast<double>(s.sentences) + 100.0 * static_cast<double>(s.complex_words) / w);
}

inline ReadabilityScores readability(const TextStats& s) { return {fkgl(s), gfi(s)}; }

}  // namespace medcomm::textmetrics

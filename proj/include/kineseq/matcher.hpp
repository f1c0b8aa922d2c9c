#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kineseq/error.hpp"
#include "kineseq/sequencer.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

/// Unit-cost Levenshtein distance between two symbol sequences, two-row
/// dynamic programming.
template <typename Symbol>
std::size_t levenshtein(std::span<const Symbol> a, std::span<const Symbol> b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(std::span<const char>(a.data(), a.size()),
                       std::span<const char>(b.data(), b.size()));
}

/// Banded Levenshtein with cutoff: returns the exact distance when it is
/// <= limit, otherwise nothing. Output-equivalent to the full DP within
/// the limit, but only touches a diagonal band of width 2*limit+1.
template <typename Symbol>
std::optional<std::size_t> levenshtein_bounded(std::span<const Symbol> a,
                                               std::span<const Symbol> b, std::size_t limit) {
    const std::size_t n = a.size(), m = b.size();
    const std::size_t diff = n > m ? n - m : m - n;
    if (diff > limit) return std::nullopt;

    constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 2;
    std::vector<std::size_t> prev(m + 1, kInf), cur(m + 1, kInf);
    for (std::size_t j = 0; j <= std::min(m, limit); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t lo = i > limit ? i - limit : 0;
        const std::size_t hi = std::min(m, i + limit);
        std::fill(cur.begin(), cur.end(), kInf);
        if (lo == 0) cur[0] = i;
        std::size_t row_min = cur[0];
        for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
            row_min = std::min(row_min, cur[j]);
        }
        if (row_min > limit) return std::nullopt;
        std::swap(prev, cur);
    }
    return prev[m] <= limit ? std::optional<std::size_t>(prev[m]) : std::nullopt;
}

inline std::optional<std::size_t> levenshtein_bounded(std::string_view a, std::string_view b,
                                                      std::size_t limit) {
    return levenshtein_bounded(std::span<const char>(a.data(), a.size()),
                               std::span<const char>(b.data(), b.size()), limit);
}

/// Expands run-length tokens to one label per frame.
inline std::vector<std::string> expand(std::span<const PoseToken> tokens) {
    std::vector<std::string> labels;
    for (const auto& t : tokens)
        for (std::size_t i = 0; i < t.run; ++i) labels.push_back(t.label);
    return labels;
}

using AdjacencySet = std::set<std::pair<std::string, std::string>>;

/// Unordered pairs of labels adjacent somewhere in a token list.
inline AdjacencySet make_adjacency(std::span<const PoseToken> ideal) {
    AdjacencySet adjacency;
    for (std::size_t i = 1; i < ideal.size(); ++i) {
        const std::string& a = ideal[i - 1].label;
        const std::string& b = ideal[i].label;
        adjacency.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
    }
    return adjacency;
}

inline bool adjacent(const AdjacencySet& adjacency, const std::string& a, const std::string& b) {
    return adjacency.count(a < b ? std::make_pair(a, b) : std::make_pair(b, a)) > 0;
}

/// One dictionary movement: its ideal token sequence plus the acceptable
/// tempo variants (the ideal itself is always variant 0).
struct MovementEntry {
    std::string name;
    std::vector<PoseToken> ideal;
    std::vector<std::vector<PoseToken>> variants;
    AdjacencySet adjacency;
};

inline constexpr std::size_t kDefaultEditLimit = 10;

struct MovementDictionary {
    std::vector<MovementEntry> entries;
    std::size_t edit_limit = kDefaultEditLimit;
};

struct MatchResult {
    std::string movement;
    std::vector<PoseToken> variant;
    std::size_t distance = 0;
    Span span;
};

/// Scales an ideal sequence to tempo variants: each run is multiplied by
/// the scale and rounded half away from zero with a floor of 1. The ideal
/// itself is always the first variant, duplicates are dropped.
inline std::vector<std::vector<PoseToken>> generate_variants(std::span<const PoseToken> ideal,
                                                             std::span<const double> scales) {
    std::vector<std::vector<PoseToken>> variants;
    variants.emplace_back(ideal.begin(), ideal.end());
    for (double scale : scales) {
        std::vector<PoseToken> v;
        v.reserve(ideal.size());
        for (const auto& t : ideal) {
            auto scaled = std::llround(static_cast<double>(t.run) * scale);
            v.push_back({t.label, static_cast<std::size_t>(std::max<long long>(1, scaled))});
        }
        if (std::find(variants.begin(), variants.end(), v) == variants.end())
            variants.push_back(std::move(v));
    }
    return variants;
}

namespace detail {

/// Interns labels to dense ids so the DP compares ints instead of strings.
class LabelInterner {
public:
    int id(const std::string& label) {
        auto [it, inserted] = ids_.try_emplace(label, static_cast<int>(ids_.size()));
        (void)inserted;
        return it->second;
    }
    std::vector<int> expand_ids(std::span<const PoseToken> tokens) {
        std::vector<int> out;
        for (const auto& t : tokens) {
            int label_id = id(t.label);
            out.insert(out.end(), t.run, label_id);
        }
        return out;
    }

private:
    std::map<std::string, int> ids_;
};

}  // namespace detail

/// Brute-force dictionary lookup: the candidate sequence is compared to
/// every variant of every movement and the global minimum edit distance
/// wins, provided it does not exceed the dictionary's edit limit. Ties go
/// to the earliest entry, then the earliest variant within it. Returns
/// nothing when every variant is too far away.
inline std::optional<MatchResult> match_movement(const PoseSequence& seq,
                                                 const MovementDictionary& dict) {
    detail::LabelInterner interner;
    const std::vector<int> query = interner.expand_ids(seq.tokens);

    std::optional<std::size_t> best;
    const MovementEntry* best_entry = nullptr;
    const std::vector<PoseToken>* best_variant = nullptr;
    for (const auto& entry : dict.entries) {
        for (const auto& variant : entry.variants) {
            const std::vector<int> target = interner.expand_ids(variant);
            auto d = levenshtein_bounded(std::span<const int>(query), std::span<const int>(target),
                                         dict.edit_limit);
            if (d && (!best || *d < *best)) {
                best = *d;
                best_entry = &entry;
                best_variant = &variant;
            }
        }
    }
    if (!best) return std::nullopt;
    return MatchResult{best_entry->name, *best_variant, *best, seq.span};
}

/// Parses the dictionary JSON document:
///   { "edit_limit": 10,
///     "movements": [ { "name": "X", "ideal": "A6 B6 C10 B6 A6",
///                      "variants": ["A5 B5 C9 B5 A5", ...] } ] }
/// The ideal is inserted as the first variant when the file does not list
/// it. Every variant may only use labels that appear in the ideal.
inline MovementDictionary dictionary_from_json(const nlohmann::json& j) try {
    MovementDictionary dict;
    dict.edit_limit = j.value("edit_limit", kDefaultEditLimit);
    if (!j.contains("movements") || !j.at("movements").is_array())
        throw ParseError("dictionary: missing 'movements' array");

    std::set<std::string> names;
    for (const auto& m : j.at("movements")) {
        MovementEntry entry;
        entry.name = m.at("name").get<std::string>();
        if (!names.insert(entry.name).second)
            throw ParseError("dictionary: duplicate movement name '" + entry.name + "'");
        entry.ideal = parse_tokens(m.at("ideal").get<std::string>());
        if (entry.ideal.empty())
            throw ParseError("dictionary: movement '" + entry.name + "' has an empty ideal");

        std::set<std::string> ideal_labels;
        for (const auto& t : entry.ideal) ideal_labels.insert(t.label);

        entry.variants.push_back(entry.ideal);
        if (m.contains("variants")) {
            for (const auto& v : m.at("variants")) {
                auto tokens = parse_tokens(v.get<std::string>());
                for (const auto& t : tokens) {
                    if (!ideal_labels.count(t.label))
                        throw ParseError("dictionary: variant of '" + entry.name +
                                         "' uses label '" + t.label +
                                         "' absent from the ideal");
                }
                if (std::find(entry.variants.begin(), entry.variants.end(), tokens) ==
                    entry.variants.end())
                    entry.variants.push_back(std::move(tokens));
            }
        }
        entry.adjacency = make_adjacency(entry.ideal);
        dict.entries.push_back(std::move(entry));
    }
    return dict;
} catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dictionary: ") + e.what());
}

inline nlohmann::json dictionary_to_json(const MovementDictionary& dict) {
    nlohmann::json movements = nlohmann::json::array();
    for (const auto& entry : dict.entries) {
        nlohmann::json variants = nlohmann::json::array();
        for (const auto& v : entry.variants) variants.push_back(format_tokens(v));
        movements.push_back({{"name", entry.name},
                             {"ideal", format_tokens(entry.ideal)},
                             {"variants", variants}});
    }
    return {{"edit_limit", dict.edit_limit}, {"movements", movements}};
}

}  // namespace kineseq

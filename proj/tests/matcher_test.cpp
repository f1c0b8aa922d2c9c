#include "kineseq/matcher.hpp"

#include <atomic>
#include <fstream>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace kineseq;

namespace {

PoseSequence make_seq(std::string_view tokens, std::uint64_t begin = 0) {
    PoseSequence seq;
    seq.tokens = parse_tokens(tokens);
    std::size_t frames = 0;
    for (const auto& t : seq.tokens) frames += t.run;
    seq.span = {begin, begin + frames};
    seq.frame_accuracies.assign(frames, 1.0);
    seq.followed_by_separator = true;
    return seq;
}

MovementDictionary single_entry_dictionary(std::string_view ideal, std::size_t edit_limit = 10) {
    MovementDictionary dict;
    dict.edit_limit = edit_limit;
    MovementEntry entry;
    entry.name = "X";
    entry.ideal = parse_tokens(ideal);
    entry.variants = {entry.ideal};
    entry.adjacency = make_adjacency(entry.ideal);
    dict.entries.push_back(entry);
    return dict;
}

std::size_t lev_str(std::string_view a, std::string_view b) { return levenshtein(a, b); }

}  // namespace

TEST(Tokens, MultiLetterLabelsRoundTrip) {
    const auto tokens = parse_tokens("Up3 Down2 Up1");
    ASSERT_EQ(tokens.size(), 3u);
    EXPECT_EQ(tokens[0].label, "Up");
    EXPECT_EQ(tokens[1].label, "Down");
    EXPECT_EQ(format_tokens(tokens), "Up3 Down2 Up1");

    MovementDictionary dict;
    dict.edit_limit = 10;
    MovementEntry entry;
    entry.name = "reach";
    entry.ideal = tokens;
    entry.variants = {entry.ideal};
    dict.entries.push_back(entry);

    PoseSequence seq;
    seq.tokens = parse_tokens("Up3 Down3 Up1");
    seq.span = {0, 7};
    seq.frame_accuracies.assign(7, 1.0);
    const auto result = match_movement(seq, dict);
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->distance, 1u);

    EXPECT_THROW(parse_tokens("A6 6B"), ParseError);
    EXPECT_THROW(parse_tokens("A"), ParseError);
    EXPECT_THROW(parse_tokens("A0"), ParseError);
    EXPECT_THROW(parse_tokens("A99999999999999999999"), ParseError);
}

TEST(Expand, TokensToFrameLabels) {
    const auto labels = expand(parse_tokens("A6 B6 C10 B6 A6"));
    ASSERT_EQ(labels.size(), 34u);
    EXPECT_EQ(labels.front(), "A");
    EXPECT_EQ(labels[6], "B");
    EXPECT_EQ(labels[12], "C");

    EXPECT_EQ(expand(parse_tokens("A1")), std::vector<std::string>{"A"});
    EXPECT_TRUE(expand({}).empty());
}

TEST(Levenshtein, BaseCases) {
    EXPECT_EQ(lev_str("", "ABC"), 3u);
    EXPECT_EQ(lev_str("ABC", ""), 3u);
    EXPECT_EQ(lev_str("", ""), 0u);
    EXPECT_EQ(lev_str("ABCBA", "ABCBA"), 0u);
    EXPECT_EQ(lev_str("kitten", "sitting"), 3u);
}

TEST(Levenshtein, ExhaustiveAgainstExponentialOracle) {
    const auto strings = oracles::all_strings("ABC", 4);
    for (const auto& a : strings) {
        for (const auto& b : strings) {
            const std::size_t expected = oracles::lev_exponential(a, b);
            EXPECT_EQ(lev_str(a, b), expected) << '"' << a << "\" vs \"" << b << '"';
        }
    }
}

TEST(Levenshtein, MemoisedOracleMatchesExponentialOracle) {
    oracles::MemoLevenshtein memo;
    const auto strings = oracles::all_strings("ABC", 4);
    for (const auto& a : strings)
        for (const auto& b : strings) EXPECT_EQ(memo(a, b), oracles::lev_exponential(a, b));
}

TEST(Levenshtein, ToleratedDeviationGolden) {
    const auto produced = expand(parse_tokens("A5 B7 C12 B5 A6"));
    const auto ideal = expand(parse_tokens("A6 B6 C10 B6 A6"));
    std::string produced_text, ideal_text;
    for (const auto& s : produced) produced_text += s;
    for (const auto& s : ideal) ideal_text += s;

    oracles::MemoLevenshtein memo;
    const std::size_t oracle = memo(produced_text, ideal_text);
    EXPECT_EQ(oracle, 3u);  // confirmed by the oracle before freezing
    EXPECT_EQ(levenshtein(std::span<const std::string>(produced),
                          std::span<const std::string>(ideal)),
              oracle);
}

TEST(Levenshtein, MetricAxioms) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 10000; ++i) {
        const auto a = oracles::random_label_string(rng, 12);
        const auto b = oracles::random_label_string(rng, 12);
        const auto c = oracles::random_label_string(rng, 12);
        const std::size_t ab = lev_str(a, b);
        EXPECT_EQ(ab == 0, a == b);
        EXPECT_EQ(ab, lev_str(b, a));
        EXPECT_LE(ab, lev_str(a, c) + lev_str(c, b));

        const std::size_t diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
        EXPECT_GE(ab, diff);
        EXPECT_LE(ab, std::max(a.size(), b.size()));
    }
}

TEST(LevenshteinBounded, EquivalentToFullDpWithinTheLimit) {
    const auto strings = oracles::all_strings("ABC", 4);
    for (std::size_t limit : {0u, 1u, 2u, 5u}) {
        for (const auto& a : strings) {
            for (const auto& b : strings) {
                const std::size_t full = lev_str(a, b);
                const auto bounded = levenshtein_bounded(a, b, limit);
                if (full <= limit) {
                    ASSERT_TRUE(bounded.has_value());
                    EXPECT_EQ(*bounded, full);
                } else {
                    EXPECT_FALSE(bounded.has_value());
                }
            }
        }
    }
}

TEST(LevenshteinBounded, RandomLongStrings) {
    std::mt19937_64 rng(32);
    for (int i = 0; i < 2000; ++i) {
        const auto a = oracles::random_label_string(rng, 60);
        const auto b = oracles::random_label_string(rng, 60);
        const std::size_t full = lev_str(a, b);
        const auto bounded = levenshtein_bounded(a, b, 10);
        if (full <= 10) {
            ASSERT_TRUE(bounded.has_value());
            EXPECT_EQ(*bounded, full);
        } else {
            EXPECT_FALSE(bounded.has_value());
        }
    }
}

TEST(MakeAdjacency, PairsFromConsecutiveTokens) {
    const auto adjacency = make_adjacency(parse_tokens("A6 B6 C10 B6 A6"));
    EXPECT_EQ(adjacency.size(), 2u);
    EXPECT_TRUE(adjacent(adjacency, "A", "B"));
    EXPECT_TRUE(adjacent(adjacency, "B", "A"));
    EXPECT_TRUE(adjacent(adjacency, "B", "C"));
    EXPECT_FALSE(adjacent(adjacency, "A", "C"));
}

TEST(MatchMovement, VerbatimVariantMatchesAtZero) {
    MovementDictionary dict = single_entry_dictionary("A6 B6 C10 B6 A6");
    dict.entries[0].variants.push_back(parse_tokens("A5 B5 C9 B5 A5"));
    const auto result = match_movement(make_seq("A5 B5 C9 B5 A5"), dict);
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->movement, "X");
    EXPECT_EQ(result->distance, 0u);
    EXPECT_EQ(format_tokens(result->variant), "A5 B5 C9 B5 A5");
}

TEST(MatchMovement, ToleratesSmallDeviations) {
    const auto dict = single_entry_dictionary("A6 B6 C10 B6 A6");
    const auto result = match_movement(make_seq("A5 B7 C12 B5 A6"), dict);
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->movement, "X");
    EXPECT_EQ(result->distance, 3u);
    EXPECT_EQ(result->span, (Span{0, 35}));
}

TEST(MatchMovement, LimitIsInclusive) {
    const auto dict = single_entry_dictionary("A20");
    const auto at_limit = match_movement(make_seq("A10"), dict);
    ASSERT_TRUE(at_limit.has_value());
    EXPECT_EQ(at_limit->distance, 10u);

    EXPECT_FALSE(match_movement(make_seq("A9"), dict).has_value());  // distance 11
}

TEST(MatchMovement, TiesGoToDictionaryOrder) {
    MovementDictionary dict;
    dict.edit_limit = 10;
    for (const char* spec : {"A6", "A4"}) {
        MovementEntry entry;
        entry.name = std::string("M_") + spec;
        entry.ideal = parse_tokens(spec);
        entry.variants = {entry.ideal};
        dict.entries.push_back(entry);
    }
    // A5 sits at distance 1 from both entries; the first one wins
    const auto result = match_movement(make_seq("A5"), dict);
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->movement, "M_A6");

    // within one entry the earlier variant wins
    MovementDictionary one = single_entry_dictionary("A6");
    one.entries[0].variants.push_back(parse_tokens("A4"));
    const auto inner = match_movement(make_seq("A5"), one);
    ASSERT_TRUE(inner.has_value());
    EXPECT_EQ(format_tokens(inner->variant), "A6");
}

TEST(MatchMovement, NeverExceedsTheLimitAndMatchesBruteForce) {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> run(1, 12);
    std::uniform_int_distribution<int> token_count(1, 5);
    auto random_tokens = [&] {
        std::vector<PoseToken> tokens;
        const int n = token_count(rng);
        int previous = -1;
        for (int i = 0; i < n; ++i) {
            int label = static_cast<int>(rng() % 3);
            if (label == previous) label = (label + 1) % 3;
            previous = label;
            tokens.push_back({std::string(1, char('A' + label)), static_cast<std::size_t>(run(rng))});
        }
        return tokens;
    };

    for (int trial = 0; trial < 100; ++trial) {
        MovementDictionary dict;
        dict.edit_limit = 10;
        const int entries = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < entries; ++e) {
            MovementEntry entry;
            entry.name = "M" + std::to_string(e);
            entry.ideal = random_tokens();
            entry.variants = {entry.ideal};
            for (int v = 0; v < 2; ++v) entry.variants.push_back(random_tokens());
            dict.entries.push_back(entry);
        }

        PoseSequence seq;
        seq.tokens = random_tokens();
        std::size_t frames = 0;
        for (const auto& t : seq.tokens) frames += t.run;
        seq.span = {0, frames};
        seq.frame_accuracies.assign(frames, 1.0);

        const auto result = match_movement(seq, dict);

        // brute force over the full DP
        std::optional<std::size_t> best;
        std::string best_name;
        std::string best_variant;
        const auto query = expand(seq.tokens);
        for (const auto& entry : dict.entries) {
            for (const auto& variant : entry.variants) {
                const auto target = expand(variant);
                std::size_t d = levenshtein(std::span<const std::string>(query),
                                            std::span<const std::string>(target));
                if (d <= dict.edit_limit && (!best || d < *best)) {
                    best = d;
                    best_name = entry.name;
                    best_variant = format_tokens(variant);
                }
            }
        }

        ASSERT_EQ(result.has_value(), best.has_value());
        if (result) {
            EXPECT_LE(result->distance, dict.edit_limit);
            EXPECT_EQ(result->distance, *best);
            EXPECT_EQ(result->movement, best_name);
            EXPECT_EQ(format_tokens(result->variant), best_variant);
        }
    }
}

TEST(MatchMovement, ConcurrentCallersAgree) {
    const auto dict = single_entry_dictionary("A6 B6 C10 B6 A6");
    const auto seq = make_seq("A5 B7 C12 B5 A6");
    std::vector<std::future<std::optional<MatchResult>>> futures;
    for (int i = 0; i < 4; ++i)
        futures.push_back(std::async(std::launch::async, [&] { return match_movement(seq, dict); }));
    for (auto& f : futures) {
        const auto result = f.get();
        ASSERT_TRUE(result.has_value());
        EXPECT_EQ(result->distance, 3u);
        EXPECT_EQ(result->movement, "X");
    }
}

TEST(MatchMovement, ParallelPerVariantEvaluationIsOrderIndependent) {
    MovementDictionary dict;
    dict.edit_limit = 10;
    std::mt19937_64 rng(34);
    for (int e = 0; e < 6; ++e) {
        MovementEntry entry;
        entry.name = "M" + std::to_string(e);
        entry.ideal = {{std::string(1, char('A' + e % 3)), static_cast<std::size_t>(4 + e)},
                       {"B", 3}};
        entry.variants = generate_variants(entry.ideal, std::vector<double>{0.8, 1.2, 1.5});
        dict.entries.push_back(entry);
    }
    const auto seq = make_seq("A5 B4");

    // flatten, compute distances concurrently, then reduce deterministically
    struct Cell {
        std::size_t entry, variant;
        std::optional<std::size_t> distance;
    };
    std::vector<Cell> cells;
    for (std::size_t e = 0; e < dict.entries.size(); ++e)
        for (std::size_t v = 0; v < dict.entries[e].variants.size(); ++v)
            cells.push_back({e, v, std::nullopt});

    const auto query = expand(seq.tokens);
    std::vector<std::thread> workers;
    std::atomic<std::size_t> cursor{0};
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < cells.size(); i = cursor.fetch_add(1)) {
                const auto target = expand(dict.entries[cells[i].entry].variants[cells[i].variant]);
                cells[i].distance =
                    levenshtein_bounded(std::span<const std::string>(query),
                                        std::span<const std::string>(target), dict.edit_limit);
            }
        });
    }
    for (auto& w : workers) w.join();

    std::optional<Cell> best;
    for (const auto& cell : cells)
        if (cell.distance && (!best || *cell.distance < *best->distance)) best = cell;

    const auto serial = match_movement(seq, dict);
    ASSERT_EQ(serial.has_value(), best.has_value());
    if (serial) {
        EXPECT_EQ(serial->distance, *best->distance);
        EXPECT_EQ(serial->movement, dict.entries[best->entry].name);
        EXPECT_EQ(serial->variant, dict.entries[best->entry].variants[best->variant]);
    }
}

TEST(GenerateVariants, ScaleOneKeepsTheIdeal) {
    const auto ideal = parse_tokens("A6 B6 C10 B6 A6");
    const auto variants = generate_variants(ideal, std::vector<double>{1.0});
    ASSERT_EQ(variants.size(), 1u);  // the scaled copy collapses into the ideal
    EXPECT_EQ(variants[0], ideal);
}

TEST(GenerateVariants, RoundsHalfAwayFromZeroWithFloorOne) {
    const auto ideal = parse_tokens("A6 B6 C10 B6 A6");
    const auto variants = generate_variants(ideal, std::vector<double>{4.0 / 3.0});
    ASSERT_EQ(variants.size(), 2u);
    EXPECT_EQ(format_tokens(variants[1]), "A8 B8 C13 B8 A8");  // round(13.33) = 13

    const auto tiny = generate_variants(parse_tokens("A2"), std::vector<double>{0.1});
    ASSERT_EQ(tiny.size(), 2u);
    EXPECT_EQ(format_tokens(tiny[1]), "A1");  // clamped at run 1

    const auto half = generate_variants(parse_tokens("A5"), std::vector<double>{0.5});
    EXPECT_EQ(format_tokens(half[1]), "A3");  // 2.5 rounds away from zero
}

TEST(GenerateVariants, DropsDuplicates) {
    const auto variants =
        generate_variants(parse_tokens("A6 B6"), std::vector<double>{0.5, 0.5, 1.0, 2.0});
    ASSERT_EQ(variants.size(), 3u);
    EXPECT_EQ(format_tokens(variants[0]), "A6 B6");
    EXPECT_EQ(format_tokens(variants[1]), "A3 B3");
    EXPECT_EQ(format_tokens(variants[2]), "A12 B12");
}

TEST(Dictionary, LoadsTheBundledFile) {
    std::ifstream in(std::string(KINESEQ_DATA_DIR) + "/movements.json");
    ASSERT_TRUE(in.is_open());
    nlohmann::json j;
    in >> j;
    const auto dict = dictionary_from_json(j);
    EXPECT_EQ(dict.edit_limit, 10u);
    ASSERT_EQ(dict.entries.size(), 1u);
    const auto& entry = dict.entries[0];
    EXPECT_EQ(entry.name, "X");
    EXPECT_EQ(format_tokens(entry.ideal), "A6 B6 C10 B6 A6");
    ASSERT_EQ(entry.variants.size(), 4u);  // the ideal plus three listed variants
    EXPECT_EQ(entry.variants[0], entry.ideal);
    EXPECT_EQ(format_tokens(entry.variants[2]), "A8 B8 C14 B8 A8");
    EXPECT_TRUE(adjacent(entry.adjacency, "A", "B"));
    EXPECT_TRUE(adjacent(entry.adjacency, "B", "C"));
}

TEST(Dictionary, JsonRoundTrip) {
    std::ifstream in(std::string(KINESEQ_DATA_DIR) + "/movements.json");
    nlohmann::json j;
    in >> j;
    const auto dict = dictionary_from_json(j);
    const auto again = dictionary_from_json(dictionary_to_json(dict));
    ASSERT_EQ(again.entries.size(), dict.entries.size());
    EXPECT_EQ(again.edit_limit, dict.edit_limit);
    for (std::size_t i = 0; i < dict.entries.size(); ++i) {
        EXPECT_EQ(again.entries[i].name, dict.entries[i].name);
        EXPECT_EQ(again.entries[i].ideal, dict.entries[i].ideal);
        EXPECT_EQ(again.entries[i].variants, dict.entries[i].variants);
    }
}

TEST(Dictionary, RejectsBadFiles) {
    nlohmann::json base = {{"edit_limit", 10},
                           {"movements",
                            {{{"name", "X"}, {"ideal", "A6 B6"}, {"variants", {"A5 B5"}}}}}};
    EXPECT_NO_THROW(dictionary_from_json(base));

    auto dup = base;
    dup["movements"].push_back(dup["movements"][0]);
    EXPECT_THROW(dictionary_from_json(dup), ParseError);

    auto foreign = base;
    foreign["movements"][0]["variants"] = {"A5 D5"};
    EXPECT_THROW(dictionary_from_json(foreign), ParseError);

    auto zero_run = base;
    zero_run["movements"][0]["ideal"] = "A0 B6";
    EXPECT_THROW(dictionary_from_json(zero_run), ParseError);

    auto garbage = base;
    garbage["movements"][0]["ideal"] = "6A";
    EXPECT_THROW(dictionary_from_json(garbage), ParseError);

    EXPECT_THROW(dictionary_from_json(nlohmann::json{{"edit_limit", 10}}), ParseError);
}

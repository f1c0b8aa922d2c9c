#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kineseq/matcher.hpp"

namespace kineseq {

enum class EditKind { Insert, Delete, Substitute };

/// One step of the edit script that turns the produced sequence into the
/// ideal one. For deletions the ideal index is the gap the symbol fell
/// into; for insertions the produced index is the gap (0..n) the new
/// symbol belongs at.
struct EditOp {
    EditKind kind;
    std::size_t produced_index = 0;
    std::size_t ideal_index = 0;

    bool operator==(const EditOp&) const = default;
};

struct Alignment {
    std::vector<EditOp> ops;        ///< ascending by position; |ops| == edit distance
    std::vector<std::size_t> kept;  ///< produced indices untouched by any edit, ascending
};

/// Backtracks one optimal edit script. Among equal-cost paths the
/// backtrack, walking from the ends of both sequences, prefers a match,
/// then a deletion, then an insertion, then a substitution; this keeps
/// frames out of the edit script whenever an equally cheap script allows
/// it, which is what the accuracy metrics want.
template <typename Symbol>
Alignment align(std::span<const Symbol> produced, std::span<const Symbol> ideal) {
    const std::size_t n = produced.size(), m = ideal.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = d[i - 1][j - 1] + (produced[i - 1] == ideal[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    }

    Alignment out;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && produced[i - 1] == ideal[j - 1] && d[i][j] == d[i - 1][j - 1]) {
            out.kept.push_back(i - 1);
            --i, --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            out.ops.push_back({EditKind::Delete, i - 1, j});
            --i;
        } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
            out.ops.push_back({EditKind::Insert, i, j - 1});
            --j;
        } else {
            out.ops.push_back({EditKind::Substitute, i - 1, j - 1});
            --i, --j;
        }
    }
    std::reverse(out.ops.begin(), out.ops.end());
    std::reverse(out.kept.begin(), out.kept.end());
    return out;
}

inline Alignment align(std::string_view produced, std::string_view ideal) {
    return align(std::span<const char>(produced.data(), produced.size()),
                 std::span<const char>(ideal.data(), ideal.size()));
}

/// Total accuracy: the accuracies of the frames the edit script left
/// untouched, summed and divided by the ideal sequence length.
inline double total_accuracy(const Alignment& alignment, std::span<const double> frame_accuracies,
                             std::size_t ideal_len) {
    if (ideal_len == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t idx : alignment.kept) sum += frame_accuracies[idx];
    return sum / static_cast<double>(ideal_len);
}

/// Weighted accuracy: kept frames weigh 1, substituted frames weigh 0.5
/// when the produced/ideal label pair is adjacent in the matched
/// movement's ideal sequence and 0 when the pose is unfamiliar, deleted
/// frames weigh 0.
inline double weighted_accuracy(const Alignment& alignment,
                                std::span<const std::string> produced,
                                std::span<const std::string> ideal,
                                std::span<const double> frame_accuracies,
                                const AdjacencySet& adjacency) {
    if (ideal.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t idx : alignment.kept) sum += frame_accuracies[idx];
    for (const auto& op : alignment.ops) {
        if (op.kind != EditKind::Substitute) continue;
        if (adjacent(adjacency, produced[op.produced_index], ideal[op.ideal_index]))
            sum += 0.5 * frame_accuracies[op.produced_index];
    }
    return sum / static_cast<double>(ideal.size());
}

/// Contiguous window of produced frames with the lowest mean accuracy.
/// Indices are inclusive and relative to the produced sequence.
struct WorstSegment {
    std::size_t start = 0;
    std::size_t end = 0;
    double mean_accuracy = 0.0;

    bool operator==(const WorstSegment&) const = default;
};

inline constexpr std::size_t kDefaultSegmentLen = 10;

/// Produced-frame indices touched by edits, plus the produced index
/// nearest each insertion gap so every reported position is addressable
/// in the recording.
inline std::vector<std::size_t> edit_positions(const Alignment& alignment,
                                               std::size_t produced_len) {
    std::set<std::size_t> positions;
    for (const auto& op : alignment.ops) {
        switch (op.kind) {
            case EditKind::Delete:
            case EditKind::Substitute:
                positions.insert(op.produced_index);
                break;
            case EditKind::Insert:
                if (produced_len > 0)
                    positions.insert(std::min(op.produced_index, produced_len - 1));
                break;
        }
    }
    return {positions.begin(), positions.end()};
}

/// Splits the produced frames into windows of `segment_len` (the final
/// window may be shorter) and returns the first window with the minimum
/// mean accuracy.
inline WorstSegment worst_segment(std::span<const double> frame_accuracies,
                                  std::size_t segment_len = kDefaultSegmentLen) {
    const std::size_t n = frame_accuracies.size();
    if (n == 0 || segment_len == 0) return {};
    WorstSegment worst;
    bool first = true;
    for (std::size_t start = 0; start < n; start += segment_len) {
        std::size_t end = std::min(start + segment_len, n);
        double mean = 0.0;
        for (std::size_t i = start; i < end; ++i) mean += frame_accuracies[i];
        mean /= static_cast<double>(end - start);
        if (first || mean < worst.mean_accuracy) {
            worst = {start, end - 1, mean};
            first = false;
        }
    }
    return worst;
}

struct AccuracyReport {
    double total_accuracy = 0.0;
    double weighted_accuracy = 0.0;
    std::vector<std::size_t> edit_positions;
    WorstSegment worst_segment;
};

/// Full scoring pass for one matched sequence against the variant it
/// matched: align, accuracy metrics, and inaccuracy localisation.
inline AccuracyReport score(std::span<const std::string> produced,
                            std::span<const std::string> ideal,
                            std::span<const double> frame_accuracies,
                            const AdjacencySet& adjacency,
                            std::size_t segment_len = kDefaultSegmentLen) {
    const Alignment alignment = align(produced, ideal);
    AccuracyReport report;
    report.total_accuracy = total_accuracy(alignment, frame_accuracies, ideal.size());
    report.weighted_accuracy =
        weighted_accuracy(alignment, produced, ideal, frame_accuracies, adjacency);
    report.edit_positions = edit_positions(alignment, produced.size());
    report.worst_segment = worst_segment(frame_accuracies, segment_len);
    return report;
}

}  // namespace kineseq

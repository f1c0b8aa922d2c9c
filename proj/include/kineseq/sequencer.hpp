#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kineseq/error.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

inline constexpr std::size_t kDefaultBufferCapacity = 100;
inline constexpr std::size_t kDefaultSeparatorLen = 7;

/// A candidate pose sequence cut out of the buffer: run-length tokens, the
/// absolute frame span it covers, and the per-frame accuracies of the
/// expanded sequence (frames absorbed from NULL runs carry accuracy 0).
struct PoseSequence {
    std::vector<PoseToken> tokens;
    Span span;
    std::vector<double> frame_accuracies;
    /// True when the sequence ends at a full NULL separator or a consumed
    /// region, i.e. no later frame can extend it.
    bool followed_by_separator = false;

    std::size_t frame_count() const { return frame_accuracies.size(); }
};

/// Maximal runs of equal labels over a frame list, NULL runs included.
/// Consumed frames form their own runs so they never merge with ordinary
/// NULL frames.
inline std::vector<LabelRun> rle_encode(std::span<const ClassifiedFrame> frames) {
    std::vector<LabelRun> runs;
    for (const auto& f : frames) {
        if (!runs.empty() && runs.back().label == f.label && runs.back().consumed == f.consumed) {
            ++runs.back().run;
        } else {
            runs.push_back({f.label, 1, f.consumed});
        }
    }
    return runs;
}

/// Expands runs back to one label per frame (the inverse of rle_encode,
/// up to the consumed flag).
inline std::vector<std::optional<std::string>> rle_expand(std::span<const LabelRun> runs) {
    std::vector<std::optional<std::string>> labels;
    for (const auto& r : runs)
        for (std::size_t i = 0; i < r.run; ++i) labels.push_back(r.label);
    return labels;
}

/// Absorbs NULL runs shorter than `separator_len`: equal flanking labels
/// merge into one run, otherwise the NULL frames join the preceding run
/// (or the following one when the list starts with NULL). NULL runs of at
/// least `separator_len` frames survive as separators, as do consumed
/// runs regardless of length. Total frame count is always preserved.
inline std::vector<LabelRun> smooth_nulls(std::vector<LabelRun> runs, std::size_t separator_len) {
    std::vector<LabelRun> out;
    out.reserve(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const LabelRun& r = runs[i];
        if (r.is_null() && !r.consumed && r.run < separator_len) {
            const bool left_labeled = !out.empty() && !out.back().is_null();
            const bool right_labeled =
                i + 1 < runs.size() && !runs[i + 1].is_null() && !runs[i + 1].consumed;
            if (left_labeled && right_labeled && out.back().label == runs[i + 1].label) {
                out.back().run += r.run + runs[i + 1].run;
                ++i;
            } else if (left_labeled) {
                out.back().run += r.run;
            } else if (right_labeled) {
                runs[i + 1].run += r.run;
            } else {
                out.push_back(r);  // no labelled flank at all
            }
        } else {
            out.push_back(r);
        }
    }
    return out;
}

/// Rolling window of the most recent classified frames. A single writer
/// pushes; readers segment the current contents or a snapshot.
class FrameBuffer {
public:
    explicit FrameBuffer(std::size_t capacity = kDefaultBufferCapacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return frames_.size(); }
    bool full() const { return frames_.size() == capacity_; }

    /// Absolute index of the oldest frame still held.
    std::uint64_t first_index() const { return first_index_; }
    /// One past the absolute index of the newest frame.
    std::uint64_t end_index() const { return first_index_ + frames_.size(); }

    const ClassifiedFrame& at(std::uint64_t absolute_index) const {
        return frames_[static_cast<std::size_t>(absolute_index - first_index_)];
    }

    std::span<const ClassifiedFrame> frames() const { return {frames_.data(), frames_.size()}; }

    /// Appends a frame, evicting the oldest one when the window is full.
    void push(ClassifiedFrame frame) {
        if (!frames_.empty() && frame.timestamp_ms < frames_.back().timestamp_ms)
            throw OutOfOrderFrameError("push: timestamp " + std::to_string(frame.timestamp_ms) +
                                       " earlier than newest frame " +
                                       std::to_string(frames_.back().timestamp_ms));
        frames_.push_back(std::move(frame));
        if (frames_.size() > capacity_) {
            frames_.erase(frames_.begin());
            ++first_index_;
        }
    }

    /// Cuts the buffer into candidate pose sequences: run-length encodes,
    /// drops leading/trailing NULL runs of each region, absorbs
    /// sub-separator NULL runs, and splits at surviving separators.
    /// Consumed regions always split and never re-join a sequence.
    std::vector<PoseSequence> segment(std::size_t separator_len = kDefaultSeparatorLen) const {
        std::vector<PoseSequence> result;
        if (frames_.empty()) return result;

        const auto runs = rle_encode(frames());

        std::vector<LabelRun> chunk;
        std::uint64_t chunk_start = first_index_;
        std::uint64_t offset = first_index_;
        for (const auto& r : runs) {
            if (r.consumed) {
                flush_chunk(result, chunk, chunk_start, separator_len, /*hard_end=*/true);
                chunk.clear();
                chunk_start = offset + r.run;
            } else {
                chunk.push_back(r);
            }
            offset += r.run;
        }
        flush_chunk(result, chunk, chunk_start, separator_len, /*hard_end=*/false);
        return result;
    }

    /// Blanks every frame in the span: label set to NULL, accuracy cleared,
    /// and the frame marked consumed so segment() never resurrects it.
    /// Idempotent; an empty span is a no-op.
    void consume(Span span) {
        if (span.empty()) return;
        if (span.begin < first_index_ || span.end > end_index())
            throw SpanOutOfRangeError("consume: span [" + std::to_string(span.begin) + ", " +
                                      std::to_string(span.end) + ") outside buffer window [" +
                                      std::to_string(first_index_) + ", " +
                                      std::to_string(end_index()) + ")");
        for (std::uint64_t i = span.begin; i < span.end; ++i) {
            ClassifiedFrame& f = frames_[static_cast<std::size_t>(i - first_index_)];
            f.label.reset();
            f.accuracy = 0.0;
            f.consumed = true;
        }
    }

private:
    void flush_chunk(std::vector<PoseSequence>& result, std::vector<LabelRun> chunk,
                     std::uint64_t chunk_start, std::size_t separator_len, bool hard_end) const {
        // Edge NULL runs act as separators whatever their length.
        std::size_t trailing_null = 0;
        while (!chunk.empty() && chunk.front().is_null()) {
            chunk_start += chunk.front().run;
            chunk.erase(chunk.begin());
        }
        while (!chunk.empty() && chunk.back().is_null()) {
            trailing_null = chunk.back().run;  // only the innermost run matters
            chunk.pop_back();
        }
        if (chunk.empty()) return;

        const auto smoothed = smooth_nulls(std::move(chunk), separator_len);

        std::uint64_t pos = chunk_start;
        PoseSequence seq;
        seq.span.begin = pos;
        auto close_piece = [&](bool separated) {
            if (!seq.tokens.empty()) {
                seq.span.end = pos;
                seq.followed_by_separator = separated;
                for (std::uint64_t i = seq.span.begin; i < seq.span.end; ++i) {
                    const ClassifiedFrame& f = at(i);
                    seq.frame_accuracies.push_back(f.is_null() ? 0.0 : f.accuracy);
                }
                result.push_back(std::move(seq));
            }
            seq = PoseSequence{};
        };
        for (const auto& r : smoothed) {
            if (r.is_null()) {  // surviving separator
                close_piece(true);
                pos += r.run;
                seq.span.begin = pos;
            } else {
                if (seq.tokens.empty()) seq.span.begin = pos;
                seq.tokens.push_back({*r.label, r.run});
                pos += r.run;
            }
        }
        close_piece(hard_end || trailing_null >= separator_len);
    }

    std::vector<ClassifiedFrame> frames_;  // contiguous; the window is small
    std::size_t capacity_;
    std::uint64_t first_index_ = 0;
};

}  // namespace kineseq

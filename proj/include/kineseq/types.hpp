#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kineseq/error.hpp"

namespace kineseq {

/// The 17 body keypoints returned by single-person pose estimators
/// (MoveNet/PoseNet convention), in their canonical index order.
enum class KeypointName : int {
    Nose = 0,
    LeftEye,
    RightEye,
    LeftEar,
    RightEar,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
};

inline constexpr std::size_t kKeypointCount = 17;

inline constexpr std::array<std::string_view, kKeypointCount> kKeypointNames = {
    "nose",          "left_eye",   "right_eye",  "left_ear",    "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist",    "right_wrist", "left_hip",   "right_hip",   "left_knee",
    "right_knee",    "left_ankle", "right_ankle",
};

inline std::string_view to_string(KeypointName name) {
    return kKeypointNames[static_cast<std::size_t>(name)];
}

inline KeypointName parse_keypoint_name(std::string_view text) {
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
        if (kKeypointNames[i] == text) return static_cast<KeypointName>(i);
    }
    throw ParseError("unknown keypoint name: '" + std::string(text) + "'");
}

/// One detected body landmark. The name is implied by its slot in the
/// owning frame's keypoint array.
struct Keypoint {
    double x = 0.0;      ///< pixels
    double y = 0.0;      ///< pixels
    double score = 1.0;  ///< detector confidence in [0,1]
};

/// One timestamped set of 17 keypoints, exactly one per canonical name.
struct RawFrame {
    std::int64_t timestamp_ms = 0;
    std::array<Keypoint, kKeypointCount> keypoints{};

    const Keypoint& at(KeypointName name) const {
        return keypoints[static_cast<std::size_t>(name)];
    }
    Keypoint& at(KeypointName name) {
        return keypoints[static_cast<std::size_t>(name)];
    }
};

/// One run-length token of a pose sequence, e.g. A6.
struct PoseToken {
    std::string label;
    std::size_t run = 1;

    bool operator==(const PoseToken&) const = default;
};

/// Parses a whitespace-separated token string such as "A6 B6 C10 B6 A6".
/// Token syntax: letters then a decimal run count >= 1.
inline std::vector<PoseToken> parse_tokens(std::string_view text) {
    std::vector<PoseToken> tokens;
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) {
        std::size_t split = 0;
        while (split < word.size() && std::isalpha(static_cast<unsigned char>(word[split]))) ++split;
        if (split == 0 || split == word.size())
            throw ParseError("malformed pose token: '" + word + "'");
        for (std::size_t i = split; i < word.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(word[i])))
                throw ParseError("malformed pose token: '" + word + "'");
        }
        unsigned long run = 0;
        try {
            run = std::stoul(word.substr(split));
        } catch (const std::out_of_range&) {
            throw ParseError("pose token run out of range: '" + word + "'");
        }
        if (run == 0) throw ParseError("pose token run must be >= 1: '" + word + "'");
        tokens.push_back({word.substr(0, split), static_cast<std::size_t>(run)});
    }
    return tokens;
}

inline std::string format_tokens(const std::vector<PoseToken>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t.label;
        out += std::to_string(t.run);
    }
    return out;
}

/// Half-open range [begin, end) of absolute frame indices. Indices count
/// frames since the start of the stream, so spans stay meaningful after
/// old frames are evicted from the buffer.
struct Span {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    std::uint64_t length() const { return end - begin; }
    bool empty() const { return begin >= end; }
    bool operator==(const Span&) const = default;
};

/// One classified frame: the unit stored in the rolling buffer.
/// A disengaged label marks a NULL frame; its accuracy is meaningless.
struct ClassifiedFrame {
    std::optional<std::string> label;
    double accuracy = 0.0;
    std::int64_t timestamp_ms = 0;
    /// Set by FrameBuffer::consume. Consumed frames read as NULL but act
    /// as hard separators: they are never absorbed back into a sequence.
    bool consumed = false;

    bool is_null() const { return !label.has_value(); }
};

/// One maximal run of equally-labelled frames; label is disengaged for
/// NULL runs.
struct LabelRun {
    std::optional<std::string> label;
    std::size_t run = 0;
    bool consumed = false;

    bool is_null() const { return !label.has_value(); }
    bool operator==(const LabelRun&) const = default;
};

}  // namespace kineseq

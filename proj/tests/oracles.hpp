// Independent reference implementations and generators used by the tests.
// Everything here recomputes expected values through a different route
// than the library code under test.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kineseq/classifier.hpp"
#include "kineseq/geometry.hpp"
#include "kineseq/types.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Levenshtein distance
// ---------------------------------------------------------------------------

/// Plain exponential recursion straight from the definition. Only usable
/// for short strings; validates the memoised oracle below.
inline std::size_t lev_exponential(std::string_view a, std::string_view b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::size_t tail = lev_exponential(a.substr(1), b.substr(1));
    if (a.front() == b.front()) return tail;
    std::size_t del = lev_exponential(a.substr(1), b);
    std::size_t ins = lev_exponential(a, b.substr(1));
    return 1 + std::min({tail, del, ins});
}

/// Top-down memoised recursion; independent of the library's bottom-up
/// two-row DP. Handles strings long enough for the expanded-sequence
/// goldens.
class MemoLevenshtein {
public:
    std::size_t operator()(std::string_view a, std::string_view b) {
        a_ = a;
        b_ = b;
        table_.assign((a.size() + 1) * (b.size() + 1), kUnset);
        return solve(a.size(), b.size());
    }

private:
    static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);

    std::size_t solve(std::size_t i, std::size_t j) {
        std::size_t& slot = table_[i * (b_.size() + 1) + j];
        if (slot != kUnset) return slot;
        if (i == 0) return slot = j;
        if (j == 0) return slot = i;
        std::size_t best = solve(i - 1, j - 1) + (a_[i - 1] == b_[j - 1] ? 0 : 1);
        best = std::min(best, solve(i - 1, j) + 1);
        best = std::min(best, solve(i, j - 1) + 1);
        return slot = best;
    }

    std::string_view a_, b_;
    std::vector<std::size_t> table_;
};

/// Every string over `alphabet` with length in [0, max_len], shortest
/// first, lexicographic within a length.
inline std::vector<std::string> all_strings(std::string_view alphabet, std::size_t max_len) {
    std::vector<std::string> out{""};
    std::size_t level_begin = 0;
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (char c : alphabet) out.push_back(out[i] + c);
        level_begin = level_end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// kNN classification
// ---------------------------------------------------------------------------

struct KnnOracleResult {
    std::string label;
    double accuracy = 0.0;
};

/// Exhaustive distance sort over the whole dataset, then a straight tally
/// of the first k entries with the documented tie-breaks.
inline KnnOracleResult knn_oracle(const kineseq::FeatureVector& query,
                                  const kineseq::EvaluationDataset& ds, std::size_t k) {
    const auto q = kineseq::embed(query, ds.position_scale);
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        double sum = 0.0;
        const auto e = kineseq::embed(ds.samples[i].features, ds.position_scale);
        for (std::size_t d = 0; d < e.size(); ++d) sum += (q[d] - e[d]) * (q[d] - e[d]);
        order.emplace_back(std::sqrt(sum), i);
    }
    std::sort(order.begin(), order.end());

    std::map<std::string, std::pair<std::size_t, double>> tally;  // label -> (count, sum)
    for (std::size_t i = 0; i < k; ++i) {
        auto& t = tally[ds.samples[order[i].second].label];
        t.first += 1;
        t.second += order[i].first;
    }
    KnnOracleResult best;
    std::size_t best_count = 0;
    double best_sum = 0.0;
    for (const auto& [label, t] : tally) {
        if (t.first > best_count || (t.first == best_count && t.second < best_sum)) {
            best.label = label;
            best_count = t.first;
            best_sum = t.second;
        }
    }
    best.accuracy = static_cast<double>(best_count) / static_cast<double>(k);
    return best;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Angle at `vertex` between the rays to `a` and `b`, via atan2 instead of
/// the law of cosines.
inline double atan2_angle(const kineseq::Keypoint& vertex, const kineseq::Keypoint& a,
                          const kineseq::Keypoint& b) {
    double ang = std::atan2(a.y - vertex.y, a.x - vertex.x) -
                 std::atan2(b.y - vertex.y, b.x - vertex.x);
    ang = std::abs(ang);
    if (ang > std::numbers::pi) ang = 2.0 * std::numbers::pi - ang;
    return ang;
}

/// Acute angle between a line of direction `axis_angle` and the horizontal.
inline double acute_to_horizontal(double axis_angle) {
    return std::abs(std::remainder(axis_angle, std::numbers::pi));
}

struct FrameTransforms {
    static kineseq::RawFrame translated(kineseq::RawFrame f, double dx, double dy) {
        for (auto& kp : f.keypoints) {
            kp.x += dx;
            kp.y += dy;
        }
        return f;
    }
    static kineseq::RawFrame scaled(kineseq::RawFrame f, double s, double cx = 0.0,
                                    double cy = 0.0) {
        for (auto& kp : f.keypoints) {
            kp.x = cx + (kp.x - cx) * s;
            kp.y = cy + (kp.y - cy) * s;
        }
        return f;
    }
    static kineseq::RawFrame rotated(kineseq::RawFrame f, double theta, double cx, double cy) {
        const double c = std::cos(theta), s = std::sin(theta);
        for (auto& kp : f.keypoints) {
            double x = kp.x - cx, y = kp.y - cy;
            kp.x = cx + c * x - s * y;
            kp.y = cy + s * x + c * y;
        }
        return f;
    }
};

/// Random skeleton whose angle triples all stay clear of 0 and pi, so the
/// law of cosines remains well conditioned under similarity transforms
/// (degenerate frames are rejected upstream in the real pipeline anyway).
inline kineseq::RawFrame random_skeleton(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(100.0, 900.0);
    while (true) {
        kineseq::RawFrame frame;
        for (auto& kp : frame.keypoints) kp = {coord(rng), coord(rng), 1.0};

        bool ok = true;
        for (std::size_t i = 0; i < kineseq::kKeypointCount && ok; ++i)
            for (std::size_t j = i + 1; j < kineseq::kKeypointCount && ok; ++j)
                if (kineseq::euclidean_distance(frame.keypoints[i], frame.keypoints[j]) < 20.0)
                    ok = false;
        if (!ok) continue;

        for (const auto& spec : kineseq::default_angle_specs()) {
            double angle = atan2_angle(frame.at(spec.vertex), frame.at(spec.end_a),
                                       frame.at(spec.end_b));
            if (angle < 0.01 || angle > std::numbers::pi - 0.01) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        double mx = (frame.at(kineseq::KeypointName::LeftShoulder).x +
                     frame.at(kineseq::KeypointName::RightShoulder).x) /
                        2.0 -
                    (frame.at(kineseq::KeypointName::LeftHip).x +
                     frame.at(kineseq::KeypointName::RightHip).x) /
                        2.0;
        double my = (frame.at(kineseq::KeypointName::LeftShoulder).y +
                     frame.at(kineseq::KeypointName::RightShoulder).y) /
                        2.0 -
                    (frame.at(kineseq::KeypointName::LeftHip).y +
                     frame.at(kineseq::KeypointName::RightHip).y) /
                        2.0;
        if (std::hypot(mx, my) < 50.0) continue;
        return frame;
    }
}

/// Random feature vector with a consistent position flag.
inline kineseq::FeatureVector random_features(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 180.0);
    std::uniform_real_distribution<double> angular(0.0, std::numbers::pi / 2.0);
    kineseq::FeatureVector f;
    for (auto& a : f.angles_deg) a = angle(rng);
    f.angular_rad = angular(rng);
    f.position = kineseq::position_flag(f.angular_rad);
    return f;
}

inline std::string random_label_string(std::mt19937_64& rng, std::size_t max_len,
                                       std::string_view alphabet = "ABC") {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(rng)];
    return s;
}

}  // namespace oracles

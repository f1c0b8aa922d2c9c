#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "kineseq/error.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

inline constexpr std::size_t kAngleCount = 12;

/// Defines one named joint angle as the angle at `vertex` between the rays
/// towards `end_a` and `end_b`.
struct AngleSpec {
    std::string feature_name;
    KeypointName vertex;
    KeypointName end_a;
    KeypointName end_b;
};

using AngleSpecTable = std::array<AngleSpec, kAngleCount>;

/// The 12 angle features plus the torso-orientation metrics that describe
/// one static pose. Joint angles are degrees in [0,180]; the angular metric
/// is radians in [0, pi/2]; position is -1 (horizontal) or +1 (vertical).
struct FeatureVector {
    std::array<double, kAngleCount> angles_deg{};
    double angular_rad = 0.0;
    int position = 1;

    bool operator==(const FeatureVector&) const = default;
};

inline double euclidean_distance(double x1, double y1, double x2, double y2) {
    return std::hypot(x1 - x2, y1 - y2);
}

inline double euclidean_distance(const Keypoint& a, const Keypoint& b) {
    return euclidean_distance(a.x, a.y, b.x, b.y);
}

/// Angle (radians, in [0, pi]) opposite side d3 in a triangle with sides
/// d1, d2, d3, by the law of cosines. The cosine argument is clamped to
/// [-1, 1] so near-collinear keypoints cannot produce a domain error.
inline double triangle_angle(double d1, double d2, double d3) {
    if (d1 <= 0.0 || d2 <= 0.0)
        throw DegenerateTriangleError("triangle_angle: vertex coincides with an endpoint");
    double c = (d1 * d1 + d2 * d2 - d3 * d3) / (2.0 * d1 * d2);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Joint angle in degrees for one AngleSpec applied to a frame.
inline double joint_angle(const RawFrame& frame, const AngleSpec& spec) {
    const Keypoint& v = frame.at(spec.vertex);
    const Keypoint& a = frame.at(spec.end_a);
    const Keypoint& b = frame.at(spec.end_b);
    double d1 = euclidean_distance(v, a);
    double d2 = euclidean_distance(v, b);
    double d3 = euclidean_distance(a, b);
    return triangle_angle(d1, d2, d3) * 180.0 / std::numbers::pi;
}

/// Acute angle (radians, [0, pi/2]) between the torso axis — hip midpoint
/// towards shoulder midpoint — and the horizontal image axis. Below pi/4
/// the pose counts as horizontal, otherwise vertical.
inline double angular_metric(const RawFrame& frame) {
    const Keypoint& ls = frame.at(KeypointName::LeftShoulder);
    const Keypoint& rs = frame.at(KeypointName::RightShoulder);
    const Keypoint& lh = frame.at(KeypointName::LeftHip);
    const Keypoint& rh = frame.at(KeypointName::RightHip);
    double dx = (ls.x + rs.x) / 2.0 - (lh.x + rh.x) / 2.0;
    double dy = (ls.y + rs.y) / 2.0 - (lh.y + rh.y) / 2.0;
    if (dx == 0.0 && dy == 0.0)
        throw DegenerateTriangleError("angular_metric: hip midpoint equals shoulder midpoint");
    return std::atan2(std::abs(dy), std::abs(dx));
}

inline constexpr double kHorizontalThresholdRad = std::numbers::pi / 4.0;

/// Position flag from the angular metric: -1 below pi/4 (horizontal),
/// +1 at or above (vertical).
inline int position_flag(double angular_rad) {
    return angular_rad < kHorizontalThresholdRad ? -1 : +1;
}

/// Extracts the full feature vector of a frame. Throws
/// DegenerateTriangleError when any spec triple collapses; callers treat
/// such frames as NULL.
inline FeatureVector extract_features(const RawFrame& frame, const AngleSpecTable& specs) {
    FeatureVector f;
    for (std::size_t i = 0; i < kAngleCount; ++i) f.angles_deg[i] = joint_angle(frame, specs[i]);
    f.angular_rad = angular_metric(frame);
    f.position = position_flag(f.angular_rad);
    return f;
}

/// Default angle table matching the evaluation CSV column order.
/// Armpit: at the shoulder between elbow and same-side hip. Shoulder: at
/// the shoulder between elbow and opposite shoulder. Elbow: at the elbow
/// between shoulder and wrist. Hip: at the hip between same-side shoulder
/// and knee. Groin: at the hip between same-side knee and opposite hip.
/// Knee: at the knee between hip and ankle.
inline const AngleSpecTable& default_angle_specs() {
    using K = KeypointName;
    static const AngleSpecTable specs = {{
        {"Left Armpit", K::LeftShoulder, K::LeftElbow, K::LeftHip},
        {"Right Armpit", K::RightShoulder, K::RightElbow, K::RightHip},
        {"Left Shoulder", K::LeftShoulder, K::LeftElbow, K::RightShoulder},
        {"Right Shoulder", K::RightShoulder, K::RightElbow, K::LeftShoulder},
        {"Left Elbow", K::LeftElbow, K::LeftShoulder, K::LeftWrist},
        {"Right Elbow", K::RightElbow, K::RightShoulder, K::RightWrist},
        {"Left Hip", K::LeftHip, K::LeftShoulder, K::LeftKnee},
        {"Right Hip", K::RightHip, K::RightShoulder, K::RightKnee},
        {"Left Groin", K::LeftHip, K::LeftKnee, K::RightHip},
        {"Right Groin", K::RightHip, K::RightKnee, K::LeftHip},
        {"Left Knee", K::LeftKnee, K::LeftHip, K::LeftAnkle},
        {"Right Knee", K::RightKnee, K::RightHip, K::RightAnkle},
    }};
    return specs;
}

/// Loads an angle table from its JSON form: an array of exactly 12 records
/// {feature_name, vertex, end_a, end_b}.
inline AngleSpecTable angle_specs_from_json(const nlohmann::json& j) try {
    if (!j.is_array() || j.size() != kAngleCount)
        throw ParseError("angle spec file must be an array of exactly 12 records");
    AngleSpecTable specs;
    for (std::size_t i = 0; i < kAngleCount; ++i) {
        const auto& rec = j[i];
        AngleSpec s;
        s.feature_name = rec.at("feature_name").get<std::string>();
        s.vertex = parse_keypoint_name(rec.at("vertex").get<std::string>());
        s.end_a = parse_keypoint_name(rec.at("end_a").get<std::string>());
        s.end_b = parse_keypoint_name(rec.at("end_b").get<std::string>());
        if (s.vertex == s.end_a || s.vertex == s.end_b || s.end_a == s.end_b)
            throw ParseError("angle spec '" + s.feature_name + "': keypoints must be pairwise distinct");
        specs[i] = s;
    }
    return specs;
} catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("angle spec file: ") + e.what());
}

inline nlohmann::json angle_specs_to_json(const AngleSpecTable& specs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : specs) {
        j.push_back({{"feature_name", s.feature_name},
                     {"vertex", std::string(to_string(s.vertex))},
                     {"end_a", std::string(to_string(s.end_a))},
                     {"end_b", std::string(to_string(s.end_b))}});
    }
    return j;
}

}  // namespace kineseq

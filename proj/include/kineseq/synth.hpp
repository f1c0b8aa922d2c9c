#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kineseq/classifier.hpp"
#include "kineseq/error.hpp"
#include "kineseq/geometry.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

inline constexpr double kCanvasSize = 1000.0;

/// A fixed reference skeleton for one pose label.
struct CanonicalPose {
    std::string label;
    std::array<Keypoint, kKeypointCount> keypoints{};
};

/// One scripted stretch of frames; a disengaged label renders scrambled
/// NULL frames.
struct SynthSegment {
    std::optional<std::string> label;
    std::size_t count = 1;
};

struct SynthScript {
    std::vector<SynthSegment> segments;
    double jitter = 0.0;  ///< pixel standard deviation added to every coordinate
    std::uint64_t seed = 0;
};

/// Parses a script string such as "A6 N7 B6". The label N is reserved for
/// NULL segments.
inline SynthScript parse_script(std::string_view text, double jitter = 0.0,
                                std::uint64_t seed = 0) {
    SynthScript script;
    script.jitter = jitter;
    script.seed = seed;
    for (const auto& token : parse_tokens(text)) {
        SynthSegment seg;
        if (token.label != "N") seg.label = token.label;
        seg.count = token.run;
        script.segments.push_back(seg);
    }
    return script;
}

namespace detail {

/// Seeded Gaussian deviates via Box-Muller over mt19937_64, so streams are
/// reproducible independently of the standard library's distribution
/// implementations.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    double normal(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle) * sigma;
    }

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace detail

/// Three bundled poses whose feature vectors sit far apart: A lies flat
/// (horizontal torso), B is a bent sit-up position (still below the pi/4
/// gate), C stands upright in a T pose (vertical torso).
inline const std::vector<CanonicalPose>& default_canonical_poses() {
    using K = KeypointName;
    static const std::vector<CanonicalPose> poses = [] {
        std::vector<CanonicalPose> out(3);
        auto set = [](CanonicalPose& p, K name, double x, double y) {
            p.keypoints[static_cast<std::size_t>(name)] = {x, y, 1.0};
        };

        CanonicalPose& a = out[0];
        a.label = "A";
        set(a, K::Nose, 140, 780);
        set(a, K::LeftEye, 128, 768);
        set(a, K::RightEye, 128, 792);
        set(a, K::LeftEar, 142, 755);
        set(a, K::RightEar, 142, 805);
        set(a, K::LeftShoulder, 250, 760);
        set(a, K::RightShoulder, 250, 840);
        set(a, K::LeftElbow, 370, 745);
        set(a, K::RightElbow, 370, 855);
        set(a, K::LeftWrist, 490, 740);
        set(a, K::RightWrist, 490, 860);
        set(a, K::LeftHip, 600, 765);
        set(a, K::RightHip, 600, 835);
        set(a, K::LeftKnee, 745, 760);
        set(a, K::RightKnee, 745, 840);
        set(a, K::LeftAnkle, 890, 755);
        set(a, K::RightAnkle, 890, 845);

        CanonicalPose& b = out[1];
        b.label = "B";
        set(b, K::Nose, 240, 600);
        set(b, K::LeftEye, 228, 588);
        set(b, K::RightEye, 228, 612);
        set(b, K::LeftEar, 242, 575);
        set(b, K::RightEar, 242, 625);
        set(b, K::LeftShoulder, 330, 610);
        set(b, K::RightShoulder, 330, 670);
        set(b, K::LeftElbow, 430, 560);
        set(b, K::RightElbow, 430, 720);
        set(b, K::LeftWrist, 480, 640);
        set(b, K::RightWrist, 480, 800);
        set(b, K::LeftHip, 620, 730);
        set(b, K::RightHip, 620, 790);
        set(b, K::LeftKnee, 750, 680);
        set(b, K::RightKnee, 750, 840);
        set(b, K::LeftAnkle, 860, 760);
        set(b, K::RightAnkle, 860, 920);

        CanonicalPose& c = out[2];
        c.label = "C";
        set(c, K::Nose, 500, 150);
        set(c, K::LeftEye, 485, 135);
        set(c, K::RightEye, 515, 135);
        set(c, K::LeftEar, 465, 145);
        set(c, K::RightEar, 535, 145);
        set(c, K::LeftShoulder, 420, 300);
        set(c, K::RightShoulder, 580, 300);
        set(c, K::LeftElbow, 300, 300);
        set(c, K::RightElbow, 700, 300);
        set(c, K::LeftWrist, 180, 300);
        set(c, K::RightWrist, 820, 300);
        set(c, K::LeftHip, 455, 600);
        set(c, K::RightHip, 545, 600);
        set(c, K::LeftKnee, 450, 750);
        set(c, K::RightKnee, 550, 750);
        set(c, K::LeftAnkle, 445, 900);
        set(c, K::RightAnkle, 555, 900);
        return out;
    }();
    return poses;
}

inline const CanonicalPose& find_pose(const std::vector<CanonicalPose>& poses,
                                      const std::string& label) {
    for (const auto& p : poses)
        if (p.label == label) return p;
    throw UnknownLabelError("no canonical pose for label '" + label + "'");
}

/// Renders a script to raw frames at a fixed period. Labelled segments
/// emit the canonical pose with seeded Gaussian jitter on every
/// coordinate. NULL segments scramble all keypoints uniformly over the
/// canvas and pin the left elbow onto the left shoulder, which makes the
/// frame geometrically degenerate and therefore reliably NULL downstream
/// (uniform scrambling alone cannot guarantee a sub-gate kNN accuracy).
inline std::vector<RawFrame> render_stream(const SynthScript& script,
                                           const std::vector<CanonicalPose>& poses,
                                           std::int64_t period_ms = 150) {
    for (const auto& seg : script.segments) {
        if (seg.label) find_pose(poses, *seg.label);  // fail before emitting anything
    }
    detail::GaussianSource rng(script.seed);
    std::vector<RawFrame> frames;
    std::int64_t t = 0;
    for (const auto& seg : script.segments) {
        for (std::size_t i = 0; i < seg.count; ++i, t += period_ms) {
            RawFrame frame;
            frame.timestamp_ms = t;
            if (seg.label) {
                frame.keypoints = find_pose(poses, *seg.label).keypoints;
                for (auto& kp : frame.keypoints) {
                    kp.x += rng.normal(script.jitter);
                    kp.y += rng.normal(script.jitter);
                }
            } else {
                for (auto& kp : frame.keypoints) {
                    kp.x = rng.uniform() * kCanvasSize;
                    kp.y = rng.uniform() * kCanvasSize;
                    kp.score = 1.0;
                }
                frame.at(KeypointName::LeftElbow) = frame.at(KeypointName::LeftShoulder);
            }
            frames.push_back(frame);
        }
    }
    return frames;
}

/// Builds an evaluation dataset by rendering jittered copies of each
/// canonical pose and extracting their features.
inline std::vector<LabeledSample> build_dataset(const std::vector<CanonicalPose>& poses,
                                                std::size_t per_pose, double jitter,
                                                std::uint64_t seed,
                                                const AngleSpecTable& specs = default_angle_specs()) {
    detail::GaussianSource rng(seed);
    std::vector<LabeledSample> samples;
    samples.reserve(poses.size() * per_pose);
    for (const auto& pose : poses) {
        for (std::size_t i = 0; i < per_pose; ++i) {
            RawFrame frame;
            frame.keypoints = pose.keypoints;
            for (auto& kp : frame.keypoints) {
                kp.x += rng.normal(jitter);
                kp.y += rng.normal(jitter);
            }
            samples.push_back({extract_features(frame, specs), pose.label});
        }
    }
    return samples;
}

/// build_dataset rendered straight to the evaluation CSV format.
inline std::string build_dataset_csv(const std::vector<CanonicalPose>& poses,
                                     std::size_t per_pose, double jitter, std::uint64_t seed,
                                     double position_scale = 820.0,
                                     const AngleSpecTable& specs = default_angle_specs()) {
    std::ostringstream out;
    write_dataset_csv(out, build_dataset(poses, per_pose, jitter, seed, specs), position_scale,
                      specs);
    return out.str();
}

/// Canonical pose file: { "poses": [ { "label": "A", "kp": [{name,x,y} x17] } ] }
inline std::vector<CanonicalPose> poses_from_json(const nlohmann::json& j) try {
    if (!j.contains("poses") || !j.at("poses").is_array())
        throw ParseError("pose file: missing 'poses' array");
    std::vector<CanonicalPose> poses;
    for (const auto& p : j.at("poses")) {
        CanonicalPose pose;
        pose.label = p.at("label").get<std::string>();
        const auto& kp = p.at("kp");
        if (!kp.is_array() || kp.size() != kKeypointCount)
            throw ParseError("pose '" + pose.label + "': expected exactly 17 keypoints");
        std::array<bool, kKeypointCount> seen{};
        for (const auto& rec : kp) {
            KeypointName name = parse_keypoint_name(rec.at("name").get<std::string>());
            auto idx = static_cast<std::size_t>(name);
            if (seen[idx])
                throw ParseError("pose '" + pose.label + "': duplicate keypoint '" +
                                 std::string(to_string(name)) + "'");
            seen[idx] = true;
            pose.keypoints[idx] = {rec.at("x").get<double>(), rec.at("y").get<double>(), 1.0};
        }
        poses.push_back(std::move(pose));
    }
    return poses;
} catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pose file: ") + e.what());
}

inline nlohmann::json poses_to_json(const std::vector<CanonicalPose>& poses) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& pose : poses) {
        nlohmann::json kp = nlohmann::json::array();
        for (std::size_t i = 0; i < kKeypointCount; ++i) {
            kp.push_back({{"name", std::string(kKeypointNames[i])},
                          {"x", pose.keypoints[i].x},
                          {"y", pose.keypoints[i].y}});
        }
        arr.push_back({{"label", pose.label}, {"kp", kp}});
    }
    return {{"poses", arr}};
}

}  // namespace kineseq

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "kineseq/classifier.hpp"
#include "kineseq/error.hpp"
#include "kineseq/geometry.hpp"
#include "kineseq/matcher.hpp"
#include "kineseq/scorer.hpp"
#include "kineseq/sequencer.hpp"
#include "kineseq/synth.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

/// Every tunable of the engine, with the published defaults.
struct EngineConfig {
    std::int64_t frame_period_ms = 150;
    std::size_t buffer_capacity = 100;
    double null_threshold = 0.60;
    std::size_t separator_len = 7;
    std::size_t k = 5;
    std::size_t edit_limit = 10;
    std::size_t segment_len = 10;
    double position_scale = 820.0;
    double min_keypoint_score = 0.0;

    void validate() const {
        if (frame_period_ms <= 0) throw ConfigError("frame_period_ms must be positive");
        if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
        if (!(null_threshold >= 0.0 && null_threshold <= 1.0))
            throw ConfigError("null_threshold must lie in [0,1]");
        if (separator_len == 0) throw ConfigError("separator_len must be positive");
        if (k == 0) throw ConfigError("k must be positive");
        if (segment_len == 0) throw ConfigError("segment_len must be positive");
        if (!(position_scale > 0.0)) throw ConfigError("position_scale must be positive");
        if (!(min_keypoint_score >= 0.0 && min_keypoint_score <= 1.0))
            throw ConfigError("min_keypoint_score must lie in [0,1]");
    }
};

namespace detail {

template <typename T>
void read_config_key(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_env_key(const char* name, T& out) {
    const char* raw = std::getenv(name);
    if (!raw) return;
    std::string text(raw);
    try {
        if constexpr (std::is_floating_point_v<T>) {
            std::size_t used = 0;
            out = static_cast<T>(std::stod(text, &used));
            if (used != text.size()) throw std::invalid_argument(text);
        } else {
            std::size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used != text.size() || v < 0) throw std::invalid_argument(text);
            out = static_cast<T>(v);
        }
    } catch (const std::exception&) {
        throw ConfigError(std::string("environment variable ") + name + " is not a valid value: '" +
                          text + "'");
    }
}

}  // namespace detail

/// Reads a (possibly partial) config JSON document over the defaults.
inline EngineConfig config_from_json(const nlohmann::json& j, EngineConfig base = {}) try {
    detail::read_config_key(j, "frame_period_ms", base.frame_period_ms);
    detail::read_config_key(j, "buffer_capacity", base.buffer_capacity);
    detail::read_config_key(j, "null_threshold", base.null_threshold);
    detail::read_config_key(j, "separator_len", base.separator_len);
    detail::read_config_key(j, "k", base.k);
    detail::read_config_key(j, "edit_limit", base.edit_limit);
    detail::read_config_key(j, "segment_len", base.segment_len);
    detail::read_config_key(j, "position_scale", base.position_scale);
    detail::read_config_key(j, "min_keypoint_score", base.min_keypoint_score);
    return base;
} catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
}

/// Applies KINESEQ_* environment overrides. CLI flags are applied on top
/// of the result, so the precedence is flags > environment > file.
inline EngineConfig apply_env_overrides(EngineConfig base) {
    detail::read_env_key("KINESEQ_FRAME_PERIOD_MS", base.frame_period_ms);
    detail::read_env_key("KINESEQ_BUFFER_CAPACITY", base.buffer_capacity);
    detail::read_env_key("KINESEQ_NULL_THRESHOLD", base.null_threshold);
    detail::read_env_key("KINESEQ_SEPARATOR_LEN", base.separator_len);
    detail::read_env_key("KINESEQ_K", base.k);
    detail::read_env_key("KINESEQ_EDIT_LIMIT", base.edit_limit);
    detail::read_env_key("KINESEQ_SEGMENT_LEN", base.segment_len);
    detail::read_env_key("KINESEQ_POSITION_SCALE", base.position_scale);
    detail::read_env_key("KINESEQ_MIN_KEYPOINT_SCORE", base.min_keypoint_score);
    return base;
}

inline nlohmann::json config_to_json(const EngineConfig& c) {
    return {{"frame_period_ms", c.frame_period_ms},
            {"buffer_capacity", c.buffer_capacity},
            {"null_threshold", c.null_threshold},
            {"separator_len", c.separator_len},
            {"k", c.k},
            {"edit_limit", c.edit_limit},
            {"segment_len", c.segment_len},
            {"position_scale", c.position_scale},
            {"min_keypoint_score", c.min_keypoint_score}};
}

/// Parses one stream object: { "t": <ms>, "kp": [ {name,x,y,s} x17 ] }.
inline RawFrame frame_from_json(const nlohmann::json& j) {
    RawFrame frame;
    try {
        frame.timestamp_ms = j.at("t").get<std::int64_t>();
        const auto& kp = j.at("kp");
        if (!kp.is_array() || kp.size() != kKeypointCount)
            throw StreamFormatError("frame must carry exactly 17 keypoints");
        std::array<bool, kKeypointCount> seen{};
        for (const auto& rec : kp) {
            KeypointName name = parse_keypoint_name(rec.at("name").get<std::string>());
            auto idx = static_cast<std::size_t>(name);
            if (seen[idx])
                throw StreamFormatError("duplicate keypoint '" + std::string(to_string(name)) +
                                        "'");
            seen[idx] = true;
            Keypoint& point = frame.keypoints[idx];
            point.x = rec.at("x").get<double>();
            point.y = rec.at("y").get<double>();
            point.score = rec.value("s", 1.0);
            if (!std::isfinite(point.x) || !std::isfinite(point.y))
                throw StreamFormatError("keypoint coordinates must be finite");
            if (!(point.score >= 0.0 && point.score <= 1.0))
                throw StreamFormatError("keypoint score must lie in [0,1]");
        }
    } catch (const nlohmann::json::exception& e) {
        throw StreamFormatError(std::string("malformed frame object: ") + e.what());
    }
    return frame;
}

inline nlohmann::json frame_to_json(const RawFrame& frame) {
    nlohmann::json kp = nlohmann::json::array();
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
        kp.push_back({{"name", std::string(kKeypointNames[i])},
                      {"x", frame.keypoints[i].x},
                      {"y", frame.keypoints[i].y},
                      {"s", frame.keypoints[i].score}});
    }
    return {{"t", frame.timestamp_ms}, {"kp", kp}};
}

/// Reads a whole keypoint stream: one JSON object per line, or a single
/// JSON array of frame objects.
inline std::vector<RawFrame> parse_stream(std::istream& in) {
    std::vector<RawFrame> frames;
    char first = 0;
    while (in.get(first) && std::isspace(static_cast<unsigned char>(first))) {
    }
    if (!in) return frames;
    in.putback(first);
    if (first == '[') {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw StreamFormatError(std::string("malformed stream array: ") + e.what());
        }
        for (const auto& obj : doc) frames.push_back(frame_from_json(obj));
        return frames;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw StreamFormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        frames.push_back(frame_from_json(obj));
    }
    return frames;
}

/// One recognised exercise repetition with its scoring.
struct IdentifiedMovement {
    std::string movement;
    std::vector<PoseToken> variant;
    std::size_t distance = 0;
    Span span;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
    double total_accuracy = 0.0;
    double weighted_accuracy = 0.0;
    std::vector<std::size_t> edit_positions;
    WorstSegment worst_segment;
};

/// A closed candidate sequence no dictionary entry came near enough to.
struct UnmatchedSpan {
    Span span;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
};

struct AnalysisReport {
    std::vector<IdentifiedMovement> identified;
    std::vector<UnmatchedSpan> unmatched;
};

using ReportEvent = std::variant<IdentifiedMovement, UnmatchedSpan>;

inline nlohmann::json span_to_json(const Span& s) {
    return {{"begin", s.begin}, {"end", s.end}};
}

inline nlohmann::json identified_to_json(const IdentifiedMovement& m) {
    return {{"movement", m.movement},
            {"variant", format_tokens(m.variant)},
            {"distance", m.distance},
            {"span", span_to_json(m.span)},
            {"t_start_ms", m.t_start_ms},
            {"t_end_ms", m.t_end_ms},
            {"total_accuracy", m.total_accuracy},
            {"weighted_accuracy", m.weighted_accuracy},
            {"edit_positions", m.edit_positions},
            {"worst_segment",
             {{"start", m.worst_segment.start},
              {"end", m.worst_segment.end},
              {"mean_accuracy", m.worst_segment.mean_accuracy}}}};
}

inline nlohmann::json unmatched_to_json(const UnmatchedSpan& u) {
    return {{"span", span_to_json(u.span)},
            {"t_start_ms", u.t_start_ms},
            {"t_end_ms", u.t_end_ms}};
}

inline nlohmann::json report_to_json(const AnalysisReport& report) {
    nlohmann::json identified = nlohmann::json::array();
    for (const auto& m : report.identified) identified.push_back(identified_to_json(m));
    nlohmann::json unmatched = nlohmann::json::array();
    for (const auto& u : report.unmatched) unmatched.push_back(unmatched_to_json(u));
    return {{"identified", identified}, {"unmatched", unmatched}};
}

/// End-to-end streaming engine: classify -> buffer -> segment -> match ->
/// score, one frame period at a time.
///
/// Incoming frames are snapped onto a fixed 150 ms grid: several frames in
/// one period collapse to the latest one, and skipped periods are filled
/// with NULL frames. A candidate sequence is matched once it is closed by
/// a full NULL separator or by buffer wrap, and its span is consumed so it
/// is never examined again.
class Engine {
public:
    Engine(EngineConfig config, EvaluationDataset dataset, MovementDictionary dictionary,
           AngleSpecTable specs = default_angle_specs())
        : config_(config),
          dataset_(std::move(dataset)),
          dictionary_(std::move(dictionary)),
          specs_(specs),
          buffer_(config.buffer_capacity) {
        config_.validate();
        dataset_.k = config_.k;
        dictionary_.edit_limit = config_.edit_limit;
    }

    /// Classification of a single raw frame, NULL gate included.
    ClassifiedFrame classify_frame(const RawFrame& raw, std::int64_t timestamp_ms) const {
        for (const auto& kp : raw.keypoints) {
            if (kp.score < config_.min_keypoint_score)
                return gate_null(std::nullopt, 0.0, config_.null_threshold, timestamp_ms);
        }
        FeatureVector features;
        try {
            features = extract_features(raw, specs_);
        } catch (const DegenerateTriangleError&) {
            return gate_null(std::nullopt, 0.0, config_.null_threshold, timestamp_ms);
        }
        Classification c = classify(features, dataset_);
        return gate_null(c.label, c.accuracy, config_.null_threshold, timestamp_ms);
    }

    /// Feeds one raw frame; returns whatever the engine identified while
    /// handling it.
    std::vector<ReportEvent> push(const RawFrame& raw) {
        if (last_input_ms_ && raw.timestamp_ms <= *last_input_ms_)
            throw StreamFormatError("stream timestamps must strictly increase (" +
                                    std::to_string(raw.timestamp_ms) + " after " +
                                    std::to_string(*last_input_ms_) + ")");
        last_input_ms_ = raw.timestamp_ms;

        std::vector<ReportEvent> events;
        if (!pending_) {
            stream_start_ms_ = raw.timestamp_ms;
            pending_ = raw;
            pending_slot_ = 0;
            return events;
        }
        const std::int64_t slot =
            (raw.timestamp_ms - stream_start_ms_) / config_.frame_period_ms;
        if (slot == pending_slot_) {
            pending_ = raw;  // downsample: latest frame in the period wins
            return events;
        }
        commit_pending(events);
        for (std::int64_t missed = pending_slot_ + 1; missed < slot; ++missed)
            commit_frame(gate_null(std::nullopt, 0.0, config_.null_threshold, slot_time(missed)),
                         events);
        pending_ = raw;
        pending_slot_ = slot;
        return events;
    }

    /// Ends the stream: the final pending frame is committed and every
    /// remaining candidate is treated as closed.
    std::vector<ReportEvent> finish() {
        std::vector<ReportEvent> events;
        if (pending_) commit_pending(events);
        scan(events, /*end_of_stream=*/true);
        return events;
    }

    const AnalysisReport& report() const { return report_; }
    const FrameBuffer& buffer() const { return buffer_; }
    const EngineConfig& config() const { return config_; }

private:
    std::int64_t slot_time(std::int64_t slot) const {
        return stream_start_ms_ + slot * config_.frame_period_ms;
    }

    void commit_pending(std::vector<ReportEvent>& events) {
        commit_frame(classify_frame(*pending_, slot_time(pending_slot_)), events);
        pending_.reset();
    }

    void commit_frame(ClassifiedFrame frame, std::vector<ReportEvent>& events) {
        buffer_.push(std::move(frame));
        scan(events, /*end_of_stream=*/false);
    }

    void scan(std::vector<ReportEvent>& events, bool end_of_stream) {
        for (const auto& seq : buffer_.segment(config_.separator_len)) {
            const bool separator_closed = seq.followed_by_separator || end_of_stream;
            const bool wrap_closed =
                buffer_.full() && seq.span.begin == buffer_.first_index();
            if (!separator_closed && !wrap_closed) continue;

            auto match = match_movement(seq, dictionary_);
            if (match) {
                events.push_back(score_match(seq, *match));
                report_.identified.push_back(std::get<IdentifiedMovement>(events.back()));
                buffer_.consume(seq.span);
            } else if (separator_closed) {
                UnmatchedSpan u{seq.span, buffer_.at(seq.span.begin).timestamp_ms,
                                buffer_.at(seq.span.end - 1).timestamp_ms};
                events.push_back(u);
                report_.unmatched.push_back(u);
                buffer_.consume(seq.span);
            }
            // A wrap-closed candidate with no match stays in place: it will
            // be retried as it erodes and reported once a separator or the
            // end of the stream closes it.
        }
    }

    IdentifiedMovement score_match(const PoseSequence& seq, const MatchResult& match) const {
        const MovementEntry* entry = nullptr;
        for (const auto& e : dictionary_.entries)
            if (e.name == match.movement) entry = &e;

        const std::vector<std::string> produced = expand(seq.tokens);
        const std::vector<std::string> ideal = expand(match.variant);
        const AccuracyReport scores = score(produced, ideal, seq.frame_accuracies,
                                            entry->adjacency, config_.segment_len);

        IdentifiedMovement m;
        m.movement = match.movement;
        m.variant = match.variant;
        m.distance = match.distance;
        m.span = match.span;
        m.t_start_ms = buffer_.at(seq.span.begin).timestamp_ms;
        m.t_end_ms = buffer_.at(seq.span.end - 1).timestamp_ms;
        m.total_accuracy = scores.total_accuracy;
        m.weighted_accuracy = scores.weighted_accuracy;
        m.edit_positions = scores.edit_positions;
        m.worst_segment = scores.worst_segment;
        return m;
    }

    EngineConfig config_;
    EvaluationDataset dataset_;
    MovementDictionary dictionary_;
    AngleSpecTable specs_;
    FrameBuffer buffer_;
    AnalysisReport report_;

    std::optional<RawFrame> pending_;
    std::int64_t pending_slot_ = 0;
    std::int64_t stream_start_ms_ = 0;
    std::optional<std::int64_t> last_input_ms_;
};

/// Batch analysis of a full stream.
inline AnalysisReport run_stream(const std::vector<RawFrame>& frames,
                                 const EvaluationDataset& dataset,
                                 const MovementDictionary& dictionary,
                                 const EngineConfig& config,
                                 const AngleSpecTable& specs = default_angle_specs()) {
    Engine engine(config, dataset, dictionary, specs);
    for (const auto& frame : frames) engine.push(frame);
    engine.finish();
    return engine.report();
}

struct BenchResult {
    double median_ms = 0.0;
    double max_ms = 0.0;
    std::size_t iterations = 0;
    std::size_t variant_count = 0;
    std::size_t dataset_size = 0;
    std::size_t frame_period_ms = 150;

    bool within_budget() const { return median_ms < static_cast<double>(frame_period_ms); }
};

/// Builds a dictionary of synthetic movements over the given labels until
/// it holds at least `target_variants` distinct variants.
inline MovementDictionary make_benchmark_dictionary(std::size_t target_variants,
                                                    std::uint64_t seed,
                                                    std::size_t edit_limit = kDefaultEditLimit) {
    const std::vector<std::string> labels = {"A", "B", "C"};
    const std::vector<double> scales = {0.55, 0.65, 0.75, 0.85, 0.95,
                                        1.05, 1.15, 1.25, 1.35, 1.45};
    std::mt19937_64 rng(seed);
    MovementDictionary dict;
    dict.edit_limit = edit_limit;
    std::size_t total = 0;
    while (total < target_variants) {
        MovementEntry entry;
        entry.name = "M" + std::to_string(dict.entries.size());
        std::size_t token_count = 3 + rng() % 6;
        std::size_t previous = labels.size();
        for (std::size_t i = 0; i < token_count; ++i) {
            std::size_t pick = rng() % (labels.size() - (i > 0 ? 1 : 0));
            if (i > 0 && pick >= previous) ++pick;  // adjacent tokens must differ
            previous = pick;
            entry.ideal.push_back({labels[pick], 3 + rng() % 10});
        }
        entry.variants = generate_variants(entry.ideal, scales);
        entry.adjacency = make_adjacency(entry.ideal);
        total += entry.variants.size();
        dict.entries.push_back(std::move(entry));
    }
    return dict;
}

/// Benchmark mode: measures one full frame period of work — feature
/// extraction, kNN classification, buffer push, segmentation, and a
/// brute-force match of every candidate (plus scoring of the best hit) —
/// on a full 100-frame buffer against the dictionary. Candidates are
/// deliberately matched every iteration, which is more work than the
/// engine's closure rule actually performs.
inline BenchResult run_benchmark(std::size_t iterations = 100, std::size_t target_variants = 400,
                                 std::uint64_t seed = 1234) {
    EngineConfig config;
    const auto& poses = default_canonical_poses();
    EvaluationDataset dataset;
    dataset.samples = build_dataset(poses, 20, 2.0, seed);
    dataset.k = config.k;
    MovementDictionary dict = make_benchmark_dictionary(target_variants, seed);

    SynthScript script = parse_script("A6 B6 C10 B6 A6 N8 A5 B5 C9 B5 A5 N8 A8 B8 C14 B8 A8",
                                      /*jitter=*/2.0, seed);
    const std::vector<RawFrame> frames = render_stream(script, poses, config.frame_period_ms);

    FrameBuffer buffer(config.buffer_capacity);
    Engine engine(config, dataset, dict);
    std::int64_t t = 0;
    std::size_t next = 0;
    auto feed_one = [&]() {
        const RawFrame& raw = frames[next];
        next = (next + 1) % frames.size();
        RawFrame shifted = raw;
        shifted.timestamp_ms = t;
        t += config.frame_period_ms;
        buffer.push(engine.classify_frame(shifted, shifted.timestamp_ms));
    };
    while (!buffer.full()) feed_one();

    std::vector<double> samples;
    samples.reserve(iterations);
    for (std::size_t i = 0; i < iterations; ++i) {
        const auto start = std::chrono::steady_clock::now();
        feed_one();
        for (const auto& seq : buffer.segment(config.separator_len)) {
            auto match = match_movement(seq, dict);
            if (match) {
                const MovementEntry* entry = nullptr;
                for (const auto& e : dict.entries)
                    if (e.name == match->movement) entry = &e;
                score(expand(seq.tokens), expand(match->variant), seq.frame_accuracies,
                      entry->adjacency, config.segment_len);
            }
        }
        const auto stop = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }

    BenchResult result;
    result.iterations = iterations;
    result.dataset_size = dataset.samples.size();
    result.frame_period_ms = static_cast<std::size_t>(config.frame_period_ms);
    for (const auto& entry : dict.entries) result.variant_count += entry.variants.size();
    std::sort(samples.begin(), samples.end());
    result.median_ms = samples[samples.size() / 2];
    result.max_ms = samples.back();
    return result;
}

}  // namespace kineseq

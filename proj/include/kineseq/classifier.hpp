#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "kineseq/error.hpp"
#include "kineseq/geometry.hpp"
#include "kineseq/types.hpp"

namespace kineseq {

struct LabeledSample {
    FeatureVector features;
    std::string label;
};

/// The labelled reference poses a kNN query runs against. Immutable after
/// load; safe to share across threads.
struct EvaluationDataset {
    std::vector<LabeledSample> samples;
    double position_scale = 820.0;
    std::size_t k = 5;
};

inline constexpr std::size_t kEmbedDim = kAngleCount + 2;

/// Maps a feature vector onto the 14-dimensional classification space:
/// the 12 joint angles in degrees, the angular metric in radians, and the
/// position flag stretched by `scale` so horizontal and vertical poses are
/// hard-partitioned.
inline std::array<double, kEmbedDim> embed(const FeatureVector& v, double scale) {
    std::array<double, kEmbedDim> e{};
    for (std::size_t i = 0; i < kAngleCount; ++i) e[i] = v.angles_deg[i];
    e[kAngleCount] = v.angular_rad;
    e[kAngleCount + 1] = static_cast<double>(v.position) * scale;
    return e;
}

inline double embedded_distance(const std::array<double, kEmbedDim>& a,
                                const std::array<double, kEmbedDim>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kEmbedDim; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

struct Classification {
    std::string label;
    double accuracy = 0.0;  ///< same-label neighbours / k
};

/// kNN classification in the embedded space.
///
/// The k nearest samples by Euclidean distance vote; the most frequent
/// label wins and accuracy is its share of the k votes. Ties are broken
/// deterministically: label frequency, then the smaller summed distance of
/// the tied label's neighbours, then the lexicographically smallest label.
/// Equidistant neighbours at the k-boundary are taken in dataset order.
inline Classification classify(const FeatureVector& v, const EvaluationDataset& ds) {
    const std::size_t n = ds.samples.size();
    if (n == 0) throw EmptyDatasetError("classify: dataset is empty");
    if (ds.k == 0 || ds.k > n)
        throw EmptyDatasetError("classify: k=" + std::to_string(ds.k) +
                                " outside [1, " + std::to_string(n) + "]");

    const auto q = embed(v, ds.position_scale);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i)
        dist[i] = embedded_distance(q, embed(ds.samples[i].features, ds.position_scale));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ds.k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                      });

    struct Tally {
        std::size_t count = 0;
        double distance_sum = 0.0;
    };
    std::map<std::string, Tally> votes;
    for (std::size_t i = 0; i < ds.k; ++i) {
        Tally& t = votes[ds.samples[order[i]].label];
        ++t.count;
        t.distance_sum += dist[order[i]];
    }

    auto best = votes.begin();
    for (auto it = std::next(votes.begin()); it != votes.end(); ++it) {
        if (it->second.count > best->second.count ||
            (it->second.count == best->second.count &&
             it->second.distance_sum < best->second.distance_sum)) {
            best = it;  // lexicographic fallback is the map order itself
        }
    }
    return {best->first, static_cast<double>(best->second.count) / static_cast<double>(ds.k)};
}

/// Applies the NULL gate: the label survives only when its accuracy
/// reaches the threshold (boundary inclusive). Idempotent.
inline ClassifiedFrame gate_null(std::optional<std::string> label, double accuracy,
                                 double threshold, std::int64_t timestamp_ms = 0) {
    ClassifiedFrame f;
    f.timestamp_ms = timestamp_ms;
    if (label.has_value() && accuracy >= threshold) {
        f.label = std::move(label);
        f.accuracy = accuracy;
    }
    return f;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline double parse_double(const std::string& field, std::size_t row) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("row " + std::to_string(row) + ": not a number: '" + field + "'");
    return value;
}

inline std::string format_double(double value) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

}  // namespace detail

/// Column names of the evaluation CSV: the 12 feature names of the active
/// angle table, then Angular, Position, action.
inline std::vector<std::string> dataset_columns(const AngleSpecTable& specs) {
    std::vector<std::string> cols;
    cols.reserve(kEmbedDim + 1);
    for (const auto& s : specs) cols.push_back(s.feature_name);
    cols.push_back("Angular");
    cols.push_back("Position");
    cols.push_back("action");
    return cols;
}

/// Parses an evaluation CSV. Every row becomes a labelled sample; the
/// Position column is normalised to {-1,+1} by sign and its magnitude is
/// recorded as the dataset's position scale, which must be consistent
/// across rows.
inline EvaluationDataset load_dataset(std::istream& in,
                                      const AngleSpecTable& specs = default_angle_specs()) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto expected = dataset_columns(specs);
    const auto header = detail::split_csv_line(line);
    if (header.size() != expected.size())
        throw ParseError("dataset CSV header must have exactly " +
                         std::to_string(expected.size()) + " columns, got " +
                         std::to_string(header.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (header[i] != expected[i])
            throw ParseError("dataset CSV column " + std::to_string(i + 1) + " must be '" +
                             expected[i] + "', got '" + header[i] + "'");
    }

    EvaluationDataset ds;
    std::optional<double> scale;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != expected.size())
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(expected.size()) + " fields, got " +
                             std::to_string(fields.size()));

        LabeledSample sample;
        for (std::size_t i = 0; i < kAngleCount; ++i) {
            double angle = detail::parse_double(fields[i], row);
            if (!(angle >= 0.0 && angle <= 180.0))
                throw ParseError("row " + std::to_string(row) + ": angle '" + expected[i] +
                                 "' out of [0,180]: " + fields[i]);
            sample.features.angles_deg[i] = angle;
        }
        double angular = detail::parse_double(fields[kAngleCount], row);
        if (!(angular >= 0.0 && angular <= std::numbers::pi / 2.0))
            throw ParseError("row " + std::to_string(row) + ": Angular out of [0, pi/2]: " +
                             fields[kAngleCount]);
        sample.features.angular_rad = angular;

        double position = detail::parse_double(fields[kAngleCount + 1], row);
        if (position == 0.0)
            throw ParseError("row " + std::to_string(row) + ": Position must be nonzero");
        sample.features.position = position < 0.0 ? -1 : +1;
        double magnitude = std::abs(position);
        if (!scale) {
            scale = magnitude;
        } else if (std::abs(*scale - magnitude) > 1e-9) {
            throw InconsistentScaleError("row " + std::to_string(row) +
                                         ": Position magnitude " + fields[kAngleCount + 1] +
                                         " differs from earlier rows");
        }

        sample.label = fields[kAngleCount + 2];
        if (sample.label.empty())
            throw ParseError("row " + std::to_string(row) + ": empty action label");
        ds.samples.push_back(std::move(sample));
    }
    if (ds.samples.empty()) throw ParseError("dataset CSV has no data rows");
    std::set<std::string> labels;
    for (const auto& s : ds.samples) labels.insert(s.label);
    if (labels.size() < 2) throw ParseError("dataset CSV must carry at least 2 distinct labels");
    ds.position_scale = *scale;
    return ds;
}

/// Writes samples back out in the evaluation CSV format (the inverse of
/// load_dataset, with shortest-round-trip number formatting).
inline void write_dataset_csv(std::ostream& out, const std::vector<LabeledSample>& samples,
                              double position_scale,
                              const AngleSpecTable& specs = default_angle_specs()) {
    const auto cols = dataset_columns(specs);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out << ',';
        out << cols[i];
    }
    out << '\n';
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < kAngleCount; ++i)
            out << detail::format_double(s.features.angles_deg[i]) << ',';
        out << detail::format_double(s.features.angular_rad) << ','
            << detail::format_double(s.features.position * position_scale) << ',' << s.label
            << '\n';
    }
}

}  // namespace kineseq

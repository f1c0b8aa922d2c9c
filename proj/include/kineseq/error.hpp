#pragma once

#include <stdexcept>
#include <string>

namespace kineseq {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two of the three keypoints defining an angle coincide, so the angle
/// is undefined. Frames with degenerate geometry are rejected upstream
/// and become NULL frames.
class DegenerateTriangleError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV rows, dictionary files, token strings, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// The Position column of an evaluation CSV carries different magnitudes
/// across rows.
class InconsistentScaleError : public Error {
public:
    using Error::Error;
};

/// Invalid engine configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed keypoint stream input.
class StreamFormatError : public Error {
public:
    using Error::Error;
};

/// A frame was pushed with a timestamp earlier than the newest buffered one.
class OutOfOrderFrameError : public Error {
public:
    using Error::Error;
};

/// A span does not lie within the current buffer window.
class SpanOutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Classification was requested against an empty or too-small dataset.
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// A synth script references a pose label with no canonical pose.
class UnknownLabelError : public Error {
public:
    using Error::Error;
};

}  // namespace kineseq

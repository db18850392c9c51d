#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tumorsynth {

/// Base of every engine error. `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& m) : Error("argument", m) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error("format", m) {}
};
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& m) : Error("unsupported", m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};
struct BoundsError : Error {
    explicit BoundsError(const std::string& m) : Error("bounds", m) {}
};

class PlacementExhausted : public Error {
public:
    explicit PlacementExhausted(int attempts)
        : Error("placement-exhausted",
                "no collision-free location found after " + std::to_string(attempts) + " attempts"),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class CollisionError : public Error {
public:
    explicit CollisionError(std::size_t tumor_index)
        : Error("collision", "pinned center of tumor " + std::to_string(tumor_index) +
                                 " collides with a vessel or an earlier tumor"),
          tumor_index_(tumor_index) {}
    std::size_t tumor_index() const noexcept { return tumor_index_; }

private:
    std::size_t tumor_index_;
};

struct SynthesisFailed : Error {
    explicit SynthesisFailed(const std::string& m) : Error("synthesis-failed", m) {}
};

struct UndefinedMetrics : Error {
    explicit UndefinedMetrics(const std::string& m) : Error("undefined-metrics", m) {}
};

class EvaluationError : public Error {
public:
    EvaluationError(const std::string& m, std::vector<std::string> missing)
        : Error("evaluation", m), missing_(std::move(missing)) {}
    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

}  // namespace tumorsynth

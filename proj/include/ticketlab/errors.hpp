#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ticketlab {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad shapes, unknown names, out-of-range hyperparameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// API misuse, e.g. backward without a cached forward pass.
class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `offset` is a byte offset for binary formats and a
/// line number for text formats.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class SchemaVersionError : public Error {
public:
    SchemaVersionError(int found, int expected)
        : Error("schema version mismatch: found " + std::to_string(found) + ", expected " +
                std::to_string(expected)),
          found_(found),
          expected_(expected) {}

    int found() const noexcept { return found_; }
    int expected() const noexcept { return expected_; }

private:
    int found_;
    int expected_;
};

/// Non-finite loss encountered while training.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(int epoch, std::size_t batch)
        : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    int epoch_;
    std::size_t batch_;
};

}  // namespace ticketlab

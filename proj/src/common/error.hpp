#pragma once

#include <stdexcept>
#include <string>

namespace hypercqa {

enum class ErrorKind {
    // fact store
    ArityMismatch,
    EmptyInput,
    UnknownEntity,
    UnknownRelation,
    PositionOutOfRange,
    // query algebra
    UnknownQueryType,
    ParseError,
    InvalidQuery,
    // sampling
    SamplingFailed,
    SamplingExhausted,
    // tensors
    ShapeMismatch,
    IndexOutOfRange,
    NotScalar,
    // model
    MissingChildEmbedding,
    TooFewChildren,
    EmptyDataset,
    // baseline
    EmptySequence,
    PositionClash,
    NegationUnsupported,
    // evaluation
    EmptyHardSet,
    // io / config
    IoError,
    ConfigError,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace hypercqa

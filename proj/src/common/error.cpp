#include "common/error.hpp"

namespace hypercqa {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::UnknownEntity: return "UnknownEntity";
        case ErrorKind::UnknownRelation: return "UnknownRelation";
        case ErrorKind::PositionOutOfRange: return "PositionOutOfRange";
        case ErrorKind::UnknownQueryType: return "UnknownQueryType";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::InvalidQuery: return "InvalidQuery";
        case ErrorKind::SamplingFailed: return "SamplingFailed";
        case ErrorKind::SamplingExhausted: return "SamplingExhausted";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::NotScalar: return "NotScalar";
        case ErrorKind::MissingChildEmbedding: return "MissingChildEmbedding";
        case ErrorKind::TooFewChildren: return "TooFewChildren";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::EmptySequence: return "EmptySequence";
        case ErrorKind::PositionClash: return "PositionClash";
        case ErrorKind::NegationUnsupported: return "NegationUnsupported";
        case ErrorKind::EmptyHardSet: return "EmptyHardSet";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Error";
}

}  // namespace hypercqa

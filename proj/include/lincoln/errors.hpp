#ifndef LINCOLN_ERRORS_HPP
#define LINCOLN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lincoln {

// Every failure the library can raise, one code per named contract violation.
enum class ErrorCode {
    LengthMismatch,
    ZeroSizeSimplex,
    NonIntegerToken,
    EmptyEdgeList,
    InvalidT,
    TimestampOutOfRange,
    ShapeMismatch,
    NonFiniteValue,
    NotScalarOutput,
    OddDimension,
    InvalidTau,
    IndexOutOfRange,
    LayerCountMismatch,
    NoNegativeFound,
    EmptyBatch,
    SingleClass,
    NoPositives,
    DatasetTooSmall,
    UnknownNode,
    WindowEmpty,
    InvalidConfig,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ZeroSizeSimplex: return "ZeroSizeSimplex";
        case ErrorCode::NonIntegerToken: return "NonIntegerToken";
        case ErrorCode::EmptyEdgeList: return "EmptyEdgeList";
        case ErrorCode::InvalidT: return "InvalidT";
        case ErrorCode::TimestampOutOfRange: return "TimestampOutOfRange";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::NotScalarOutput: return "NotScalarOutput";
        case ErrorCode::OddDimension: return "OddDimension";
        case ErrorCode::InvalidTau: return "InvalidTau";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::LayerCountMismatch: return "LayerCountMismatch";
        case ErrorCode::NoNegativeFound: return "NoNegativeFound";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::WindowEmpty: return "WindowEmpty";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class LincolnError : public std::runtime_error {
public:
    LincolnError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw LincolnError(code, what);
}

} // namespace lincoln

#endif // LINCOLN_ERRORS_HPP

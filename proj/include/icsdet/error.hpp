#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icsdet {

enum class ErrorCode {
    MissingSection,
    ArityMismatch,
    UnparseableNumeric,
    UnsupportedAttribute,
    MissingValue,
    UnknownNominal,
    MissingLabelColumn,
    NonBinaryLabel,
    EmptyTable,
    EmptyDataset,
    DimensionMismatch,
    SingleClassDataset,
    InvalidArgument,
    InvalidF,
    OverlappingEpisodes,
    NonFiniteActivation,
    NonFiniteLoss,
    StaleCache,
    ShapeMismatch,
    InvalidWeights,
    EmptyNode,
    WidthMismatch,
    LengthMismatch,
    EmptyMatrix,
    Empty,
    ConfigParse,
    FileNotFound,
    Io,
    BadModelFile,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the
// CLI prints it as "error: <Code>: <message>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace icsdet

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sphx {

enum class Errc {
    InvalidDimensions,
    NotPowerOfTwo,
    DimensionMismatch,
    EmptyInput,
    CodeLengthMismatch,
    InvalidParams,
    DegenerateCorrelation,
    OutOfPhaseRegion,
    NoSolution,
    DegenerateSigma,
    DuplicateDocId,
    InvalidCutoff,
    CorruptStream,
    VersionMismatch,
    InvalidLambda,
    ParseError,
    ZeroVector,
    RaggedDimensions,
    SeriesTooShort,
    NonPositivePrice,
    BadEdges,
    NotFound,
    Io,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::InvalidDimensions: return "InvalidDimensions";
    case Errc::NotPowerOfTwo: return "NotPowerOfTwo";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::CodeLengthMismatch: return "CodeLengthMismatch";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::DegenerateCorrelation: return "DegenerateCorrelation";
    case Errc::OutOfPhaseRegion: return "OutOfPhaseRegion";
    case Errc::NoSolution: return "NoSolution";
    case Errc::DegenerateSigma: return "DegenerateSigma";
    case Errc::DuplicateDocId: return "DuplicateDocId";
    case Errc::InvalidCutoff: return "InvalidCutoff";
    case Errc::CorruptStream: return "CorruptStream";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InvalidLambda: return "InvalidLambda";
    case Errc::ParseError: return "ParseError";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::RaggedDimensions: return "RaggedDimensions";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::NonPositivePrice: return "NonPositivePrice";
    case Errc::BadEdges: return "BadEdges";
    case Errc::NotFound: return "NotFound";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Every module reports failures through this exception; `code()` is the
/// machine-readable kind used by the CLI error JSON and the HTTP mapping.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message)
{
    throw Error(code, message);
}

}  // namespace sphx

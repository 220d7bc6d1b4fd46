#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bunforge {

enum class ErrorCode {
    MalformedSyntax,
    NegativeValue,
    EmptyOutputs,
    WeekMismatch,
    InvalidRecord,
    InvalidMix,
    InvalidRange,
    EndpointUnreachable,
    UnknownHeight,
    RpcFailure,
    UnknownAddress,
    StateMismatch,
    EmptyGraph,
    TooFewEdges,
    ZeroMean,
    InsufficientSamples,
    SpanTooShort,
    UniverseMismatch,
    ChecksumMismatch,
    StageFailure,
    SchemaMismatch,
    InvalidConfig,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and tests can assert on the category.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace bunforge

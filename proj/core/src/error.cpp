#include "bunforge/error.hpp"

namespace bunforge {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedSyntax: return "malformed-syntax";
        case ErrorCode::NegativeValue: return "negative-value";
        case ErrorCode::EmptyOutputs: return "empty-outputs";
        case ErrorCode::WeekMismatch: return "week-mismatch";
        case ErrorCode::InvalidRecord: return "invalid-record";
        case ErrorCode::InvalidMix: return "invalid-mix";
        case ErrorCode::InvalidRange: return "invalid-range";
        case ErrorCode::EndpointUnreachable: return "endpoint-unreachable";
        case ErrorCode::UnknownHeight: return "unknown-height";
        case ErrorCode::RpcFailure: return "rpc-failure";
        case ErrorCode::UnknownAddress: return "unknown-address";
        case ErrorCode::StateMismatch: return "state-mismatch";
        case ErrorCode::EmptyGraph: return "empty-graph";
        case ErrorCode::TooFewEdges: return "too-few-edges";
        case ErrorCode::ZeroMean: return "zero-mean";
        case ErrorCode::InsufficientSamples: return "insufficient-samples";
        case ErrorCode::SpanTooShort: return "span-too-short";
        case ErrorCode::UniverseMismatch: return "universe-mismatch";
        case ErrorCode::ChecksumMismatch: return "checksum-mismatch";
        case ErrorCode::StageFailure: return "stage-failure";
        case ErrorCode::SchemaMismatch: return "schema-mismatch";
        case ErrorCode::InvalidConfig: return "invalid-config";
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace bunforge

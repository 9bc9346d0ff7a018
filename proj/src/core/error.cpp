#include "error.hpp"

namespace kitnet {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kNotWatertight: return "NOT_WATERTIGHT";
    case ErrorCode::kDegenerate: return "DEGENERATE";
    case ErrorCode::kEmptyForeground: return "EMPTY_FOREGROUND";
    case ErrorCode::kSampling: return "SAMPLING_FAILURE";
    case ErrorCode::kProtocol: return "PROTOCOL_ERROR";
    case ErrorCode::kTransport: return "TRANSPORT_ERROR";
    case ErrorCode::kConfig: return "CONFIG_ERROR";
    case ErrorCode::kSizeMismatch: return "SIZE_MISMATCH";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kInternal: return "INTERNAL_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace kitnet

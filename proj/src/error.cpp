#include "byoc/error.hpp"

namespace byoc {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::validation: return "validation";
        case ErrorCode::state: return "state";
        case ErrorCode::parse: return "parse";
        case ErrorCode::classification: return "classification";
        case ErrorCode::backend: return "backend";
        case ErrorCode::config: return "config";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::migration: return "migration";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace byoc

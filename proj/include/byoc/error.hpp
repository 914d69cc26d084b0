#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace byoc {

enum class ErrorCode {
    validation,   // bad input or precondition violation
    state,        // operation not allowed in the current phase
    parse,        // malformed model output
    classification,  // model output names no declared class
    backend,      // transport, retries exhausted, mock script mismatch/underrun
    config,       // missing credential, bad configuration
    not_found,
    conflict,     // store id collision
    migration,    // schema version mismatch
    io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::map<std::string, std::string> detail = {})
        : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::map<std::string, std::string>& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::map<std::string, std::string> detail_;
};

}  // namespace byoc

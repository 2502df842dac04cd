#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace motionforge {

// Values double as CLI exit codes.
enum class ErrorCode : int {
    config = 2,
    input_missing = 3,
    contract = 4,
    internal = 5,
};

std::string_view error_kind(ErrorCode code);

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

}  // namespace motionforge

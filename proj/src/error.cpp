#include "acorn/error.hpp"

#include <utility>

namespace acorn {

ValidationError::ValidationError(std::string file, std::size_t line, std::string field,
                                 std::string message)
    : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " + message),
      file_(std::move(file)),
      line_(line),
      field_(std::move(field)),
      detail_(std::move(message)) {}

TransportError::TransportError(const std::string& message, bool retryable, int status,
                               std::string request_digest, int attempts)
    : Error(message),
      retryable_(retryable),
      status_(status),
      digest_(std::move(request_digest)),
      attempts_(attempts) {}

AdapterError::AdapterError(const std::string& message, std::string request_id)
    : Error(message + " (request id " + request_id + ")"), request_id_(std::move(request_id)) {}

}  // namespace acorn

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acorn {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied something that violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// A record in a data file failed schema validation.
class ValidationError : public Error {
public:
    ValidationError(std::string file, std::size_t line, std::string field, std::string message);

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string file_;
    std::size_t line_;
    std::string field_;
    std::string detail_;
};

/// No acceptable replacement entity could be produced for a document.
class CorruptionFailed : public Error {
public:
    using Error::Error;
};

/// External HTTP call failed. `retryable()` distinguishes transient failures.
class TransportError : public Error {
public:
    TransportError(const std::string& message, bool retryable, int status = 0,
                   std::string request_digest = {}, int attempts = 0);

    bool retryable() const noexcept { return retryable_; }
    int status() const noexcept { return status_; }
    const std::string& request_digest() const noexcept { return digest_; }
    int attempts() const noexcept { return attempts_; }

private:
    bool retryable_;
    int status_;
    std::string digest_;
    int attempts_;
};

/// Compressor adapter went away while a request was pending.
class AdapterError : public Error {
public:
    AdapterError(const std::string& message, std::string request_id);
    const std::string& request_id() const noexcept { return request_id_; }

private:
    std::string request_id_;
};

/// A peer produced bytes that do not follow the wire format.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace acorn

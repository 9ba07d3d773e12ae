#pragma once

#include <stdexcept>
#include <string>

namespace podforge {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// Provider failures. TransportError is the only kind the retry policy retries.
class ProviderError : public Error {
public:
    using Error::Error;
};

class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class EmbeddingProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

// Model output that could not be parsed into the declared payload.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Parsed output that breaks a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class MatchValidationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyLibraryError : public Error {
public:
    using Error::Error;
};

class IOError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

class AudioDecodeError : public Error {
public:
    using Error::Error;
};

class MissingClipError : public Error {
public:
    using Error::Error;
};

class RateMismatchError : public Error {
public:
    using Error::Error;
};

class DegenerateWindowError : public Error {
public:
    using Error::Error;
};

class AllStopwordsError : public Error {
public:
    using Error::Error;
};

class ConfigMismatchError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Wraps a failure with the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace podforge

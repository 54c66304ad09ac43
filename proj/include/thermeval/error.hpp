#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermeval {

enum class ErrorKind {
  kValidation,  // bad argument, bad config, invariant violation
  kParse,       // malformed file content
  kLookup,      // unknown image/view key
  kCapability,  // detector cannot serve the requested view
  kIo,          // missing or unreadable file
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(ErrorKind::kParse, message), line_(line) {}

  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& message)
      : Error(ErrorKind::kLookup, message) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& message)
      : Error(ErrorKind::kCapability, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::kIo, message) {}
};

/// Rethrows `e` as the same kind with `context` prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e,
                                              std::string_view context) {
  std::string message = std::string(context) + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::kParse: {
      const auto* parse = dynamic_cast<const ParseError*>(&e);
      throw ParseError(message, parse != nullptr ? parse->line() : 0);
    }
    case ErrorKind::kLookup:
      throw LookupError(message);
    case ErrorKind::kCapability:
      throw CapabilityError(message);
    case ErrorKind::kIo:
      throw IoError(message);
    case ErrorKind::kValidation:
      break;
  }
  throw ValidationError(message);
}

}  // namespace thermeval

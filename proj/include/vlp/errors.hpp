#pragma once

#include <stdexcept>
#include <string>

namespace vlp {

// Every failure mode the library reports. Codes split into a validation
// class (bad inputs/config, caught before any work happens) and a runtime
// class (geometric or numerical failure during a solve or a run).
enum class ErrorCode {
    invalid_input,
    config_error,
    parse_error,
    degenerate_geometry,
    inconsistent_anchors,
    unknown_uid,
    too_few_anchors,
    no_visible_anchors,
    empty_input,
    io_error,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_input:        return "InvalidInput";
        case ErrorCode::config_error:         return "ConfigError";
        case ErrorCode::parse_error:          return "ParseError";
        case ErrorCode::degenerate_geometry:  return "DegenerateGeometry";
        case ErrorCode::inconsistent_anchors: return "InconsistentAnchors";
        case ErrorCode::unknown_uid:          return "UnknownUid";
        case ErrorCode::too_few_anchors:      return "TooFewAnchors";
        case ErrorCode::no_visible_anchors:   return "NoVisibleAnchors";
        case ErrorCode::empty_input:          return "EmptyInput";
        case ErrorCode::io_error:             return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // Validation errors are detectable before any side effect; the CLI maps
    // them to a distinct exit code.
    bool is_validation() const noexcept {
        return code_ == ErrorCode::invalid_input || code_ == ErrorCode::config_error ||
               code_ == ErrorCode::parse_error;
    }

  private:
    ErrorCode code_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& m) : Error(ErrorCode::invalid_input, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCode::config_error, m) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorCode::parse_error, m) {}
};
struct DegenerateGeometry : Error {
    explicit DegenerateGeometry(const std::string& m) : Error(ErrorCode::degenerate_geometry, m) {}
};
struct InconsistentAnchors : Error {
    explicit InconsistentAnchors(const std::string& m) : Error(ErrorCode::inconsistent_anchors, m) {}
};
struct UnknownUid : Error {
    explicit UnknownUid(const std::string& m) : Error(ErrorCode::unknown_uid, m) {}
};
struct TooFewAnchors : Error {
    explicit TooFewAnchors(const std::string& m) : Error(ErrorCode::too_few_anchors, m) {}
};
struct NoVisibleAnchors : Error {
    explicit NoVisibleAnchors(const std::string& m) : Error(ErrorCode::no_visible_anchors, m) {}
};
struct EmptyInput : Error {
    explicit EmptyInput(const std::string& m) : Error(ErrorCode::empty_input, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorCode::io_error, m) {}
};

}  // namespace vlp

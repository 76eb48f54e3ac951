#pragma once

#include <stdexcept>
#include <string>

namespace mapsight {

/// Unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failures of an inpainting endpoint, kept distinct so callers can react.
class PredictorError : public std::runtime_error {
public:
    enum class Kind { unavailable, malformed_response, timeout, service_error };

    PredictorError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[nodiscard]] inline const char* to_string(PredictorError::Kind kind) {
    switch (kind) {
        case PredictorError::Kind::unavailable: return "unavailable";
        case PredictorError::Kind::malformed_response: return "malformed_response";
        case PredictorError::Kind::timeout: return "timeout";
        case PredictorError::Kind::service_error: return "service_error";
    }
    return "unknown";
}

}  // namespace mapsight

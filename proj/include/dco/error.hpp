#pragma once

#include <stdexcept>
#include <string>

namespace dco {

/// Bad caller-supplied data: dimension mismatches, malformed manifests,
/// invalid scene parameters. CLI exit code 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration value or combination. Treated as input (exit code 1).
class ConfigError : public InputError {
public:
    explicit ConfigError(const std::string& msg) : InputError(msg) {}
};

/// File parse/encode failure in one of the codecs. CLI exit code 2.
class CodecError : public std::runtime_error {
public:
    explicit CodecError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Densification had no anchored pixel anywhere; the frame cannot be solved.
/// CLI exit code 3 when every frame of a run fails this way.
class UnsolvableFrameError : public std::runtime_error {
public:
    explicit UnsolvableFrameError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dco

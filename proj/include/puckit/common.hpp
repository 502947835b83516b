#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace puckit {

// Error taxonomy. The CLI maps these onto exit codes; library callers can
// catch the base Error or a specific subclass.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (ragged rows, unparseable fields).
struct FormatError : Error {
    using Error::Error;
};

// Domain violations in data or arguments (labels outside {0,1}, empty sets).
struct ValidationError : Error {
    using Error::Error;
};

// Inconsistent or out-of-range configuration (prior outside (0,1), warmup >= total steps).
struct ConfigError : Error {
    using Error::Error;
};

// Training aborted (NaN loss); message carries step and learning rate.
struct TrainError : Error {
    using Error::Error;
};

// Model/data incompatibility (feature dimension mismatch with a pretrained model).
struct IncompatError : Error {
    using Error::Error;
};

// Gold labels required but absent; message lists offending sample ids.
struct MissingLabelError : Error {
    using Error::Error;
};

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// FNV-1a 64-bit hash, used for content fingerprints in run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Log threshold from PUCKIT_LOG (debug|info|warn|error); defaults to warn.
inline LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* env = std::getenv("PUCKIT_LOG");
        if (env == nullptr) return LogLevel::Warn;
        std::string_view s(env);
        if (s == "debug") return LogLevel::Debug;
        if (s == "info") return LogLevel::Info;
        if (s == "error") return LogLevel::Error;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
    if (level < log_threshold()) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[puckit:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace puckit

#pragma once

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gliomkit {

// Error categories used across the toolkit. All derive from std::runtime_error
// so callers that do not care about the category can catch one type.
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct value_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void concat_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void concat_into(std::ostringstream& oss, T&& v, Rest&&... rest) {
    oss << std::forward<T>(v);
    concat_into(oss, std::forward<Rest>(rest)...);
}

} // namespace detail

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream oss;
    detail::concat_into(oss, std::forward<Args>(args)...);
    return oss.str();
}

enum class LogLevel : int { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Level comes from GLIOMKIT_LOG (debug|info|warn|error|off); default warn.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("GLIOMKIT_LOG");
        if (!env) return LogLevel::warn;
        const std::string s(env);
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        if (s == "warn") return LogLevel::warn;
        if (s == "error") return LogLevel::error;
        if (s == "off") return LogLevel::off;
        return LogLevel::warn;
    }();
    return level;
}

template <typename... Args>
void log(LogLevel level, Args&&... args) {
    if (static_cast<int>(level) < static_cast<int>(log_level())) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[gliomkit:" << names[static_cast<int>(level)] << "] "
              << concat(std::forward<Args>(args)...) << "\n";
}

template <typename... Args>
void log_info(Args&&... args) {
    log(LogLevel::info, std::forward<Args>(args)...);
}
template <typename... Args>
void log_warn(Args&&... args) {
    log(LogLevel::warn, std::forward<Args>(args)...);
}

} // namespace gliomkit

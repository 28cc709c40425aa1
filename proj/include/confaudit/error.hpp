#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace confaudit {

/// Base for all domain errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (cohort files, labels, dimensions).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A biased subset could not be drawn because a cell is too small.
class InsufficientCellError : public Error {
public:
    InsufficientCellError(const std::string& message, std::string cell, std::size_t needed,
                          std::size_t available)
        : Error(message), cell_(std::move(cell)), needed_(needed), available_(available) {}
    const std::string& cell() const noexcept { return cell_; }
    std::size_t needed() const noexcept { return needed_; }
    std::size_t available() const noexcept { return available_; }
    std::size_t shortfall() const noexcept { return needed_ - available_; }

private:
    std::string cell_;
    std::size_t needed_;
    std::size_t available_;
};

namespace detail {

/// Shortest round-trip decimal text for a double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline bool parse_u64(std::string_view text, std::uint64_t& out) {
    if (text.empty()) return false;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail
}  // namespace confaudit

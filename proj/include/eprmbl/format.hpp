#pragma once

#include "eprmbl/errors.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>

namespace eprmbl {

/// Locale-independent %.17g; parses back to the identical double.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if(ec != std::errc{}) throw NumericError("failed to format double");
    return {buf, end};
}

[[nodiscard]] inline double parse_double(std::string_view s) {
    double v   = 0;
    auto   res = std::from_chars(s.data(), s.data() + s.size(), v);
    if(res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("malformed number '" + std::string(s) + "'");
    return v;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// 64-bit FNV-1a.
[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for(unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace eprmbl

#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "errors.hpp"

namespace dfpl {

// Hex-float strings round-trip IEEE-754 doubles exactly through JSON.
inline std::string double_to_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double hex_to_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw IoError("malformed hex-float literal: '" + s + "'");
    return v;
}

inline std::vector<std::string> doubles_to_hex(const std::vector<double>& vs) {
    std::vector<std::string> out;
    out.reserve(vs.size());
    for (double v : vs) out.push_back(double_to_hex(v));
    return out;
}

inline std::vector<double> hex_to_doubles(const std::vector<std::string>& ss) {
    std::vector<double> out;
    out.reserve(ss.size());
    for (const auto& s : ss) out.push_back(hex_to_double(s));
    return out;
}

} // namespace dfpl

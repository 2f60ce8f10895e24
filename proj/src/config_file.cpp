#include "flowlm/config_file.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "flowlm/error.hpp"

namespace flowlm {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

KeyValues parse_key_values(std::istream& in, const std::string& source_name) {
    KeyValues out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
        }
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key");
        }
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_key_values(in, path);
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    std::int64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end) {
        throw DataError("invalid integer for " + what + ": '" + s + "'");
    }
    return v;
}

std::uint64_t parse_uint64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end) {
        throw DataError("invalid unsigned integer for " + what + ": '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    if (s.empty()) throw DataError("invalid number for " + what + ": empty");
    // strtod rather than from_chars: libstdc++ 11 lacks hexfloat from_chars
    // on some targets, and model files store weights as hexfloats.
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) {
        throw DataError("invalid number for " + what + ": '" + s + "'");
    }
    return v;
}

}  // namespace flowlm

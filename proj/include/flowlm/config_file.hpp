#ifndef FLOWLM_CONFIG_FILE_HPP
#define FLOWLM_CONFIG_FILE_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <string>

namespace flowlm {

/// Flat `key=value` text, one pair per line. Blank lines and lines starting
/// with `#` are ignored; surrounding whitespace is trimmed from keys and
/// values. Later duplicates override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in, const std::string& source_name);
KeyValues read_key_values_file(const std::string& path);

std::string trim(const std::string& s);

// Strict conversions: the whole string must be consumed.
std::int64_t parse_int(const std::string& s, const std::string& what);
std::uint64_t parse_uint64(const std::string& s, const std::string& what);
double parse_double(const std::string& s, const std::string& what);

}  // namespace flowlm

#endif

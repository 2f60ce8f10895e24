#include "flowlm/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <unordered_set>

#include "flowlm/error.hpp"

namespace flowlm {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string to_upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

const std::vector<std::string>& canonical_columns() {
    static const std::vector<std::string> cols = {"start_time", "duration_s", "src_ip",    "dst_ip",    "protocol",
                                                  "src_port",   "dst_port",   "bytes_src", "bytes_dst", "tag"};
    return cols;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

int parse_fixed_digits(const std::string& s, std::size_t pos, std::size_t n, bool& ok) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) {
            ok = false;
            return 0;
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date");
    return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

const char* label_name(Label l) { return l == Label::Attack ? "Attack" : "Normal"; }

Label parse_label(const std::string& s) {
    const std::string t = to_lower(trim(s));
    if (t == "normal") return Label::Normal;
    if (t == "attack") return Label::Attack;
    throw DataError("invalid tag '" + s + "' (expected Normal or Attack)");
}

std::size_t FlowRecordHash::operator()(const FlowRecord& r) const noexcept {
    std::size_t h = std::hash<std::int64_t>{}(r.start_time);
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(std::hash<std::int64_t>{}(r.duration));
    mix(std::hash<std::string>{}(r.ip_a));
    mix(std::hash<std::string>{}(r.ip_b));
    mix(std::hash<std::string>{}(r.protocol));
    mix(r.port_a);
    mix(r.port_b);
    mix(std::hash<std::uint64_t>{}(r.bytes_src));
    mix(std::hash<std::uint64_t>{}(r.bytes_dst));
    mix(static_cast<std::size_t>(r.tag));
    return h;
}

DateRange::DateRange(std::int64_t s, std::int64_t e) : start(s), end(e) {
    if (!(s < e)) throw ConfigError("date range requires start < end");
}

FlowSchema FlowSchema::canonical() {
    FlowSchema s;
    s.protocol_aliases = {{"tcp_ip", "TCP"}, {"udp_ip", "UDP"}, {"icmp_ip", "ICMP"}, {"igmp", "IGMP"}, {"ipv6icmp", "IPV6ICMP"}};
    return s;
}

FlowSchema FlowSchema::from_key_values(const KeyValues& kv) {
    FlowSchema s = canonical();
    static const std::unordered_set<std::string> known = {"start_time", "duration_s", "stop_time", "src_ip",    "dst_ip",   "protocol",
                                                          "src_port",   "dst_port",   "bytes_src", "bytes_dst", "tag"};
    for (const auto& [key, value] : kv) {
        if (key.rfind("alias.", 0) == 0) {
            const std::string name = to_lower(key.substr(6));
            if (name.empty() || value.empty()) throw ConfigError("schema: empty protocol alias '" + key + "'");
            s.protocol_aliases[name] = to_upper(value);
        } else if (key == "tz_offset_s") {
            s.tz_offset_s = parse_int(value, "tz_offset_s");
        } else if (known.count(key)) {
            s.columns[key] = value;
        } else {
            throw ConfigError("schema: unknown canonical column '" + key + "'");
        }
    }
    return s;
}

std::string FlowSchema::column_for(const std::string& canonical_name) const {
    auto it = columns.find(canonical_name);
    return it == columns.end() ? canonical_name : it->second;
}

std::string FlowSchema::normalize_protocol(const std::string& raw) const {
    const std::string t = trim(raw);
    auto it = protocol_aliases.find(to_lower(t));
    if (it != protocol_aliases.end()) return it->second;
    return to_upper(t);
}

std::int64_t parse_timestamp(const std::string& raw, std::int64_t tz_offset_s) {
    const std::string s = trim(raw);
    if (!s.empty() && s.find('-', 1) == std::string::npos) {
        return parse_int(s, "timestamp");
    }
    bool ok = s.size() >= 19 && s[4] == '-' && s[7] == '-' && (s[10] == 'T' || s[10] == ' ') && s[13] == ':' && s[16] == ':';
    const int y = parse_fixed_digits(s, 0, 4, ok);
    const int mo = parse_fixed_digits(s, 5, 2, ok);
    const int d = parse_fixed_digits(s, 8, 2, ok);
    const int hh = parse_fixed_digits(s, 11, 2, ok);
    const int mm = parse_fixed_digits(s, 14, 2, ok);
    const int ss = parse_fixed_digits(s, 17, 2, ok);
    std::size_t pos = 19;
    if (ok && pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    if (ok && pos < s.size() && s[pos] == 'Z') ++pos;
    if (!ok || pos != s.size() || hh > 23 || mm > 59 || ss > 60) {
        throw DataError("invalid timestamp '" + raw + "'");
    }
    std::int64_t days = 0;
    try {
        days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    } catch (const DataError&) {
        throw DataError("invalid timestamp '" + raw + "'");
    }
    return days * 86400 + hh * 3600 + mm * 60 + ss - tz_offset_s;
}

std::int64_t local_day(std::int64_t epoch, std::int64_t tz_offset_s) { return floor_div(epoch + tz_offset_s, 86400); }

std::int64_t parse_date(const std::string& raw) {
    const std::string s = trim(raw);
    bool ok = s.size() == 10 && s[4] == '-' && s[7] == '-';
    const int y = parse_fixed_digits(s, 0, 4, ok);
    const int m = parse_fixed_digits(s, 5, 2, ok);
    const int d = parse_fixed_digits(s, 8, 2, ok);
    if (!ok) throw ConfigError("invalid date '" + raw + "' (expected YYYY-MM-DD)");
    try {
        return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    } catch (const DataError&) {
        throw ConfigError("invalid date '" + raw + "'");
    }
}

std::string format_date(std::int64_t day) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::vector<FlowRecord> parse_flow_csv(std::istream& in, const FlowSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("flow csv: missing header row");
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position[trim(header[i])] = i;

    auto locate = [&](const std::string& canonical) -> std::optional<std::size_t> {
        auto it = position.find(schema.column_for(canonical));
        if (it == position.end()) return std::nullopt;
        return it->second;
    };
    auto require = [&](const std::string& canonical) {
        auto p = locate(canonical);
        if (!p) {
            throw DataError("flow csv: missing required column '" + schema.column_for(canonical) + "' (" + canonical + ")");
        }
        return *p;
    };

    const std::size_t c_start = require("start_time");
    const std::size_t c_src = require("src_ip");
    const std::size_t c_dst = require("dst_ip");
    const std::size_t c_proto = require("protocol");
    const std::size_t c_bsrc = require("bytes_src");
    const std::size_t c_bdst = require("bytes_dst");
    const std::size_t c_tag = require("tag");
    const auto c_dur = locate("duration_s");
    const auto c_stop = c_dur ? std::nullopt : locate("stop_time");
    const auto c_sport = locate("src_port");
    const auto c_dport = locate("dst_port");

    std::vector<FlowRecord> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            throw DataError("flow csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(f.size()));
        }
        const std::string where = "flow csv line " + std::to_string(line_no) + ", field ";
        auto field = [&](std::size_t col, const char* canonical, auto&& parse) {
            try {
                return parse(trim(f[col]));
            } catch (const std::exception& e) {
                throw DataError(where + "'" + schema.column_for(canonical) + "': " + e.what());
            }
        };
        auto non_negative = [](const std::string& s) {
            if (!s.empty() && s.front() == '-') throw DataError("negative value " + s);
            return parse_uint64(s, "value");
        };
        auto port = [](const std::string& s) -> std::uint16_t {
            if (s.empty()) return 0;
            const std::int64_t v = parse_int(s, "port");
            if (v < 0 || v > 65535) throw DataError("port out of range " + s);
            return static_cast<std::uint16_t>(v);
        };
        auto address = [](const std::string& s) {
            if (s.empty()) throw DataError("empty address");
            return s;
        };

        FlowRecord r;
        r.start_time = field(c_start, "start_time", [&](const std::string& s) { return parse_timestamp(s, schema.tz_offset_s); });
        if (c_dur) {
            r.duration = static_cast<std::int64_t>(field(*c_dur, "duration_s", non_negative));
        } else if (c_stop) {
            const std::int64_t stop = field(*c_stop, "stop_time", [&](const std::string& s) { return parse_timestamp(s, schema.tz_offset_s); });
            if (stop < r.start_time) {
                throw DataError(where + "'" + schema.column_for("stop_time") + "': stop time precedes start time");
            }
            r.duration = stop - r.start_time;
        }
        r.ip_a = field(c_src, "src_ip", address);
        r.ip_b = field(c_dst, "dst_ip", address);
        r.protocol = field(c_proto, "protocol", [&](const std::string& s) {
            std::string p = schema.normalize_protocol(s);
            if (p.empty()) throw DataError("empty protocol");
            return p;
        });
        if (c_sport) r.port_a = field(*c_sport, "src_port", port);
        if (c_dport) r.port_b = field(*c_dport, "dst_port", port);
        r.bytes_src = field(c_bsrc, "bytes_src", non_negative);
        r.bytes_dst = field(c_bdst, "bytes_dst", non_negative);
        r.tag = field(c_tag, "tag", [](const std::string& s) { return parse_label(s); });
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<FlowRecord> read_flow_csv(const std::string& path, const FlowSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open flow csv '" + path + "'");
    try {
        return parse_flow_csv(in, schema);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records) {
    const auto& cols = canonical_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : records) {
        out << r.start_time << ',' << r.duration << ',' << r.ip_a << ',' << r.ip_b << ',' << r.protocol << ',' << r.port_a << ','
            << r.port_b << ',' << r.bytes_src << ',' << r.bytes_dst << ',' << label_name(r.tag) << '\n';
    }
}

void write_flow_csv(const std::string& path, const std::vector<FlowRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write flow csv '" + path + "'");
    write_flow_csv(out, records);
    if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<FlowRecord> deduplicate(const std::vector<FlowRecord>& records) {
    std::unordered_set<FlowRecord, FlowRecordHash> seen;
    seen.reserve(records.size());
    std::vector<FlowRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (seen.insert(r).second) out.push_back(r);
    }
    return out;
}

std::vector<FlowRecord> filter_date_range(const std::vector<FlowRecord>& records, const DateRange& range) {
    std::vector<FlowRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const FlowRecord& r) { return range.contains(r.start_time); });
    return out;
}

}  // namespace flowlm

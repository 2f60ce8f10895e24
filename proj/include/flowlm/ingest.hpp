#ifndef FLOWLM_INGEST_HPP
#define FLOWLM_INGEST_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "flowlm/config_file.hpp"

namespace flowlm {

enum class Label : std::uint8_t { Normal, Attack };

const char* label_name(Label l);  // "Normal" / "Attack"
Label parse_label(const std::string& s);  // case-insensitive

/// One flow-log row. Addresses are kept as logged; direction only matters
/// for which port/byte column a value came from.
struct FlowRecord {
    std::int64_t start_time = 0;  // epoch seconds
    std::int64_t duration = 0;    // seconds
    std::string ip_a;             // source
    std::string ip_b;             // destination
    std::string protocol;         // upper-case, non-empty
    std::uint16_t port_a = 0;
    std::uint16_t port_b = 0;
    std::uint64_t bytes_src = 0;
    std::uint64_t bytes_dst = 0;
    Label tag = Label::Normal;

    bool operator==(const FlowRecord&) const = default;
};

struct FlowRecordHash {
    std::size_t operator()(const FlowRecord& r) const noexcept;
};

/// Half-open interval [start, end) in epoch seconds.
struct DateRange {
    std::int64_t start = 0;
    std::int64_t end = 0;

    DateRange() = default;
    DateRange(std::int64_t s, std::int64_t e);  // throws ConfigError unless s < e

    bool contains(std::int64_t t) const { return start <= t && t < end; }
};

/// Maps canonical column names to the column names of a source file, plus
/// protocol aliases and the timezone of naive timestamps.
///
/// Canonical names: start_time, duration_s, stop_time, src_ip, dst_ip,
/// protocol, src_port, dst_port, bytes_src, bytes_dst, tag. Unmapped names
/// default to themselves. `stop_time` is consulted only when `duration_s` is
/// absent from the header, and duration then becomes stop - start.
struct FlowSchema {
    std::map<std::string, std::string> columns;
    std::map<std::string, std::string> protocol_aliases;  // lower-case key -> canonical
    std::int64_t tz_offset_s = 0;

    /// Identity column mapping with the ISCX protocol names
    /// (tcp_ip, udp_ip, icmp_ip, igmp, ipv6icmp) pre-aliased.
    static FlowSchema canonical();

    /// Reads `canonical_name=source_column` lines, `alias.<name>=<PROTO>`
    /// lines and an optional `tz_offset_s=<seconds east of UTC>`.
    static FlowSchema from_key_values(const KeyValues& kv);

    std::string column_for(const std::string& canonical_name) const;
    std::string normalize_protocol(const std::string& raw) const;
};

/// Parses ISO-8601 `YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]` (naive local time shifted
/// by tz_offset_s) or a plain integer epoch.
std::int64_t parse_timestamp(const std::string& s, std::int64_t tz_offset_s);

/// Days since 1970-01-01 of the local calendar date of an epoch second.
std::int64_t local_day(std::int64_t epoch, std::int64_t tz_offset_s);
/// `YYYY-MM-DD` to days since 1970-01-01.
std::int64_t parse_date(const std::string& s);
std::string format_date(std::int64_t day);

/// Splits one CSV line. Double-quoted fields may contain commas and `""`.
std::vector<std::string> split_csv_line(const std::string& line);

/// One record per data row, in file order. Throws DataError naming the
/// line and field for a malformed row, or naming a missing required column.
std::vector<FlowRecord> parse_flow_csv(std::istream& in, const FlowSchema& schema = FlowSchema::canonical());
std::vector<FlowRecord> read_flow_csv(const std::string& path, const FlowSchema& schema = FlowSchema::canonical());

/// Canonical CSV: start_time,duration_s,src_ip,dst_ip,protocol,src_port,dst_port,bytes_src,bytes_dst,tag
void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records);
void write_flow_csv(const std::string& path, const std::vector<FlowRecord>& records);

/// Drops exact duplicates, keeping the first occurrence in order.
std::vector<FlowRecord> deduplicate(const std::vector<FlowRecord>& records);

std::vector<FlowRecord> filter_date_range(const std::vector<FlowRecord>& records, const DateRange& range);

}  // namespace flowlm

#endif

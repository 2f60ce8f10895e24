#include <set>
#include <sstream>

#include "doctest.h"
#include "flowlm/error.hpp"
#include "flowlm/ingest.hpp"
#include "flowlm/rng.hpp"
#include "flowlm/synthgen.hpp"

using namespace flowlm;

namespace {

std::vector<FlowRecord> parse(const std::string& text, const FlowSchema& schema = FlowSchema::canonical()) {
    std::istringstream in(text);
    return parse_flow_csv(in, schema);
}

const char* kHeader = "start_time,duration_s,src_ip,dst_ip,protocol,src_port,dst_port,bytes_src,bytes_dst,tag\n";

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

FlowRecord rec(std::int64_t t, std::uint64_t bytes = 10) {
    FlowRecord r;
    r.start_time = t;
    r.ip_a = "10.0.0.1";
    r.ip_b = "10.0.0.2";
    r.protocol = "TCP";
    r.bytes_src = bytes;
    return r;
}

}  // namespace

TEST_SUITE("ingest") {
    TEST_CASE("schema maps foreign columns and protocol aliases") {
        const FlowSchema schema = FlowSchema::from_key_values(read_key_values_file(FLOWLM_TEST_DATA "/iscx_schema.conf"));
        const auto rs = read_flow_csv(FLOWLM_TEST_DATA "/iscx_sample.csv", schema);
        REQUIRE(rs.size() == 5);
        const FlowRecord& r = rs[0];
        CHECK(r.protocol == "TCP");
        CHECK(r.port_a == 3342);
        CHECK(r.port_b == 80);
        CHECK(r.bytes_src == 1200);
        CHECK(r.bytes_dst == 5300);
        CHECK(r.ip_a == "192.168.1.10");
        CHECK(r.duration == 7);
        CHECK(r.start_time == 1276424102);  // 2010-06-13T10:15:02Z
        CHECK(r.tag == Label::Normal);
        CHECK(rs[2].protocol == "UDP");
        CHECK(rs[3].tag == Label::Attack);
    }

    TEST_CASE("portless rows get port zero") {
        const auto rs = parse(std::string(kHeader) + "100,0,10.0.0.1,10.0.0.2,icmp,,,84,84,Normal\n");
        REQUIRE(rs.size() == 1);
        CHECK(rs[0].port_a == 0);
        CHECK(rs[0].port_b == 0);
        CHECK(rs[0].protocol == "ICMP");
    }

    TEST_CASE("ports are optional columns") {
        const auto rs = parse("start_time,src_ip,dst_ip,protocol,bytes_src,bytes_dst,tag\n5,a,b,udp,1,2,ATTACK\n");
        REQUIRE(rs.size() == 1);
        CHECK(rs[0].duration == 0);
        CHECK(rs[0].port_a == 0);
        CHECK(rs[0].tag == Label::Attack);
    }

    TEST_CASE("timestamps") {
        CHECK(parse_timestamp("1276214400", 0) == 1276214400);
        CHECK(parse_timestamp("2010-06-11T00:00:00", 0) == 1276214400);
        CHECK(parse_timestamp("2010-06-11 00:00:00.250Z", 0) == 1276214400);
        // Naive local time three hours west of UTC.
        CHECK(parse_timestamp("2010-06-11T00:00:00", -3 * 3600) == 1276214400 + 3 * 3600);
        CHECK_THROWS_AS(parse_timestamp("2010-13-01T00:00:00", 0), DataError);
        CHECK_THROWS_AS(parse_timestamp("yesterday", 0), DataError);
        CHECK(format_date(parse_date("2010-06-14")) == "2010-06-14");
        CHECK(local_day(1276214400 + 86399, 0) == parse_date("2010-06-11"));
        CHECK(local_day(1276214400 + 86399, 3600) == parse_date("2010-06-12"));
    }

    TEST_CASE("quoted fields") {
        const auto f = split_csv_line(R"(a,"b,c","say ""hi""",)");
        REQUIRE(f.size() == 4);
        CHECK(f[1] == "b,c");
        CHECK(f[2] == "say \"hi\"");
        CHECK(f[3].empty());
    }

    TEST_CASE("errors name the column, line and field") {
        CHECK(error_of("start_time,src_ip,dst_ip,protocol,bytes_src,tag\n").find("bytes_dst") != std::string::npos);

        const std::string bad_bytes = std::string(kHeader) + "1,0,a,b,TCP,1,2,3,4,Normal\n2,0,a,b,TCP,1,2,lots,4,Normal\n";
        const std::string e = error_of(bad_bytes);
        CHECK(e.find("line 3") != std::string::npos);
        CHECK(e.find("bytes_src") != std::string::npos);

        CHECK(error_of(std::string(kHeader) + "1,0,a,b,TCP,70000,2,3,4,Normal\n").find("src_port") != std::string::npos);
        CHECK(error_of(std::string(kHeader) + "1,0,a,b,TCP,1,2,3,4,Maybe\n").find("tag") != std::string::npos);
        CHECK(error_of(std::string(kHeader) + "1,0,a,b,TCP,1,2,-3,4,Normal\n").find("bytes_src") != std::string::npos);
        CHECK(error_of(std::string(kHeader) + "1,0,a,b,,1,2,3,4,Normal\n").find("protocol") != std::string::npos);
        CHECK(error_of(std::string(kHeader) + "1,0,a,b,TCP,1\n").find("line 2") != std::string::npos);
        CHECK(error_of("").find("header") != std::string::npos);
    }

    TEST_CASE("schema rejects unknown keys") {
        CHECK_THROWS_AS(FlowSchema::from_key_values({{"source_ip", "x"}}), ConfigError);
        const auto s = FlowSchema::from_key_values({{"alias.proto_6", "tcp"}, {"tz_offset_s", "-10800"}});
        CHECK(s.normalize_protocol("PROTO_6") == "TCP");
        CHECK(s.tz_offset_s == -10800);
    }

    TEST_CASE("deduplicate") {
        const FlowRecord a = rec(1), b = rec(2);
        FlowRecord a2 = a;
        a2.bytes_src += 1;
        CHECK(deduplicate({a, a}).size() == 1);
        CHECK(deduplicate({a, a2}).size() == 2);
        const auto d = deduplicate({b, a, b, a2, a});
        REQUIRE(d.size() == 3);
        CHECK(d[0] == b);
        CHECK(d[1] == a);
        CHECK(d[2] == a2);
        CHECK(deduplicate(d) == d);
        CHECK(deduplicate({}).empty());

        // Sample file has one repeated row.
        const FlowSchema schema = FlowSchema::from_key_values(read_key_values_file(FLOWLM_TEST_DATA "/iscx_schema.conf"));
        CHECK(deduplicate(read_flow_csv(FLOWLM_TEST_DATA "/iscx_sample.csv", schema)).size() == 4);
    }

    TEST_CASE("filter_date_range is half-open") {
        CHECK(filter_date_range({}, DateRange(0, 10)).empty());
        const auto out = filter_date_range({rec(9), rec(10), rec(0), rec(-1)}, DateRange(0, 10));
        REQUIRE(out.size() == 2);
        CHECK(out[0].start_time == 9);
        CHECK(out[1].start_time == 0);
        CHECK_THROWS_AS(DateRange(5, 5), ConfigError);
    }

    TEST_CASE("first 36 hours of a synthetic week match a brute-force filter") {
        const auto rs = generate_records(SynthConfig{});
        std::int64_t lo = rs.front().start_time;
        for (const auto& r : rs) lo = std::min(lo, r.start_time);
        const auto got = filter_date_range(rs, DateRange(lo, lo + 129600));
        std::vector<FlowRecord> want;
        for (const auto& r : rs) {
            if (r.start_time < lo + 129600) want.push_back(r);
        }
        CHECK(got == want);
        CHECK(got.size() < rs.size());

        // A range and its complement partition the input.
        const auto rest_lo = filter_date_range(rs, DateRange(lo - 1000000, lo));
        const auto rest_hi = filter_date_range(rs, DateRange(lo + 129600, lo + 100000000));
        CHECK(got.size() + rest_lo.size() + rest_hi.size() == rs.size());
    }

    TEST_CASE("canonical csv round trip") {
        Rng rng(3);
        std::vector<FlowRecord> rs;
        for (int i = 0; i < 300; ++i) {
            FlowRecord r;
            r.start_time = 1276214400 + static_cast<std::int64_t>(rng.below(604800));
            r.duration = static_cast<std::int64_t>(rng.below(4000));
            r.ip_a = "10.0." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256));
            r.ip_b = "172.16.0." + std::to_string(rng.below(256));
            r.protocol = rng.bernoulli(0.5) ? "TCP" : "UDP";
            r.port_a = static_cast<std::uint16_t>(rng.below(65536));
            r.port_b = static_cast<std::uint16_t>(rng.below(65536));
            r.bytes_src = rng.next() >> rng.below(64);
            r.bytes_dst = rng.below(100000);
            r.tag = rng.bernoulli(0.1) ? Label::Attack : Label::Normal;
            rs.push_back(r);
        }
        std::ostringstream out;
        write_flow_csv(out, rs);
        const auto back = parse(out.str());
        CHECK(back == rs);
        std::ostringstream again;
        write_flow_csv(again, back);
        CHECK(again.str() == out.str());
    }
}

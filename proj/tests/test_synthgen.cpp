#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "flowlm/error.hpp"
#include "flowlm/ingest.hpp"
#include "flowlm/sequencer.hpp"
#include "flowlm/synthgen.hpp"
#include "flowlm/tokenizer.hpp"

using namespace flowlm;

TEST_SUITE("synthgen") {
    TEST_CASE("identical config gives identical bytes") {
        SynthConfig c;
        c.benign_dyad_hours = 200;
        c.attack_dyad_hours = 10;
        CHECK(generate(c) == generate(c));
        SynthConfig d = c;
        d.seed += 1;
        CHECK(generate(c) != generate(d));
    }

    TEST_CASE("no attacks requested, none produced") {
        SynthConfig c;
        c.benign_dyad_hours = 150;
        c.attack_dyad_hours = 0;
        for (const auto& r : generate_records(c)) CHECK(r.tag == Label::Normal);
    }

    TEST_CASE("default corpus parses and sequences to the requested counts") {
        const SynthConfig c;
        std::istringstream in(generate(c));
        const auto rs = parse_flow_csv(in);
        CHECK(rs == generate_records(c));
        CHECK(deduplicate(rs).size() == rs.size());
        const FeatureScheme s{};
        const auto dhs = group_dyad_hours(rs, s, build_vocabulary(rs, s));
        std::size_t attacks = 0;
        for (const auto& dh : dhs) attacks += dh.label == Label::Attack;
        CHECK(attacks == 50);
        CHECK(dhs.size() == 2050);
    }

    TEST_CASE("attack placement and signatures") {
        const SynthConfig c;
        const auto rs = generate_records(c);
        const std::int64_t day = 86400;
        std::map<std::string, std::size_t> kinds;
        for (const auto& r : rs) {
            CHECK(r.start_time >= c.start_time);
            CHECK(r.start_time < c.start_time + static_cast<std::int64_t>(c.days) * day);
            if (r.tag != Label::Attack) continue;
            CHECK(r.start_time >= c.start_time + 36 * 3600);
            const unsigned service = std::min(r.port_a, r.port_b);
            if (r.protocol == "ICMP") {
                ++kinds["infil"];
            } else if (service == 22) {
                ++kinds["ssh"];
            } else {
                ++kinds["dos"];
                CHECK(r.protocol == "TCP");
                CHECK(service == 80);
                CHECK(r.start_time >= c.start_time + 3 * day);
                CHECK(r.start_time < c.start_time + 5 * day);
            }
        }
        CHECK(kinds.size() == 3);
        CHECK(kinds["dos"] >= 200 * 20);  // 20 DoS dyad-hours of at least 200 flows
    }

    TEST_CASE("infiltration tokens never occur in benign profiles") {
        const ProfileBuckets infil = infil_bucket_range();
        for (const auto& p : benign_bucket_ranges()) {
            for (int b = infil.lo; b <= infil.hi; ++b) {
                CHECK_FALSE((p.protocol == infil.protocol && p.lo <= b && b <= p.hi));
            }
        }
        // The generated corpus agrees with the declared ranges.
        std::set<std::string> benign;
        std::set<std::string> infil_tokens;
        for (const auto& r : generate_records(SynthConfig{})) {
            const std::string t = proto_byte_token(r);
            if (r.tag == Label::Normal) benign.insert(t);
            else if (r.protocol == infil.protocol) infil_tokens.insert(t);
        }
        CHECK_FALSE(infil_tokens.empty());
        for (const auto& t : infil_tokens) CHECK(benign.count(t) == 0);
    }

    TEST_CASE("attack mix split") {
        SynthConfig c;
        c.attack_dyad_hours = 50;
        CHECK(attack_counts(c) == std::vector<std::size_t>{20, 15, 15});
        c.attack_dyad_hours = 7;
        const auto k = attack_counts(c);
        CHECK(k[0] + k[1] + k[2] == 7);
        c.attack_mix = {0.0, 0.0, 1.0};
        CHECK(attack_counts(c) == std::vector<std::size_t>{0, 0, 7});
    }

    TEST_CASE("config validation and key=value round trip") {
        SynthConfig c;
        c.attack_mix = {0.5, 0.5, 0.5};
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = SynthConfig{};
        c.days = 1;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = SynthConfig{};
        c.seed = 99;
        c.benign_dyad_hours = 123;
        c.attack_mix = {0.2, 0.3, 0.5};
        const SynthConfig back = SynthConfig::from_key_values(c.to_key_values());
        CHECK(back.seed == 99);
        CHECK(back.benign_dyad_hours == 123);
        CHECK(back.attack_mix.infil == 0.5);
        CHECK(generate(back) == generate(c));
    }
}

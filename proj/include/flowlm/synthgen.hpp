#ifndef FLOWLM_SYNTHGEN_HPP
#define FLOWLM_SYNTHGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "flowlm/config_file.hpp"
#include "flowlm/ingest.hpp"

namespace flowlm {

enum class AttackKind : std::uint8_t { Dos, BruteSsh, Infil };

struct AttackMix {
    double dos = 0.4;
    double brute_ssh = 0.3;
    double infil = 0.3;
};

/// Parameters of a synthetic labeled corpus.
///
/// Benign dyad-hours come from three profiles (web, dns, interactive ssh)
/// whose byte buckets follow sticky first-order Markov chains. Attack
/// dyad-hours are placed after the first 36 hours so the opening day and a
/// half is attack-free; DoS attacks fall on days 4 and 5 when the corpus
/// spans at least five days.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t benign_dyad_hours = 2000;
    std::size_t attack_dyad_hours = 50;
    std::size_t days = 7;
    AttackMix attack_mix;
    std::size_t ip_pool_size = 200;
    std::int64_t start_time = 1276214400;  // 2010-06-11T00:00:00Z

    void validate() const;
    static SynthConfig from_key_values(const KeyValues& kv, SynthConfig base);
    static SynthConfig from_key_values(const KeyValues& kv) { return from_key_values(kv, SynthConfig{}); }
    KeyValues to_key_values() const;
};

/// Splits `total` across the mix by largest remainder; counts sum to total.
std::vector<std::size_t> attack_counts(const SynthConfig& cfg);

/// Records in start_time order. Identical cfg gives identical output.
std::vector<FlowRecord> generate_records(const SynthConfig& cfg);

/// Canonical flow CSV text of generate_records(cfg).
std::string generate(const SynthConfig& cfg);

/// Byte buckets each benign profile may emit, keyed by protocol. Used to
/// check that infiltration tokens never occur in benign traffic.
struct ProfileBuckets {
    std::string protocol;
    int lo = 0;
    int hi = 0;
};
std::vector<ProfileBuckets> benign_bucket_ranges();
ProfileBuckets infil_bucket_range();

}  // namespace flowlm

#endif

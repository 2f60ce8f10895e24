#include "flowlm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "flowlm/error.hpp"
#include "flowlm/rng.hpp"

namespace flowlm {

namespace {

constexpr int kCleanHours = 36;

// splitmix64 finalizer; derives independent per-dyad-hour seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string host_ip(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s.%zu.%zu", prefix, i / 250, i % 250 + 1);
    return buf;
}

enum class Profile { Web, Dns, Ssh };

struct Chain {
    int lo, hi;
    int start;            // most likely first bucket
    double start_weight;  // probability of `start`; the rest splits to start +- 1
    double stay;          // probability of staying; the rest splits to +- 1
};

Chain chain_for(Profile p) {
    switch (p) {
        case Profile::Web: return {8, 14, 10, 0.6, 0.5};
        case Profile::Dns: return {5, 7, 6, 0.7, 0.6};
        case Profile::Ssh: return {6, 10, 8, 0.6, 0.5};
    }
    return {8, 14, 10, 0.6, 0.5};
}

int clamp_bucket(int b, const Chain& c) {
    // Reflect at the edges so the chain stays inside [lo, hi].
    if (b < c.lo) return c.lo + 1 <= c.hi ? c.lo + 1 : c.lo;
    if (b > c.hi) return c.hi - 1 >= c.lo ? c.hi - 1 : c.hi;
    return b;
}

int step_bucket(int current, const Chain& c, Rng& rng) {
    const double u = rng.uniform();
    if (u < c.stay) return current;
    return clamp_bucket(u < c.stay + (1.0 - c.stay) / 2 ? current - 1 : current + 1, c);
}

int first_bucket(const Chain& c, Rng& rng) {
    const double u = rng.uniform();
    if (u < c.start_weight) return c.start;
    return clamp_bucket(u < c.start_weight + (1.0 - c.start_weight) / 2 ? c.start - 1 : c.start + 1, c);
}

std::uint64_t bytes_in_bucket(int bucket, Rng& rng) {
    const std::uint64_t lo = std::uint64_t{1} << bucket;
    return lo + rng.below(lo);  // [2^b, 2^(b+1))
}

struct Slot {
    std::string client;
    std::string server;
    std::int64_t hour;  // hours since cfg.start_time
};

// Distinct second offsets inside the hour, ascending.
std::vector<std::int64_t> offsets(std::size_t n, Rng& rng) {
    std::set<std::int64_t> picked;
    while (picked.size() < n) picked.insert(rng.between(0, 3599));
    return {picked.begin(), picked.end()};
}

void emit(std::vector<FlowRecord>& out, const Slot& slot, const SynthConfig& cfg, std::int64_t offset, const std::string& proto,
          std::uint16_t service_port, int bucket, Label tag, Rng& rng) {
    FlowRecord r;
    r.start_time = cfg.start_time + slot.hour * 3600 + offset;
    r.duration = rng.between(0, 30);
    r.ip_a = slot.client;
    r.ip_b = slot.server;
    r.protocol = proto;
    if (service_port != 0) {
        r.port_a = static_cast<std::uint16_t>(rng.between(49152, 65535));
        r.port_b = service_port;
    }
    const std::uint64_t total = bytes_in_bucket(bucket, rng);
    r.bytes_src = rng.below(total + 1);
    r.bytes_dst = total - r.bytes_src;
    r.tag = tag;
    out.push_back(std::move(r));
}

void benign_dyad_hour(std::vector<FlowRecord>& out, const Slot& slot, const SynthConfig& cfg, Rng& rng) {
    const double u = rng.uniform();
    const Profile p = u < 0.5 ? Profile::Web : (u < 0.8 ? Profile::Dns : Profile::Ssh);
    const Chain chain = chain_for(p);
    std::size_t n = 0;
    std::string proto = "TCP";
    std::uint16_t port = 0;
    switch (p) {
        case Profile::Web:
            n = static_cast<std::size_t>(rng.between(4, 24));
            port = rng.bernoulli(0.5) ? 80 : 443;
            break;
        case Profile::Dns:
            n = static_cast<std::size_t>(rng.between(2, 10));
            proto = "UDP";
            port = 53;
            break;
        case Profile::Ssh:
            n = static_cast<std::size_t>(rng.between(4, 20));
            port = 22;
            break;
    }
    int bucket = first_bucket(chain, rng);
    for (std::int64_t off : offsets(n, rng)) {
        emit(out, slot, cfg, off, proto, port, bucket, Label::Normal, rng);
        bucket = step_bucket(bucket, chain, rng);
    }
}

void attack_dyad_hour(std::vector<FlowRecord>& out, const Slot& slot, const SynthConfig& cfg, AttackKind kind, Rng& rng) {
    switch (kind) {
        case AttackKind::Dos: {
            // SYN-flood style: near-identical 40-63 byte flows at one service.
            const auto n = static_cast<std::size_t>(rng.between(200, 500));
            for (std::int64_t off : offsets(n, rng)) emit(out, slot, cfg, off, "TCP", 80, 5, Label::Attack, rng);
            break;
        }
        case AttackKind::BruteSsh: {
            // Rigid login-attempt cycle; benign ssh only moves one bucket at a time.
            static const int cycle[] = {6, 10, 7, 10};
            const auto n = static_cast<std::size_t>(rng.between(50, 150));
            std::size_t k = 0;
            for (std::int64_t off : offsets(n, rng)) emit(out, slot, cfg, off, "TCP", 22, cycle[k++ % 4], Label::Attack, rng);
            break;
        }
        case AttackKind::Infil: {
            const ProfileBuckets r = infil_bucket_range();
            const auto n = static_cast<std::size_t>(rng.between(5, 20));
            for (std::int64_t off : offsets(n, rng)) {
                emit(out, slot, cfg, off, r.protocol, 0, static_cast<int>(rng.between(r.lo, r.hi)), Label::Attack, rng);
            }
            break;
        }
    }
}

}  // namespace

std::vector<ProfileBuckets> benign_bucket_ranges() {
    return {{"TCP", chain_for(Profile::Web).lo, chain_for(Profile::Web).hi},
            {"UDP", chain_for(Profile::Dns).lo, chain_for(Profile::Dns).hi},
            {"TCP", chain_for(Profile::Ssh).lo, chain_for(Profile::Ssh).hi}};
}

ProfileBuckets infil_bucket_range() { return {"ICMP", 12, 16}; }

void SynthConfig::validate() const {
    const double sum = attack_mix.dos + attack_mix.brute_ssh + attack_mix.infil;
    if (attack_mix.dos < 0 || attack_mix.brute_ssh < 0 || attack_mix.infil < 0 || std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("synth config: attack_mix fractions must be non-negative and sum to 1");
    }
    if (days < 1) throw ConfigError("synth config: days must be >= 1");
    if (ip_pool_size < 2) throw ConfigError("synth config: ip_pool_size must be >= 2");
    if (attack_dyad_hours > 0 && days * 24 <= static_cast<std::size_t>(kCleanHours)) {
        throw ConfigError("synth config: attacks need more than 36 hours of corpus (days >= 2)");
    }
    const std::size_t servers = std::max<std::size_t>(1, ip_pool_size / 10);
    const std::size_t clients = ip_pool_size - servers;
    if (clients == 0 || benign_dyad_hours > clients * servers * days * 24 / 2) {
        throw ConfigError("synth config: benign_dyad_hours too large for ip_pool_size and days");
    }
}

SynthConfig SynthConfig::from_key_values(const KeyValues& kv, SynthConfig base) {
    auto count = [&](const char* key, std::size_t& field) {
        if (auto it = kv.find(key); it != kv.end()) {
            const auto v = parse_int(it->second, key);
            if (v < 0) throw ConfigError(std::string("synth config: ") + key + " must be non-negative");
            field = static_cast<std::size_t>(v);
        }
    };
    auto real = [&](const char* key, double& field) {
        if (auto it = kv.find(key); it != kv.end()) field = parse_double(it->second, key);
    };
    if (auto it = kv.find("seed"); it != kv.end()) base.seed = parse_uint64(it->second, "seed");
    count("benign_dyad_hours", base.benign_dyad_hours);
    count("attack_dyad_hours", base.attack_dyad_hours);
    count("days", base.days);
    count("ip_pool_size", base.ip_pool_size);
    real("attack_mix.dos", base.attack_mix.dos);
    real("attack_mix.brute_ssh", base.attack_mix.brute_ssh);
    real("attack_mix.infil", base.attack_mix.infil);
    if (auto it = kv.find("start_time"); it != kv.end()) base.start_time = parse_timestamp(it->second, 0);
    return base;
}

KeyValues SynthConfig::to_key_values() const {
    auto real = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    return {{"seed", std::to_string(seed)},
            {"benign_dyad_hours", std::to_string(benign_dyad_hours)},
            {"attack_dyad_hours", std::to_string(attack_dyad_hours)},
            {"days", std::to_string(days)},
            {"ip_pool_size", std::to_string(ip_pool_size)},
            {"attack_mix.dos", real(attack_mix.dos)},
            {"attack_mix.brute_ssh", real(attack_mix.brute_ssh)},
            {"attack_mix.infil", real(attack_mix.infil)},
            {"start_time", std::to_string(start_time)}};
}

std::vector<std::size_t> attack_counts(const SynthConfig& cfg) {
    const double fractions[3] = {cfg.attack_mix.dos, cfg.attack_mix.brute_ssh, cfg.attack_mix.infil};
    std::vector<std::size_t> counts(3);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = fractions[k] * static_cast<double>(cfg.attack_dyad_hours);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < cfg.attack_dyad_hours; ++k, ++assigned) counts[remainders[k % 3].second] += 1;
    return counts;
}

std::vector<FlowRecord> generate_records(const SynthConfig& cfg) {
    cfg.validate();
    Rng layout(cfg.seed);
    const std::int64_t total_hours = static_cast<std::int64_t>(cfg.days) * 24;
    const std::size_t n_servers = std::max<std::size_t>(1, cfg.ip_pool_size / 10);
    const std::size_t n_clients = cfg.ip_pool_size - n_servers;

    std::set<std::tuple<std::int64_t, std::string, std::string>> used;
    std::vector<Slot> benign;
    benign.reserve(cfg.benign_dyad_hours);
    while (benign.size() < cfg.benign_dyad_hours) {
        Slot s{host_ip("192.168", n_servers + layout.below(n_clients)), host_ip("192.168", layout.below(n_servers)),
               layout.between(0, total_hours - 1)};
        if (used.emplace(s.hour, s.client, s.server).second) benign.push_back(std::move(s));
    }

    // Attack kinds in a shuffled order; each attacker address is unique, so
    // no attack dyad-hour can merge with another dyad-hour.
    const auto counts = attack_counts(cfg);
    std::vector<AttackKind> kinds;
    for (std::size_t k = 0; k < 3; ++k) kinds.insert(kinds.end(), counts[k], static_cast<AttackKind>(k));
    layout.shuffle(kinds);
    std::vector<Slot> attacks;
    for (std::size_t a = 0; a < kinds.size(); ++a) {
        std::int64_t lo = kCleanHours;
        std::int64_t hi = total_hours - 1;
        if (kinds[a] == AttackKind::Dos && cfg.days >= 5) {
            lo = 3 * 24;
            hi = 5 * 24 - 1;
        }
        attacks.push_back(Slot{host_ip("172.16", a), host_ip("192.168", layout.below(n_servers)), layout.between(lo, hi)});
    }

    std::vector<FlowRecord> out;
    for (std::size_t i = 0; i < benign.size(); ++i) {
        Rng rng(mix_seed(cfg.seed, i));
        benign_dyad_hour(out, benign[i], cfg, rng);
    }
    for (std::size_t a = 0; a < attacks.size(); ++a) {
        Rng rng(mix_seed(cfg.seed, benign.size() + a));
        attack_dyad_hour(out, attacks[a], cfg, kinds[a], rng);
    }
    std::stable_sort(out.begin(), out.end(), [](const FlowRecord& a, const FlowRecord& b) { return a.start_time < b.start_time; });
    return out;
}

std::string generate(const SynthConfig& cfg) {
    std::ostringstream out;
    write_flow_csv(out, generate_records(cfg));
    return out.str();
}

}  // namespace flowlm

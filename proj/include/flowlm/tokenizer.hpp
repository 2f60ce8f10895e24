#ifndef FLOWLM_TOKENIZER_HPP
#define FLOWLM_TOKENIZER_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowlm/ingest.hpp"

namespace flowlm {

enum class SchemeKind : std::uint8_t { ProtoByte, ServicePort };

const char* scheme_name(SchemeKind k);             // "proto_byte" / "service_port"
SchemeKind parse_scheme_kind(const std::string& s);

struct FeatureScheme {
    SchemeKind kind = SchemeKind::ProtoByte;
    std::uint32_t high_port_threshold = 10000;  // ports strictly above collapse to HIGH

    void validate() const;
};

/// floor(log2(max(n, 1))).
int byte_bucket(std::uint64_t total_bytes);

/// `PROTO:BB` with BB = byte_bucket(bytes_src + bytes_dst), two digits minimum.
std::string proto_byte_token(const FlowRecord& record);

/// Lower of the two ports as decimal, or "HIGH" when it exceeds the threshold.
std::string service_port_token(const FlowRecord& record, const FeatureScheme& scheme);

std::string token_for(const FlowRecord& record, const FeatureScheme& scheme);

using TokenIndex = std::int32_t;

inline constexpr TokenIndex kPadIndex = 0;
inline constexpr TokenIndex kUnkIndex = 1;
inline constexpr TokenIndex kFirstTokenIndex = 2;

/// Token <-> index bijection. Indices 0 (PAD) and 1 (UNK) are reserved;
/// data tokens occupy 2..size()-1 in first-appearance order.
class Vocabulary {
public:
    Vocabulary() = default;

    /// Appends a token if absent; returns its index either way.
    TokenIndex add(const std::string& token);

    /// Index of token, or kUnkIndex when unseen. Never returns kPadIndex.
    TokenIndex encode(std::string_view token) const;

    bool contains(std::string_view token) const;

    /// Token text for an index; "<PAD>" and "<UNK>" for the reserved slots.
    const std::string& token_at(TokenIndex index) const;

    /// V: data tokens plus the two reserved indices.
    std::size_t size() const { return tokens_.size() + kFirstTokenIndex; }

    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
    };
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenIndex, Hash, std::equal_to<>> index_of_;
};

template <typename Range>
Vocabulary build_vocabulary(const Range& tokens) {
    Vocabulary v;
    for (const auto& t : tokens) v.add(t);
    return v;
}

Vocabulary build_vocabulary(const std::vector<FlowRecord>& records, const FeatureScheme& scheme);

inline TokenIndex encode(const Vocabulary& vocab, std::string_view token) { return vocab.encode(token); }

/// `index,token` rows, reserved entries included.
void export_vocabulary_csv(std::ostream& out, const Vocabulary& vocab);

}  // namespace flowlm

#endif

#include "flowlm/tokenizer.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

#include "flowlm/error.hpp"

namespace flowlm {

const char* scheme_name(SchemeKind k) { return k == SchemeKind::ProtoByte ? "proto_byte" : "service_port"; }

SchemeKind parse_scheme_kind(const std::string& s) {
    if (s == "proto_byte") return SchemeKind::ProtoByte;
    if (s == "service_port") return SchemeKind::ServicePort;
    throw ConfigError("unknown feature scheme '" + s + "' (expected proto_byte or service_port)");
}

void FeatureScheme::validate() const {
    if (high_port_threshold < 1) throw ConfigError("high_port_threshold must be >= 1");
}

int byte_bucket(std::uint64_t total_bytes) {
    const std::uint64_t n = total_bytes == 0 ? 1 : total_bytes;
    return static_cast<int>(std::bit_width(n)) - 1;
}

std::string proto_byte_token(const FlowRecord& record) {
    // Saturate instead of wrapping; a sum past 2^64 still lands in bucket 63.
    std::uint64_t total = record.bytes_src + record.bytes_dst;
    if (total < record.bytes_src) total = ~std::uint64_t{0};
    char bucket[8];
    std::snprintf(bucket, sizeof bucket, "%02d", byte_bucket(total));
    return record.protocol + ":" + bucket;
}

std::string service_port_token(const FlowRecord& record, const FeatureScheme& scheme) {
    const std::uint32_t p = std::min(record.port_a, record.port_b);
    if (p > scheme.high_port_threshold) return "HIGH";
    return std::to_string(p);
}

std::string token_for(const FlowRecord& record, const FeatureScheme& scheme) {
    return scheme.kind == SchemeKind::ProtoByte ? proto_byte_token(record) : service_port_token(record, scheme);
}

TokenIndex Vocabulary::add(const std::string& token) {
    auto it = index_of_.find(token);
    if (it != index_of_.end()) return it->second;
    const auto idx = static_cast<TokenIndex>(tokens_.size()) + kFirstTokenIndex;
    tokens_.push_back(token);
    index_of_.emplace(token, idx);
    return idx;
}

TokenIndex Vocabulary::encode(std::string_view token) const {
    auto it = index_of_.find(token);
    return it == index_of_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_of_.find(token) != index_of_.end(); }

const std::string& Vocabulary::token_at(TokenIndex index) const {
    static const std::string pad = "<PAD>";
    static const std::string unk = "<UNK>";
    if (index == kPadIndex) return pad;
    if (index == kUnkIndex) return unk;
    if (index < 0 || static_cast<std::size_t>(index) >= size()) {
        throw DataError("token index " + std::to_string(index) + " outside vocabulary of size " + std::to_string(size()));
    }
    return tokens_[static_cast<std::size_t>(index - kFirstTokenIndex)];
}

Vocabulary build_vocabulary(const std::vector<FlowRecord>& records, const FeatureScheme& scheme) {
    Vocabulary v;
    for (const auto& r : records) v.add(token_for(r, scheme));
    return v;
}

void export_vocabulary_csv(std::ostream& out, const Vocabulary& vocab) {
    out << "index,token\n";
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out << i << ',' << vocab.token_at(static_cast<TokenIndex>(i)) << '\n';
    }
}

}  // namespace flowlm

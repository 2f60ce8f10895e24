#include "flowlm/sequencer.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "flowlm/error.hpp"

namespace flowlm {

LabelRule parse_label_rule(const std::string& s) {
    if (s == "any") return LabelRule::Any;
    if (s == "majority") return LabelRule::Majority;
    throw ConfigError("unknown label_rule '" + s + "' (expected any or majority)");
}

const char* label_rule_name(LabelRule r) { return r == LabelRule::Any ? "any" : "majority"; }

std::vector<DyadHour> group_dyad_hours(const std::vector<FlowRecord>& records, const FeatureScheme& scheme,
                                       const Vocabulary& vocab, LabelRule rule) {
    using GroupKey = std::tuple<std::int64_t, std::string, std::string>;
    std::map<GroupKey, std::vector<const FlowRecord*>> groups;
    for (const auto& r : records) {
        DyadKey k = DyadKey::of(r.ip_a, r.ip_b);
        groups[GroupKey{hour_of(r.start_time), std::move(k.ip_lo), std::move(k.ip_hi)}].push_back(&r);
    }

    auto order = [](const FlowRecord* a, const FlowRecord* b) {
        return std::tie(a->start_time, a->duration, a->bytes_src, a->bytes_dst, a->port_a, a->port_b) <
               std::tie(b->start_time, b->duration, b->bytes_src, b->bytes_dst, b->port_a, b->port_b);
    };

    std::vector<DyadHour> out;
    out.reserve(groups.size());
    for (auto& [key, members] : groups) {
        // Ties on the full sort tuple differ only in protocol/tag/direction;
        // stable_sort alone would leak input order, so break them too.
        std::sort(members.begin(), members.end(), [&](const FlowRecord* a, const FlowRecord* b) {
            if (order(a, b)) return true;
            if (order(b, a)) return false;
            return std::tie(a->protocol, a->ip_a, a->tag) < std::tie(b->protocol, b->ip_a, b->tag);
        });
        DyadHour dh;
        dh.key = DyadKey{std::get<1>(key), std::get<2>(key)};
        dh.hour = std::get<0>(key);
        dh.tokens.reserve(members.size());
        std::size_t attacks = 0;
        for (const FlowRecord* r : members) {
            dh.tokens.push_back(vocab.encode(token_for(*r, scheme)));
            if (r->tag == Label::Attack) ++attacks;
        }
        const bool attack = rule == LabelRule::Any ? attacks > 0 : attacks > members.size() - attacks;
        dh.label = attack ? Label::Attack : Label::Normal;
        out.push_back(std::move(dh));
    }
    return out;
}

std::vector<Window> windows(const DyadHour& dh, std::size_t width, std::size_t origin) {
    if (width < 1) throw ConfigError("window width must be >= 1");
    std::vector<Window> out;
    out.reserve(dh.tokens.size());
    for (std::size_t t = 0; t < dh.tokens.size(); ++t) {
        Window w;
        w.context.assign(width, kPadIndex);
        const std::size_t take = std::min(t, width);
        std::copy(dh.tokens.begin() + static_cast<std::ptrdiff_t>(t - take), dh.tokens.begin() + static_cast<std::ptrdiff_t>(t),
                  w.context.end() - static_cast<std::ptrdiff_t>(take));
        w.target = dh.tokens[t];
        w.origin = origin;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<Window> windows(const std::vector<DyadHour>& dyad_hours, std::size_t width) {
    std::vector<Window> out;
    for (std::size_t i = 0; i < dyad_hours.size(); ++i) {
        auto w = windows(dyad_hours[i], width, i);
        std::move(w.begin(), w.end(), std::back_inserter(out));
    }
    return out;
}

void export_sequences(std::ostream& out, const std::vector<DyadHour>& dyad_hours, const Vocabulary& vocab) {
    for (const auto& dh : dyad_hours) {
        out << dh.key.ip_lo << ',' << dh.key.ip_hi << ',' << dh.hour << ',' << label_name(dh.label) << ',';
        for (std::size_t i = 0; i < dh.tokens.size(); ++i) out << (i ? "|" : "") << vocab.token_at(dh.tokens[i]);
        out << '\n';
    }
}

}  // namespace flowlm

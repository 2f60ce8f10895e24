#ifndef FLOWLM_SEQUENCER_HPP
#define FLOWLM_SEQUENCER_HPP

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "flowlm/ingest.hpp"
#include "flowlm/tokenizer.hpp"

namespace flowlm {

/// Undirected IP pair, stored lexicographically ordered.
struct DyadKey {
    std::string ip_lo;
    std::string ip_hi;

    static DyadKey of(const std::string& a, const std::string& b) { return a <= b ? DyadKey{a, b} : DyadKey{b, a}; }

    auto operator<=>(const DyadKey&) const = default;
};

enum class LabelRule : std::uint8_t { Any, Majority };
LabelRule parse_label_rule(const std::string& s);
const char* label_rule_name(LabelRule r);

inline std::int64_t hour_of(std::int64_t epoch) { return epoch >= 0 ? epoch / 3600 : -((-epoch + 3599) / 3600); }

struct DyadHour {
    DyadKey key;
    std::int64_t hour = 0;                // floor(start_time / 3600)
    std::vector<TokenIndex> tokens;       // ordered; never contains kPadIndex
    Label label = Label::Normal;
};

/// Fixed-width context, PAD-filled on the left, predicting `target`.
struct Window {
    std::vector<TokenIndex> context;
    TokenIndex target = kUnkIndex;
    std::size_t origin = 0;  // index of the owning DyadHour in its list
};

/// Groups records by (dyad, hour). Within a group tokens follow the sort
/// (start_time, duration, bytes_src, bytes_dst, port_a, port_b). The result
/// is ordered by (hour, ip_lo, ip_hi) and does not depend on input order.
std::vector<DyadHour> group_dyad_hours(const std::vector<FlowRecord>& records, const FeatureScheme& scheme,
                                       const Vocabulary& vocab, LabelRule rule = LabelRule::Any);

/// One window per token: window t predicts token t from up to `width`
/// preceding tokens of the same dyad-hour.
std::vector<Window> windows(const DyadHour& dh, std::size_t width, std::size_t origin = 0);

std::vector<Window> windows(const std::vector<DyadHour>& dyad_hours, std::size_t width);

/// `ip_lo,ip_hi,hour,label,tok|tok|...`
void export_sequences(std::ostream& out, const std::vector<DyadHour>& dyad_hours, const Vocabulary& vocab);

}  // namespace flowlm

#endif

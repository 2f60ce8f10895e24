#ifndef FLOWLM_SCORER_HPP
#define FLOWLM_SCORER_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "flowlm/neural.hpp"
#include "flowlm/sequencer.hpp"

namespace flowlm {

enum class Aggregation : std::uint8_t { Max, Mean };
Aggregation parse_aggregation(const std::string& s);
const char* aggregation_name(Aggregation a);

struct ScoredDyadHour {
    DyadKey key;
    std::int64_t hour = 0;
    double score = 0.0;  // aggregated window log loss
    Label label = Label::Normal;
    std::size_t window_count = 0;
};

/// Max or mean of window losses. Throws DataError on an empty list.
double aggregate(const std::vector<double>& losses, Aggregation agg);

/// Log loss of every window of `dh` under Eval-mode forward, in sequence order.
/// Throws DataError if any token index is outside the model's vocabulary.
std::vector<double> score_windows(const Model& model, const DyadHour& dh);

ScoredDyadHour score_dyad_hour(const Model& model, const DyadHour& dh, Aggregation agg = Aggregation::Max);

/// Scores many dyad-hours, batching windows across them for throughput.
/// Results are in input order; they agree with per-item scoring up to
/// floating-point summation order inside the matrix products.
std::vector<ScoredDyadHour> score_all(const Model& model, const std::vector<DyadHour>& dyad_hours,
                                      Aggregation agg = Aggregation::Max, std::size_t batch_size = 512);

/// `ip_lo,ip_hi,hour,score,label,window_count`, sorted by descending score
/// (ties by hour, ip_lo, ip_hi). Scores are written with 17 significant digits.
void write_scores_csv(std::ostream& out, std::vector<ScoredDyadHour> scored);
void write_scores_csv(const std::string& path, std::vector<ScoredDyadHour> scored);
std::vector<ScoredDyadHour> read_scores_csv(std::istream& in);
std::vector<ScoredDyadHour> read_scores_csv(const std::string& path);

}  // namespace flowlm

#endif

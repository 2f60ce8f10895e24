#include "flowlm/scorer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <tuple>

#include "flowlm/error.hpp"

namespace flowlm {

namespace {

void check_tokens(const Model& model, const DyadHour& dh) {
    const auto V = static_cast<TokenIndex>(model.params.embedding.rows());
    for (TokenIndex t : dh.tokens) {
        if (t < 1 || t >= V) {
            throw DataError("score: token index " + std::to_string(t) + " in dyad-hour " + dh.key.ip_lo + "," + dh.key.ip_hi + "@" +
                            std::to_string(dh.hour) + " is outside the model vocabulary (V=" + std::to_string(V) + ")");
        }
    }
}

std::vector<double> batch_losses(const Model& model, const std::vector<Window>& ws) {
    const Matrix probs = predict(model, make_batch(ws));
    std::vector<double> out;
    out.reserve(ws.size());
    for (std::size_t j = 0; j < ws.size(); ++j) {
        const auto col = probs.col(static_cast<Eigen::Index>(j));
        out.push_back(log_loss(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), ws[j].target));
    }
    return out;
}

}  // namespace

double aggregate(const std::vector<double>& losses, Aggregation agg) {
    if (losses.empty()) throw DataError("score: dyad-hour has no windows");
    if (agg == Aggregation::Max) return *std::max_element(losses.begin(), losses.end());
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(losses.size());
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "max") return Aggregation::Max;
    if (s == "mean") return Aggregation::Mean;
    throw ConfigError("unknown aggregation '" + s + "' (expected max or mean)");
}

const char* aggregation_name(Aggregation a) { return a == Aggregation::Max ? "max" : "mean"; }

std::vector<double> score_windows(const Model& model, const DyadHour& dh) {
    check_tokens(model, dh);
    return batch_losses(model, windows(dh, model.config.window));
}

ScoredDyadHour score_dyad_hour(const Model& model, const DyadHour& dh, Aggregation agg) {
    const auto losses = score_windows(model, dh);
    return ScoredDyadHour{dh.key, dh.hour, aggregate(losses, agg), dh.label, losses.size()};
}

std::vector<ScoredDyadHour> score_all(const Model& model, const std::vector<DyadHour>& dyad_hours, Aggregation agg,
                                      std::size_t batch_size) {
    std::vector<std::vector<double>> losses(dyad_hours.size());
    std::vector<Window> pending;
    auto flush = [&] {
        if (pending.empty()) return;
        const auto l = batch_losses(model, pending);
        for (std::size_t j = 0; j < pending.size(); ++j) losses[pending[j].origin].push_back(l[j]);
        pending.clear();
    };
    for (std::size_t i = 0; i < dyad_hours.size(); ++i) {
        check_tokens(model, dyad_hours[i]);
        for (auto& w : windows(dyad_hours[i], model.config.window, i)) {
            pending.push_back(std::move(w));
            if (pending.size() >= batch_size) flush();
        }
    }
    flush();

    std::vector<ScoredDyadHour> out;
    out.reserve(dyad_hours.size());
    for (std::size_t i = 0; i < dyad_hours.size(); ++i) {
        const auto& dh = dyad_hours[i];
        out.push_back(ScoredDyadHour{dh.key, dh.hour, aggregate(losses[i], agg), dh.label, losses[i].size()});
    }
    return out;
}

void write_scores_csv(std::ostream& out, std::vector<ScoredDyadHour> scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDyadHour& a, const ScoredDyadHour& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.hour, a.key) < std::tie(b.hour, b.key);
    });
    out << "ip_lo,ip_hi,hour,score,label,window_count\n";
    char buf[40];
    for (const auto& s : scored) {
        std::snprintf(buf, sizeof buf, "%.17g", s.score);
        out << s.key.ip_lo << ',' << s.key.ip_hi << ',' << s.hour << ',' << buf << ',' << label_name(s.label) << ',' << s.window_count
            << '\n';
    }
}

void write_scores_csv(const std::string& path, std::vector<ScoredDyadHour> scored) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scores csv '" + path + "'");
    write_scores_csv(out, std::move(scored));
    out.flush();
    if (!out) throw DataError("write failed for scores csv '" + path + "'");
}

std::vector<ScoredDyadHour> read_scores_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != "ip_lo,ip_hi,hour,score,label,window_count") {
        throw DataError("scores csv: missing or unexpected header");
    }
    std::vector<ScoredDyadHour> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw DataError("scores csv line " + std::to_string(line_no) + ": expected 6 fields");
        try {
            ScoredDyadHour s;
            s.key = DyadKey::of(trim(f[0]), trim(f[1]));
            s.hour = parse_int(trim(f[2]), "hour");
            s.score = parse_double(trim(f[3]), "score");
            s.label = parse_label(f[4]);
            s.window_count = static_cast<std::size_t>(parse_uint64(trim(f[5]), "window_count"));
            out.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw DataError("scores csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ScoredDyadHour> read_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores csv '" + path + "'");
    return read_scores_csv(in);
}

}  // namespace flowlm

#include "flowlm/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "flowlm/error.hpp"

namespace flowlm {

RocCurve roc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size()) throw DataError("roc: score and label counts differ");
    const auto P = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Attack));
    const std::size_t N = labels.size() - P;
    if (P == 0 || N == 0) {
        throw DataError("AUC undefined: labels contain only one class (" + std::to_string(P) + " attack, " + std::to_string(N) +
                        " normal)");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Integer (fp, tp) vertices; one per distinct score.
    std::vector<std::pair<std::size_t, std::size_t>> vertices{{0, 0}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double s = scores[order[k]];
        while (k < order.size() && scores[order[k]] == s) {
            (labels[order[k]] == Label::Attack ? tp : fp) += 1;
            ++k;
        }
        vertices.emplace_back(fp, tp);
    }

    // Twice the area in units of 1/(P*N), exact in integers for any
    // realistic size, so ties contribute exactly one half.
    long double twice_area = 0;
    for (std::size_t k = 1; k < vertices.size(); ++k) {
        const auto [f0, t0] = vertices[k - 1];
        const auto [f1, t1] = vertices[k];
        twice_area += static_cast<long double>(f1 - f0) * static_cast<long double>(t0 + t1);
    }

    RocCurve curve;
    curve.positives = P;
    curve.negatives = N;
    curve.auc = static_cast<double>(twice_area / (2.0L * static_cast<long double>(P) * static_cast<long double>(N)));

    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (const auto& v : vertices) {
        if (kept.size() >= 2) {
            const auto [fa, ta] = kept[kept.size() - 2];
            const auto [fb, tb] = kept.back();
            const long long cross = static_cast<long long>(fb - fa) * static_cast<long long>(v.second - tb) -
                                    static_cast<long long>(tb - ta) * static_cast<long long>(v.first - fb);
            if (cross == 0) kept.pop_back();
        }
        kept.push_back(v);
    }
    for (const auto& [f, t] : kept) {
        curve.points.push_back({static_cast<double>(f) / static_cast<double>(N), static_cast<double>(t) / static_cast<double>(P)});
    }
    return curve;
}

RocCurve roc(const std::vector<ScoredDyadHour>& scored) {
    std::vector<double> scores;
    std::vector<Label> labels;
    scores.reserve(scored.size());
    labels.reserve(scored.size());
    for (const auto& s : scored) {
        scores.push_back(s.score);
        labels.push_back(s.label);
    }
    return roc(scores, labels);
}

void export_roc(const RocCurve& curve, std::ostream& out) {
    char buf[80];
    out << "fpr,tpr\n";
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "# auc=%.17g\n", curve.auc);
    out << buf;
    if (!out) throw DataError("export_roc: write failed");
}

void export_roc(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write roc csv '" + path + "'");
    export_roc(curve, out);
    out.flush();
    if (!out) throw DataError("write failed for roc csv '" + path + "'");
}

RocCurve read_roc_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "fpr,tpr") throw DataError("roc csv: missing header");
    RocCurve curve;
    bool have_auc = false;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("# auc=", 0) == 0) {
            curve.auc = parse_double(t.substr(6), "auc");
            have_auc = true;
            continue;
        }
        const auto f = split_csv_line(t);
        if (f.size() != 2) throw DataError("roc csv: expected fpr,tpr row, got '" + t + "'");
        curve.points.push_back({parse_double(f[0], "fpr"), parse_double(f[1], "tpr")});
    }
    if (!have_auc) throw DataError("roc csv: missing '# auc=' line");
    return curve;
}

}  // namespace flowlm

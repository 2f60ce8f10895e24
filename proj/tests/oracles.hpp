// Reference implementations used only by tests. They are written as plain
// loops over std::vector so they share no code path with the library.
#ifndef FLOWLM_TESTS_ORACLES_HPP
#define FLOWLM_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "flowlm/evaluator.hpp"
#include "flowlm/neural.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double phi(double z, flowlm::Activation a) {
    return a == flowlm::Activation::Relu ? (z > 0.0 ? z : 0.0) : z;
}

// W * x for a row-major read of an Eigen matrix, element by element.
inline Vec matvec(const flowlm::Matrix& W, const Vec& x) {
    Vec out(static_cast<std::size_t>(W.rows()), 0.0);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * x[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = s;
    }
    return out;
}

struct Cell {
    Vec h;
    Vec c;
};

// The four gate equations written out one unit at a time.
inline Cell lstm_step(const flowlm::LstmWeights& w, const Vec& x, const Vec& h_prev, const Vec& c_prev,
                      flowlm::Activation act) {
    const std::size_t u = h_prev.size();
    const Vec wx = matvec(w.W, x);
    const Vec uh = matvec(w.U, h_prev);
    Cell out{Vec(u), Vec(u)};
    for (std::size_t j = 0; j < u; ++j) {
        auto z = [&](std::size_t gate) {
            const std::size_t r = gate * u + j;
            return wx[r] + uh[r] + w.b(static_cast<Eigen::Index>(r), 0);
        };
        const double i = sigmoid(z(0));
        const double f = sigmoid(z(1));
        const double g = phi(z(2), act);
        const double o = sigmoid(z(3));
        out.c[j] = f * c_prev[j] + i * g;
        out.h[j] = o * phi(out.c[j], act);
    }
    return out;
}

// Runs one direction over the unmasked steps. Returns the output at every
// step (zeros at PAD) and leaves the final state in `last`.
inline std::vector<Vec> run(const flowlm::LstmWeights& w, flowlm::Activation act, const std::vector<Vec>& xs,
                            const std::vector<bool>& real, bool reverse, Vec& last) {
    const std::size_t u = static_cast<std::size_t>(w.U.cols());
    const std::size_t T = xs.size();
    Cell s{Vec(u, 0.0), Vec(u, 0.0)};
    std::vector<Vec> outs(T, Vec(u, 0.0));
    for (std::size_t k = 0; k < T; ++k) {
        const std::size_t t = reverse ? T - 1 - k : k;
        if (!real[t]) continue;
        s = lstm_step(w, xs[t], s.h, s.c, act);
        outs[t] = s.h;
    }
    last = s.h;
    return outs;
}

// Eval-mode probabilities for one context, straight from the parameters.
inline Vec forward(const flowlm::Model& m, const std::vector<flowlm::TokenIndex>& context) {
    const auto& p = m.params;
    const auto& cfg = m.config;
    const std::size_t T = context.size();
    std::vector<Vec> emb(T);
    std::vector<bool> real(T);
    for (std::size_t t = 0; t < T; ++t) {
        real[t] = context[t] != 0;
        emb[t].resize(cfg.embed_dim);
        for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
            emb[t][d] = real[t] ? p.embedding(context[t], static_cast<Eigen::Index>(d)) : 0.0;
        }
    }
    Vec fin_f, fin_b;
    const auto of = run(p.lstm[0], cfg.layer1_activation, emb, real, false, fin_f);
    const auto ob = run(p.lstm[1], cfg.layer1_activation, emb, real, true, fin_b);
    std::vector<Vec> seq(T);
    for (std::size_t t = 0; t < T; ++t) {
        seq[t] = of[t];
        seq[t].insert(seq[t].end(), ob[t].begin(), ob[t].end());
    }
    Vec h2f, h2b;
    run(p.lstm[2], cfg.layer2_activation, seq, real, false, h2f);
    run(p.lstm[3], cfg.layer2_activation, seq, real, true, h2b);
    Vec top = h2f;
    top.insert(top.end(), h2b.begin(), h2b.end());

    Vec dense = matvec(p.dense_W, top);
    for (std::size_t j = 0; j < dense.size(); ++j) {
        dense[j] = std::max(0.0, dense[j] + p.dense_b(static_cast<Eigen::Index>(j), 0));
    }
    Vec logits = matvec(p.output_W, dense);
    double mx = -INFINITY;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] += p.output_b(static_cast<Eigen::Index>(k), 0);
        mx = std::max(mx, logits[k]);
    }
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (double& l : logits) l /= z;
    return logits;
}

inline double loss(const Vec& probs, flowlm::TokenIndex target) {
    return -std::log(std::max(probs[static_cast<std::size_t>(target)], 1e-12));
}

// P(attack score > normal score) + 0.5 P(equal), by enumerating every pair.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<flowlm::Label>& labels) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != flowlm::Label::Attack) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != flowlm::Label::Normal) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

template <typename Range>
std::size_t distinct_count(const Range& tokens) {
    std::set<std::string> seen(std::begin(tokens), std::end(tokens));
    return seen.size();
}

}  // namespace oracle

#endif

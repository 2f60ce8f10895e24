#include "flowlm/neural.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "flowlm/error.hpp"

namespace flowlm {

namespace {

// Adam moments for rarely seen tokens decay toward the subnormal range, where
// x86 arithmetic slows by two orders of magnitude. Flush them for the scope.
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) {
        _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
        _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
    }
    ~FlushDenormals() { _mm_setcsr(saved_); }

    FlushDenormals(const FlushDenormals&) = delete;
    FlushDenormals& operator=(const FlushDenormals&) = delete;

private:
    unsigned int saved_;
#else
    FlushDenormals() = default;
#endif
};

using RowMask = Eigen::RowVectorXd;

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

Matrix apply_phi(const Matrix& z, Activation phi) {
    if (phi == Activation::Identity) return z;
    return z.cwiseMax(0.0);
}

// Derivative of phi expressed through its input.
Matrix phi_grad(const Matrix& z, Activation phi) {
    if (phi == Activation::Identity) return Matrix::Ones(z.rows(), z.cols());
    return (z.array() > 0.0).cast<double>().matrix();
}

// Columns where m == 1 take `fresh`, the rest keep `old`.
Matrix blend(const Matrix& fresh, const Matrix& old, const RowMask& m) {
    Matrix out = old;
    for (Eigen::Index b = 0; b < m.size(); ++b) {
        if (m(b) != 0.0) out.col(b) = fresh.col(b);
    }
    return out;
}

void zero_masked_columns(Matrix& x, const RowMask& m) {
    for (Eigen::Index b = 0; b < m.size(); ++b) {
        if (m(b) == 0.0) x.col(b).setZero();
    }
}

Matrix dropout_multipliers(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    Matrix d(rows, cols);
    if (rate <= 0.0) {
        d.setOnes();
        return d;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) d(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return d;
}

/// Runs one direction over all timesteps. Returns h after each step indexed
/// by time, zero in masked columns; `h`/`c` end as the final states.
std::vector<Matrix> run_direction(const LstmWeights& w, Activation phi, const std::vector<Matrix>& inputs, const Matrix& mask,
                                  bool reverse, DirectionTrace& tr, Matrix& h, Matrix& c) {
    const Eigen::Index u = w.U.cols();
    const auto B = mask.cols();
    const std::size_t T = inputs.size();
    h = Matrix::Zero(u, B);
    c = Matrix::Zero(u, B);
    std::vector<Matrix> outputs(T);
    tr = DirectionTrace{};
    for (std::size_t s = 0; s < T; ++s) {
        const std::size_t t = reverse ? T - 1 - s : s;
        const RowMask m = mask.row(static_cast<Eigen::Index>(t));
        const bool any = m.sum() > 0.0;
        tr.time.push_back(t);
        tr.any_active.push_back(any);
        tr.x.push_back(inputs[t]);
        tr.h_prev.push_back(h);
        tr.c_prev.push_back(c);
        if (any) {
            Matrix z = w.W * inputs[t] + w.U * h;
            z.colwise() += w.b.col(0);
            Matrix gates(4 * u, B);
            gates.topRows(u) = sigmoid(z.topRows(u));
            gates.middleRows(u, u) = sigmoid(z.middleRows(u, u));
            gates.middleRows(2 * u, u) = apply_phi(z.middleRows(2 * u, u), phi);
            gates.bottomRows(u) = sigmoid(z.bottomRows(u));
            const Matrix c_new = (gates.middleRows(u, u).array() * c.array() +
                                  gates.topRows(u).array() * gates.middleRows(2 * u, u).array())
                                     .matrix();
            const Matrix h_new = (gates.bottomRows(u).array() * apply_phi(c_new, phi).array()).matrix();
            c = blend(c_new, c, m);
            h = blend(h_new, h, m);
            tr.gates.push_back(std::move(gates));
        } else {
            tr.gates.emplace_back();
        }
        tr.c.push_back(c);
        outputs[t] = h;
        zero_masked_columns(outputs[t], m);
    }
    return outputs;
}

/// Reverse pass of run_direction. `dh_seq` (by time) carries gradients of the
/// per-step outputs, `dh_final` the gradient of the final state. Accumulates
/// into `g` and returns input gradients by time.
std::vector<Matrix> backward_direction(const LstmWeights& w, Activation phi, const DirectionTrace& tr, const Matrix& mask,
                                       const std::vector<Matrix>* dh_seq, const Matrix* dh_final, LstmWeights& g) {
    const Eigen::Index u = w.U.cols();
    const auto B = mask.cols();
    const std::size_t T = tr.time.size();
    Matrix dh = dh_final ? *dh_final : Matrix::Zero(u, B);
    Matrix dc = Matrix::Zero(u, B);
    std::vector<Matrix> dx(T);
    for (std::size_t s = T; s-- > 0;) {
        const std::size_t t = tr.time[s];
        const RowMask m = mask.row(static_cast<Eigen::Index>(t));
        if (dh_seq) {
            Matrix extra = (*dh_seq)[t];
            zero_masked_columns(extra, m);
            dh += extra;
        }
        if (!tr.any_active[s]) {
            dx[t] = Matrix::Zero(tr.x[s].rows(), B);
            continue;
        }
        const Matrix& gates = tr.gates[s];
        const auto i = gates.topRows(u).array();
        const auto f = gates.middleRows(u, u).array();
        const auto gg = gates.middleRows(2 * u, u).array();
        const auto o = gates.bottomRows(u).array();
        const Matrix& c_t = tr.c[s];

        const Eigen::ArrayXXd phic = apply_phi(c_t, phi).array();
        const Eigen::ArrayXXd dct = dc.array() + dh.array() * o * phi_grad(c_t, phi).array();

        Matrix dz(4 * u, B);
        dz.topRows(u) = (dct * gg * i * (1.0 - i)).matrix();
        dz.middleRows(u, u) = (dct * tr.c_prev[s].array() * f * (1.0 - f)).matrix();
        // phi'(z_g) from the activated value: identity -> 1, relu -> g > 0.
        if (phi == Activation::Identity) {
            dz.middleRows(2 * u, u) = (dct * i).matrix();
        } else {
            dz.middleRows(2 * u, u) = (dct * i * (gg > 0.0).cast<double>()).matrix();
        }
        dz.bottomRows(u) = (dh.array() * phic * o * (1.0 - o)).matrix();
        zero_masked_columns(dz, m);

        g.W.noalias() += dz * tr.x[s].transpose();
        g.U.noalias() += dz * tr.h_prev[s].transpose();
        g.b += dz.rowwise().sum();
        dx[t] = w.W.transpose() * dz;

        const Matrix dh_prev = w.U.transpose() * dz;
        const Matrix dc_prev = (dct * f).matrix();
        dh = blend(dh_prev, dh, m);
        dc = blend(dc_prev, dc, m);
    }
    return dx;
}

}  // namespace

const char* activation_name(Activation a) { return a == Activation::Identity ? "identity" : "relu"; }

Activation parse_activation(const std::string& s) {
    if (s == "identity" || s == "linear") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + s + "' (expected identity or relu)");
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ConfigError(std::string("model config: ") + name + " must be >= 1");
    };
    positive(window, "window");
    positive(embed_dim, "embed_dim");
    positive(lstm_units, "lstm_units");
    positive(dense_units, "dense_units");
    positive(batch_size, "batch_size");
    if (vocab_size < 2) throw ConfigError("model config: vocab_size must be >= 2 (PAD and UNK)");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("model config: dropout_rate must be in [0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("model config: learning_rate must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("model config: grad_clip_norm must be > 0");
}

KeyValues ModelConfig::to_key_values() const {
    auto real = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    return {
        {"window", std::to_string(window)},
        {"embed_dim", std::to_string(embed_dim)},
        {"lstm_units", std::to_string(lstm_units)},
        {"dense_units", std::to_string(dense_units)},
        {"dropout_rate", real(dropout_rate)},
        {"layer1_activation", activation_name(layer1_activation)},
        {"layer2_activation", activation_name(layer2_activation)},
        {"vocab_size", std::to_string(vocab_size)},
        {"seed", std::to_string(seed)},
        {"learning_rate", real(learning_rate)},
        {"batch_size", std::to_string(batch_size)},
        {"epochs", std::to_string(epochs)},
        {"grad_clip_norm", real(grad_clip_norm)},
    };
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv, ModelConfig base) {
    auto size = [&](const char* key, std::size_t& field) {
        if (auto it = kv.find(key); it != kv.end()) {
            const auto v = parse_int(it->second, key);
            if (v < 0) throw ConfigError(std::string("model config: ") + key + " must be non-negative");
            field = static_cast<std::size_t>(v);
        }
    };
    auto real = [&](const char* key, double& field) {
        if (auto it = kv.find(key); it != kv.end()) field = parse_double(it->second, key);
    };
    size("window", base.window);
    size("embed_dim", base.embed_dim);
    size("lstm_units", base.lstm_units);
    size("dense_units", base.dense_units);
    real("dropout_rate", base.dropout_rate);
    if (auto it = kv.find("layer1_activation"); it != kv.end()) base.layer1_activation = parse_activation(it->second);
    if (auto it = kv.find("layer2_activation"); it != kv.end()) base.layer2_activation = parse_activation(it->second);
    size("vocab_size", base.vocab_size);
    if (auto it = kv.find("seed"); it != kv.end()) base.seed = parse_uint64(it->second, "seed");
    real("learning_rate", base.learning_rate);
    size("batch_size", base.batch_size);
    size("epochs", base.epochs);
    real("grad_clip_norm", base.grad_clip_norm);
    return base;
}

Parameters Parameters::zeros_like() const {
    Parameters z = *this;
    z.for_each([](const std::string&, Matrix& m) { m.setZero(); });
    return z;
}

std::size_t Parameters::parameter_count() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

Parameters init_parameters(const ModelConfig& config) {
    config.validate();
    const auto V = static_cast<Eigen::Index>(config.vocab_size);
    const auto E = static_cast<Eigen::Index>(config.embed_dim);
    const auto u = static_cast<Eigen::Index>(config.lstm_units);
    const auto D = static_cast<Eigen::Index>(config.dense_units);

    Parameters p;
    p.embedding = Matrix::Zero(V, E);
    for (int layer = 0; layer < 2; ++layer) {
        const Eigen::Index in = layer == 0 ? E : 2 * u;
        for (int dir = 0; dir < 2; ++dir) {
            auto& l = p.lstm[Parameters::lstm_index(layer, dir)];
            l.W = Matrix::Zero(4 * u, in);
            l.U = Matrix::Zero(4 * u, u);
            l.b = Matrix::Zero(4 * u, 1);
        }
    }
    p.dense_W = Matrix::Zero(D, 2 * u);
    p.dense_b = Matrix::Zero(D, 1);
    p.output_W = Matrix::Zero(V, D);
    p.output_b = Matrix::Zero(V, 1);

    Rng rng(config.seed);
    p.for_each([&](const std::string& name, Matrix& m) {
        if (name.ends_with("_b")) return;
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
        }
    });
    for (auto& l : p.lstm) l.b.middleRows(u, u).setOnes();
    p.embedding.row(0).setZero();
    return p;
}

Model init_model(const ModelConfig& config, Vocabulary vocab, FeatureScheme scheme) {
    Model m;
    m.config = config;
    if (!vocab.tokens().empty()) m.config.vocab_size = vocab.size();
    m.vocab = std::move(vocab);
    m.scheme = scheme;
    m.params = init_parameters(m.config);
    return m;
}

CellState lstm_cell_step(const LstmWeights& w, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& c_prev, Activation phi) {
    const Eigen::Index u = w.U.cols();
    if (w.W.rows() != 4 * u || w.U.rows() != 4 * u || w.b.rows() != 4 * u || w.W.cols() != x.size() || h_prev.size() != u ||
        c_prev.size() != u) {
        throw DataError("lstm_cell_step: shape mismatch");
    }
    const Matrix z = w.W * x + w.U * h_prev + w.b;
    const Matrix i = sigmoid(z.topRows(u));
    const Matrix f = sigmoid(z.middleRows(u, u));
    const Matrix g = apply_phi(z.middleRows(2 * u, u), phi);
    const Matrix o = sigmoid(z.bottomRows(u));
    CellState out;
    out.c = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
    out.h = (o.array() * apply_phi(out.c, phi).array()).matrix();
    return out;
}

Batch make_batch(std::span<const Window> windows) {
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return make_batch(windows, order);
}

Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> order) {
    Batch b;
    if (order.empty()) return b;
    const std::size_t width = windows[order[0]].context.size();
    b.tokens.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(order.size()));
    b.targets.reserve(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
        const Window& w = windows[order[j]];
        if (w.context.size() != width) throw DataError("make_batch: windows of differing width");
        for (std::size_t t = 0; t < width; ++t) b.tokens(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = w.context[t];
        b.targets.push_back(w.target);
    }
    return b;
}

ForwardResult forward(const Model& model, const Batch& batch, Mode mode, Rng* rng) {
    const FlushDenormals ftz;
    const Parameters& p = model.params;
    const ModelConfig& cfg = model.config;
    const auto V = p.embedding.rows();
    const auto B = static_cast<Eigen::Index>(batch.size());
    const std::size_t T = batch.width();
    const bool train = mode == Mode::Train && cfg.dropout_rate > 0.0;
    if (mode == Mode::Train && !rng && cfg.dropout_rate > 0.0) throw ConfigError("forward: Train mode with dropout needs an rng");

    ForwardResult res;
    ForwardTrace& tr = res.trace;
    tr.mode = mode;
    tr.params = &p;
    tr.batch = static_cast<std::size_t>(B);
    tr.width = T;
    tr.tokens = batch.tokens;
    tr.mask = Matrix::Zero(static_cast<Eigen::Index>(T), B);

    std::vector<Matrix> embedded(T, Matrix(p.embedding.cols(), B));
    for (Eigen::Index b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const TokenIndex tok = batch.tokens(static_cast<Eigen::Index>(t), b);
            if (tok < 0 || tok >= V) {
                throw DataError("forward: token index " + std::to_string(tok) + " outside [0, " + std::to_string(V) + ")");
            }
            embedded[t].col(b) = p.embedding.row(tok).transpose();
            tr.mask(static_cast<Eigen::Index>(t), b) = tok != kPadIndex ? 1.0 : 0.0;
        }
    }

    const Eigen::Index u = p.lstm[0].U.cols();
    Matrix h, c;
    const auto fwd1 = run_direction(p.lstm[0], cfg.layer1_activation, embedded, tr.mask, false, tr.lstm[0], h, c);
    const auto bwd1 = run_direction(p.lstm[1], cfg.layer1_activation, embedded, tr.mask, true, tr.lstm[1], h, c);

    std::vector<Matrix> layer2_in(T);
    tr.layer1_out.resize(T);
    if (train) tr.layer1_drop.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        Matrix y(2 * u, B);
        y.topRows(u) = fwd1[t];
        y.bottomRows(u) = bwd1[t];
        if (train) {
            tr.layer1_drop[t] = dropout_multipliers(2 * u, B, cfg.dropout_rate, *rng);
            layer2_in[t] = y.cwiseProduct(tr.layer1_drop[t]);
        } else {
            layer2_in[t] = y;
        }
        tr.layer1_out[t] = std::move(y);
    }

    Matrix h2f, h2b;
    run_direction(p.lstm[2], cfg.layer2_activation, layer2_in, tr.mask, false, tr.lstm[2], h2f, c);
    run_direction(p.lstm[3], cfg.layer2_activation, layer2_in, tr.mask, true, tr.lstm[3], h2b, c);
    tr.layer2_out.resize(2 * u, B);
    tr.layer2_out.topRows(u) = h2f;
    tr.layer2_out.bottomRows(u) = h2b;

    Matrix dense_in = tr.layer2_out;
    if (train) {
        tr.layer2_drop = dropout_multipliers(2 * u, B, cfg.dropout_rate, *rng);
        dense_in = dense_in.cwiseProduct(tr.layer2_drop);
    }
    tr.dense_pre = p.dense_W * dense_in;
    tr.dense_pre.colwise() += p.dense_b.col(0);
    tr.dense_out = tr.dense_pre.cwiseMax(0.0);
    Matrix out_in = tr.dense_out;
    if (train) {
        tr.dense_drop = dropout_multipliers(tr.dense_out.rows(), B, cfg.dropout_rate, *rng);
        out_in = out_in.cwiseProduct(tr.dense_drop);
    }

    Matrix logits = p.output_W * out_in;
    logits.colwise() += p.output_b.col(0);
    for (Eigen::Index b = 0; b < B; ++b) {
        auto col = logits.col(b);
        col.array() = (col.array() - col.maxCoeff()).exp();
        col /= col.sum();
    }
    res.probabilities = std::move(logits);
    return res;
}

Matrix predict(const Model& model, const Batch& batch) { return forward(model, batch, Mode::Eval).probabilities; }

double log_loss(std::span<const double> probabilities, TokenIndex target) {
    if (target < 0 || static_cast<std::size_t>(target) >= probabilities.size()) {
        throw DataError("log_loss: target " + std::to_string(target) + " outside distribution of size " +
                        std::to_string(probabilities.size()));
    }
    return -std::log(std::max(probabilities[static_cast<std::size_t>(target)], kLossFloor));
}

double mean_loss(const Matrix& probabilities, const std::vector<TokenIndex>& targets) {
    if (static_cast<std::size_t>(probabilities.cols()) != targets.size()) throw DataError("mean_loss: batch size mismatch");
    double sum = 0.0;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        const auto col = probabilities.col(static_cast<Eigen::Index>(b));
        sum += log_loss(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), targets[b]);
    }
    return targets.empty() ? 0.0 : sum / static_cast<double>(targets.size());
}

Parameters backward(const Model& model, const ForwardTrace& tr, const std::vector<TokenIndex>& targets) {
    const FlushDenormals ftz;
    const Parameters& p = model.params;
    const ModelConfig& cfg = model.config;
    if (tr.mode != Mode::Train) throw DataError("backward: trace was not produced in Train mode");
    if (tr.params != &p) throw DataError("backward: trace was produced by a different parameter set");
    if (targets.size() != tr.batch) throw DataError("backward: target count does not match trace batch size");
    if (tr.dense_pre.rows() != p.dense_W.rows() || tr.layer2_out.rows() != p.dense_W.cols()) {
        throw DataError("backward: trace shapes do not match the model");
    }
    const bool dropped = cfg.dropout_rate > 0.0;
    const auto B = static_cast<Eigen::Index>(tr.batch);
    const std::size_t T = tr.width;
    const auto V = p.output_W.rows();
    const Eigen::Index u = p.lstm[0].U.cols();

    Parameters g = p.zeros_like();

    // Softmax residual, recomputed from the stored dense activations.
    Matrix out_in = dropped ? tr.dense_out.cwiseProduct(tr.dense_drop) : tr.dense_out;
    Matrix logits = p.output_W * out_in;
    logits.colwise() += p.output_b.col(0);
    Matrix dlogits(V, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const TokenIndex target = targets[static_cast<std::size_t>(b)];
        if (target < 0 || target >= V) throw DataError("backward: target index out of range");
        auto col = logits.col(b);
        Eigen::VectorXd e = (col.array() - col.maxCoeff()).exp();
        e /= e.sum();
        e(target) -= 1.0;
        dlogits.col(b) = e / static_cast<double>(B);
    }

    g.output_W.noalias() = dlogits * out_in.transpose();
    g.output_b = dlogits.rowwise().sum();
    Matrix d_dense = p.output_W.transpose() * dlogits;
    if (dropped) d_dense = d_dense.cwiseProduct(tr.dense_drop);
    d_dense = d_dense.cwiseProduct((tr.dense_pre.array() > 0.0).cast<double>().matrix());

    const Matrix dense_in = dropped ? tr.layer2_out.cwiseProduct(tr.layer2_drop) : tr.layer2_out;
    g.dense_W.noalias() = d_dense * dense_in.transpose();
    g.dense_b = d_dense.rowwise().sum();
    Matrix d_layer2 = p.dense_W.transpose() * d_dense;
    if (dropped) d_layer2 = d_layer2.cwiseProduct(tr.layer2_drop);

    const Matrix d2f = d_layer2.topRows(u);
    const Matrix d2b = d_layer2.bottomRows(u);
    auto dx2f = backward_direction(p.lstm[2], cfg.layer2_activation, tr.lstm[2], tr.mask, nullptr, &d2f, g.lstm[2]);
    auto dx2b = backward_direction(p.lstm[3], cfg.layer2_activation, tr.lstm[3], tr.mask, nullptr, &d2b, g.lstm[3]);

    std::vector<Matrix> dh1f(T), dh1b(T);
    for (std::size_t t = 0; t < T; ++t) {
        Matrix dy = dx2f[t] + dx2b[t];
        if (dropped) dy = dy.cwiseProduct(tr.layer1_drop[t]);
        dh1f[t] = dy.topRows(u);
        dh1b[t] = dy.bottomRows(u);
    }
    auto dx1f = backward_direction(p.lstm[0], cfg.layer1_activation, tr.lstm[0], tr.mask, &dh1f, nullptr, g.lstm[0]);
    auto dx1b = backward_direction(p.lstm[1], cfg.layer1_activation, tr.lstm[1], tr.mask, &dh1b, nullptr, g.lstm[1]);

    for (std::size_t t = 0; t < T; ++t) {
        for (Eigen::Index b = 0; b < B; ++b) {
            const TokenIndex tok = tr.tokens(static_cast<Eigen::Index>(t), b);
            if (tok == kPadIndex) continue;
            g.embedding.row(tok) += (dx1f[t].col(b) + dx1b[t].col(b)).transpose();
        }
    }
    g.embedding.row(0).setZero();
    return g;
}

double global_norm(const Parameters& p) {
    double sq = 0.0;
    p.for_each([&sq](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
    return std::sqrt(sq);
}

TrainResult train(Model& model, const std::vector<Window>& windows, const EpochCallback& on_epoch) {
    const FlushDenormals ftz;
    const ModelConfig& cfg = model.config;
    cfg.validate();
    if (windows.empty()) throw DataError("train: empty window list");
    if (static_cast<std::size_t>(model.params.embedding.rows()) != cfg.vocab_size) {
        throw DataError("train: embedding rows do not match vocab_size");
    }
    for (const Window& w : windows) {
        if (w.context.size() != cfg.window) throw DataError("train: window width differs from model config");
    }

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    Parameters m1 = model.params.zeros_like();
    Parameters m2 = model.params.zeros_like();
    std::uint64_t step = 0;
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const Batch batch = make_batch(windows, std::span<const std::size_t>(order).subspan(start, n));
            const ForwardResult fwd = forward(model, batch, Mode::Train, &rng);
            loss_sum += mean_loss(fwd.probabilities, batch.targets) * static_cast<double>(n);
            Parameters grads = backward(model, fwd.trace, batch.targets);

            const double norm = global_norm(grads);
            if (norm > cfg.grad_clip_norm) {
                const double scale = cfg.grad_clip_norm / norm;
                grads.for_each([scale](const std::string&, Matrix& m) { m *= scale; });
            }

            ++step;
            const double lr_t = cfg.learning_rate * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                                (1.0 - std::pow(beta1, static_cast<double>(step)));
            // Walk the four containers in lockstep; for_each order is fixed.
            std::vector<Matrix*> ps, gs, ms, vs;
            model.params.for_each([&](const std::string&, Matrix& m) { ps.push_back(&m); });
            grads.for_each([&](const std::string&, Matrix& m) { gs.push_back(&m); });
            m1.for_each([&](const std::string&, Matrix& m) { ms.push_back(&m); });
            m2.for_each([&](const std::string&, Matrix& m) { vs.push_back(&m); });
            for (std::size_t k = 0; k < ps.size(); ++k) {
                ms[k]->array() = beta1 * ms[k]->array() + (1.0 - beta1) * gs[k]->array();
                vs[k]->array() = beta2 * vs[k]->array() + (1.0 - beta2) * gs[k]->array().square();
                ps[k]->array() -= lr_t * ms[k]->array() / (vs[k]->array().sqrt() + eps);
            }
            model.params.embedding.row(0).setZero();
        }
        const double epoch_loss = loss_sum / static_cast<double>(order.size());
        result.loss_history.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return result;
}

}  // namespace flowlm

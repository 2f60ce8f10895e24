#ifndef FLOWLM_NEURAL_HPP
#define FLOWLM_NEURAL_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowlm/config_file.hpp"
#include "flowlm/rng.hpp"
#include "flowlm/sequencer.hpp"
#include "flowlm/tokenizer.hpp"

namespace flowlm {

using Matrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { Identity, Relu };
const char* activation_name(Activation a);
Activation parse_activation(const std::string& s);

struct ModelConfig {
    std::size_t window = 10;
    std::size_t embed_dim = 100;
    std::size_t lstm_units = 50;  // per direction
    std::size_t dense_units = 100;
    double dropout_rate = 0.2;
    Activation layer1_activation = Activation::Identity;
    Activation layer2_activation = Activation::Relu;
    std::size_t vocab_size = 2;
    std::uint64_t seed = 42;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t epochs = 5;
    double grad_clip_norm = 5.0;

    void validate() const;  // throws ConfigError

    /// Keys match the field names above.
    KeyValues to_key_values() const;
    /// Overrides fields of `base` with any keys present; unknown keys are
    /// ignored so one file can hold scenario and model settings.
    static ModelConfig from_key_values(const KeyValues& kv, ModelConfig base);
    static ModelConfig from_key_values(const KeyValues& kv) { return from_key_values(kv, ModelConfig{}); }

    bool operator==(const ModelConfig&) const = default;
};

/// One LSTM direction. Gate rows are stacked [input; forget; candidate; output],
/// `units` rows each. Bias is a column vector.
struct LstmWeights {
    Matrix W;  // 4u x input_dim
    Matrix U;  // 4u x u
    Matrix b;  // 4u x 1
};

/// All trainable tensors. Also used as the gradient and Adam-moment container.
struct Parameters {
    Matrix embedding;               // V x embed_dim, row 0 is PAD and stays zero
    std::array<LstmWeights, 4> lstm;  // [layer1 fwd, layer1 bwd, layer2 fwd, layer2 bwd]
    Matrix dense_W;                 // dense x 2u
    Matrix dense_b;                 // dense x 1
    Matrix output_W;                // V x dense
    Matrix output_b;                // V x 1

    static constexpr std::size_t lstm_index(int layer, int dir) { return static_cast<std::size_t>(layer * 2 + dir); }

    /// Same shapes, all zeros.
    Parameters zeros_like() const;

    /// Visits every tensor in a fixed order with its serialized name.
    template <typename F>
    void for_each(F&& f) {
        for_each_impl(*this, f);
    }
    template <typename F>
    void for_each(F&& f) const {
        for_each_impl(*this, f);
    }

    std::size_t parameter_count() const;

private:
    template <typename Self, typename F>
    static void for_each_impl(Self& self, F& f) {
        static const char* const lstm_names[4] = {"lstm1_fwd", "lstm1_bwd", "lstm2_fwd", "lstm2_bwd"};
        f(std::string("embedding"), self.embedding);
        for (std::size_t k = 0; k < 4; ++k) {
            f(std::string(lstm_names[k]) + "_W", self.lstm[k].W);
            f(std::string(lstm_names[k]) + "_U", self.lstm[k].U);
            f(std::string(lstm_names[k]) + "_b", self.lstm[k].b);
        }
        f(std::string("dense_W"), self.dense_W);
        f(std::string("dense_b"), self.dense_b);
        f(std::string("output_W"), self.output_W);
        f(std::string("output_b"), self.output_b);
    }
};

/// A trained or trainable language model: weights plus everything needed to
/// tokenize and encode new flows the same way the training data was.
struct Model {
    ModelConfig config;
    Vocabulary vocab;
    FeatureScheme scheme;
    Parameters params;
};

/// Glorot-uniform weights from config.seed, zero biases except forget-gate
/// biases of 1, zero PAD embedding row.
Parameters init_parameters(const ModelConfig& config);
Model init_model(const ModelConfig& config, Vocabulary vocab = {}, FeatureScheme scheme = {});

/// Single-vector LSTM step. Gates use the logistic sigmoid; `phi` applies to
/// the candidate and to the cell state on output.
struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};
CellState lstm_cell_step(const LstmWeights& w, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& c_prev, Activation phi);

/// Contexts stored column per item: tokens(t, b) is position t of item b.
struct Batch {
    Eigen::Matrix<TokenIndex, Eigen::Dynamic, Eigen::Dynamic> tokens;  // width x batch
    std::vector<TokenIndex> targets;

    std::size_t size() const { return static_cast<std::size_t>(tokens.cols()); }
    std::size_t width() const { return static_cast<std::size_t>(tokens.rows()); }
};

Batch make_batch(std::span<const Window> windows);
Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> order);

enum class Mode : std::uint8_t { Train, Eval };

/// Per-direction recurrent bookkeeping, stored in processing order.
struct DirectionTrace {
    std::vector<Matrix> x;       // input at each step (in x B)
    std::vector<Matrix> h_prev;  // u x B
    std::vector<Matrix> c_prev;
    std::vector<Matrix> gates;   // 4u x B, post-activation
    std::vector<Matrix> c;       // u x B, after the step (pass-through where masked)
    std::vector<std::size_t> time;  // timestep index of each processing step
    std::vector<bool> any_active;
};

/// Everything backward() needs to reproduce the forward pass exactly.
struct ForwardTrace {
    Mode mode = Mode::Eval;
    const Parameters* params = nullptr;  // identity of the weights used
    std::size_t batch = 0;
    std::size_t width = 0;
    Eigen::Matrix<TokenIndex, Eigen::Dynamic, Eigen::Dynamic> tokens;
    Matrix mask;                           // width x B, 1 where token != PAD
    std::array<DirectionTrace, 4> lstm;
    std::vector<Matrix> layer1_out;        // per t: 2u x B before dropout
    std::vector<Matrix> layer1_drop;       // per t: dropout multipliers (Train only)
    Matrix layer2_out;                     // 2u x B before dropout
    Matrix layer2_drop;
    Matrix dense_pre;                      // dense x B
    Matrix dense_out;                      // after ReLU, before dropout
    Matrix dense_drop;
};

struct ForwardResult {
    Matrix probabilities;  // V x B, each column sums to 1
    ForwardTrace trace;
};

/// Runs the stack on a batch. Dropout applies only in Train mode and draws
/// from `rng`, which may be null in Eval mode. Throws DataError for token
/// indices outside [0, V).
ForwardResult forward(const Model& model, const Batch& batch, Mode mode, Rng* rng = nullptr);

/// Convenience Eval-mode forward returning only probabilities.
Matrix predict(const Model& model, const Batch& batch);

inline constexpr double kLossFloor = 1e-12;

/// -ln(max(p[target], 1e-12)).
double log_loss(std::span<const double> probabilities, TokenIndex target);

/// Mean cross-entropy over a batch, from forward probabilities.
double mean_loss(const Matrix& probabilities, const std::vector<TokenIndex>& targets);

/// Exact gradient of mean batch cross-entropy with respect to every tensor.
/// Requires a Train-mode trace produced from these same parameters.
Parameters backward(const Model& model, const ForwardTrace& trace, const std::vector<TokenIndex>& targets);

struct TrainResult {
    std::vector<double> loss_history;  // per-epoch mean training loss
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Adam (0.9, 0.999, 1e-8) on global-norm-clipped gradients, one shuffle
/// per epoch from an Rng seeded with config.seed.
TrainResult train(Model& model, const std::vector<Window>& windows, const EpochCallback& on_epoch = {});

double global_norm(const Parameters& p);

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::string& path);
Model load_model(std::istream& in);
Model load_model(const std::string& path);

}  // namespace flowlm

#endif

// Model file layout (text, line oriented):
//
//   flowlm-model 1
//   scheme <proto_byte|service_port> <high_port_threshold>
//   config <key>=<value>            one line per ModelConfig field
//   vocab <n>                       n data tokens follow as "<index> <token>"
//   tensor <name> <rows> <cols>     followed by <rows> lines of <cols> hexfloats
//   end
//
// Weights are written with %a so every double round-trips bit-exactly.

#include <fstream>
#include <sstream>

#include "flowlm/error.hpp"
#include "flowlm/neural.hpp"

namespace flowlm {

namespace {

constexpr const char* kMagic = "flowlm-model";
constexpr int kFormatVersion = 1;

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next(const std::string& expecting) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw DataError("model file truncated at line " + std::to_string(line_no_ + 1) + " (expected " + expecting + ")");
        }
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

std::vector<std::string> words(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string w; ss >> w;) out.push_back(w);
    return out;
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
    if (static_cast<std::size_t>(model.params.embedding.rows()) != model.config.vocab_size || model.vocab.size() > model.config.vocab_size) {
        throw DataError("save_model: vocabulary, config and embedding sizes disagree");
    }
    out << kMagic << ' ' << kFormatVersion << '\n';
    out << "scheme " << scheme_name(model.scheme.kind) << ' ' << model.scheme.high_port_threshold << '\n';
    for (const auto& [key, value] : model.config.to_key_values()) out << "config " << key << '=' << value << '\n';
    out << "vocab " << model.vocab.tokens().size() << '\n';
    for (std::size_t i = 0; i < model.vocab.tokens().size(); ++i) {
        out << (i + kFirstTokenIndex) << ' ' << model.vocab.tokens()[i] << '\n';
    }
    char buf[64];
    model.params.for_each([&](const std::string& name, const Matrix& m) {
        out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%a", m(r, c));
                out << (c ? " " : "") << buf;
            }
            out << '\n';
        }
    });
    out << "end\n";
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    save_model(model, out);
    out.flush();
    if (!out) throw DataError("write failed for model file '" + path + "'");
}

Model load_model(std::istream& in) {
    LineReader reader(in);
    Model model;

    auto header = words(reader.next("header"));
    if (header.size() != 2 || header[0] != kMagic) throw DataError("model file: bad magic (field 'format')");
    if (header[1] != std::to_string(kFormatVersion)) {
        throw DataError("model file: unsupported format version " + header[1] + " (field 'format', expected " +
                        std::to_string(kFormatVersion) + ")");
    }

    auto scheme = words(reader.next("scheme"));
    if (scheme.size() != 3 || scheme[0] != "scheme") throw DataError("model file: malformed field 'scheme'");
    model.scheme.kind = parse_scheme_kind(scheme[1]);
    model.scheme.high_port_threshold = static_cast<std::uint32_t>(parse_uint64(scheme[2], "high_port_threshold"));

    KeyValues cfg;
    std::string line = reader.next("config");
    while (line.rfind("config ", 0) == 0) {
        const std::string kv = line.substr(7);
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DataError("model file line " + std::to_string(reader.line_no()) + ": malformed config entry");
        cfg[kv.substr(0, eq)] = kv.substr(eq + 1);
        line = reader.next("config or vocab");
    }
    static const char* const required[] = {"window", "embed_dim",     "lstm_units", "dense_units", "dropout_rate", "layer1_activation",
                                           "layer2_activation", "vocab_size", "seed",   "learning_rate", "batch_size", "epochs",
                                           "grad_clip_norm"};
    for (const char* key : required) {
        if (!cfg.count(key)) throw DataError(std::string("model file: missing config field '") + key + "'");
    }
    model.config = ModelConfig::from_key_values(cfg);
    model.config.validate();

    auto vocab = words(line);
    if (vocab.size() != 2 || vocab[0] != "vocab") throw DataError("model file: malformed field 'vocab'");
    const auto n_tokens = parse_uint64(vocab[1], "vocab");
    for (std::uint64_t i = 0; i < n_tokens; ++i) {
        const std::string entry = reader.next("vocab entry");
        const auto sp = entry.find(' ');
        if (sp == std::string::npos) throw DataError("model file line " + std::to_string(reader.line_no()) + ": malformed vocab entry");
        const auto idx = parse_int(entry.substr(0, sp), "vocab index");
        const std::string token = entry.substr(sp + 1);
        if (model.vocab.add(token) != idx) {
            throw DataError("model file line " + std::to_string(reader.line_no()) + ": vocab index " + std::to_string(idx) +
                            " out of sequence");
        }
    }

    // Shapes come from the config; every tensor in the file must match them.
    model.params = init_parameters(model.config);
    model.params.for_each([&](const std::string& name, Matrix& m) {
        auto head = words(reader.next("tensor " + name));
        if (head.size() != 4 || head[0] != "tensor" || head[1] != name) {
            throw DataError("model file line " + std::to_string(reader.line_no()) + ": expected tensor '" + name + "'");
        }
        const auto rows = parse_int(head[2], name + " rows");
        const auto cols = parse_int(head[3], name + " cols");
        if (rows != m.rows() || cols != m.cols()) {
            throw DataError("model file: tensor '" + name + "' has shape " + head[2] + "x" + head[3] + ", config implies " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            auto values = words(reader.next("row of " + name));
            if (static_cast<Eigen::Index>(values.size()) != m.cols()) {
                throw DataError("model file line " + std::to_string(reader.line_no()) + ": tensor '" + name + "' row has " +
                                std::to_string(values.size()) + " values, expected " + std::to_string(m.cols()));
            }
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = parse_double(values[static_cast<std::size_t>(c)], name);
        }
    });
    if (reader.next("end") != "end") throw DataError("model file: missing 'end' marker");
    if (model.vocab.size() != model.config.vocab_size) {
        throw DataError("model file: field 'vocab' holds " + std::to_string(model.vocab.size()) + " indices but config vocab_size is " +
                        std::to_string(model.config.vocab_size));
    }
    if (!model.params.embedding.row(0).isZero(0.0)) throw DataError("model file: tensor 'embedding' PAD row is not zero");
    return model;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    try {
        return load_model(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace flowlm

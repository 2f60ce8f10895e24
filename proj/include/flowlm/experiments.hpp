#ifndef FLOWLM_EXPERIMENTS_HPP
#define FLOWLM_EXPERIMENTS_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "flowlm/evaluator.hpp"
#include "flowlm/ingest.hpp"
#include "flowlm/neural.hpp"
#include "flowlm/scorer.hpp"
#include "flowlm/sequencer.hpp"
#include "flowlm/tokenizer.hpp"

namespace flowlm {

enum class Scenario : std::uint8_t { Clean, Dirty, NoDos };
Scenario parse_scenario(const std::string& s);
const char* scenario_name(Scenario s);

struct ScenarioConfig {
    Scenario scenario = Scenario::Dirty;
    FeatureScheme scheme;
    std::int64_t clean_train_hours = 36;
    /// Local calendar days (days since epoch) dropped by NoDos. Empty means
    /// the corpus's 4th and 5th days counted from its earliest record.
    std::vector<std::int64_t> excluded_days;
    std::int64_t tz_offset_s = 0;
    ModelConfig model;
    LabelRule label_rule = LabelRule::Any;
    Aggregation aggregation = Aggregation::Max;

    void validate() const;

    /// Keys: scenario, scheme, high_port_threshold, clean_train_hours,
    /// excluded_days (comma-separated YYYY-MM-DD), tz_offset_s, label_rule,
    /// aggregation, plus every ModelConfig key.
    static ScenarioConfig from_key_values(const KeyValues& kv, ScenarioConfig base);
    static ScenarioConfig from_key_values(const KeyValues& kv) { return from_key_values(kv, ScenarioConfig{}); }
    KeyValues to_key_values() const;
};

struct ScenarioSplit {
    std::vector<FlowRecord> train;
    std::vector<FlowRecord> eval;
    std::vector<std::int64_t> excluded_days;  // resolved, NoDos only
};

/// Throws DataError when the training split is empty.
ScenarioSplit build_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg);

struct ScenarioReport {
    std::string scenario;
    std::string scheme;
    std::uint64_t seed = 0;
    std::size_t train_records = 0;
    std::size_t eval_records = 0;
    std::size_t train_windows = 0;
    std::size_t vocab_size = 0;
    std::size_t normal_dyad_hours = 0;
    std::size_t attack_dyad_hours = 0;
    std::size_t unk_tokens = 0;  // eval tokens unseen in training
    std::vector<double> loss_history;
    double auc = 0.0;
    std::string model_path;
    std::string scores_path;
    std::string roc_path;
    std::string report_path;
    double wall_time_s = 0.0;

    /// `scenario=... scheme=... normal=N attack=M auc=0.xxxx`
    std::string summary_line() const;
    /// Human-readable text followed by a `[report]` key=value block.
    void write(std::ostream& out, const ScenarioConfig& cfg) const;
};

struct RunLog {
    std::ostream* out = nullptr;  // progress lines, optional
};

/// Builds the split, trains on it with a training-only vocabulary, scores
/// every eval dyad-hour and writes model.flm, scores.csv, roc.csv and
/// report.txt into `outdir` (created if missing).
ScenarioReport run_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg, const std::string& outdir,
                            RunLog log = {});

/// Pieces of run_scenario without file output, for tests and embedding.
struct ScenarioResult {
    Model model;
    std::vector<DyadHour> eval_dyad_hours;
    std::vector<ScoredDyadHour> scored;
    RocCurve curve;
    ScenarioReport report;
};
ScenarioResult evaluate_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg, RunLog log = {});

}  // namespace flowlm

#endif

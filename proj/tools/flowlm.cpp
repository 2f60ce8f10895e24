// flowlm: batch command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 data/model/config error.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "flowlm/config_file.hpp"
#include "flowlm/error.hpp"
#include "flowlm/evaluator.hpp"
#include "flowlm/experiments.hpp"
#include "flowlm/ingest.hpp"
#include "flowlm/neural.hpp"
#include "flowlm/scorer.hpp"
#include "flowlm/sequencer.hpp"
#include "flowlm/synthgen.hpp"

namespace {

using namespace flowlm;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

// FLOWLM_SEED, when set, wins over any configured seed.
void apply_seed_override(std::uint64_t& seed) {
    if (const char* env = std::getenv("FLOWLM_SEED"); env && *env) seed = parse_uint64(env, "FLOWLM_SEED");
}

FlowSchema load_schema(const std::string& path) {
    return path.empty() ? FlowSchema::canonical() : FlowSchema::from_key_values(read_key_values_file(path));
}

std::vector<FlowRecord> load_records(const std::string& path, const FlowSchema& schema) {
    return deduplicate(read_flow_csv(path, schema));
}

int cmd_ingest(const std::string& in, const std::string& schema_path, const std::string& out, bool keep_duplicates) {
    const FlowSchema schema = load_schema(schema_path);
    auto records = read_flow_csv(in, schema);
    const std::size_t before = records.size();
    if (!keep_duplicates) records = deduplicate(records);
    write_flow_csv(out, records);
    std::cerr << "ingest: " << before << " rows read, " << records.size() << " written to " << out << "\n";
    return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out, const KeyValues& overrides) {
    KeyValues kv = config_path.empty() ? KeyValues{} : read_key_values_file(config_path);
    for (const auto& [k, v] : overrides) kv[k] = v;
    SynthConfig cfg = SynthConfig::from_key_values(kv);
    apply_seed_override(cfg.seed);
    const std::string csv = generate(cfg);
    std::ofstream f(out);
    if (!f) throw DataError("cannot write '" + out + "'");
    f << csv;
    if (!f) throw DataError("write failed for '" + out + "'");
    std::cerr << "synth: seed=" << cfg.seed << " benign_dyad_hours=" << cfg.benign_dyad_hours
              << " attack_dyad_hours=" << cfg.attack_dyad_hours << " -> " << out << "\n";
    return 0;
}

int cmd_train(const std::string& in, const std::string& schema_path, const std::string& scheme, const std::string& config_path,
              const std::string& model_out, bool quiet) {
    const KeyValues kv = config_path.empty() ? KeyValues{} : read_key_values_file(config_path);
    ScenarioConfig sc = ScenarioConfig::from_key_values(kv);
    if (!scheme.empty()) sc.scheme.kind = parse_scheme_kind(scheme);
    apply_seed_override(sc.model.seed);

    const auto records = load_records(in, load_schema(schema_path));
    if (records.empty()) throw DataError("no records in '" + in + "'");
    Vocabulary vocab = build_vocabulary(records, sc.scheme);
    ModelConfig mc = sc.model;
    mc.vocab_size = vocab.size();
    Model model = init_model(mc, std::move(vocab), sc.scheme);
    const auto ws = windows(group_dyad_hours(records, sc.scheme, model.vocab, sc.label_rule), mc.window);
    std::cerr << "train: " << ws.size() << " windows, V=" << model.vocab.size() << ", seed=" << mc.seed << "\n";
    train(model, ws, [&](std::size_t epoch, double loss) {
        if (!quiet) std::cerr << "  epoch " << (epoch + 1) << "/" << mc.epochs << " loss " << loss << "\n";
    });
    save_model(model, model_out);
    return 0;
}

int cmd_score(const std::string& in, const std::string& schema_path, const std::string& model_path, const std::string& out,
              const std::string& aggregation, const std::string& label_rule) {
    Model model;
    try {
        model = load_model(model_path);
    } catch (const std::exception& e) {
        throw StageError("score/load-model", e.what());
    }
    const auto records = load_records(in, load_schema(schema_path));
    const auto dyad_hours = group_dyad_hours(records, model.scheme, model.vocab, parse_label_rule(label_rule));
    write_scores_csv(out, score_all(model, dyad_hours, parse_aggregation(aggregation)));
    std::cerr << "score: " << dyad_hours.size() << " dyad-hours -> " << out << "\n";
    return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& roc_out, const std::string& name) {
    const auto scored = read_scores_csv(scores_path);
    RocCurve curve;
    try {
        curve = roc(scored);
    } catch (const DataError& e) {
        throw StageError("eval " + scores_path, e.what());
    }
    if (!roc_out.empty()) export_roc(curve, roc_out);
    char auc[32];
    std::snprintf(auc, sizeof auc, "%.4f", curve.auc);
    std::cout << (name.empty() ? std::string() : "scenario=" + name + " ") << "normal=" << curve.negatives << " attack=" << curve.positives
              << " auc=" << auc << "\n";
    return 0;
}

int cmd_run(const std::string& scenario, const std::string& scheme, const std::string& in, const std::string& schema_path,
            const std::string& config_path, const std::string& outdir, bool quiet) {
    const KeyValues kv = config_path.empty() ? KeyValues{} : read_key_values_file(config_path);
    ScenarioConfig sc = ScenarioConfig::from_key_values(kv);
    if (!scenario.empty()) sc.scenario = parse_scenario(scenario);
    if (!scheme.empty()) sc.scheme.kind = parse_scheme_kind(scheme);
    apply_seed_override(sc.model.seed);

    const FlowSchema schema = load_schema(schema_path);
    if (!kv.count("tz_offset_s")) sc.tz_offset_s = schema.tz_offset_s;
    const auto records = load_records(in, schema);
    RunLog log;
    if (!quiet) log.out = &std::cerr;
    const ScenarioReport rep = run_scenario(records, sc, outdir, log);
    std::cout << rep.summary_line() << "\n";
    std::cout << "artifacts: " << rep.model_path << " " << rep.scores_path << " " << rep.roc_path << " " << rep.report_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlm: flow-sequence language model for network anomaly detection"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    const std::vector<std::string> schemes = {"proto_byte", "service_port"};

    std::string in, out, schema, config, model_out, model_path, scores, roc_out, scheme, scenario, outdir, name;
    std::string aggregation = "max", label_rule = "any";
    bool keep_duplicates = false, quiet = false;
    KeyValues synth_overrides;
    std::uint64_t synth_seed = 0;
    std::size_t synth_benign = 0, synth_attack = 0;

    auto* ingest = app.add_subcommand("ingest", "Parse a flow CSV through a schema map into the canonical CSV");
    ingest->add_option("--in", in, "Input flow CSV")->required();
    ingest->add_option("--schema", schema, "Schema map file (canonical_name=source_column)");
    ingest->add_option("--out", out, "Canonical CSV output")->required();
    ingest->add_flag("--keep-duplicates", keep_duplicates, "Skip exact-duplicate removal");

    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic flow corpus");
    synth->add_option("--config", config, "Synth config file (key=value)");
    synth->add_option("--out", out, "Output CSV")->required();
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "Generator seed");
    auto* synth_benign_opt = synth->add_option("--benign", synth_benign, "Benign dyad-hours");
    auto* synth_attack_opt = synth->add_option("--attack", synth_attack, "Attack dyad-hours");

    auto* train_cmd = app.add_subcommand("train", "Train a model on a flow CSV");
    train_cmd->add_option("--in", in, "Flow CSV")->required();
    train_cmd->add_option("--schema", schema, "Schema map file");
    train_cmd->add_option("--scheme", scheme, "Feature scheme")->check(CLI::IsMember(schemes));
    train_cmd->add_option("--config", config, "Model/scenario config file (key=value)");
    train_cmd->add_option("--model-out", model_out, "Model file to write")->required();
    train_cmd->add_flag("--quiet", quiet, "No per-epoch progress");

    auto* score = app.add_subcommand("score", "Score dyad-hours of a flow CSV with a trained model");
    score->add_option("--in", in, "Flow CSV")->required();
    score->add_option("--schema", schema, "Schema map file");
    score->add_option("--model", model_path, "Model file")->required();
    score->add_option("--out", out, "Scores CSV output")->required();
    score->add_option("--aggregation", aggregation, "Window loss aggregation")->check(CLI::IsMember({"max", "mean"}));
    score->add_option("--label-rule", label_rule, "Dyad-hour labeling rule")->check(CLI::IsMember({"any", "majority"}));

    auto* eval = app.add_subcommand("eval", "ROC/AUC of a scores CSV");
    eval->add_option("--scores", scores, "Scores CSV")->required();
    eval->add_option("--roc-out", roc_out, "ROC CSV output");
    eval->add_option("--name", name, "Label for the summary line");

    auto* run = app.add_subcommand("run", "Run one scenario end to end");
    run->add_option("--scenario", scenario, "Scenario")->check(CLI::IsMember({"clean", "dirty", "nodos"}));
    run->add_option("--scheme", scheme, "Feature scheme")->check(CLI::IsMember(schemes));
    run->add_option("--in", in, "Flow CSV")->required();
    run->add_option("--schema", schema, "Schema map file");
    run->add_option("--config", config, "Scenario config file (key=value)");
    run->add_option("--outdir", outdir, "Output directory")->required();
    run->add_flag("--quiet", quiet, "No progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*ingest) return cmd_ingest(in, schema, out, keep_duplicates);
        if (*synth) {
            if (*synth_seed_opt) synth_overrides["seed"] = std::to_string(synth_seed);
            if (*synth_benign_opt) synth_overrides["benign_dyad_hours"] = std::to_string(synth_benign);
            if (*synth_attack_opt) synth_overrides["attack_dyad_hours"] = std::to_string(synth_attack);
            return cmd_synth(config, out, synth_overrides);
        }
        if (*train_cmd) return cmd_train(in, schema, scheme, config, model_out, quiet);
        if (*score) return cmd_score(in, schema, model_path, out, aggregation, label_rule);
        if (*eval) return cmd_eval(scores, roc_out, name);
        if (*run) return cmd_run(scenario, scheme, in, schema, config, outdir, quiet);
    } catch (const StageError& e) {
        std::cerr << "flowlm " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "flowlm " << stage << ": " << e.what() << "\n";
        return kDataError;
    }
    return kUsageError;
}

#include "flowlm/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowlm/error.hpp"

namespace flowlm {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& s) {
    if (s == "clean") return Scenario::Clean;
    if (s == "dirty") return Scenario::Dirty;
    if (s == "nodos") return Scenario::NoDos;
    throw ConfigError("unknown scenario '" + s + "' (expected clean, dirty or nodos)");
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Clean: return "clean";
        case Scenario::Dirty: return "dirty";
        case Scenario::NoDos: return "nodos";
    }
    return "dirty";
}

void ScenarioConfig::validate() const {
    if (clean_train_hours < 1) throw ConfigError("scenario config: clean_train_hours must be >= 1");
    if (!excluded_days.empty() && scenario != Scenario::NoDos) {
        throw ConfigError("scenario config: excluded_days applies only to the nodos scenario");
    }
    scheme.validate();
    model.validate();
}

ScenarioConfig ScenarioConfig::from_key_values(const KeyValues& kv, ScenarioConfig base) {
    if (auto it = kv.find("scenario"); it != kv.end()) base.scenario = parse_scenario(it->second);
    if (auto it = kv.find("scheme"); it != kv.end()) base.scheme.kind = parse_scheme_kind(it->second);
    if (auto it = kv.find("high_port_threshold"); it != kv.end()) {
        const auto v = parse_int(it->second, "high_port_threshold");
        if (v < 1 || v > 65535) throw ConfigError("scenario config: high_port_threshold must be in [1, 65535]");
        base.scheme.high_port_threshold = static_cast<std::uint32_t>(v);
    }
    if (auto it = kv.find("clean_train_hours"); it != kv.end()) base.clean_train_hours = parse_int(it->second, "clean_train_hours");
    if (auto it = kv.find("excluded_days"); it != kv.end()) {
        base.excluded_days.clear();
        for (const auto& d : split_csv_line(it->second)) {
            if (!trim(d).empty()) base.excluded_days.push_back(parse_date(d));
        }
    }
    if (auto it = kv.find("tz_offset_s"); it != kv.end()) base.tz_offset_s = parse_int(it->second, "tz_offset_s");
    if (auto it = kv.find("label_rule"); it != kv.end()) base.label_rule = parse_label_rule(it->second);
    if (auto it = kv.find("aggregation"); it != kv.end()) base.aggregation = parse_aggregation(it->second);
    base.model = ModelConfig::from_key_values(kv, base.model);
    return base;
}

KeyValues ScenarioConfig::to_key_values() const {
    KeyValues kv = model.to_key_values();
    kv.erase("vocab_size");  // derived from the training split
    kv["scenario"] = scenario_name(scenario);
    kv["scheme"] = scheme_name(scheme.kind);
    kv["high_port_threshold"] = std::to_string(scheme.high_port_threshold);
    kv["clean_train_hours"] = std::to_string(clean_train_hours);
    std::string days;
    for (std::size_t i = 0; i < excluded_days.size(); ++i) days += (i ? "," : "") + format_date(excluded_days[i]);
    kv["excluded_days"] = days;
    kv["tz_offset_s"] = std::to_string(tz_offset_s);
    kv["label_rule"] = label_rule_name(label_rule);
    kv["aggregation"] = aggregation_name(aggregation);
    return kv;
}

ScenarioSplit build_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioSplit split;
    if (records.empty()) throw DataError("build_scenario: no records");
    const auto earliest =
        std::min_element(records.begin(), records.end(), [](const FlowRecord& a, const FlowRecord& b) { return a.start_time < b.start_time; })
            ->start_time;

    switch (cfg.scenario) {
        case Scenario::Dirty:
            split.train = records;
            split.eval = records;
            break;
        case Scenario::Clean:
            split.train = filter_date_range(records, DateRange(earliest, earliest + cfg.clean_train_hours * 3600));
            split.eval = records;
            break;
        case Scenario::NoDos: {
            split.excluded_days = cfg.excluded_days;
            if (split.excluded_days.empty()) {
                const std::int64_t first_day = local_day(earliest, cfg.tz_offset_s);
                split.excluded_days = {first_day + 3, first_day + 4};
            }
            for (const auto& r : records) {
                const std::int64_t day = local_day(r.start_time, cfg.tz_offset_s);
                if (std::find(split.excluded_days.begin(), split.excluded_days.end(), day) == split.excluded_days.end()) {
                    split.train.push_back(r);
                }
            }
            split.eval = split.train;
            break;
        }
    }
    if (split.train.empty()) throw DataError(std::string("build_scenario: empty training set for scenario ") + scenario_name(cfg.scenario));
    return split;
}

std::string ScenarioReport::summary_line() const {
    return "scenario=" + scenario + " scheme=" + scheme + " normal=" + std::to_string(normal_dyad_hours) +
           " attack=" + std::to_string(attack_dyad_hours) + " auc=" + fixed(auc, 4);
}

void ScenarioReport::write(std::ostream& out, const ScenarioConfig& cfg) const {
    out << "flowlm scenario report\n";
    out << "  scenario:         " << scenario << "\n";
    out << "  feature scheme:   " << scheme << "\n";
    out << "  seed:             " << seed << "\n";
    out << "  records:          " << train_records << " train, " << eval_records << " eval\n";
    out << "  training windows: " << train_windows << "\n";
    out << "  vocabulary V:     " << vocab_size << "\n";
    out << "  dyad-hours:       " << normal_dyad_hours << " normal, " << attack_dyad_hours << " attack\n";
    out << "  unseen eval toks: " << unk_tokens << "\n";
    out << "  epoch losses:    ";
    for (double l : loss_history) out << ' ' << fixed(l, 6);
    out << "\n";
    out << "  AUC:              " << fixed(auc, 4) << "\n\n";
    out << "[report]\n";
    out << "scenario=" << scenario << "\n";
    out << "scheme=" << scheme << "\n";
    out << "seed=" << seed << "\n";
    out << "train_records=" << train_records << "\n";
    out << "eval_records=" << eval_records << "\n";
    out << "train_windows=" << train_windows << "\n";
    out << "vocab_size=" << vocab_size << "\n";
    out << "normal_dyad_hours=" << normal_dyad_hours << "\n";
    out << "attack_dyad_hours=" << attack_dyad_hours << "\n";
    out << "unk_tokens=" << unk_tokens << "\n";
    for (std::size_t e = 0; e < loss_history.size(); ++e) out << "loss_epoch_" << (e + 1) << "=" << full(loss_history[e]) << "\n";
    out << "auc=" << full(auc) << "\n";
    out << "model_path=" << model_path << "\n";
    out << "scores_path=" << scores_path << "\n";
    out << "roc_path=" << roc_path << "\n";
    out << "\n[config]\n";
    for (const auto& [k, v] : cfg.to_key_values()) out << k << "=" << v << "\n";
    // Kept last and apart so reruns can be compared with it stripped.
    out << "\n[timing]\nwall_time_s=" << fixed(wall_time_s, 3) << "\n";
}

ScenarioResult evaluate_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg, RunLog log) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioSplit split = build_scenario(records, cfg);

    ScenarioResult res;
    Vocabulary vocab = build_vocabulary(split.train, cfg.scheme);
    ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    res.model = init_model(mc, std::move(vocab), cfg.scheme);

    const auto train_dh = group_dyad_hours(split.train, cfg.scheme, res.model.vocab, cfg.label_rule);
    const auto train_windows = windows(train_dh, mc.window);
    if (log.out) {
        *log.out << "[" << scenario_name(cfg.scenario) << "/" << scheme_name(cfg.scheme.kind) << "] training on " << train_windows.size()
                 << " windows, V=" << res.model.vocab.size() << "\n";
    }
    const TrainResult tr = train(res.model, train_windows, [&](std::size_t epoch, double loss) {
        if (log.out) *log.out << "  epoch " << (epoch + 1) << "/" << mc.epochs << " loss " << fixed(loss, 6) << "\n";
    });

    res.eval_dyad_hours = group_dyad_hours(split.eval, cfg.scheme, res.model.vocab, cfg.label_rule);
    std::size_t unk = 0;
    for (const auto& dh : res.eval_dyad_hours) {
        for (TokenIndex t : dh.tokens) {
            if (t >= static_cast<TokenIndex>(res.model.vocab.size())) throw DataError("evaluate_scenario: eval token index exceeds V-1");
            if (t == kUnkIndex) ++unk;
        }
    }
    res.scored = score_all(res.model, res.eval_dyad_hours, cfg.aggregation);
    try {
        res.curve = roc(res.scored);
    } catch (const DataError& e) {
        throw DataError(std::string("scenario ") + scenario_name(cfg.scenario) + "/" + scheme_name(cfg.scheme.kind) + ": " + e.what());
    }

    ScenarioReport& rep = res.report;
    rep.scenario = scenario_name(cfg.scenario);
    rep.scheme = scheme_name(cfg.scheme.kind);
    rep.seed = mc.seed;
    rep.train_records = split.train.size();
    rep.eval_records = split.eval.size();
    rep.train_windows = train_windows.size();
    rep.vocab_size = res.model.vocab.size();
    rep.normal_dyad_hours = res.curve.negatives;
    rep.attack_dyad_hours = res.curve.positives;
    rep.unk_tokens = unk;
    rep.loss_history = tr.loss_history;
    rep.auc = res.curve.auc;
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

ScenarioReport run_scenario(const std::vector<FlowRecord>& records, const ScenarioConfig& cfg, const std::string& outdir, RunLog log) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw DataError("cannot create output directory '" + outdir + "': " + ec.message());

    ScenarioResult res = evaluate_scenario(records, cfg, log);
    ScenarioReport rep = res.report;
    rep.model_path = (fs::path(outdir) / "model.flm").string();
    rep.scores_path = (fs::path(outdir) / "scores.csv").string();
    rep.roc_path = (fs::path(outdir) / "roc.csv").string();
    rep.report_path = (fs::path(outdir) / "report.txt").string();

    save_model(res.model, rep.model_path);
    write_scores_csv(rep.scores_path, res.scored);
    export_roc(res.curve, rep.roc_path);
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream out(rep.report_path);
    if (!out) throw DataError("cannot write report '" + rep.report_path + "'");
    rep.write(out, cfg);
    if (!out) throw DataError("write failed for report '" + rep.report_path + "'");
    return rep;
}

}  // namespace flowlm

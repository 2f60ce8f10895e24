#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowlm/error.hpp"
#include "flowlm/experiments.hpp"
#include "flowlm/synthgen.hpp"

using namespace flowlm;
namespace fs = std::filesystem;

namespace {

const std::vector<FlowRecord>& corpus() {
    static const std::vector<FlowRecord> rs = [] {
        SynthConfig c;
        c.benign_dyad_hours = 240;
        c.attack_dyad_hours = 12;
        return deduplicate(generate_records(c));
    }();
    return rs;
}

ScenarioConfig quick(Scenario s) {
    ScenarioConfig c;
    c.scenario = s;
    c.model.embed_dim = 8;
    c.model.lstm_units = 6;
    c.model.dense_units = 8;
    c.model.epochs = 2;
    return c;
}

std::int64_t min_start(const std::vector<FlowRecord>& rs) {
    std::int64_t m = rs.front().start_time;
    for (const auto& r : rs) m = std::min(m, r.start_time);
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Report text without the timing block, which is expected to differ.
std::string untimed(const std::string& report) { return report.substr(0, report.find("[timing]")); }

}  // namespace

TEST_SUITE("experiments") {
    TEST_CASE("dirty trains and evaluates on everything") {
        const auto split = build_scenario(corpus(), quick(Scenario::Dirty));
        CHECK(split.train == corpus());
        CHECK(split.eval == corpus());
    }

    TEST_CASE("clean trains on the first 36 hours") {
        const auto split = build_scenario(corpus(), quick(Scenario::Clean));
        const std::int64_t lo = min_start(corpus());
        CHECK_FALSE(split.train.empty());
        for (const auto& r : split.train) {
            CHECK(r.start_time < lo + 129600);
            CHECK(r.tag == Label::Normal);
        }
        CHECK(split.eval == corpus());
        std::size_t expected = 0;
        for (const auto& r : corpus()) expected += r.start_time < lo + 129600;
        CHECK(split.train.size() == expected);
    }

    TEST_CASE("nodos drops the fourth and fifth days") {
        const auto split = build_scenario(corpus(), quick(Scenario::NoDos));
        const std::int64_t first = local_day(min_start(corpus()), 0);
        CHECK(split.excluded_days == std::vector<std::int64_t>{first + 3, first + 4});
        CHECK(split.train == split.eval);
        CHECK(split.train.size() < corpus().size());
        for (const auto& r : split.train) {
            const std::int64_t d = local_day(r.start_time, 0);
            CHECK((d != first + 3 && d != first + 4));
            // DoS traffic lives only on those two days.
            if (r.tag == Label::Attack) CHECK(std::min(r.port_a, r.port_b) != 80);
        }

        ScenarioConfig c = quick(Scenario::NoDos);
        c.excluded_days = {parse_date("2010-06-11")};
        for (const auto& r : build_scenario(corpus(), c).train) CHECK(local_day(r.start_time, 0) != c.excluded_days[0]);
    }

    TEST_CASE("scenario errors") {
        CHECK_THROWS_AS(build_scenario({}, quick(Scenario::Dirty)), DataError);
        ScenarioConfig c = quick(Scenario::Dirty);
        c.excluded_days = {parse_date("2010-06-14")};
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = quick(Scenario::Clean);
        c.clean_train_hours = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = quick(Scenario::NoDos);
        std::vector<std::int64_t> all;
        for (const auto& r : corpus()) all.push_back(local_day(r.start_time, 0));
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        c.excluded_days = all;
        CHECK_THROWS_AS(build_scenario(corpus(), c), DataError);
        CHECK(parse_scenario("nodos") == Scenario::NoDos);
        CHECK_THROWS_AS(parse_scenario("noisy"), ConfigError);
    }

    TEST_CASE("config key=value round trip") {
        ScenarioConfig c = quick(Scenario::NoDos);
        c.scheme = {SchemeKind::ServicePort, 5000};
        c.excluded_days = {parse_date("2010-06-14"), parse_date("2010-06-15")};
        c.label_rule = LabelRule::Majority;
        c.aggregation = Aggregation::Mean;
        c.tz_offset_s = -10800;
        const ScenarioConfig back = ScenarioConfig::from_key_values(c.to_key_values());
        CHECK(back.scenario == Scenario::NoDos);
        CHECK(back.scheme.kind == SchemeKind::ServicePort);
        CHECK(back.scheme.high_port_threshold == 5000);
        CHECK(back.excluded_days == c.excluded_days);
        CHECK(back.label_rule == LabelRule::Majority);
        CHECK(back.aggregation == Aggregation::Mean);
        CHECK(back.tz_offset_s == -10800);
        CHECK(back.model == c.model);
    }

    TEST_CASE("clean vocabulary comes from training records only") {
        const ScenarioResult res = evaluate_scenario(corpus(), quick(Scenario::Clean));
        const auto split = build_scenario(corpus(), quick(Scenario::Clean));
        CHECK(res.model.vocab == build_vocabulary(split.train, FeatureScheme{}));
        std::size_t unk = 0;
        for (const auto& dh : res.eval_dyad_hours) {
            for (TokenIndex t : dh.tokens) {
                CHECK(t < static_cast<TokenIndex>(res.model.vocab.size()));
                unk += t == kUnkIndex;
            }
        }
        CHECK(unk == res.report.unk_tokens);
        CHECK(unk > 0);  // infiltration tokens never appear in the attack-free prefix
        CHECK(res.scored.size() == res.eval_dyad_hours.size());
        CHECK(res.report.attack_dyad_hours == 12);
        CHECK(res.report.normal_dyad_hours == 240);
        CHECK(res.report.loss_history.size() == 2);
    }

    TEST_CASE("a zero learning rate is the untrained model") {
        ScenarioConfig c = quick(Scenario::Dirty);
        c.model.learning_rate = 0.0;
        const ScenarioResult res = evaluate_scenario(corpus(), c);
        Model fresh = init_model(res.model.config, res.model.vocab, res.model.scheme);
        const auto scored = score_all(fresh, res.eval_dyad_hours);
        CHECK(roc(scored).auc == res.curve.auc);
    }

    TEST_CASE("run_scenario writes artifacts and reruns identically") {
        const fs::path dir = fs::temp_directory_path() / "flowlm_experiments_test";
        fs::remove_all(dir);
        const ScenarioConfig c = quick(Scenario::Dirty);
        const ScenarioReport a = run_scenario(corpus(), c, (dir / "a").string());
        const ScenarioReport b = run_scenario(corpus(), c, (dir / "b").string());
        for (const char* f : {"model.flm", "scores.csv", "roc.csv", "report.txt"}) {
            CHECK(fs::exists(dir / "a" / f));
            if (std::string(f) != "report.txt") CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
        }
        const std::string ra = slurp(dir / "a" / "report.txt");
        CHECK(ra.find("[report]") != std::string::npos);
        CHECK(ra.find("[config]") != std::string::npos);
        CHECK(ra.find("seed=42") != std::string::npos);
        CHECK(untimed(ra) != ra);
        std::string rb = slurp(dir / "b" / "report.txt");
        // Paths differ only by the output directory.
        for (std::size_t p; (p = rb.find((dir / "b").string())) != std::string::npos;) {
            rb.replace(p, (dir / "b").string().size(), (dir / "a").string());
        }
        CHECK(untimed(ra) == untimed(rb));
        CHECK(a.auc == b.auc);
        CHECK(a.summary_line().rfind("scenario=dirty scheme=proto_byte normal=240 attack=12 auc=", 0) == 0);
        const Model m = load_model((dir / "a" / "model.flm").string());
        CHECK(m.vocab.size() == a.vocab_size);
        fs::remove_all(dir);
    }
}

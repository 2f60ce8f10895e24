// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// required criterion fails.
//
// Criterion 8 needs the ISCX flow export, which is not distributed with the
// repository. Point FLOWLM_ISCX_CSV at it (and FLOWLM_ISCX_SCHEMA at a
// column mapping if its headers are not canonical) to run it; otherwise it
// is reported as skipped.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "checks.hpp"
#include "flowlm/experiments.hpp"
#include "flowlm/ingest.hpp"
#include "flowlm/sequencer.hpp"

namespace {

int failures = 0;

void line(int id, bool pass, const char* name, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void iscx_replication(const char* path) {
    using namespace flowlm;
    const auto t0 = std::chrono::steady_clock::now();
    FlowSchema schema = FlowSchema::canonical();
    if (const char* s = std::getenv("FLOWLM_ISCX_SCHEMA")) schema = FlowSchema::from_key_values(read_key_values_file(s));

    const auto records = deduplicate(read_flow_csv(path, schema));
    const FeatureScheme proto{};
    const auto dhs = group_dyad_hours(records, proto, build_vocabulary(records, proto));
    const bool counts_ok = std::abs(static_cast<double>(records.size()) - 1.9e6) <= 0.05e6 && dhs.size() == 168218;

    double auc[3][2] = {};
    const Scenario scenarios[3] = {Scenario::Clean, Scenario::Dirty, Scenario::NoDos};
    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            ScenarioConfig cfg;
            cfg.scenario = scenarios[s];
            cfg.scheme.kind = k == 0 ? SchemeKind::ProtoByte : SchemeKind::ServicePort;
            cfg.tz_offset_s = schema.tz_offset_s;
            auc[s][k] = evaluate_scenario(records, cfg).curve.auc;
            std::printf("    %s/%s auc=%.4f\n", scenario_name(scenarios[s]), scheme_name(cfg.scheme.kind), auc[s][k]);
        }
    }
    const bool headline = std::abs(auc[1][0] - 0.84) <= 0.05;
    bool ordering = true;
    for (int k = 0; k < 2; ++k) ordering = ordering && auc[1][k] >= auc[0][k];
    for (int s = 0; s < 3; ++s) ordering = ordering && auc[s][0] >= auc[s][1];

    char detail[256];
    std::snprintf(detail, sizeof detail,
                  "records=%zu dyad_hours=%zu dirty_proto_auc=%.4f counts=%s headline=%s ordering=%s (%.0f s)",
                  records.size(), dhs.size(), auc[1][0], counts_ok ? "ok" : "off", headline ? "ok" : "off",
                  ordering ? "ok" : "off", seconds_since(t0));
    line(8, counts_ok && headline && ordering, "ISCX replication", detail);
}

}  // namespace

int main() {
    {
        // The initial weights and a 1.5x wider draw. Much wider pushes the
        // softmax below the loss floor, where differences see a flat loss.
        const auto t0 = std::chrono::steady_clock::now();
        const auto a = checks::gradient_check(11, 1.0);
        const auto b = checks::gradient_check(12, 1.5);
        const auto& worst = a.max_rel_error >= b.max_rel_error ? a : b;
        line(1, worst.max_rel_error < 1e-4, "gradient correctness",
             fmt("max rel err=%.3g over %.0f entries (%.1f s)", worst.max_rel_error,
                 static_cast<double>(a.entries + b.entries), seconds_since(t0)) +
                 " worst=" + worst.worst_tensor);
    }
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = checks::numeric_invariants(1000, 2024);
        const double secs = seconds_since(t0);
        line(2, r.failures == 0 && r.instances >= 1000 && secs < 60.0, "numerical invariants",
             fmt("instances=%.0f row_sum_err=%.2g mask_diff=%.2g", static_cast<double>(r.instances),
                 r.max_row_sum_error, r.max_mask_diff) +
                 fmt(" oracle_diff=%.2g uniform_err=%.2g (%.1f s)", r.max_oracle_diff, r.max_uniform_loss_error,
                     secs) +
                 (r.failures ? " first failure: " + r.first_failure : ""));
    }
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = checks::auc_equivalence(100, 77);
        const double secs = seconds_since(t0);
        line(3, r.max_diff <= 1e-9 && r.tie_heavy_sets > 0 && secs < 60.0, "AUC oracle equivalence",
             fmt("sets=%.0f tie_heavy=%.0f max diff=%.3g", static_cast<double>(r.sets),
                 static_cast<double>(r.tie_heavy_sets), r.max_diff) +
                 fmt(" (%.2f s)", secs));
    }
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = checks::tokenizer_properties(100000, 5);
        const double secs = seconds_since(t0);
        line(4, r.bucket_failures == 0 && r.port_failures == 0 && r.printed_examples_ok && secs < 60.0,
             "tokenizer properties",
             fmt("bucket %.0f/%.0f ok, ", static_cast<double>(r.bucket_cases - r.bucket_failures),
                 static_cast<double>(r.bucket_cases)) +
                 fmt("port %.0f/%.0f ok, ", static_cast<double>(r.port_cases - r.port_failures),
                     static_cast<double>(r.port_cases)) +
                 (r.printed_examples_ok ? "printed examples ok" : "printed examples WRONG") + fmt(" (%.2f s)", secs));
    }
    {
        const auto r = checks::memorization(200);
        const double last = r.loss_history.empty() ? INFINITY : r.loss_history.back();
        line(5, last < 0.1 && r.seconds < 300.0, "memorization capacity",
             fmt("final mean loss=%.4g after %.0f epochs (%.1f s)", last, static_cast<double>(r.loss_history.size()),
                 r.seconds));
    }
    const auto first = checks::synthetic_detection();
    line(6, first.auc >= 0.85 && first.attack_dyad_hours == 50 && first.seconds < 600.0, "synthetic detection",
         first.summary + fmt(" (%.1f s)", first.seconds));
    {
        const auto second = checks::synthetic_detection();
        char a[64], b[64];
        std::snprintf(a, sizeof a, "%.17g", first.auc);
        std::snprintf(b, sizeof b, "%.17g", second.auc);
        line(7, std::string(a) == b && first.summary == second.summary, "determinism",
             std::string("auc ") + a + " vs " + b);
    }
    if (const char* path = std::getenv("FLOWLM_ISCX_CSV"); path && *path) {
        try {
            iscx_replication(path);
        } catch (const std::exception& e) {
            line(8, false, "ISCX replication", e.what());
        }
    } else {
        std::printf("[SKIP] 8 ISCX replication: optional, set FLOWLM_ISCX_CSV to the ISCX flow export to run\n");
    }
    std::printf("%s\n", failures == 0 ? "acceptance: all required criteria passed" : "acceptance: FAILED");
    return failures == 0 ? 0 : 1;
}

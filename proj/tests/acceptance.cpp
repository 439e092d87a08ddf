// Acceptance suite: runs every acceptance criterion end-to-end and prints
// one pass/fail line per criterion. Exits non-zero if any criterion fails.

#include "loadpatch/backend.hpp"
#include "loadpatch/cli.hpp"
#include "loadpatch/codec.hpp"
#include "loadpatch/costing.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/metrics.hpp"
#include "loadpatch/orchestrator.hpp"
#include "loadpatch/records.hpp"
#include "loadpatch/report.hpp"
#include "loadpatch/restorer.hpp"
#include "loadpatch/rng.hpp"

#include "test_support.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace loadpatch;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw CheckFailure(message);
    }
}

std::string file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const NormalizationParams kParams{210.0, 1751.0, 60.0, 100.0};

MaskedDay sample_day(int mask_start = 40) {
    QuantizedDay q;
    q.user_id = "acc";
    q.date = Date{2018, 7, 1};
    for (int i = 0; i < kPointsPerDay; ++i) {
        q.load_q.push_back((37 + 3 * i) % 201);
        q.temp_q.push_back(80 + i % 9);
    }
    return apply_mask(q, MaskSpec{mask_start, kMaskLen}, kParams);
}

// Shared full-scale fixture: 11 users x 90 days with injected temperature
// drops, written once as CSVs and piped through the CLI.
struct Workspace {
    Workspace() : dir("acceptance") {
        std::vector<DailyProfile> days = testsupport::synthetic_dataset(11, 90);
        for (DailyProfile& day : days) {
            const auto offset = days_from_civil(day.date) - days_from_civil(Date{2018, 6, 1});
            if (offset == 30 || offset == 61) {
                for (double& t : day.temperature) {
                    t -= 30.0;
                }
            }
        }
        for (const DailyProfile& day : days) {
            testsupport::write_load_csv(dir.path() / (day.user_id + ".csv"), day);
        }
        testsupport::write_hourly_temp_csv(dir.path() / "temps.csv", days);
    }

    int cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
        std::vector<const char*> argv{"loadpatch"};
        for (const std::string& a : args) {
            argv.push_back(a.c_str());
        }
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        if (captured) {
            *captured = out.str() + err.str();
        }
        return code;
    }

    std::string dataset() {
        if (dataset_path.empty()) {
            dataset_path = (dir.path() / "dataset.jsonl").string();
            require(cli({"ingest", "--load", (dir.path() / "user*.csv").string(),
                         "--temperature", (dir.path() / "temps.csv").string(), "--tz",
                         "America/New_York", "--out", dataset_path}) == 0,
                    "ingest failed");
        }
        return dataset_path;
    }

    std::string prepared() {
        if (prepared_path.empty()) {
            prepared_path = (dir.path() / "prepared.jsonl").string();
            require(cli({"prepare", "--dataset", dataset(), "--seed", "42", "--mask-len", "16",
                         "--abnormal-threshold", "0.25", "--out", prepared_path}) == 0,
                    "prepare failed");
        }
        return prepared_path;
    }

    testsupport::TempDir dir;
    std::string dataset_path;
    std::string prepared_path;
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

// ---- criterion bodies -----------------------------------------------------

void criterion_codec_bijection() {
    for (int q = 0; q <= 200; ++q) {
        const codec::Decoded d = codec::decode(codec::encode(q));
        require(d.value.has_value() && *d.value == q && !d.out_of_model_range,
                "bijection broken at " + std::to_string(q));
    }
    const codec::Decoded missing = codec::decode(codec::encode(std::nullopt));
    require(!missing.value.has_value(), "missing sentinel does not round-trip");
    require(codec::encode(std::nullopt) == "OOOOO", "sentinel word is wrong");
}

void criterion_quantization_roundtrip() {
    const double bound = kParams.load_range() / 400.0 + 1e-9;
    SeededRng rng(20180601);
    for (int i = 0; i < 10000; ++i) {
        const double x = kParams.load_min + rng.next_unit() * kParams.load_range();
        const double back =
            dequantize_load(quantize_value(x, kParams.load_min, kParams.load_max), kParams);
        require(std::fabs(back - x) <= bound,
                "round-trip bound violated at x=" + std::to_string(x));
    }
}

void criterion_metric_oracle() {
    // Hand anchors first.
    const std::vector<double> truth{100.0, 100.0};
    const std::vector<double> low{110.0, 90.0};
    const std::vector<double> high{110.0, 110.0};
    require(std::fabs(mpe(truth, low) - 0.10) < 1e-12, "MPE anchor failed");
    require(std::fabs(rmse(truth, low) - 10.0) < 1e-12, "RMSE anchor failed");
    require(std::fabs(egye(truth, low)) < 1e-12, "EGYE cancel anchor failed");
    require(std::fabs(egye(truth, high) - 0.10) < 1e-12, "EGYE anchor failed");

    SeededRng rng(555);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> t(16), r(16);
        for (int i = 0; i < 16; ++i) {
            t[static_cast<std::size_t>(i)] = 210.0 + rng.next_unit() * 1541.0;
            r[static_cast<std::size_t>(i)] = 210.0 + rng.next_unit() * 1541.0;
        }
        // Brute-force reference, written out long-hand.
        double mpe_ref = 0.0, sq = 0.0, st = 0.0, sr = 0.0;
        for (int i = 0; i < 16; ++i) {
            mpe_ref += std::fabs(r[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i)]) /
                       t[static_cast<std::size_t>(i)];
            sq += (r[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i)]) *
                  (r[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i)]);
            st += t[static_cast<std::size_t>(i)];
            sr += r[static_cast<std::size_t>(i)];
        }
        mpe_ref /= 16.0;
        const double rmse_ref = std::sqrt(sq / 16.0);
        const double egye_ref = std::fabs(sr - st) / st;
        require(std::fabs(mpe(t, r) - mpe_ref) <= 1e-12 * std::max(1.0, mpe_ref),
                "MPE oracle mismatch");
        require(std::fabs(rmse(t, r) - rmse_ref) <= 1e-12 * std::max(1.0, rmse_ref),
                "RMSE oracle mismatch");
        require(std::fabs(egye(t, r) - egye_ref) <= 1e-12 * std::max(1.0, egye_ref),
                "EGYE oracle mismatch");
    }
}

void criterion_echo_end_to_end() {
    Workspace& ws = workspace();
    const std::string outdir = (ws.dir.path() / "echo_out").string();
    std::string text;

    // Standalone dataset build in the scenario-7 shape.
    const std::string train = (ws.dir.path() / "s7_train.jsonl").string();
    require(ws.cli({"build-dataset", "--prepared", ws.prepared(), "--advanced", "--separate",
                    "--discard", "--n", "512", "--split", "0.8", "--out", train}) == 0,
            "build-dataset failed");
    require(read_chat_dataset(train).size() == 512, "expected 512 training lines");

    require(ws.cli({"run", "--prepared", ws.prepared(), "--preset", "all", "--backend", "echo",
                    "--outdir", outdir},
                   &text) == 0,
            "echo matrix run failed: " + text);

    const RecordFile manifest =
        read_record_file(std::filesystem::path(outdir) / "manifest.jsonl", kManifestSchema);
    require(manifest.records.size() == 7, "expected 7 manifest rows");
    for (const nlohmann::json& row : manifest.records) {
        require(row.at("status") == "ok", "scenario row not ok: " + row.dump());
        require(row.at("mpe").get<double>() == 0.0, "aggregate MPE not zero");
        require(row.at("rmse_kw").get<double>() == 0.0, "aggregate RMSE not zero");
        require(row.at("egye").get<double>() == 0.0, "aggregate EGYE not zero");
        require(row.at("failed").get<int>() == 0, "echo run had failed samples");

        // Every sample, not just the mean.
        const std::string label = row.at("label").get<std::string>();
        const RecordFile results = read_record_file(
            std::filesystem::path(outdir) / "results" / (label + ".jsonl"), kResultsSchema);
        require(!results.records.empty(), "no per-sample results for " + label);
        for (const nlohmann::json& sample : results.records) {
            require(sample.at("status") == "ok", "sample failed under echo stub");
            require(sample.at("mpe").get<double>() == 0.0, "sample MPE not zero");
            require(sample.at("rmse_kw").get<double>() == 0.0, "sample RMSE not zero");
            require(sample.at("egye").get<double>() == 0.0, "sample EGYE not zero");
        }
    }

    // The rendered report carries one row per scenario.
    require(ws.cli({"report", "--manifest", outdir + "/manifest.jsonl"}, &text) == 0,
            "report failed");
    for (int i = 1; i <= 7; ++i) {
        require(text.find("scenario" + std::to_string(i)) != std::string::npos,
                "report misses scenario row " + std::to_string(i));
    }
}

void criterion_interp_determinism() {
    Workspace& ws = workspace();
    const PreparedDataset prepared = read_prepared_file(ws.prepared());
    const StagePlan plan = default_plan(prepared);
    const std::vector<ScenarioConfig> presets = builtin_scenarios();

    auto run_fresh = [&](const std::filesystem::path& outdir) {
        BackendConfig cfg;
        cfg.kind = BackendKind::interp_stub;
        cfg.job_store_path = outdir / "jobs.jsonl";
        auto backend = make_backend(cfg, prepared.params);
        RunContext ctx{prepared, outdir, backend.get()};
        return run_matrix(ctx, plan, presets);
    };
    const std::filesystem::path first = run_fresh(ws.dir.path() / "interp_a");
    const std::filesystem::path second = run_fresh(ws.dir.path() / "interp_b");
    require(file_bytes(first) == file_bytes(second),
            "interp manifests differ between identical runs");

    // Per-sample metrics equal an independent linear-interpolation oracle.
    std::map<std::string, const MaskedDay*> by_key;
    for (const MaskedDay& day : prepared.days) {
        by_key[DayRef{day.base.user_id, day.base.date, day.mask.start_index}.key()] = &day;
    }
    const RecordFile manifest = read_record_file(first, kManifestSchema);
    require(manifest.records.size() == 7, "expected 7 interp rows");
    for (const nlohmann::json& row : manifest.records) {
        require(row.at("status") == "ok", "interp row not ok");
        const std::string label = row.at("label").get<std::string>();
        const RecordFile results = read_record_file(
            ws.dir.path() / "interp_a" / "results" / (label + ".jsonl"), kResultsSchema);
        double sum_mpe = 0.0, sum_rmse = 0.0, sum_egye = 0.0;
        for (const nlohmann::json& sample : results.records) {
            require(sample.at("status") == "ok", "interp sample failed");
            const std::string key = sample.at("user_id").get<std::string>() + "|" +
                                    sample.at("date").get<std::string>() + "|" +
                                    std::to_string(sample.at("mask_start").get<int>());
            const MaskedDay& day = *by_key.at(key);
            const int start = day.mask.start_index;

            // Oracle fill: pre + (post - pre) * (i + 1) / 16, half away,
            // flat at day boundaries; then the plain dequantize formula.
            double mpe_ref = 0.0, sq = 0.0, st = 0.0, sr = 0.0;
            for (int i = 0; i < kMaskLen; ++i) {
                int fill = 0;
                if (start == 0) {
                    fill = day.base.load_q[static_cast<std::size_t>(start + kMaskLen)];
                } else if (start + kMaskLen >= kPointsPerDay) {
                    fill = day.base.load_q[static_cast<std::size_t>(start - 1)];
                } else {
                    const double pre = day.base.load_q[static_cast<std::size_t>(start - 1)];
                    const double post =
                        day.base.load_q[static_cast<std::size_t>(start + kMaskLen)];
                    fill = static_cast<int>(std::llround(pre + (post - pre) * (i + 1) / 16.0));
                }
                const double restored_kw =
                    prepared.params.load_min + fill / 200.0 * prepared.params.load_range();
                const double truth_kw = day.truth_kw[static_cast<std::size_t>(i)];
                mpe_ref += std::fabs(restored_kw - truth_kw) / truth_kw;
                sq += (restored_kw - truth_kw) * (restored_kw - truth_kw);
                st += truth_kw;
                sr += restored_kw;
            }
            mpe_ref /= kMaskLen;
            const double rmse_ref = std::sqrt(sq / kMaskLen);
            const double egye_ref = std::fabs(sr - st) / st;
            require(std::fabs(sample.at("mpe").get<double>() - mpe_ref) <= 1e-9,
                    "interp MPE differs from oracle at " + key);
            require(std::fabs(sample.at("rmse_kw").get<double>() - rmse_ref) <= 1e-9,
                    "interp RMSE differs from oracle at " + key);
            require(std::fabs(sample.at("egye").get<double>() - egye_ref) <= 1e-9,
                    "interp EGYE differs from oracle at " + key);
            sum_mpe += mpe_ref;
            sum_rmse += rmse_ref;
            sum_egye += egye_ref;
        }
        const double n = static_cast<double>(results.records.size());
        require(std::fabs(row.at("mpe").get<double>() - sum_mpe / n) <= 1e-9,
                "aggregate MPE differs from oracle for " + label);
        require(std::fabs(row.at("rmse_kw").get<double>() - sum_rmse / n) <= 1e-9,
                "aggregate RMSE differs from oracle for " + label);
        require(std::fabs(row.at("egye").get<double>() - sum_egye / n) <= 1e-9,
                "aggregate EGYE differs from oracle for " + label);
    }
}

void criterion_prompt_shapes() {
    const MaskedDay day = sample_day();
    for (bool advanced : {false, true}) {
        for (bool separate : {false, true}) {
            for (bool discard : {false, true}) {
                const PromptVariant v{advanced, separate, discard};
                const ChatSample train = build_training_sample(day, v, kParams);
                const ChatSample test = build_test_prompt(day, v, kParams);
                require(train.messages.size() == (separate ? 6u : 4u),
                        "training sample has the wrong message count");
                require(roles_well_formed(train), "role alternation violated");
                require(train.messages.back().role == Role::assistant,
                        "training sample must end with the completion");
                require(test.messages.size() == train.messages.size() - 1,
                        "test prompt is not the training prefix");
                for (std::size_t i = 0; i < test.messages.size(); ++i) {
                    require(test.messages[i].content == train.messages[i].content,
                            "test prompt diverges from the training sample");
                }
            }
        }
    }

    // Byte-for-byte golden files.
    QuantizedDay q;
    q.user_id = "golden";
    q.date = Date{2018, 7, 1};
    for (int i = 0; i < kPointsPerDay; ++i) {
        q.load_q.push_back(i);
        q.temp_q.push_back(100 + i % 7);
    }
    const MaskedDay golden = apply_mask(q, MaskSpec{40, kMaskLen}, kParams);
    const struct {
        const char* fixture;
        PromptVariant variant;
    } cases[] = {
        {"golden_combined_advanced.jsonl", {true, false, false}},
        {"golden_separate_advanced.jsonl", {true, true, false}},
        {"golden_separate_discard.jsonl", {true, true, true}},
    };
    Workspace& ws = workspace();
    for (const auto& c : cases) {
        const std::filesystem::path out = ws.dir.path() / c.fixture;
        write_chat_dataset(out, {build_training_sample(golden, c.variant, kParams)});
        require(file_bytes(out) == file_bytes(testsupport::fixtures_dir() / c.fixture),
                std::string("golden mismatch for ") + c.fixture);
    }
}

void criterion_scenario_matrix() {
    std::ifstream fixture(testsupport::fixtures_dir() / "scenario_matrix.txt");
    require(fixture.is_open(), "scenario matrix fixture missing");
    const std::vector<ScenarioConfig> presets = builtin_scenarios();
    std::size_t row = 0;
    std::string label;
    std::size_t n = 0;
    char adv = 0, sep = 0, dis = 0, rem = 0;
    while (fixture >> label >> n >> adv >> sep >> dis >> rem) {
        require(row < presets.size(), "more fixture rows than presets");
        const ScenarioConfig& s = presets[row];
        require(s.label == label && s.n_samples == n, "preset label/samples mismatch");
        require(s.advanced_prompt == (adv == 'Y') && s.separate_load_temp == (sep == 'Y') &&
                    s.discard_encoding == (dis == 'Y') && s.remove_abnormal_days == (rem == 'Y'),
                "preset flags mismatch at " + label);
        ++row;
    }
    require(row == 7 && presets.size() == 7, "expected exactly seven presets");
}

void criterion_cost_formula() {
    const CostModel model;
    require(std::fabs(estimate_cost(1'000'000, model) - 8.0) < 1e-12, "$8/1M anchor failed");
    require(std::fabs(estimate_cost(1'625'000, model) - 13.0) < 1e-12, "$13 anchor failed");
    SeededRng rng(31337);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t a = rng.next_below(10'000'000);
        const std::uint64_t b = rng.next_below(10'000'000);
        const double lhs = estimate_cost(a + b, model);
        const double rhs = estimate_cost(a, model) + estimate_cost(b, model);
        require(std::fabs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs), "cost linearity violated");
    }
}

void criterion_reference_fixture() {
    Workspace& ws = workspace();
    std::string text;
    require(ws.cli({"report", "--manifest",
                    (testsupport::fixtures_dir() / "reference_manifest.jsonl").string()},
                   &text) == 0,
            "report on the reference fixture failed");
    std::istringstream lines(text);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        if (line.find("GPT-FT-1") == std::string::npos) {
            continue;
        }
        found = true;
        require(line.find("2.221") != std::string::npos &&
                    line.find("1.977") != std::string::npos &&
                    line.find("1.443") != std::string::npos,
                "GPT-FT-1 row not rendered verbatim: " + line);
    }
    require(found, "GPT-FT-1 row missing from the report");
}

void criterion_robustness() {
    SeededRng rng(90210);
    int repaired = 0, failed = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int start = static_cast<int>(rng.next_below(kMaxMaskStart + 1));
        const MaskedDay day = sample_day(start);
        const PromptVariant v{true, rng.next_below(2) == 0, rng.next_below(2) == 0};
        std::istringstream in(ground_truth_completion(day, v));
        std::vector<std::string> tokens;
        std::string t;
        while (in >> t) {
            tokens.push_back(t);
        }

        const int mode = static_cast<int>(rng.next_below(4));
        bool expect_repair = true;
        switch (mode) {
        case 0: { // short by 1..4: repairable
            const int cut = 1 + static_cast<int>(rng.next_below(4));
            tokens.resize(tokens.size() - static_cast<std::size_t>(cut));
            break;
        }
        case 1: { // long by 1..4: repairable
            const int add = 1 + static_cast<int>(rng.next_below(4));
            for (int i = 0; i < add; ++i) {
                tokens.push_back(v.discard_encoding ? "7" : "LLLLM");
            }
            break;
        }
        case 2: { // one invalid token inside the window
            const int pos = start + static_cast<int>(rng.next_below(kMaskLen));
            tokens[static_cast<std::size_t>(pos)] = "@@@@@";
            break;
        }
        case 3: { // out-of-model-range value inside the window
            const int pos = start + static_cast<int>(rng.next_below(kMaskLen));
            tokens[static_cast<std::size_t>(pos)] = v.discard_encoding ? "242" : "HHHHH";
            break;
        }
        }
        // Occasionally go far beyond the budget; these must fail cleanly.
        if (trial % 10 == 9) {
            tokens.resize(40);
            expect_repair = false;
        }

        std::string completion;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) {
                completion += ' ';
            }
            completion += tokens[i];
        }
        try {
            const RestorationResult r = extract_restored(completion, day, v, kParams);
            require(expect_repair, "expected restoration-failed for a 40-token completion");
            require(!r.repairs.empty(), "malformed completion produced no repair tags");
            for (int value : r.restored_q) {
                require(value >= 0 && value <= 200, "restored value outside [0, 200]");
            }
            ++repaired;
        } catch (const Error& e) {
            require(e.kind() == ErrKind::restoration_failed,
                    std::string("unexpected error kind: ") + e.what());
            require(!expect_repair, "budget-range completion failed to repair");
            ++failed;
        }
    }
    require(repaired > 0 && failed > 0, "robustness suite did not exercise both outcomes");
}

} // namespace

int main() {
    const struct {
        int id;
        const char* name;
        std::function<void()> body;
    } criteria[] = {
        {1, "codec bijection over [0,200] and MISSING", criterion_codec_bijection},
        {2, "quantization round-trip bound on 10k random values", criterion_quantization_roundtrip},
        {3, "metric oracle equivalence on 1k random pairs", criterion_metric_oracle},
        {4, "echo-oracle end-to-end matrix with all-zero errors", criterion_echo_end_to_end},
        {5, "interp-stub determinism and interpolation oracle", criterion_interp_determinism},
        {6, "prompt shape conformance and golden JSONL bytes", criterion_prompt_shapes},
        {7, "scenario matrix fidelity against the fixture", criterion_scenario_matrix},
        {8, "cost formula anchors and linearity", criterion_cost_formula},
        {9, "reference fixture renders the GPT-FT-1 row", criterion_reference_fixture},
        {10, "malformed completions repair or fail cleanly", criterion_robustness},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            criterion.body();
            std::printf("[PASS] criterion %2d: %s\n", criterion.id, criterion.name);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] criterion %2d: %s\n         %s\n", criterion.id, criterion.name,
                        e.what());
        }
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", std::size(criteria));
    return 0;
}

#include "loadpatch/cli.hpp"

#include "loadpatch/backend.hpp"
#include "loadpatch/costing.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/orchestrator.hpp"
#include "loadpatch/records.hpp"
#include "loadpatch/report.hpp"
#include "loadpatch/rng.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace loadpatch {

namespace {

// Values shared across subcommands; a JSON config file (see README) seeds
// the defaults and explicit flags override it.
struct CliDefaults {
    std::uint64_t seed = 42;
    std::string backend = "echo";
    std::string base_model = "gpt-3.5-turbo";
    std::string base_url = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string outdir = "out";
    double price = 8.0;
    int epochs = 3;
    std::vector<std::string> stage1_users;
    std::vector<std::string> targets;
    std::vector<int> counts = {10, 20, 30, 40, 50};
};

CliDefaults load_defaults(int argc, const char* const* argv) {
    CliDefaults d;
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            config_path = argv[i + 1];
        }
    }
    if (config_path.empty()) {
        return d;
    }
    std::ifstream in(config_path);
    if (!in) {
        throw Error(ErrKind::config, "cannot open config '" + config_path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrKind::config, config_path + ": " + e.what());
    }
    if (j.value("schema", "") != "loadpatch.config.v1") {
        throw Error(ErrKind::config, config_path + ": expected schema loadpatch.config.v1");
    }
    d.seed = j.value("seed", d.seed);
    d.backend = j.value("backend", d.backend);
    d.base_model = j.value("base_model", d.base_model);
    d.base_url = j.value("base_url", d.base_url);
    d.api_key_env = j.value("api_key_env", d.api_key_env);
    d.outdir = j.value("outdir", d.outdir);
    d.price = j.value("price_per_million_tokens", d.price);
    d.epochs = j.value("epochs", d.epochs);
    d.stage1_users = j.value("stage1_users", d.stage1_users);
    d.targets = j.value("targets", d.targets);
    d.counts = j.value("counts", d.counts);
    return d;
}

// Minimal single-component glob: '*' and '?' in the filename part only.
bool name_matches(const std::string& name, const std::string& pattern) {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t star = std::string::npos;
    std::size_t star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++n;
            ++p;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') {
        ++p;
    }
    return p == pattern.size();
}

std::vector<std::filesystem::path> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<std::filesystem::path> out;
    for (const std::string& pattern : patterns) {
        const std::filesystem::path p(pattern);
        const std::string name = p.filename().string();
        if (name.find('*') == std::string::npos && name.find('?') == std::string::npos) {
            out.push_back(p);
            continue;
        }
        const std::filesystem::path dir = p.parent_path().empty() ? "." : p.parent_path();
        std::vector<std::filesystem::path> matched;
        if (std::filesystem::is_directory(dir)) {
            for (const auto& entry : std::filesystem::directory_iterator(dir)) {
                if (entry.is_regular_file() && name_matches(entry.path().filename().string(), name)) {
                    matched.push_back(entry.path());
                }
            }
        }
        std::sort(matched.begin(), matched.end());
        out.insert(out.end(), matched.begin(), matched.end());
    }
    if (out.empty()) {
        throw Error(ErrKind::io, "no load files matched");
    }
    return out;
}

BackendConfig backend_config(const CliDefaults& d, const std::string& kind_name,
                             const std::filesystem::path& outdir) {
    BackendConfig cfg;
    cfg.kind = parse_backend_kind(kind_name);
    cfg.base_model_id = d.base_model;
    cfg.base_url = d.base_url;
    cfg.api_key_env = d.api_key_env;
    cfg.job_store_path = outdir / "jobs.jsonl";
    return cfg;
}

StagePlan plan_from_flags(const PreparedDataset& prepared, const CliDefaults& d,
                          const std::vector<std::string>& stage1_users,
                          const std::vector<std::string>& targets) {
    StagePlan plan = default_plan(prepared);
    if (!stage1_users.empty()) {
        plan.stage1_users = stage1_users;
    } else if (!d.stage1_users.empty()) {
        plan.stage1_users = d.stage1_users;
    }
    if (!targets.empty()) {
        plan.stage2_targets = targets;
    } else if (!d.targets.empty()) {
        plan.stage2_targets = d.targets;
    }
    return plan;
}

int cmd_ingest(const std::vector<std::string>& load_patterns, const std::string& temperature,
               const std::string& tz, const std::string& out_path, std::ostream& out) {
    const RawSeries temps = ingest_temperature_csv(temperature);
    std::vector<DailyProfile> days;
    for (const std::filesystem::path& file : expand_globs(load_patterns)) {
        const RawSeries load = ingest_load_csv(file, file.stem().string());
        const std::vector<DailyProfile> user_days = align_and_segment(load, temps);
        days.insert(days.end(), user_days.begin(), user_days.end());
    }
    const DatasetStats stats = summarize(days);
    write_dataset_file(out_path, days, tz);
    out << "ingested " << stats.n_days << " days from " << stats.n_users << " users; load ["
        << stats.load_min << ", " << stats.load_max << "] kW, temperature [" << stats.temp_min
        << ", " << stats.temp_max << "]\n";
    out << "dataset written to " << out_path << '\n';
    return 0;
}

int cmd_prepare(const std::string& dataset, std::uint64_t seed, int mask_len, double threshold,
                const std::string& out_path, std::ostream& out) {
    if (mask_len != kMaskLen) {
        throw Error(ErrKind::config, "mask length is fixed at 16 points (4 hours)");
    }
    const DatasetFile data = read_dataset_file(dataset);
    const PreparedDataset prepared = prepare_dataset(data.days, seed, threshold, data.timezone);
    write_prepared_file(out_path, prepared);
    std::size_t abnormal = 0;
    for (const MaskedDay& day : prepared.days) {
        abnormal += day.abnormal ? 1 : 0;
    }
    out << "prepared " << prepared.days.size() << " masked days (" << abnormal
        << " flagged abnormal), seed " << seed << '\n';
    out << "prepared file written to " << out_path << '\n';
    return 0;
}

int cmd_build_dataset(const std::string& prepared_path, const PromptVariant& variant,
                      std::size_t n, double split, const std::string& out_path,
                      std::ostream& out) {
    const PreparedDataset prepared = read_prepared_file(prepared_path);
    std::set<std::string> user_set;
    for (const MaskedDay& day : prepared.days) {
        user_set.insert(day.base.user_id);
    }
    const std::vector<std::string> users(user_set.begin(), user_set.end());
    const DaySplit days = split_days(prepared, users, split);

    SeededRng rng(derive_seed(prepared.seed, "select:build-dataset"));
    const std::vector<std::size_t> order = rng.shuffled_indices(days.train.size());
    if (days.train.size() < n) {
        throw Error(ErrKind::capacity, "need " + std::to_string(n) + " training samples, only " +
                                           std::to_string(days.train.size()) + " available");
    }
    std::vector<ChatSample> train;
    train.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        train.push_back(build_training_sample(*days.train[order[i]], variant, prepared.params));
    }
    write_chat_dataset(out_path, train);

    std::vector<ChatSample> test;
    test.reserve(days.test.size());
    for (const MaskedDay* day : days.test) {
        test.push_back(build_test_prompt(*day, variant, prepared.params));
    }
    std::filesystem::path test_path(out_path);
    test_path.replace_extension(".test.jsonl");
    write_chat_dataset(test_path, test);

    out << "wrote " << train.size() << " training samples to " << out_path << '\n';
    out << "wrote " << test.size() << " test prompts to " << test_path.string() << '\n';
    return 0;
}

int cmd_run(const CliDefaults& d, const std::string& prepared_path, const std::string& preset,
            const std::string& backend_name, const std::string& outdir,
            const std::vector<std::string>& stage1_users,
            const std::vector<std::string>& targets, std::optional<std::uint64_t> seed_override,
            std::ostream& out) {
    RunContext ctx;
    ctx.prepared = read_prepared_file(prepared_path);
    if (seed_override) {
        // Reseeds the split/selection streams; mask placement stays as
        // prepared.
        ctx.prepared.seed = *seed_override;
    }
    ctx.outdir = outdir;
    std::filesystem::create_directories(ctx.outdir);
    const auto backend = make_backend(backend_config(d, backend_name, ctx.outdir),
                                      ctx.prepared.params);
    ctx.backend = backend.get();

    const StagePlan plan = plan_from_flags(ctx.prepared, d, stage1_users, targets);
    std::vector<ScenarioConfig> presets;
    if (preset == "all") {
        presets = builtin_scenarios();
    } else {
        presets.push_back(scenario_by_label(preset));
    }
    const std::filesystem::path manifest = run_matrix(ctx, plan, presets);
    out << render_manifest_report(manifest);
    out << "manifest: " << manifest.string() << '\n';
    return 0;
}

int cmd_stage2(const CliDefaults& d, const std::string& prepared_path,
               const std::string& scenario_label, const std::string& backend_name,
               const std::string& outdir, const std::vector<std::string>& stage1_users,
               const std::vector<std::string>& targets, const std::vector<int>& counts,
               bool direct, std::optional<std::uint64_t> seed_override, std::ostream& out) {
    RunContext ctx;
    ctx.prepared = read_prepared_file(prepared_path);
    if (seed_override) {
        ctx.prepared.seed = *seed_override;
    }
    ctx.outdir = outdir;
    std::filesystem::create_directories(ctx.outdir);
    const auto backend = make_backend(backend_config(d, backend_name, ctx.outdir),
                                      ctx.prepared.params);
    ctx.backend = backend.get();

    StagePlan plan = plan_from_flags(ctx.prepared, d, stage1_users, targets);
    plan.stage2_sample_counts = counts.empty() ? d.counts : counts;
    plan.direct_control = direct;
    const ScenarioConfig scenario = scenario_by_label(scenario_label);
    const std::filesystem::path manifest = run_stage2_sweep(ctx, plan, scenario);
    out << render_manifest_report(manifest);
    out << "manifest: " << manifest.string() << '\n';
    return 0;
}

int cmd_restore(const std::string& completions_path, const std::string& prepared_path,
                const PromptVariant& variant, const std::string& out_path, std::ostream& out) {
    const PreparedDataset prepared = read_prepared_file(prepared_path);
    std::map<std::string, const MaskedDay*> by_key;
    for (const MaskedDay& day : prepared.days) {
        by_key[DayRef{day.base.user_id, day.base.date, day.mask.start_index}.key()] = &day;
    }

    const RecordFile file = read_record_file(completions_path, "loadpatch.completions.v1");
    std::vector<nlohmann::json> rows;
    std::size_t failed = 0;
    for (const nlohmann::json& rec : file.records) {
        const DayRef ref{rec.at("user_id").get<std::string>(),
                         parse_date(rec.at("date").get<std::string>()),
                         rec.at("mask_start").get<int>()};
        nlohmann::json row{{"user_id", ref.user_id},
                           {"date", ref.date.to_string()},
                           {"mask_start", ref.mask_start},
                           {"label", "restore"}};
        const auto it = by_key.find(ref.key());
        if (it == by_key.end()) {
            throw Error(ErrKind::lookup, "no prepared day for '" + ref.key() + "'");
        }
        try {
            const RestorationResult restored = extract_restored(
                rec.at("completion").get<std::string>(), *it->second, variant, prepared.params);
            const SampleMetrics m = sample_metrics(it->second->truth_kw, restored.restored_kw,
                                                   prepared.params.load_range());
            row["status"] = "ok";
            row["restored_q"] = restored.restored_q;
            row["restored_kw"] = restored.restored_kw;
            row["truth_kw"] = it->second->truth_kw;
            nlohmann::json repairs = nlohmann::json::array();
            for (const Repair& r : restored.repairs) {
                repairs.push_back({{"kind", repair_kind_name(r.kind)}, {"position", r.position}});
            }
            row["repairs"] = std::move(repairs);
            row["mpe"] = m.mpe;
            row["rmse_kw"] = m.rmse_kw;
            row["rmse_norm"] = m.rmse_norm;
            row["egye"] = m.egye;
        } catch (const Error& e) {
            if (e.kind() != ErrKind::restoration_failed) {
                throw;
            }
            row["status"] = "failed";
            row["error"] = e.what();
            ++failed;
        }
        rows.push_back(std::move(row));
    }
    write_record_file(out_path, nlohmann::json{{"schema", kResultsSchema}, {"label", "restore"}},
                      rows);
    out << "restored " << (rows.size() - failed) << " of " << rows.size() << " completions ("
        << failed << " failed); results at " << out_path << '\n';
    return 0;
}

int cmd_cost(const std::string& dataset_path, int epochs, double price, double chars_per_token,
             std::ostream& out) {
    const std::vector<ChatSample> samples = read_chat_dataset(dataset_path);
    CostModel model;
    model.epochs = epochs;
    model.price_per_million_tokens = price;
    model.chars_per_token = chars_per_token;

    const std::uint64_t tokens = dataset_training_tokens(samples, model);
    char cost_buf[32];
    std::snprintf(cost_buf, sizeof(cost_buf), "$%.2f", estimate_cost(tokens, model));
    out << samples.size() << " samples, " << tokens << " trained tokens (x" << epochs
        << " epochs), estimated cost " << cost_buf << '\n';

    out << "samples  tokens  cost\n";
    for (std::size_t n : {std::size_t{128}, std::size_t{256}, std::size_t{512}}) {
        if (n > samples.size()) {
            continue;
        }
        const std::span<const ChatSample> head(samples.data(), n);
        const std::uint64_t t = dataset_training_tokens(head, model);
        std::snprintf(cost_buf, sizeof(cost_buf), "$%.2f", estimate_cost(t, model));
        out << n << "  " << t << "  " << cost_buf << '\n';
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        const CliDefaults defaults = load_defaults(argc, argv);

        CLI::App app{"loadpatch: load profile missing-data restoration with fine-tuned chat models"};
        app.require_subcommand(1);
        std::string config_path;
        app.add_option("--config", config_path, "JSON config file (schema loadpatch.config.v1)");

        // ingest
        auto* ingest = app.add_subcommand("ingest", "Read meter/temperature CSVs into a dataset");
        std::vector<std::string> load_patterns;
        std::string temperature_path, tz = "America/New_York", dataset_out;
        ingest->add_option("--load", load_patterns, "load CSV path or glob (repeatable)")
            ->required();
        ingest->add_option("--temperature", temperature_path, "temperature CSV")->required();
        ingest->add_option("--tz", tz, "meter timezone label (metadata)");
        ingest->add_option("--out", dataset_out, "dataset file to write")->required();

        // prepare
        auto* prepare = app.add_subcommand("prepare", "Quantize, mask and flag abnormal days");
        std::string dataset_in, prepared_out;
        std::uint64_t seed = defaults.seed;
        int mask_len = kMaskLen;
        double threshold = 0.25;
        prepare->add_option("--dataset", dataset_in, "dataset file from ingest")->required();
        prepare->add_option("--seed", seed, "global seed (all randomness derives from it)");
        prepare->add_option("--mask-len", mask_len, "mask length (fixed at 16)");
        prepare->add_option("--abnormal-threshold", threshold,
                            "peak-drop fraction of the annual range");
        prepare->add_option("--out", prepared_out, "prepared file to write")->required();

        // build-dataset
        auto* build = app.add_subcommand("build-dataset", "Write fine-tune/test JSONL files");
        std::string prepared_in, jsonl_out;
        bool advanced = false, separate = false, discard = false;
        std::size_t n_samples = 512;
        double split = 0.8;
        build->add_option("--prepared", prepared_in, "prepared file")->required();
        build->add_flag("--advanced", advanced, "advanced instruction prompt");
        build->add_flag("--separate", separate, "separate load/temperature turns");
        build->add_flag("--discard", discard, "integers instead of ternary words");
        build->add_option("--n", n_samples, "training sample count");
        build->add_option("--split", split, "train fraction per user");
        build->add_option("--out", jsonl_out, "training JSONL path")->required();

        // run
        auto* run = app.add_subcommand("run", "Run scenario presets end-to-end");
        std::string run_prepared, preset = "scenario7", backend_name = defaults.backend;
        std::string outdir = defaults.outdir;
        std::vector<std::string> stage1_users, targets;
        std::uint64_t run_seed = 0;
        run->add_option("--prepared", run_prepared, "prepared file")->required();
        run->add_option("--preset", preset, "scenario1..scenario7 or 'all'");
        run->add_option("--backend", backend_name, "echo | interp | remote");
        run->add_option("--outdir", outdir, "output directory");
        run->add_option("--seed", run_seed, "override the prepared seed for splits/selection");
        run->add_option("--stage1-users", stage1_users, "stage-1 user pool")->delimiter(',');
        run->add_option("--target", targets, "stage-2 target user(s)")->delimiter(',');

        // stage2
        auto* stage2 = app.add_subcommand("stage2", "Second-stage sweep on target users");
        std::string s2_prepared, s2_scenario = "scenario7", s2_backend = defaults.backend;
        std::string s2_outdir = defaults.outdir;
        std::vector<std::string> s2_stage1_users, s2_targets;
        std::vector<int> counts;
        bool direct = false;
        std::uint64_t s2_seed = 0;
        stage2->add_option("--prepared", s2_prepared, "prepared file")->required();
        stage2->add_option("--scenario", s2_scenario, "scenario preset for prompt flags");
        stage2->add_option("--backend", s2_backend, "echo | interp | remote");
        stage2->add_option("--outdir", s2_outdir, "output directory");
        stage2->add_option("--seed", s2_seed, "override the prepared seed for splits/selection");
        stage2->add_option("--stage1-users", s2_stage1_users, "stage-1 user pool")->delimiter(',');
        stage2->add_option("--target", s2_targets, "target user(s)")->delimiter(',');
        stage2->add_option("--counts", counts, "second-stage sample counts")->delimiter(',');
        stage2->add_flag("--direct", direct, "also run the single-stage control");

        // restore
        auto* restore = app.add_subcommand("restore", "Decode completions into restored windows");
        std::string completions_path, restore_prepared, results_out;
        bool r_advanced = false, r_separate = false, r_discard = false;
        restore->add_option("--completions", completions_path,
                            "completions record file (loadpatch.completions.v1)")
            ->required();
        restore->add_option("--prepared", restore_prepared, "prepared file")->required();
        restore->add_flag("--advanced", r_advanced, "advanced instruction prompt");
        restore->add_flag("--separate", r_separate, "separate load/temperature turns");
        restore->add_flag("--discard", r_discard, "integers instead of ternary words");
        restore->add_option("--out", results_out, "results file to write")->required();

        // evaluate
        auto* evaluate = app.add_subcommand("evaluate", "Aggregate a per-sample results file");
        std::string results_in, report_out;
        evaluate->add_option("--results", results_in, "results file")->required();
        evaluate->add_option("--report", report_out, "machine-readable report path");

        // cost
        auto* cost = app.add_subcommand("cost", "Token count and fine-tuning cost estimate");
        std::string cost_dataset;
        int epochs = defaults.epochs;
        double price = defaults.price, chars_per_token = 3.5;
        cost->add_option("--dataset", cost_dataset, "chat JSONL file")->required();
        cost->add_option("--epochs", epochs, "training epochs");
        cost->add_option("--price", price, "USD per 1M trained tokens");
        cost->add_option("--chars-per-token", chars_per_token, "approximate counter ratio");

        // report
        auto* report = app.add_subcommand("report", "Render manifest tables");
        std::string manifest_path;
        report->add_option("--manifest", manifest_path, "manifest file")->required();

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            err << e.what() << '\n';
            return 2;
        }

        if (app.got_subcommand(ingest)) {
            return cmd_ingest(load_patterns, temperature_path, tz, dataset_out, out);
        }
        if (app.got_subcommand(prepare)) {
            return cmd_prepare(dataset_in, seed, mask_len, threshold, prepared_out, out);
        }
        if (app.got_subcommand(build)) {
            return cmd_build_dataset(prepared_in, PromptVariant{advanced, separate, discard},
                                     n_samples, split, jsonl_out, out);
        }
        if (app.got_subcommand(run)) {
            const std::optional<std::uint64_t> seed_override =
                run->count("--seed") ? std::optional<std::uint64_t>(run_seed) : std::nullopt;
            return cmd_run(defaults, run_prepared, preset, backend_name, outdir, stage1_users,
                           targets, seed_override, out);
        }
        if (app.got_subcommand(stage2)) {
            const std::optional<std::uint64_t> seed_override =
                stage2->count("--seed") ? std::optional<std::uint64_t>(s2_seed) : std::nullopt;
            return cmd_stage2(defaults, s2_prepared, s2_scenario, s2_backend, s2_outdir,
                              s2_stage1_users, s2_targets, counts, direct, seed_override, out);
        }
        if (app.got_subcommand(restore)) {
            return cmd_restore(completions_path, restore_prepared,
                               PromptVariant{r_advanced, r_separate, r_discard}, results_out,
                               out);
        }
        if (app.got_subcommand(evaluate)) {
            out << render_results_report(results_in, report_out);
            return 0;
        }
        if (app.got_subcommand(cost)) {
            return cmd_cost(cost_dataset, epochs, price, chars_per_token, out);
        }
        if (app.got_subcommand(report)) {
            out << render_manifest_report(manifest_path);
            return 0;
        }
        err << "no subcommand given\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace loadpatch

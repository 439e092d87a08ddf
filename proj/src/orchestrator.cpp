#include "loadpatch/orchestrator.hpp"

#include "loadpatch/costing.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/records.hpp"
#include "loadpatch/rng.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <thread>

namespace loadpatch {

std::vector<ScenarioConfig> builtin_scenarios() {
    return {
        {"scenario1", 128, false, false, false, false},
        {"scenario2", 256, false, false, false, false},
        {"scenario3", 512, false, false, false, false},
        {"scenario4", 512, true, false, false, false},
        {"scenario5", 512, true, true, false, false},
        {"scenario6", 512, true, true, true, false},
        {"scenario7", 512, true, true, true, true},
    };
}

ScenarioConfig scenario_by_label(const std::string& label) {
    for (const ScenarioConfig& s : builtin_scenarios()) {
        if (s.label == label) {
            return s;
        }
    }
    throw Error(ErrKind::config, "unknown scenario preset '" + label + "'");
}

namespace {

std::vector<std::string> distinct_users(const PreparedDataset& prepared) {
    std::set<std::string> users;
    for (const MaskedDay& day : prepared.days) {
        users.insert(day.base.user_id);
    }
    return {users.begin(), users.end()};
}

nlohmann::json scenario_json(const ScenarioConfig& s) {
    return {{"label", s.label},
            {"n_samples", s.n_samples},
            {"advanced_prompt", s.advanced_prompt},
            {"separate_load_temp", s.separate_load_temp},
            {"discard_encoding", s.discard_encoding},
            {"remove_abnormal_days", s.remove_abnormal_days}};
}

// Train pool selection: seeded shuffle, first n. Error{capacity} reports
// what is actually available.
std::vector<const MaskedDay*> select_samples(std::vector<const MaskedDay*> pool,
                                             std::size_t n, std::uint64_t seed,
                                             const std::string& stream_name) {
    if (pool.size() < n) {
        throw Error(ErrKind::capacity, "need " + std::to_string(n) + " samples, only " +
                                           std::to_string(pool.size()) + " available for " +
                                           stream_name);
    }
    SeededRng rng(derive_seed(seed, "select:" + stream_name));
    const std::vector<std::size_t> order = rng.shuffled_indices(pool.size());
    std::vector<const MaskedDay*> chosen;
    chosen.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        chosen.push_back(pool[order[i]]);
    }
    return chosen;
}

std::filesystem::path dataset_dir(const RunContext& ctx) {
    const std::filesystem::path dir = ctx.outdir / "datasets";
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path write_training_file(RunContext& ctx, const std::string& label,
                                          std::span<const MaskedDay* const> days,
                                          const PromptVariant& variant) {
    std::vector<ChatSample> samples;
    samples.reserve(days.size());
    for (const MaskedDay* day : days) {
        samples.push_back(build_training_sample(*day, variant, ctx.prepared.params));
    }
    const std::filesystem::path path = dataset_dir(ctx) / (label + ".jsonl");
    write_chat_dataset(path, samples);
    return path;
}

std::map<std::string, std::vector<const MaskedDay*>>
days_by_user(const PreparedDataset& prepared) {
    std::map<std::string, std::vector<const MaskedDay*>> by_user;
    for (const MaskedDay& day : prepared.days) {
        by_user[day.base.user_id].push_back(&day);
    }
    for (auto& [user, days] : by_user) {
        std::sort(days.begin(), days.end(), [](const MaskedDay* a, const MaskedDay* b) {
            return a->base.date < b->base.date;
        });
    }
    return by_user;
}

} // namespace

StagePlan default_plan(const PreparedDataset& prepared) {
    const std::vector<std::string> users = distinct_users(prepared);
    if (users.size() < 2) {
        throw Error(ErrKind::config, "need at least two users to form a stage plan");
    }
    StagePlan plan;
    plan.stage1_users.assign(users.begin(), users.end() - 1);
    if (plan.stage1_users.size() > 10) {
        plan.stage1_users.resize(10);
    }
    plan.stage2_targets = {users.back()};
    return plan;
}

void validate_plan(const StagePlan& plan, const PreparedDataset& prepared) {
    if (plan.stage1_users.empty()) {
        throw Error(ErrKind::config, "stage plan has no stage-1 users");
    }
    const std::vector<std::string> present = distinct_users(prepared);
    const std::set<std::string> present_set(present.begin(), present.end());
    for (const std::string& user : plan.stage1_users) {
        if (!present_set.count(user)) {
            throw Error(ErrKind::config, "stage-1 user '" + user + "' not in prepared dataset");
        }
    }
    const std::set<std::string> stage1(plan.stage1_users.begin(), plan.stage1_users.end());
    for (const std::string& target : plan.stage2_targets) {
        if (stage1.count(target)) {
            throw Error(ErrKind::config,
                        "stage-2 target '" + target + "' overlaps the stage-1 user pool");
        }
        if (!present_set.count(target)) {
            throw Error(ErrKind::config, "target user '" + target + "' not in prepared dataset");
        }
    }
    if (!(plan.split_frac > 0.0) || plan.split_frac >= 1.0) {
        throw Error(ErrKind::config, "split fraction must be in (0, 1)");
    }
}

DaySplit split_days(const PreparedDataset& prepared, std::span<const std::string> users,
                    double frac) {
    const auto by_user = days_by_user(prepared);
    DaySplit split;
    for (const std::string& user : users) {
        const auto it = by_user.find(user);
        if (it == by_user.end()) {
            continue;
        }
        const std::vector<const MaskedDay*>& days = it->second;
        SeededRng rng(derive_seed(prepared.seed, "split:" + user));
        const std::vector<std::size_t> order = rng.shuffled_indices(days.size());
        const std::size_t n_train =
            static_cast<std::size_t>(std::floor(frac * static_cast<double>(days.size())));
        for (std::size_t i = 0; i < order.size(); ++i) {
            (i < n_train ? split.train : split.test).push_back(days[order[i]]);
        }
    }
    return split;
}

FineTuneJob run_stage1(RunContext& ctx, const StagePlan& plan, const ScenarioConfig& scenario) {
    validate_plan(plan, ctx.prepared);
    DaySplit split = split_days(ctx.prepared, plan.stage1_users, plan.split_frac);
    std::vector<const MaskedDay*> pool = std::move(split.train);
    if (scenario.remove_abnormal_days) {
        std::erase_if(pool, [](const MaskedDay* day) { return day->abnormal; });
    }
    const std::vector<const MaskedDay*> chosen =
        select_samples(std::move(pool), scenario.n_samples, ctx.prepared.seed, scenario.label);
    const std::filesystem::path file =
        write_training_file(ctx, scenario.label + "_train", chosen, scenario.variant());
    return ctx.backend->submit_finetune(file, FineTuneParams{JobStage::stage1, {}, {}});
}

std::vector<FineTuneJob> run_stage2(RunContext& ctx, const StagePlan& plan,
                                    const ScenarioConfig& scenario, const FineTuneJob& base_job,
                                    const std::string& target) {
    if (base_job.status != JobStatus::succeeded || !base_job.result_model_id) {
        throw Error(ErrKind::dependency, "stage-2 requires a succeeded stage-1 job");
    }
    validate_plan(plan, ctx.prepared);
    const std::vector<std::string> target_only{target};
    const DaySplit split = split_days(ctx.prepared, target_only, plan.split_frac);

    std::vector<FineTuneJob> jobs;
    for (int count : plan.stage2_sample_counts) {
        if (count <= 0) {
            continue; // base model evaluated as-is by the sweep
        }
        const std::string label =
            scenario.label + "_stage2_" + target + "_n" + std::to_string(count);
        const std::vector<const MaskedDay*> chosen =
            select_samples(split.train, static_cast<std::size_t>(count), ctx.prepared.seed,
                           label);
        const std::filesystem::path file =
            write_training_file(ctx, label, chosen, scenario.variant());
        FineTuneParams params{JobStage::stage2, {}, *base_job.result_model_id};
        jobs.push_back(ctx.backend->submit_finetune(file, params));
    }
    return jobs;
}

FineTuneJob run_direct(RunContext& ctx, const StagePlan& plan, const ScenarioConfig& scenario,
                       const std::string& target) {
    const auto by_user = days_by_user(ctx.prepared);
    const auto it = by_user.find(target);
    const std::size_t available = it == by_user.end() ? 0 : it->second.size();
    const std::size_t needed =
        static_cast<std::size_t>(plan.direct_train_samples + plan.direct_test_samples);
    if (available < needed) {
        throw Error(ErrKind::capacity, "direct fine-tune needs " + std::to_string(needed) +
                                           " target days, only " + std::to_string(available) +
                                           " available");
    }
    SeededRng rng(derive_seed(ctx.prepared.seed, "direct:" + target));
    const std::vector<std::size_t> order = rng.shuffled_indices(available);
    std::vector<const MaskedDay*> train;
    train.reserve(static_cast<std::size_t>(plan.direct_train_samples));
    for (int i = 0; i < plan.direct_train_samples; ++i) {
        train.push_back(it->second[order[static_cast<std::size_t>(i)]]);
    }
    const std::string label = scenario.label + "_direct_" + target;
    const std::filesystem::path file = write_training_file(ctx, label, train, scenario.variant());
    return ctx.backend->submit_finetune(file, FineTuneParams{JobStage::direct, {}, {}});
}

EvalOutcome evaluate_days(Backend& backend, const std::string& model_id,
                          std::span<const MaskedDay* const> days, const PromptVariant& variant,
                          const NormalizationParams& params, const std::string& label) {
    for (const MaskedDay* day : days) {
        backend.register_day(*day);
    }

    struct PerDay {
        nlohmann::json row;
        std::optional<SampleMetrics> metrics;
        std::optional<Error> fatal; // non-restoration failure, rethrown after join
    };
    std::vector<PerDay> outcomes(days.size());

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (std::size_t i = cursor.fetch_add(1); i < days.size(); i = cursor.fetch_add(1)) {
            const MaskedDay& day = *days[i];
            PerDay& out = outcomes[i];
            const DayRef ref{day.base.user_id, day.base.date, day.mask.start_index};
            nlohmann::json row{{"user_id", ref.user_id},
                               {"date", ref.date.to_string()},
                               {"mask_start", ref.mask_start},
                               {"label", label}};
            try {
                const ChatSample prompt = build_test_prompt(day, variant, params);
                const std::string completion = backend.chat_complete(model_id, prompt);
                const RestorationResult restored =
                    extract_restored(completion, day, variant, params);
                const SampleMetrics m =
                    sample_metrics(day.truth_kw, restored.restored_kw, params.load_range());
                row["status"] = "ok";
                row["restored_q"] = restored.restored_q;
                row["restored_kw"] = restored.restored_kw;
                row["truth_kw"] = day.truth_kw;
                nlohmann::json repairs = nlohmann::json::array();
                for (const Repair& r : restored.repairs) {
                    repairs.push_back(
                        {{"kind", repair_kind_name(r.kind)}, {"position", r.position}});
                }
                row["repairs"] = std::move(repairs);
                row["mpe"] = m.mpe;
                row["rmse_kw"] = m.rmse_kw;
                row["rmse_norm"] = m.rmse_norm;
                row["egye"] = m.egye;
                out.metrics = m;
            } catch (const Error& e) {
                if (e.kind() != ErrKind::restoration_failed) {
                    out.fatal = e;
                }
                row["status"] = "failed";
                row["error"] = e.what();
            }
            out.row = std::move(row);
        }
    };

    const int n_threads = std::max(1, std::min<int>(backend.config().max_in_flight,
                                                    static_cast<int>(days.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            threads.emplace_back(worker);
        }
        for (std::thread& t : threads) {
            t.join();
        }
    }

    EvalOutcome outcome;
    std::vector<SampleMetrics> succeeded;
    std::size_t failed = 0;
    for (PerDay& per : outcomes) {
        if (per.fatal) {
            throw *per.fatal;
        }
        if (per.metrics) {
            succeeded.push_back(*per.metrics);
        } else {
            ++failed;
        }
        outcome.sample_rows.push_back(std::move(per.row));
    }
    outcome.report = aggregate(succeeded, label, failed);
    return outcome;
}

std::string manifest_row_key(const std::string& label, std::uint64_t seed, BackendKind kind) {
    return hex64(fnv1a64(label + "|" + std::to_string(seed) + "|" + backend_kind_name(kind)));
}

namespace {

std::set<std::string> completed_keys(const std::filesystem::path& manifest) {
    std::set<std::string> keys;
    if (!std::filesystem::exists(manifest)) {
        return keys;
    }
    const RecordFile file = read_record_file(manifest, kManifestSchema);
    for (const nlohmann::json& row : file.records) {
        if (row.value("status", "") == "ok") {
            keys.insert(row.value("key", ""));
        }
    }
    return keys;
}

void write_results_file(const RunContext& ctx, const std::string& label,
                        const std::vector<nlohmann::json>& rows) {
    const std::filesystem::path dir = ctx.outdir / "results";
    std::filesystem::create_directories(dir);
    write_record_file(dir / (label + ".jsonl"),
                      nlohmann::json{{"schema", kResultsSchema}, {"label", label}}, rows);
}

nlohmann::json base_row(const RunContext& ctx, const std::string& kind, const std::string& label,
                        const std::string& key) {
    return {{"key", key},
            {"kind", kind},
            {"label", label},
            {"seed", ctx.prepared.seed},
            {"backend", backend_kind_name(ctx.backend->config().kind)}};
}

void fill_success(nlohmann::json& row, const FineTuneJob& job, const MetricsReport& report) {
    row["status"] = "ok";
    row["job_id"] = job.job_id;
    row["model_id"] = job.result_model_id.value_or("");
    row["mpe"] = report.mean_mpe;
    row["rmse_kw"] = report.mean_rmse_kw;
    row["rmse_norm"] = report.mean_rmse_norm;
    row["egye"] = report.mean_egye;
    row["n_eval"] = report.samples.size();
    row["failed"] = report.failed;
    if (job.trained_tokens) {
        row["trained_tokens"] = *job.trained_tokens;
        row["cost_usd"] = estimate_cost(*job.trained_tokens, CostModel{});
    }
}

} // namespace

std::filesystem::path run_matrix(RunContext& ctx, const StagePlan& plan,
                                 std::span<const ScenarioConfig> presets) {
    std::filesystem::create_directories(ctx.outdir);
    const std::filesystem::path manifest = ctx.outdir / "manifest.jsonl";
    const nlohmann::json header{{"schema", kManifestSchema}};
    const std::set<std::string> done = completed_keys(manifest);
    const BackendKind kind = ctx.backend->config().kind;

    for (const ScenarioConfig& scenario : presets) {
        const std::string key = manifest_row_key(scenario.label, ctx.prepared.seed, kind);
        if (done.count(key)) {
            continue; // paid work is never repeated
        }
        nlohmann::json row = base_row(ctx, "scenario", scenario.label, key);
        row["config"] = scenario_json(scenario);
        try {
            const FineTuneJob job = run_stage1(ctx, plan, scenario);
            DaySplit split = split_days(ctx.prepared, plan.stage1_users, plan.split_frac);
            const EvalOutcome outcome =
                evaluate_days(*ctx.backend, job.result_model_id.value_or(""), split.test,
                              scenario.variant(), ctx.prepared.params, scenario.label);
            write_results_file(ctx, scenario.label, outcome.sample_rows);
            fill_success(row, job, outcome.report);
        } catch (const Error& e) {
            row["status"] = "error";
            row["error"] = e.what();
        }
        append_record(manifest, header, row);
    }
    return manifest;
}

std::filesystem::path run_stage2_sweep(RunContext& ctx, const StagePlan& plan,
                                       const ScenarioConfig& scenario) {
    validate_plan(plan, ctx.prepared);
    std::filesystem::create_directories(ctx.outdir);
    const std::filesystem::path manifest = ctx.outdir / "manifest.jsonl";
    const nlohmann::json header{{"schema", kManifestSchema}};
    const std::set<std::string> done = completed_keys(manifest);
    const BackendKind kind = ctx.backend->config().kind;

    const FineTuneJob base_job = run_stage1(ctx, plan, scenario);

    for (const std::string& target : plan.stage2_targets) {
        const std::vector<std::string> target_only{target};
        const DaySplit split = split_days(ctx.prepared, target_only, plan.split_frac);

        // Base model on the target user: the without-second-stage column.
        {
            const std::string label = scenario.label + "_stage2_" + target + "_n0";
            const std::string key = manifest_row_key(label, ctx.prepared.seed, kind);
            if (!done.count(key)) {
                nlohmann::json row = base_row(ctx, "stage2", label, key);
                row["target"] = target;
                row["n_train"] = 0;
                try {
                    const EvalOutcome outcome = evaluate_days(
                        *ctx.backend, base_job.result_model_id.value_or(""), split.test,
                        scenario.variant(), ctx.prepared.params, label);
                    write_results_file(ctx, label, outcome.sample_rows);
                    fill_success(row, base_job, outcome.report);
                } catch (const Error& e) {
                    row["status"] = "error";
                    row["error"] = e.what();
                }
                append_record(manifest, header, row);
            }
        }

        for (int count : plan.stage2_sample_counts) {
            if (count <= 0) {
                continue;
            }
            const std::string label =
                scenario.label + "_stage2_" + target + "_n" + std::to_string(count);
            const std::string key = manifest_row_key(label, ctx.prepared.seed, kind);
            if (done.count(key)) {
                continue;
            }
            nlohmann::json row = base_row(ctx, "stage2", label, key);
            row["target"] = target;
            row["n_train"] = count;
            try {
                StagePlan one_count = plan;
                one_count.stage2_sample_counts = {count};
                const std::vector<FineTuneJob> jobs =
                    run_stage2(ctx, one_count, scenario, base_job, target);
                const EvalOutcome outcome = evaluate_days(
                    *ctx.backend, jobs.front().result_model_id.value_or(""), split.test,
                    scenario.variant(), ctx.prepared.params, label);
                write_results_file(ctx, label, outcome.sample_rows);
                fill_success(row, jobs.front(), outcome.report);
            } catch (const Error& e) {
                row["status"] = "error";
                row["error"] = e.what();
            }
            append_record(manifest, header, row);
        }

        if (plan.direct_control) {
            const std::string label = scenario.label + "_direct_" + target;
            const std::string key = manifest_row_key(label, ctx.prepared.seed, kind);
            if (done.count(key)) {
                continue;
            }
            nlohmann::json row = base_row(ctx, "direct", label, key);
            row["target"] = target;
            row["n_train"] = plan.direct_train_samples;
            try {
                const FineTuneJob job = run_direct(ctx, plan, scenario, target);
                // Evaluate on the reserved tail of the seeded order.
                const auto by_user = days_by_user(ctx.prepared);
                const std::vector<const MaskedDay*>& days = by_user.at(target);
                SeededRng rng(derive_seed(ctx.prepared.seed, "direct:" + target));
                const std::vector<std::size_t> order = rng.shuffled_indices(days.size());
                std::vector<const MaskedDay*> test;
                for (int i = 0; i < plan.direct_test_samples; ++i) {
                    test.push_back(
                        days[order[static_cast<std::size_t>(plan.direct_train_samples + i)]]);
                }
                const EvalOutcome outcome =
                    evaluate_days(*ctx.backend, job.result_model_id.value_or(""), test,
                                  scenario.variant(), ctx.prepared.params, label);
                write_results_file(ctx, label, outcome.sample_rows);
                fill_success(row, job, outcome.report);
            } catch (const Error& e) {
                row["status"] = "error";
                row["error"] = e.what();
            }
            append_record(manifest, header, row);
        }
    }
    return manifest;
}

} // namespace loadpatch

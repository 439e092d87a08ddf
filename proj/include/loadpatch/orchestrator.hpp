#pragma once

#include "loadpatch/backend.hpp"
#include "loadpatch/metrics.hpp"
#include "loadpatch/restorer.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace loadpatch {

// One run of the ablation matrix: sample budget plus the four switches.
struct ScenarioConfig {
    std::string label;
    std::size_t n_samples = 0;
    bool advanced_prompt = false;
    bool separate_load_temp = false;
    bool discard_encoding = false;
    bool remove_abnormal_days = false;

    PromptVariant variant() const {
        return PromptVariant{advanced_prompt, separate_load_temp, discard_encoding};
    }
};

// The seven built-in presets, row-for-row: scenario1 = 128 samples all-N
// through scenario7 = 512 samples all-Y.
std::vector<ScenarioConfig> builtin_scenarios();
ScenarioConfig scenario_by_label(const std::string& label);

struct StagePlan {
    std::vector<std::string> stage1_users;        // the 10-user pool
    std::vector<std::string> stage2_targets;      // disjoint from stage1_users
    std::vector<int> stage2_sample_counts = {10, 20, 30, 40, 50};
    bool direct_control = false;
    int direct_train_samples = 68;
    int direct_test_samples = 18;
    double split_frac = 0.8; // per-user day-level train share
};

// Derives a plan from the users present: all but the last become the
// stage-1 pool, the last user the stage-2 target.
StagePlan default_plan(const PreparedDataset& prepared);
void validate_plan(const StagePlan& plan, const PreparedDataset& prepared);

struct RunContext {
    PreparedDataset prepared;
    std::filesystem::path outdir;
    Backend* backend = nullptr;
};

// Deterministic per-user day split; train days never depend on the scenario.
struct DaySplit {
    std::vector<const MaskedDay*> train;
    std::vector<const MaskedDay*> test;
};
DaySplit split_days(const PreparedDataset& prepared, std::span<const std::string> users,
                    double frac);

// Builds the scenario's training file (abnormal-day filter applied iff
// configured), submits it, records the job. Error{capacity} names the
// available sample count when the budget cannot be met.
FineTuneJob run_stage1(RunContext& ctx, const StagePlan& plan, const ScenarioConfig& scenario);

// One fine-tune per sample count, chained onto the stage-1 result model;
// zero counts are skipped (the base model is evaluated as-is by the sweep).
std::vector<FineTuneJob> run_stage2(RunContext& ctx, const StagePlan& plan,
                                    const ScenarioConfig& scenario, const FineTuneJob& base_job,
                                    const std::string& target);

// Single-stage control: 68 target-user samples trained, 18 reserved.
FineTuneJob run_direct(RunContext& ctx, const StagePlan& plan, const ScenarioConfig& scenario,
                       const std::string& target);

struct EvalOutcome {
    MetricsReport report;
    std::vector<nlohmann::json> sample_rows; // per-sample result records
};

// Fan-out over test days with the backend's bounded parallelism; failed
// restorations are excluded from aggregates and counted.
EvalOutcome evaluate_days(Backend& backend, const std::string& model_id,
                          std::span<const MaskedDay* const> days, const PromptVariant& variant,
                          const NormalizationParams& params, const std::string& label);

inline constexpr const char* kManifestSchema = "loadpatch.manifest.v1";
inline constexpr const char* kResultsSchema = "loadpatch.results.v1";

// Executes presets end-to-end (build, fine-tune, restore, evaluate), one
// manifest row each. The manifest is append-only and resumable: rows keyed
// by (label, seed, backend kind) are skipped when already completed, and a
// scenario failure is recorded without stopping the rest.
std::filesystem::path run_matrix(RunContext& ctx, const StagePlan& plan,
                                 std::span<const ScenarioConfig> presets);

// Second-stage sweep for each configured target: the count-sweep rows, the
// count-0 (base model as-is) row, and the direct-control row when enabled.
std::filesystem::path run_stage2_sweep(RunContext& ctx, const StagePlan& plan,
                                       const ScenarioConfig& scenario);

std::string manifest_row_key(const std::string& label, std::uint64_t seed, BackendKind kind);

} // namespace loadpatch

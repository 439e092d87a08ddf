#pragma once

#include "loadpatch/promptset.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace loadpatch {

enum class BackendKind { remote, echo_stub, interp_stub };

std::string backend_kind_name(BackendKind kind);
BackendKind parse_backend_kind(const std::string& name);

enum class JobStage { stage1, stage2, direct };
enum class JobStatus { pending, running, succeeded, failed };

std::string job_stage_name(JobStage stage);
std::string job_status_name(JobStatus status);

// One fine-tuning job; stage labels map onto GPT-FT-1 / GPT-FT-2 / GPT-FT-3.
struct FineTuneJob {
    std::string job_id;
    JobStage stage = JobStage::stage1;
    std::string base_model_id;
    std::string dataset_path;
    JobStatus status = JobStatus::pending;
    std::optional<std::string> result_model_id;
    std::optional<std::uint64_t> trained_tokens;
};

struct FineTuneParams {
    JobStage stage = JobStage::stage1;
    // Passed through to the provider unvalidated; provider defaults apply
    // when unset.
    std::optional<int> n_epochs;
    // Stage-2 jobs chain onto the stage-1 result model.
    std::optional<std::string> base_model_override;
};

struct BackendConfig {
    BackendKind kind = BackendKind::echo_stub;
    std::string base_model_id = "gpt-3.5-turbo";
    std::string base_url;                      // remote only
    std::string api_key_env = "OPENAI_API_KEY"; // remote only
    std::filesystem::path job_store_path;      // empty disables persistence
    int max_in_flight = 4;
    int poll_interval_ms = 2000;
    int max_retries = 5;
};

// Append-only persistence for fine-tune jobs (schema loadpatch.jobs.v1).
class JobStore {
public:
    explicit JobStore(std::filesystem::path path);

    void append(const FineTuneJob& job);
    std::vector<FineTuneJob> load() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

class Backend {
public:
    virtual ~Backend() = default;

    // Validates that every sample in the file is training-shaped before any
    // upload, then runs the job to a terminal status.
    virtual FineTuneJob submit_finetune(const std::filesystem::path& dataset_path,
                                        const FineTuneParams& params) = 0;

    // Prompt must end with a user message.
    virtual std::string chat_complete(const std::string& model_id, const ChatSample& prompt) = 0;

    // Stubs answer from this registry; the remote backend ignores it.
    virtual void register_day(const MaskedDay& day) { (void)day; }

    std::vector<FineTuneJob> list_jobs() const;
    const BackendConfig& config() const { return config_; }

protected:
    explicit Backend(BackendConfig config);

    void validate_training_file(const std::filesystem::path& dataset_path) const;
    void record_job(const FineTuneJob& job);

    BackendConfig config_;
    std::unique_ptr<JobStore> store_;
};

// Perfect-oracle stub: answers every test prompt with the registered day's
// ground-truth completion. Deterministic model ids derived from the dataset
// digest.
// Interp stub: fills the masked window by linear interpolation between the
// boundary values and re-encodes in the prompt's variant format.
std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      const NormalizationParams& params);

// Remote-only construction without params (chat formats come from prompts).
std::unique_ptr<Backend> make_remote_backend(const BackendConfig& config);

// Exposed for the interp stub's oracle tests: fill for positions
// [start, start+len) given the boundary values; flat when a side is absent.
std::vector<int> interpolate_window(std::optional<int> pre, std::optional<int> post, int len);

} // namespace loadpatch

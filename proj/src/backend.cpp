#include "loadpatch/backend.hpp"

#include "loadpatch/costing.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/records.hpp"
#include "loadpatch/rng.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace loadpatch {

std::string backend_kind_name(BackendKind kind) {
    switch (kind) {
    case BackendKind::remote: return "remote";
    case BackendKind::echo_stub: return "echo";
    case BackendKind::interp_stub: return "interp";
    }
    return "unknown";
}

BackendKind parse_backend_kind(const std::string& name) {
    if (name == "remote") {
        return BackendKind::remote;
    }
    if (name == "echo" || name == "echo_stub") {
        return BackendKind::echo_stub;
    }
    if (name == "interp" || name == "interp_stub") {
        return BackendKind::interp_stub;
    }
    throw Error(ErrKind::config, "unknown backend kind '" + name + "'");
}

std::string job_stage_name(JobStage stage) {
    switch (stage) {
    case JobStage::stage1: return "stage1";
    case JobStage::stage2: return "stage2";
    case JobStage::direct: return "direct";
    }
    return "unknown";
}

std::string job_status_name(JobStatus status) {
    switch (status) {
    case JobStatus::pending: return "pending";
    case JobStatus::running: return "running";
    case JobStatus::succeeded: return "succeeded";
    case JobStatus::failed: return "failed";
    }
    return "unknown";
}

namespace {

constexpr const char* kJobSchema = "loadpatch.jobs.v1";

JobStage parse_stage(const std::string& name) {
    if (name == "stage1") return JobStage::stage1;
    if (name == "stage2") return JobStage::stage2;
    if (name == "direct") return JobStage::direct;
    throw Error(ErrKind::storage, "unknown job stage '" + name + "'");
}

JobStatus parse_status(const std::string& name) {
    if (name == "pending") return JobStatus::pending;
    if (name == "running") return JobStatus::running;
    if (name == "succeeded") return JobStatus::succeeded;
    if (name == "failed") return JobStatus::failed;
    throw Error(ErrKind::storage, "unknown job status '" + name + "'");
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrKind::io, "cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

JobStore::JobStore(std::filesystem::path path) : path_(std::move(path)) {}

void JobStore::append(const FineTuneJob& job) {
    nlohmann::json rec{
        {"job_id", job.job_id},
        {"stage", job_stage_name(job.stage)},
        {"base_model_id", job.base_model_id},
        {"dataset_path", job.dataset_path},
        {"status", job_status_name(job.status)},
    };
    if (job.result_model_id) {
        rec["result_model_id"] = *job.result_model_id;
    }
    if (job.trained_tokens) {
        rec["trained_tokens"] = *job.trained_tokens;
    }
    append_record(path_, nlohmann::json{{"schema", kJobSchema}}, rec);
}

std::vector<FineTuneJob> JobStore::load() const {
    if (!std::filesystem::exists(path_)) {
        return {};
    }
    const RecordFile file = read_record_file(path_, kJobSchema);
    std::vector<FineTuneJob> jobs;
    jobs.reserve(file.records.size());
    for (const nlohmann::json& rec : file.records) {
        try {
            FineTuneJob job;
            job.job_id = rec.at("job_id").get<std::string>();
            job.stage = parse_stage(rec.at("stage").get<std::string>());
            job.base_model_id = rec.at("base_model_id").get<std::string>();
            job.dataset_path = rec.at("dataset_path").get<std::string>();
            job.status = parse_status(rec.at("status").get<std::string>());
            if (rec.contains("result_model_id")) {
                job.result_model_id = rec["result_model_id"].get<std::string>();
            }
            if (rec.contains("trained_tokens")) {
                job.trained_tokens = rec["trained_tokens"].get<std::uint64_t>();
            }
            jobs.push_back(std::move(job));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::storage, path_.string() + ": bad job record: " + e.what());
        }
    }
    return jobs;
}

Backend::Backend(BackendConfig config) : config_(std::move(config)) {
    if (!config_.job_store_path.empty()) {
        store_ = std::make_unique<JobStore>(config_.job_store_path);
    }
}

std::vector<FineTuneJob> Backend::list_jobs() const {
    if (!store_) {
        return {};
    }
    return store_->load();
}

void Backend::validate_training_file(const std::filesystem::path& dataset_path) const {
    const std::vector<ChatSample> samples = read_chat_dataset(dataset_path);
    if (samples.empty()) {
        throw Error(ErrKind::validation, dataset_path.string() + ": fine-tune file is empty");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!roles_well_formed(samples[i])) {
            throw Error(ErrKind::validation, dataset_path.string() + ": sample " +
                                                 std::to_string(i + 1) +
                                                 " violates role alternation");
        }
        if (!samples[i].training_shaped()) {
            throw Error(ErrKind::validation, dataset_path.string() + ": sample " +
                                                 std::to_string(i + 1) +
                                                 " is test-shaped (missing completion)");
        }
    }
}

void Backend::record_job(const FineTuneJob& job) {
    if (store_) {
        store_->append(job);
    }
}

std::vector<int> interpolate_window(std::optional<int> pre, std::optional<int> post, int len) {
    if (len <= 0 || (!pre && !post)) {
        throw Error(ErrKind::shape, "interpolation window needs a boundary value");
    }
    std::vector<int> fill(static_cast<std::size_t>(len));
    if (!pre) {
        std::fill(fill.begin(), fill.end(), *post);
        return fill;
    }
    if (!post) {
        std::fill(fill.begin(), fill.end(), *pre);
        return fill;
    }
    const double step = static_cast<double>(*post - *pre) / static_cast<double>(len);
    for (int i = 0; i < len; ++i) {
        fill[static_cast<std::size_t>(i)] =
            static_cast<int>(std::llround(static_cast<double>(*pre) + step * (i + 1)));
    }
    return fill;
}

namespace {

class StubBackend final : public Backend {
public:
    StubBackend(BackendConfig config, NormalizationParams params)
        : Backend(std::move(config)), params_(params) {}

    void register_day(const MaskedDay& day) override {
        DayRef ref{day.base.user_id, day.base.date, day.mask.start_index};
        days_[ref.key()] = day;
    }

    FineTuneJob submit_finetune(const std::filesystem::path& dataset_path,
                                const FineTuneParams& params) override {
        validate_training_file(dataset_path);
        const std::string digest = hex64(fnv1a64(read_file_bytes(dataset_path)));
        const std::string kind = backend_kind_name(config_.kind);
        const std::string base = params.base_model_override.value_or(config_.base_model_id);

        CostModel cost_model;
        if (params.n_epochs) {
            cost_model.epochs = *params.n_epochs;
        }
        const std::vector<ChatSample> samples = read_chat_dataset(dataset_path);

        FineTuneJob job;
        job.job_id = "job-" + kind + "-" + digest;
        job.stage = params.stage;
        job.base_model_id = base;
        job.dataset_path = dataset_path.string();
        job.status = JobStatus::succeeded;
        job.result_model_id = "ft:" + base + ":" + kind + ":" + digest;
        job.trained_tokens = dataset_training_tokens(samples, cost_model);
        record_job(job);
        return job;
    }

    std::string chat_complete(const std::string& model_id, const ChatSample& prompt) override {
        (void)model_id;
        if (prompt.messages.empty() || prompt.messages.back().role != Role::user) {
            throw Error(ErrKind::validation, "chat prompt must end with a user message");
        }
        const auto it = days_.find(prompt.day_ref.key());
        if (it == days_.end()) {
            throw Error(ErrKind::lookup,
                        "no registered day for prompt '" + prompt.day_ref.key() + "'");
        }
        const MaskedDay& day = it->second;
        if (config_.kind == BackendKind::echo_stub) {
            return ground_truth_completion(day, prompt.variant);
        }
        return interp_completion(day, prompt.variant);
    }

private:
    std::string interp_completion(const MaskedDay& day, const PromptVariant& variant) const {
        const int start = day.mask.start_index;
        const int len = day.mask.length;
        std::optional<int> pre;
        std::optional<int> post;
        if (start > 0) {
            pre = day.base.load_q[static_cast<std::size_t>(start - 1)];
        }
        if (start + len < kPointsPerDay) {
            post = day.base.load_q[static_cast<std::size_t>(start + len)];
        }
        const std::vector<int> fill = interpolate_window(pre, post, len);

        std::string out;
        for (int i = 0; i < kPointsPerDay; ++i) {
            if (i > 0) {
                out += ' ';
            }
            const int q = day.is_masked(i) ? fill[static_cast<std::size_t>(i - start)]
                                           : day.base.load_q[static_cast<std::size_t>(i)];
            out += variant.discard_encoding ? std::to_string(q) : codec::encode(q);
        }
        return out;
    }

    NormalizationParams params_;
    std::map<std::string, MaskedDay> days_;
};

// OpenAI-compatible wire client: file upload, fine-tuning jobs, chat
// completions. Transport failures and 429/5xx responses are retried with
// exponential backoff and jitter, honoring Retry-After.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(BackendConfig config) : Backend(std::move(config)) {
        if (config_.base_url.empty()) {
            throw Error(ErrKind::config, "remote backend needs a base_url");
        }
        const char* key = std::getenv(config_.api_key_env.c_str());
        api_key_ = key ? key : "";
        if (api_key_.empty()) {
            throw Error(ErrKind::config,
                        "remote backend needs credentials in $" + config_.api_key_env);
        }
    }

    FineTuneJob submit_finetune(const std::filesystem::path& dataset_path,
                                const FineTuneParams& params) override {
        // Never touch the network with an invalid dataset.
        validate_training_file(dataset_path);
        const std::string file_id = upload_training_file(dataset_path);
        const std::string base = params.base_model_override.value_or(config_.base_model_id);

        nlohmann::json body{{"model", base}, {"training_file", file_id}};
        if (params.n_epochs) {
            body["hyperparameters"] = {{"n_epochs", *params.n_epochs}};
        }
        const nlohmann::json created =
            post_json("/v1/fine_tuning/jobs", body.dump(), "application/json");

        FineTuneJob job;
        job.job_id = created.at("id").get<std::string>();
        job.stage = params.stage;
        job.base_model_id = base;
        job.dataset_path = dataset_path.string();
        job.status = JobStatus::running;
        poll_to_terminal(job);
        record_job(job);
        return job;
    }

    std::string chat_complete(const std::string& model_id, const ChatSample& prompt) override {
        if (prompt.messages.empty() || prompt.messages.back().role != Role::user) {
            throw Error(ErrKind::validation, "chat prompt must end with a user message");
        }
        nlohmann::json messages = nlohmann::json::array();
        for (const ChatMessage& m : prompt.messages) {
            messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
        }
        const nlohmann::json body{{"model", model_id}, {"messages", std::move(messages)}};
        const nlohmann::json reply =
            post_json("/v1/chat/completions", body.dump(), "application/json");
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::provider, std::string("malformed chat completion: ") + e.what());
        }
    }

private:
    httplib::Client make_client() const {
        httplib::Client client(config_.base_url);
        client.set_default_headers({{"Authorization", "Bearer " + api_key_}});
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        return client;
    }

    std::string upload_training_file(const std::filesystem::path& dataset_path) {
        // The provider schema allows only the messages array; metadata used
        // by the local pipeline is stripped before upload.
        const std::vector<ChatSample> samples = read_chat_dataset(dataset_path);
        std::string payload;
        for (const ChatSample& s : samples) {
            nlohmann::json messages = nlohmann::json::array();
            for (const ChatMessage& m : s.messages) {
                messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
            }
            payload += nlohmann::json{{"messages", std::move(messages)}}.dump();
            payload += '\n';
        }
        httplib::MultipartFormDataItems items = {
            {"purpose", "fine-tune", "", ""},
            {"file", payload, dataset_path.filename().string(), "application/jsonl"},
        };
        const nlohmann::json reply = with_retries([&](httplib::Client& client) {
            return client.Post("/v1/files", items);
        });
        return reply.at("id").get<std::string>();
    }

    void poll_to_terminal(FineTuneJob& job) {
        while (true) {
            const nlohmann::json info = get_json("/v1/fine_tuning/jobs/" + job.job_id);
            const std::string status = info.at("status").get<std::string>();
            if (status == "succeeded") {
                job.status = JobStatus::succeeded;
                job.result_model_id = info.at("fine_tuned_model").get<std::string>();
                if (info.contains("trained_tokens") && !info["trained_tokens"].is_null()) {
                    job.trained_tokens = info["trained_tokens"].get<std::uint64_t>();
                }
                return;
            }
            if (status == "failed" || status == "cancelled") {
                job.status = JobStatus::failed;
                std::string detail;
                if (info.contains("error") && info["error"].is_object()) {
                    detail = info["error"].value("message", "");
                }
                throw Error(ErrKind::provider, "fine-tune job " + job.job_id + " " + status +
                                                   (detail.empty() ? "" : ": " + detail));
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.poll_interval_ms));
        }
    }

    nlohmann::json post_json(const std::string& route, const std::string& body,
                             const std::string& content_type) {
        return with_retries([&](httplib::Client& client) {
            return client.Post(route, body, content_type);
        });
    }

    nlohmann::json get_json(const std::string& route) {
        return with_retries([&](httplib::Client& client) { return client.Get(route); });
    }

    template <typename Call>
    nlohmann::json with_retries(Call&& call) {
        std::mt19937 jitter(std::random_device{}());
        int backoff_ms = 250;
        std::string last_error;
        for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
            httplib::Client client = make_client();
            httplib::Result result = call(client);
            if (result) {
                if (result->status >= 200 && result->status < 300) {
                    try {
                        return nlohmann::json::parse(result->body);
                    } catch (const nlohmann::json::exception& e) {
                        throw Error(ErrKind::provider,
                                    std::string("malformed provider response: ") + e.what());
                    }
                }
                if (result->status == 429 || result->status >= 500) {
                    last_error = "HTTP " + std::to_string(result->status);
                    int wait_ms = backoff_ms;
                    if (result->has_header("Retry-After")) {
                        wait_ms = std::max(
                            wait_ms, 1000 * std::stoi(result->get_header_value("Retry-After")));
                    }
                    wait_ms += static_cast<int>(jitter() % 100u);
                    std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
                    backoff_ms *= 2;
                    continue;
                }
                throw Error(ErrKind::provider, "provider rejected request (HTTP " +
                                                   std::to_string(result->status) +
                                                   "): " + result->body);
            }
            last_error = httplib::to_string(result.error());
            std::this_thread::sleep_for(
                std::chrono::milliseconds(backoff_ms + static_cast<int>(jitter() % 100u)));
            backoff_ms *= 2;
        }
        throw Error(ErrKind::transport,
                    "request failed after " + std::to_string(config_.max_retries) +
                        " attempts: " + last_error);
    }

    std::string api_key_;
};

} // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      const NormalizationParams& params) {
    if (config.kind == BackendKind::remote) {
        return make_remote_backend(config);
    }
    return std::make_unique<StubBackend>(config, params);
}

std::unique_ptr<Backend> make_remote_backend(const BackendConfig& config) {
    return std::make_unique<RemoteBackend>(config);
}

} // namespace loadpatch

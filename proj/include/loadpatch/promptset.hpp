#pragma once

#include "loadpatch/preprocess.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace loadpatch {

enum class Role { user, assistant };

std::string role_name(Role role);
Role parse_role(const std::string& name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

// The three independent ablation switches of the scenario matrix.
struct PromptVariant {
    bool advanced = false;           // detailed task instruction
    bool separate_load_temp = false; // six-message two-turn data form
    bool discard_encoding = false;   // plain integers instead of ternary words
};

struct DayRef {
    std::string user_id;
    Date date;
    int mask_start = 0;

    std::string key() const;
};

struct ChatSample {
    std::vector<ChatMessage> messages;
    PromptVariant variant;
    DayRef day_ref;

    bool training_shaped() const {
        return !messages.empty() && messages.back().role == Role::assistant;
    }
};

// Roles must strictly alternate starting with user; training samples end
// with an assistant message.
bool roles_well_formed(const ChatSample& sample);

// Combined variant: 4 messages [instruction, "What's the encoded data?",
// data, completion]. Separate variant: the 6-message two-question form.
// The completion is always the complete 96-token load sequence with the
// masked window filled by ground truth.
ChatSample build_training_sample(const MaskedDay& day, const PromptVariant& variant,
                                 const NormalizationParams& params);

// Training sample minus the final completion; ends with a user message.
ChatSample build_test_prompt(const MaskedDay& day, const PromptVariant& variant,
                             const NormalizationParams& params);

// Renders the full 96-token load sequence (ground truth in the window) in
// the variant's value format; also what a perfect model would answer.
std::string ground_truth_completion(const MaskedDay& day, const PromptVariant& variant);

// Instruction/value formatting shared with the stub backends.
std::string instruction_text(const PromptVariant& variant);
std::string render_load_series(const MaskedDay& day, const PromptVariant& variant);
std::string render_value_series(std::span<const int> values, bool discard_encoding);

inline constexpr const char* kCombinedDataQuestion = "What's the encoded data?";
inline constexpr const char* kLoadQuestion = "What's the encoded load profile?";
inline constexpr const char* kTemperatureQuestion = "What's the encoded temperature?";

// Line-delimited chat dataset (one {"messages": ...} object per line, plus
// day_ref/variant metadata). read(write(x)) == x and writes are canonical.
void write_chat_dataset(const std::filesystem::path& path,
                        const std::vector<ChatSample>& samples);
std::vector<ChatSample> read_chat_dataset(const std::filesystem::path& path);

nlohmann::json sample_to_json(const ChatSample& sample);
ChatSample sample_from_json(const nlohmann::json& j);

} // namespace loadpatch

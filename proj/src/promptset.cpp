#include "loadpatch/promptset.hpp"

#include "loadpatch/errors.hpp"

#include <fstream>

namespace loadpatch {

namespace {

// Instruction texts for the four advanced cells. The encoded forms follow
// the joint and separate prompting formats verbatim; the integer forms swap
// the encoding explanation for the 0-200 integer one.
constexpr const char* kAdvancedCombinedEncoded =
    "Given a load profile with missing segments and a complete daily temperature profile, "
    "estimate the missing portions of the load profile. The load and temperature data are "
    "provided jointly. Each value for load and temperature is encoded as a ten-digit word in "
    "ternary format. The first and last five digits represent load and temperature, "
    "respectively. Missing load values are represented by OOOOO. Please provide the estimated "
    "load profile in the same format and length.";

constexpr const char* kAdvancedSeparateEncoded =
    "Given a load profile with missing segments and a complete daily temperature profile, "
    "estimate the missing portions of the load profile. The load and temperature data are "
    "provided separately and exhibit a correlation. Each value for load or temperature is "
    "encoded as a five-digit word in ternary format.";

constexpr const char* kAdvancedCombinedInteger =
    "Given a load profile with missing segments and a complete daily temperature profile, "
    "estimate the missing portions of the load profile. The load and temperature data are "
    "provided jointly. Each value for load and temperature is given as an integer between 0 "
    "and 200. The first and second number of each pair represent load and temperature, "
    "respectively. Missing load values are represented by 0. Please provide the estimated "
    "load profile in the same format and length.";

constexpr const char* kAdvancedSeparateInteger =
    "Given a load profile with missing segments and a complete daily temperature profile, "
    "estimate the missing portions of the load profile. The load and temperature data are "
    "provided separately and exhibit a correlation. Each value for load or temperature is "
    "given as an integer between 0 and 200.";

constexpr const char* kTerseInstruction =
    "Estimate the missing values in this load profile and output the complete profile.";

std::string render_combined_data(const MaskedDay& day, bool discard_encoding) {
    std::string out;
    if (!discard_encoding) {
        std::vector<codec::QuantValue> load;
        load.reserve(kPointsPerDay);
        for (int i = 0; i < kPointsPerDay; ++i) {
            load.push_back(day.load_at(i));
        }
        return codec::encode_combined_series(load, day.base.temp_q);
    }
    // Integer pairs alternate load and temperature at each timestamp.
    for (int i = 0; i < kPointsPerDay; ++i) {
        if (i > 0) {
            out += ' ';
        }
        const codec::QuantValue load = day.load_at(i);
        out += std::to_string(load.value_or(0));
        out += ' ';
        out += std::to_string(day.base.temp_q[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace

std::string role_name(Role role) { return role == Role::user ? "user" : "assistant"; }

Role parse_role(const std::string& name) {
    if (name == "user") {
        return Role::user;
    }
    if (name == "assistant") {
        return Role::assistant;
    }
    throw Error(ErrKind::validation, "unknown role '" + name + "'");
}

std::string DayRef::key() const {
    return user_id + "|" + date.to_string() + "|" + std::to_string(mask_start);
}

bool roles_well_formed(const ChatSample& sample) {
    if (sample.messages.empty() || sample.messages.front().role != Role::user) {
        return false;
    }
    for (std::size_t i = 1; i < sample.messages.size(); ++i) {
        if (sample.messages[i].role == sample.messages[i - 1].role) {
            return false;
        }
    }
    for (const ChatMessage& m : sample.messages) {
        if (m.content.empty()) {
            return false;
        }
    }
    return true;
}

std::string instruction_text(const PromptVariant& variant) {
    if (!variant.advanced) {
        return kTerseInstruction;
    }
    if (variant.separate_load_temp) {
        return variant.discard_encoding ? kAdvancedSeparateInteger : kAdvancedSeparateEncoded;
    }
    return variant.discard_encoding ? kAdvancedCombinedInteger : kAdvancedCombinedEncoded;
}

std::string render_value_series(std::span<const int> values, bool discard_encoding) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += discard_encoding ? std::to_string(values[i]) : codec::encode(values[i]);
    }
    return out;
}

std::string render_load_series(const MaskedDay& day, const PromptVariant& variant) {
    std::string out;
    for (int i = 0; i < kPointsPerDay; ++i) {
        if (i > 0) {
            out += ' ';
        }
        const codec::QuantValue load = day.load_at(i);
        if (variant.discard_encoding) {
            out += std::to_string(load.value_or(0));
        } else {
            out += codec::encode(load);
        }
    }
    return out;
}

std::string ground_truth_completion(const MaskedDay& day, const PromptVariant& variant) {
    std::string out;
    for (int i = 0; i < kPointsPerDay; ++i) {
        if (i > 0) {
            out += ' ';
        }
        const int q = day.is_masked(i)
                          ? day.truth_q[static_cast<std::size_t>(i - day.mask.start_index)]
                          : day.base.load_q[static_cast<std::size_t>(i)];
        out += variant.discard_encoding ? std::to_string(q) : codec::encode(q);
    }
    return out;
}

ChatSample build_training_sample(const MaskedDay& day, const PromptVariant& variant,
                                 const NormalizationParams& params) {
    (void)params; // values are already quantized; params stay with the run
    ChatSample sample;
    sample.variant = variant;
    sample.day_ref = DayRef{day.base.user_id, day.base.date, day.mask.start_index};

    sample.messages.push_back({Role::user, instruction_text(variant)});
    if (variant.separate_load_temp) {
        sample.messages.push_back({Role::assistant, kLoadQuestion});
        sample.messages.push_back({Role::user, render_load_series(day, variant)});
        sample.messages.push_back({Role::assistant, kTemperatureQuestion});
        sample.messages.push_back(
            {Role::user, render_value_series(day.base.temp_q, variant.discard_encoding)});
    } else {
        sample.messages.push_back({Role::assistant, kCombinedDataQuestion});
        sample.messages.push_back({Role::user, render_combined_data(day, variant.discard_encoding)});
    }
    sample.messages.push_back({Role::assistant, ground_truth_completion(day, variant)});
    return sample;
}

ChatSample build_test_prompt(const MaskedDay& day, const PromptVariant& variant,
                             const NormalizationParams& params) {
    ChatSample sample = build_training_sample(day, variant, params);
    sample.messages.pop_back();
    return sample;
}

nlohmann::json sample_to_json(const ChatSample& sample) {
    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : sample.messages) {
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    return nlohmann::json{
        {"messages", std::move(messages)},
        {"day_ref",
         {{"user_id", sample.day_ref.user_id},
          {"date", sample.day_ref.date.to_string()},
          {"mask_start", sample.day_ref.mask_start}}},
        {"variant",
         {{"advanced", sample.variant.advanced},
          {"separate_load_temp", sample.variant.separate_load_temp},
          {"discard_encoding", sample.variant.discard_encoding}}},
    };
}

ChatSample sample_from_json(const nlohmann::json& j) {
    ChatSample sample;
    if (!j.is_object() || !j.contains("messages") || !j["messages"].is_array()) {
        throw Error(ErrKind::parse, "record has no messages array");
    }
    for (const nlohmann::json& m : j["messages"]) {
        sample.messages.push_back(
            {parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    if (j.contains("day_ref")) {
        const nlohmann::json& ref = j["day_ref"];
        sample.day_ref.user_id = ref.at("user_id").get<std::string>();
        sample.day_ref.date = parse_date(ref.at("date").get<std::string>());
        sample.day_ref.mask_start = ref.at("mask_start").get<int>();
    }
    if (j.contains("variant")) {
        const nlohmann::json& v = j["variant"];
        sample.variant.advanced = v.at("advanced").get<bool>();
        sample.variant.separate_load_temp = v.at("separate_load_temp").get<bool>();
        sample.variant.discard_encoding = v.at("discard_encoding").get<bool>();
    }
    return sample;
}

void write_chat_dataset(const std::filesystem::path& path,
                        const std::vector<ChatSample>& samples) {
    if (samples.empty()) {
        throw Error(ErrKind::empty_dataset, "refusing to write an empty chat dataset");
    }
    const bool first_shape = samples.front().training_shaped();
    for (const ChatSample& s : samples) {
        if (!roles_well_formed(s)) {
            throw Error(ErrKind::validation,
                        "sample " + s.day_ref.key() + " violates role alternation");
        }
        if (s.training_shaped() != first_shape) {
            throw Error(ErrKind::validation,
                        "mixed training and test shapes in one dataset file");
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrKind::io, "cannot open '" + path.string() + "' for writing");
    }
    for (const ChatSample& s : samples) {
        out << sample_to_json(s).dump() << '\n';
    }
    if (!out) {
        throw Error(ErrKind::io, "write failed for '" + path.string() + "'");
    }
}

std::vector<ChatSample> read_chat_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrKind::storage, "cannot read '" + path.string() + "'");
    }
    std::vector<ChatSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            samples.push_back(sample_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::parse,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

} // namespace loadpatch

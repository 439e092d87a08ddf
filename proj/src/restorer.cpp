#include "loadpatch/restorer.hpp"

#include "loadpatch/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

namespace loadpatch {

std::string repair_kind_name(RepairKind kind) {
    switch (kind) {
    case RepairKind::padded: return "padded";
    case RepairKind::truncated: return "truncated";
    case RepairKind::interpolated: return "interpolated";
    case RepairKind::clamped: return "clamped";
    }
    return "unknown";
}

namespace {

constexpr int kTokenBudget = 4;       // acceptable deviation from 96 tokens
constexpr double kInvalidBudget = 0.25;

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i >= text.size()) {
            break;
        }
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

struct ParsedToken {
    std::optional<int> value;   // usable value in [0, 242]; nullopt = invalid/missing
    bool out_of_range = false;  // value in (200, 242]
};

ParsedToken parse_token(const std::string& token, bool discard_encoding) {
    if (discard_encoding) {
        if (token.empty() || token.size() > 3) {
            return {};
        }
        int v = 0;
        for (char c : token) {
            if (c < '0' || c > '9') {
                return {};
            }
            v = v * 10 + (c - '0');
        }
        if (v > codec::kCodeMax) {
            return {};
        }
        return {v, v > codec::kQuantMax};
    }
    try {
        const codec::Decoded d = codec::decode(token);
        if (!d.value.has_value()) {
            return {}; // missing sentinel: no usable value
        }
        return {d.value, d.out_of_model_range};
    } catch (const Error&) {
        return {};
    }
}

} // namespace

RestorationResult extract_restored(const std::string& completion, const MaskedDay& day,
                                   const PromptVariant& variant,
                                   const NormalizationParams& params) {
    RestorationResult result;
    result.day_ref = DayRef{day.base.user_id, day.base.date, day.mask.start_index};
    result.raw_completion = completion;

    const std::vector<std::string> tokens = split_tokens(completion);
    const int n = static_cast<int>(tokens.size());
    if (n < kPointsPerDay - kTokenBudget || n > kPointsPerDay + kTokenBudget) {
        throw Error(ErrKind::restoration_failed,
                    "completion for " + result.day_ref.key() + " has " + std::to_string(n) +
                        " tokens, repairable range is 92..100");
    }

    std::vector<ParsedToken> parsed;
    parsed.reserve(kPointsPerDay);
    int invalid = 0;
    for (int i = 0; i < std::min(n, kPointsPerDay); ++i) {
        parsed.push_back(parse_token(tokens[static_cast<std::size_t>(i)],
                                     variant.discard_encoding));
        if (!parsed.back().value.has_value()) {
            ++invalid;
        }
    }
    if (n > kPointsPerDay) {
        result.repairs.push_back(Repair{RepairKind::truncated, -1});
    } else if (n < kPointsPerDay) {
        // Right-pad with the last valid token's value.
        ParsedToken filler;
        for (auto it = parsed.rbegin(); it != parsed.rend(); ++it) {
            if (it->value.has_value()) {
                filler = *it;
                break;
            }
        }
        if (!filler.value.has_value()) {
            throw Error(ErrKind::restoration_failed,
                        "completion for " + result.day_ref.key() +
                            " is short and has no valid token to pad with");
        }
        while (static_cast<int>(parsed.size()) < kPointsPerDay) {
            parsed.push_back(filler);
        }
        result.repairs.push_back(Repair{RepairKind::padded, -1});
    }

    if (static_cast<double>(invalid) >
        kInvalidBudget * static_cast<double>(kPointsPerDay)) {
        throw Error(ErrKind::restoration_failed,
                    "completion for " + result.day_ref.key() + " has " +
                        std::to_string(invalid) + " invalid tokens of 96 (budget 25%)");
    }

    // Usable values with out-of-range decodes clamped; clamp repairs are
    // tagged only where the value ends up in the restored segment.
    auto usable = [&](int index) -> std::optional<int> {
        const ParsedToken& t = parsed[static_cast<std::size_t>(index)];
        if (!t.value.has_value()) {
            return std::nullopt;
        }
        return std::min(*t.value, codec::kQuantMax);
    };

    const int start = day.mask.start_index;
    result.restored_q.resize(kMaskLen);
    for (int i = start; i < start + kMaskLen; ++i) {
        const std::optional<int> value = usable(i);
        if (value.has_value()) {
            if (parsed[static_cast<std::size_t>(i)].out_of_range) {
                result.repairs.push_back(Repair{RepairKind::clamped, i});
            }
            result.restored_q[static_cast<std::size_t>(i - start)] = *value;
            continue;
        }
        // Invalid or missing inside the window: interpolate between the
        // nearest valid neighbors in the full sequence.
        std::optional<int> left_idx;
        for (int l = i - 1; l >= 0; --l) {
            if (usable(l).has_value()) {
                left_idx = l;
                break;
            }
        }
        std::optional<int> right_idx;
        for (int r = i + 1; r < kPointsPerDay; ++r) {
            if (usable(r).has_value()) {
                right_idx = r;
                break;
            }
        }
        int filled = 0;
        if (left_idx && right_idx) {
            const double lv = static_cast<double>(*usable(*left_idx));
            const double rv = static_cast<double>(*usable(*right_idx));
            const double frac = static_cast<double>(i - *left_idx) /
                                static_cast<double>(*right_idx - *left_idx);
            filled = static_cast<int>(std::llround(lv + frac * (rv - lv)));
        } else if (left_idx) {
            filled = *usable(*left_idx);
        } else if (right_idx) {
            filled = *usable(*right_idx);
        } else {
            throw Error(ErrKind::restoration_failed,
                        "completion for " + result.day_ref.key() +
                            " has no valid tokens to interpolate from");
        }
        result.repairs.push_back(Repair{RepairKind::interpolated, i});
        result.restored_q[static_cast<std::size_t>(i - start)] = filled;
    }

    result.restored_kw.reserve(kMaskLen);
    for (int q : result.restored_q) {
        result.restored_kw.push_back(dequantize_load(q, params));
    }
    return result;
}

} // namespace loadpatch

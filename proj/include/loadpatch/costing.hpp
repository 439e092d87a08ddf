#pragma once

#include "loadpatch/promptset.hpp"

#include <cstdint>
#include <span>

namespace loadpatch {

enum class TokenCounter { approximate, provider_reported };

struct CostModel {
    double price_per_million_tokens = 8.0; // USD
    int epochs = 3;
    TokenCounter counter = TokenCounter::approximate;
    double chars_per_token = 3.5;
};

// Approximate counter: ceil(content chars / chars_per_token) per sample,
// summed, so doubling a dataset exactly doubles the count.
std::uint64_t estimate_tokens(std::span<const ChatSample> dataset,
                              double chars_per_token = 3.5);

// cost = tokens_trained * price / 1e6. Provider-reported token counts
// already include epochs; the approximate path multiplies them in.
double estimate_cost(std::uint64_t tokens_trained, const CostModel& model);

// Approximate end-to-end training cost for a dataset: tokens * epochs * price.
std::uint64_t dataset_training_tokens(std::span<const ChatSample> dataset,
                                      const CostModel& model);
double estimate_training_cost(std::span<const ChatSample> dataset, const CostModel& model);

} // namespace loadpatch

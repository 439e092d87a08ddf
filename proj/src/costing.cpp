#include "loadpatch/costing.hpp"

#include "loadpatch/errors.hpp"

#include <cmath>

namespace loadpatch {

std::uint64_t estimate_tokens(std::span<const ChatSample> dataset, double chars_per_token) {
    if (dataset.empty()) {
        throw Error(ErrKind::empty_dataset, "token estimate needs a non-empty dataset");
    }
    if (!(chars_per_token > 0.0)) {
        throw Error(ErrKind::range, "chars_per_token must be positive");
    }
    std::uint64_t total = 0;
    for (const ChatSample& sample : dataset) {
        std::uint64_t chars = 0;
        for (const ChatMessage& m : sample.messages) {
            chars += m.content.size();
        }
        total += static_cast<std::uint64_t>(
            std::ceil(static_cast<double>(chars) / chars_per_token));
    }
    return total;
}

double estimate_cost(std::uint64_t tokens_trained, const CostModel& model) {
    if (!(model.price_per_million_tokens > 0.0)) {
        throw Error(ErrKind::range, "price per million tokens must be positive");
    }
    return static_cast<double>(tokens_trained) * model.price_per_million_tokens / 1e6;
}

std::uint64_t dataset_training_tokens(std::span<const ChatSample> dataset,
                                      const CostModel& model) {
    if (model.epochs < 1) {
        throw Error(ErrKind::range, "epochs must be >= 1");
    }
    return estimate_tokens(dataset, model.chars_per_token) *
           static_cast<std::uint64_t>(model.epochs);
}

double estimate_training_cost(std::span<const ChatSample> dataset, const CostModel& model) {
    return estimate_cost(dataset_training_tokens(dataset, model), model);
}

} // namespace loadpatch

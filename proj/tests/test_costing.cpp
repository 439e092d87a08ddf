#include "loadpatch/costing.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/rng.hpp"

#include "doctest.h"

#include <string>
#include <vector>

using namespace loadpatch;

namespace {

ChatSample sample_with_chars(std::size_t n_chars) {
    ChatSample s;
    s.messages.push_back({Role::user, std::string(n_chars, 'x')});
    return s;
}

} // namespace

TEST_CASE("approximate counter: 35 characters at ratio 3.5 are 10 tokens") {
    const std::vector<ChatSample> dataset{sample_with_chars(35)};
    CHECK(estimate_tokens(dataset, 3.5) == 10);
    // Partial tokens round up.
    const std::vector<ChatSample> ragged{sample_with_chars(36)};
    CHECK(estimate_tokens(ragged, 3.5) == 11);
}

TEST_CASE("doubling the dataset doubles the approximate count") {
    SeededRng rng(5);
    std::vector<ChatSample> dataset;
    for (int i = 0; i < 20; ++i) {
        dataset.push_back(sample_with_chars(50 + rng.next_below(400)));
    }
    const std::uint64_t base = estimate_tokens(dataset, 3.5);
    std::vector<ChatSample> doubled = dataset;
    doubled.insert(doubled.end(), dataset.begin(), dataset.end());
    CHECK(estimate_tokens(doubled, 3.5) == 2 * base);
}

TEST_CASE("token counts grow with sample count") {
    std::vector<ChatSample> dataset;
    std::uint64_t previous = 0;
    for (int i = 0; i < 64; ++i) {
        dataset.push_back(sample_with_chars(120));
        const std::uint64_t now = estimate_tokens(dataset, 3.5);
        CHECK(now > previous);
        previous = now;
    }
}

TEST_CASE("cost anchors: $8 per million and the 512-sample $13 point") {
    const CostModel model;
    CHECK(estimate_cost(0, model) == 0.0);
    CHECK(estimate_cost(1'000'000, model) == doctest::Approx(8.0));
    CHECK(estimate_cost(1'625'000, model) == doctest::Approx(13.0));
}

TEST_CASE("cost is linear and monotone in tokens") {
    const CostModel model;
    SeededRng rng(17);
    for (int i = 0; i < 500; ++i) {
        const std::uint64_t a = rng.next_below(5'000'000);
        const std::uint64_t b = rng.next_below(5'000'000);
        const double lhs = estimate_cost(a + b, model);
        const double rhs = estimate_cost(a, model) + estimate_cost(b, model);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(estimate_cost(std::max(a, b), model) >= estimate_cost(std::min(a, b), model));
    }
}

TEST_CASE("training tokens multiply in the epoch count") {
    const std::vector<ChatSample> dataset{sample_with_chars(350)};
    CostModel model;
    model.epochs = 3;
    CHECK(dataset_training_tokens(dataset, model) == 300);
    model.epochs = 1;
    CHECK(dataset_training_tokens(dataset, model) == 100);
    CHECK(estimate_training_cost(dataset, model) == doctest::Approx(100 * 8.0 / 1e6));
}

TEST_CASE("costing guards its preconditions") {
    const std::vector<ChatSample> empty;
    CHECK_THROWS_AS(estimate_tokens(empty, 3.5), Error);
    const std::vector<ChatSample> dataset{sample_with_chars(10)};
    CHECK_THROWS_AS(estimate_tokens(dataset, 0.0), Error);
    CostModel bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(dataset_training_tokens(dataset, bad), Error);
    bad.epochs = 1;
    bad.price_per_million_tokens = 0.0;
    CHECK_THROWS_AS(estimate_cost(10, bad), Error);
}

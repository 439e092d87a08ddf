#include "loadpatch/metrics.hpp"
#include "loadpatch/errors.hpp"
#include "loadpatch/rng.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace loadpatch;

namespace {

// Brute-force reference implementations, kept deliberately naive and
// separate from the library path.
namespace oracle {

double mpe(const std::vector<double>& t, const std::vector<double>& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += std::fabs(r[i] - t[i]) / t[i];
    }
    return acc / static_cast<double>(t.size());
}

double rmse(const std::vector<double>& t, const std::vector<double>& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += (r[i] - t[i]) * (r[i] - t[i]);
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
}

double egye(const std::vector<double>& t, const std::vector<double>& r) {
    double st = 0.0;
    double sr = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sr += r[i];
    }
    return std::fabs(sr - st) / st;
}

} // namespace oracle

std::pair<std::vector<double>, std::vector<double>> random_pair(SeededRng& rng) {
    std::vector<double> truth(16), restored(16);
    for (int i = 0; i < 16; ++i) {
        truth[static_cast<std::size_t>(i)] = 210.0 + rng.next_unit() * 1541.0;
        restored[static_cast<std::size_t>(i)] = 210.0 + rng.next_unit() * 1541.0;
    }
    return {truth, restored};
}

} // namespace

TEST_CASE("hand anchors: [100,100] vs [110,90]") {
    const std::vector<double> truth{100.0, 100.0};
    const std::vector<double> restored{110.0, 90.0};
    CHECK(mpe(truth, restored) == doctest::Approx(0.10));
    CHECK(rmse(truth, restored) == doctest::Approx(10.0));
    CHECK(egye(truth, restored) == doctest::Approx(0.0)); // errors cancel
    const std::vector<double> high{110.0, 110.0};
    CHECK(egye(truth, high) == doctest::Approx(0.10));
}

TEST_CASE("all metrics are zero on perfect restoration and nonnegative otherwise") {
    SeededRng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto [truth, restored] = random_pair(rng);
        CHECK(mpe(truth, truth) == 0.0);
        CHECK(rmse(truth, truth) == 0.0);
        CHECK(egye(truth, truth) == 0.0);
        CHECK(mpe(truth, restored) >= 0.0);
        CHECK(rmse(truth, restored) >= 0.0);
        CHECK(egye(truth, restored) >= 0.0);
    }
}

TEST_CASE("constant offset gives rmse exactly c") {
    std::vector<double> truth(16, 500.0);
    std::vector<double> shifted(16, 507.5);
    CHECK(rmse(truth, shifted) == doctest::Approx(7.5));
}

TEST_CASE("undefined-metric guards") {
    std::vector<double> truth(16, 100.0);
    std::vector<double> restored(16, 100.0);
    truth[3] = 0.0;
    try {
        mpe(truth, restored);
        FAIL("expected undefined-metric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::undefined_metric);
    }
    CHECK_THROWS_AS(egye(std::vector<double>(16, 0.0), restored), Error);
    CHECK_THROWS_AS(rmse(std::vector<double>(15, 1.0), restored), Error);
}

TEST_CASE("library matches the brute-force oracle on 1000 random pairs") {
    SeededRng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto [truth, restored] = random_pair(rng);
        const double tol = 1e-12;
        CHECK(std::fabs(mpe(truth, restored) - oracle::mpe(truth, restored)) <=
              tol * std::max(1.0, oracle::mpe(truth, restored)));
        CHECK(std::fabs(rmse(truth, restored) - oracle::rmse(truth, restored)) <=
              tol * std::max(1.0, oracle::rmse(truth, restored)));
        CHECK(std::fabs(egye(truth, restored) - oracle::egye(truth, restored)) <=
              tol * std::max(1.0, oracle::egye(truth, restored)));
    }
}

TEST_CASE("triangle bound: egye * sum(truth) <= sum |pointwise error|") {
    SeededRng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const auto [truth, restored] = random_pair(rng);
        double sum_truth = 0.0;
        double sum_abs = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            sum_truth += truth[i];
            sum_abs += std::fabs(restored[i] - truth[i]);
        }
        CHECK(egye(truth, restored) * sum_truth <= sum_abs + 1e-9);
    }
}

TEST_CASE("rmse is invariant under joint permutation") {
    SeededRng rng(15);
    const auto [truth, restored] = random_pair(rng);
    std::vector<std::size_t> order = rng.shuffled_indices(truth.size());
    std::vector<double> truth_p, restored_p;
    for (std::size_t i : order) {
        truth_p.push_back(truth[i]);
        restored_p.push_back(restored[i]);
    }
    CHECK(rmse(truth, restored) == doctest::Approx(rmse(truth_p, restored_p)).epsilon(1e-12));
}

TEST_CASE("sample_metrics fills the normalized rmse") {
    const std::vector<double> truth{100.0, 100.0};
    const std::vector<double> restored{110.0, 90.0};
    const SampleMetrics m = sample_metrics(truth, restored, 1541.0);
    CHECK(m.rmse_kw == doctest::Approx(10.0));
    CHECK(m.rmse_norm == doctest::Approx(10.0 / 1541.0));
    CHECK(m.k == 2);
}

TEST_CASE("aggregate averages per-sample metrics") {
    SampleMetrics a;
    a.mpe = 0.02;
    a.rmse_kw = 30.0;
    a.rmse_norm = 0.02;
    a.egye = 0.01;
    a.k = 16;
    SampleMetrics b = a;
    b.mpe = 0.04;

    const MetricsReport single = aggregate(std::vector<SampleMetrics>{a}, "one", 0);
    CHECK(single.mean_mpe == a.mpe);
    CHECK(single.mean_rmse_kw == a.rmse_kw);

    const MetricsReport pair = aggregate(std::vector<SampleMetrics>{a, b}, "two", 3);
    CHECK(pair.mean_mpe == doctest::Approx(0.03));
    CHECK(pair.failed == 3);

    try {
        aggregate({}, "none", 5);
        FAIL("expected empty-report error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::empty_dataset);
    }
}

TEST_CASE("percent formatting matches the results-table style") {
    CHECK(format_percent(0.02221) == "2.221");
    CHECK(format_percent(0.01977) == "1.977");
    CHECK(format_percent(0.01443) == "1.443");
    CHECK(format_percent(0.0) == "0.000");
}

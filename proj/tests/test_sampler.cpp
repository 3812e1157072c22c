// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "lapsekit/errors.hpp"
#include "lapsekit/sampler.hpp"

using namespace lapsekit;

namespace {

VideoBuffer gray_video(int frames, int side = 2) {
    VideoBuffer v;
    for (int i = 0; i < frames; ++i) {
        Frame f;
        f.width = side;
        f.height = side;
        f.channels = 1;
        f.data.assign(static_cast<std::size_t>(side) * side, static_cast<std::uint8_t>(i));
        v.frames.push_back(std::move(f));
    }
    return v;
}

TransitionReport report_with(int frame_count, std::vector<int> transitions) {
    TransitionReport r;
    r.boundary_scores.resize(frame_count - 1);
    for (int i = 0; i + 1 < frame_count; ++i) r.boundary_scores[i].index = i;
    r.transitions = std::move(transitions);
    r.n_clips = static_cast<int>(r.transitions.size()) + 1;
    return r;
}

}  // namespace

TEST_CASE("choose_strategy honors the preferred branch under prob 1") {
    SamplerParams params;
    params.delta = 3;
    params.prob = 1.0;
    Rng rng(1);
    const StrategyChoice low = choose_strategy(2, params, rng);
    CHECK(low.strategy == Strategy::Uniform);
    CHECK(low.honored);
    const StrategyChoice high = choose_strategy(5, params, rng);
    CHECK(high.strategy == Strategy::Random);
    CHECK(high.honored);
    const StrategyChoice edge = choose_strategy(3, params, rng);  // at the threshold
    CHECK(edge.strategy == Strategy::Uniform);
}

TEST_CASE("choose_strategy prob 0 always swaps") {
    SamplerParams params;
    params.prob = 0.0;
    Rng rng(2);
    const StrategyChoice c = choose_strategy(0, params, rng);
    CHECK(c.strategy == Strategy::Random);
    CHECK_FALSE(c.honored);
}

TEST_CASE("choose_strategy empirical branch frequency approaches prob") {
    SamplerParams params;
    params.prob = 0.9;
    Rng rng(1234);
    const int draws = 100000;
    int honored = 0;
    for (int i = 0; i < draws; ++i)
        if (choose_strategy(0, params, rng).honored) ++honored;
    const double freq = static_cast<double>(honored) / draws;
    CHECK(freq > 0.89);
    CHECK(freq < 0.91);
    // chi-square with one degree of freedom against the 1% critical value
    const double expected_honored = draws * 0.9;
    const double expected_swap = draws * 0.1;
    const double chi2 = (honored - expected_honored) * (honored - expected_honored) / expected_honored +
                        (draws - honored - expected_swap) * (draws - honored - expected_swap) / expected_swap;
    CHECK(chi2 < 6.634897);
}

TEST_CASE("extract_uniform") {
    SUBCASE("identity span") {
        std::vector<int> expected;
        for (int i = 0; i < 16; ++i) expected.push_back(i);
        CHECK(extract_uniform(16, 16) == expected);
    }
    SUBCASE("F=31 N=16 gives the even grid") {
        CHECK(extract_uniform(31, 16) ==
              std::vector<int>{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30});
    }
    SUBCASE("endpoints forced") {
        CHECK(extract_uniform(5, 2) == std::vector<int>{0, 4});
    }
    SUBCASE("n=1 takes the first frame") {
        CHECK(extract_uniform(9, 1) == std::vector<int>{0});
    }
    SUBCASE("keyframe-style spread") {
        CHECK(extract_uniform(9, 3) == std::vector<int>{0, 4, 8});
    }
    SUBCASE("fewer frames than requested repeats indices") {
        // round(i * 2 / 4) for i = 0..4
        CHECK(extract_uniform(3, 5) == std::vector<int>{0, 1, 1, 2, 2});
    }
    SUBCASE("first and last frames always included for n >= 2") {
        for (int frame_count : {2, 3, 7, 16, 100}) {
            for (int n : {2, 3, 16}) {
                const auto idx = extract_uniform(frame_count, n);
                CHECK(idx.front() == 0);
                CHECK(idx.back() == frame_count - 1);
            }
        }
    }
    SUBCASE("strictly increasing when F >= n") {
        for (int frame_count : {16, 17, 40, 101}) {
            const auto idx = extract_uniform(frame_count, 16);
            for (std::size_t i = 0; i + 1 < idx.size(); ++i) CHECK(idx[i] < idx[i + 1]);
        }
    }
}

TEST_CASE("extract_random_window") {
    SUBCASE("exact fit leaves one window") {
        Rng rng(5);
        CHECK(extract_random_window(4, 4, rng) == std::vector<int>{0, 1, 2, 3});
    }
    SUBCASE("window start is uniform") {
        Rng rng(7);
        const int draws = 100000;
        int counts[5] = {0, 0, 0, 0, 0};
        for (int i = 0; i < draws; ++i) {
            const auto idx = extract_random_window(20, 16, rng);
            REQUIRE(idx.size() == 16);
            REQUIRE(idx.front() >= 0);
            REQUIRE(idx.front() <= 4);
            ++counts[idx.front()];
            CHECK(idx.back() == idx.front() + 15);
        }
        for (int c : counts) {
            const double freq = static_cast<double>(c) / draws;
            CHECK(freq > 0.18);
            CHECK(freq < 0.22);
        }
    }
    SUBCASE("window larger than the video fails") {
        Rng rng(9);
        CHECK_THROWS_AS(extract_random_window(10, 16, rng), WindowTooLarge);
    }
}

TEST_CASE("extract composes choice and extraction") {
    SUBCASE("no transitions under prob 1 gives the uniform identity plan") {
        const VideoBuffer v = gray_video(16);
        SamplerParams params;
        params.prob = 1.0;
        Rng rng(3);
        const SamplingPlan plan = extract(v, report_with(16, {}), params, rng);
        CHECK(plan.strategy == Strategy::Uniform);
        CHECK(plan.honored);
        REQUIRE(plan.indices.size() == 16);
        for (int i = 0; i < 16; ++i) CHECK(plan.indices[i] == i);
    }
    SUBCASE("many transitions under prob 1 gives a contiguous random window") {
        const VideoBuffer v = gray_video(32);
        SamplerParams params;
        params.prob = 1.0;
        params.delta = 3;
        Rng rng(4);
        const SamplingPlan plan = extract(v, report_with(32, {3, 9, 15, 21}), params, rng);
        CHECK(plan.strategy == Strategy::Random);
        CHECK(plan.honored);
        REQUIRE(plan.indices.size() == 16);
        for (std::size_t i = 0; i + 1 < plan.indices.size(); ++i)
            CHECK(plan.indices[i + 1] == plan.indices[i] + 1);
        CHECK(plan.indices.front() >= 0);
        CHECK(plan.indices.back() <= 31);
    }
    SUBCASE("identical seeds give identical plans") {
        const VideoBuffer v = gray_video(40);
        SamplerParams params;
        Rng rng_a(99), rng_b(99);
        const SamplingPlan a = extract(v, report_with(40, {1, 5, 9, 13, 17}), params, rng_a);
        const SamplingPlan b = extract(v, report_with(40, {1, 5, 9, 13, 17}), params, rng_b);
        CHECK(a == b);
    }
    SUBCASE("mismatched report is rejected") {
        const VideoBuffer v = gray_video(8);
        SamplerParams params;
        Rng rng(1);
        CHECK_THROWS_AS(extract(v, report_with(9, {}), params, rng), InconsistentReport);
    }
    SUBCASE("single-frame video still yields a full-length uniform plan") {
        const VideoBuffer v = gray_video(1);
        SamplerParams params;
        params.prob = 1.0;
        Rng rng(6);
        TransitionReport empty_report;
        empty_report.n_clips = 1;
        const SamplingPlan plan = extract(v, empty_report, params, rng);
        CHECK(plan.strategy == Strategy::Uniform);
        CHECK(plan.indices == std::vector<int>(16, 0));
    }
}

TEST_CASE("sampling plan JSON round trip") {
    SamplingPlan plan;
    plan.source_id = "vid-7";
    plan.strategy = Strategy::Random;
    plan.honored = false;
    plan.indices = {4, 5, 6, 7};
    const nlohmann::json j = to_json(plan);
    CHECK(j.at("schema") == 1);
    CHECK(j.at("strategy") == "random");
    CHECK(sampling_plan_from_json(j) == plan);
}

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/sampler.hpp"

#include <cmath>

#include "lapsekit/errors.hpp"

namespace lapsekit {

std::string to_string(Strategy s) {
    return s == Strategy::Uniform ? "uniform" : "random";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "uniform") return Strategy::Uniform;
    if (s == "random") return Strategy::Random;
    throw Error("unknown strategy: " + s);
}

StrategyChoice choose_strategy(int n_transitions, const SamplerParams& params, Rng& rng) {
    const Strategy preferred =
        n_transitions <= params.delta ? Strategy::Uniform : Strategy::Random;
    const Strategy other =
        preferred == Strategy::Uniform ? Strategy::Random : Strategy::Uniform;
    const bool honored = rng.next_double() < params.prob;
    return {honored ? preferred : other, honored};
}

std::vector<int> extract_uniform(int frame_count, int n) {
    if (frame_count < 1 || n < 1) throw Error("extract_uniform: counts must be at least 1");
    std::vector<int> indices;
    indices.reserve(n);
    if (n == 1) {
        indices.push_back(0);
        return indices;
    }
    const double span = static_cast<double>(frame_count - 1) / (n - 1);
    for (int i = 0; i < n; ++i)
        indices.push_back(static_cast<int>(std::llround(i * span)));
    return indices;
}

std::vector<int> extract_random_window(int frame_count, int n, Rng& rng) {
    if (n < 1) throw Error("extract_random_window: n must be at least 1");
    if (frame_count < n)
        throw WindowTooLarge("extract_random_window: window of " + std::to_string(n) +
                             " frames does not fit in " + std::to_string(frame_count));
    const int start = static_cast<int>(rng.next_index(frame_count - n + 1));
    std::vector<int> indices;
    indices.reserve(n);
    for (int i = 0; i < n; ++i) indices.push_back(start + i);
    return indices;
}

SamplingPlan extract(const VideoBuffer& video, const TransitionReport& report,
                     const SamplerParams& params, Rng& rng) {
    const int frame_count = static_cast<int>(video.frame_count());
    if (static_cast<int>(report.boundary_scores.size()) != frame_count - 1)
        throw InconsistentReport("extract: report does not match the video's frame count");

    const StrategyChoice choice =
        choose_strategy(static_cast<int>(report.transitions.size()), params, rng);
    SamplingPlan plan;
    plan.source_id = video.source_id;
    plan.strategy = choice.strategy;
    plan.honored = choice.honored;
    plan.indices = choice.strategy == Strategy::Uniform
                       ? extract_uniform(frame_count, params.n_frames)
                       : extract_random_window(frame_count, params.n_frames, rng);
    return plan;
}

nlohmann::json to_json(const SamplingPlan& plan) {
    return {{"schema", 1},
            {"source_id", plan.source_id},
            {"strategy", to_string(plan.strategy)},
            {"honored", plan.honored},
            {"indices", plan.indices}};
}

SamplingPlan sampling_plan_from_json(const nlohmann::json& j) {
    SamplingPlan plan;
    plan.source_id = j.at("source_id").get<std::string>();
    plan.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    plan.honored = j.at("honored").get<bool>();
    plan.indices = j.at("indices").get<std::vector<int>>();
    return plan;
}

}  // namespace lapsekit

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "lapsekit/media_io.hpp"
#include "lapsekit/rng.hpp"
#include "lapsekit/transition.hpp"

namespace lapsekit {

enum class Strategy { Uniform, Random };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct SamplerParams {
    int n_frames = 16;    // frames extracted per video
    int delta = 3;        // transition count at or below which Uniform is preferred
    double prob = 0.9;    // probability of honoring the preferred strategy
    std::uint64_t seed = 0;
};

struct SamplingPlan {
    std::string source_id;
    Strategy strategy = Strategy::Uniform;
    bool honored = true;  // false when the prob-complement fallback fired
    std::vector<int> indices;
    bool operator==(const SamplingPlan&) const = default;
};

struct StrategyChoice {
    Strategy strategy;
    bool honored;
};

/// Uniform when n_transitions <= delta, Random otherwise; with probability
/// prob the preferred strategy is kept (honored), otherwise the opposite
/// strategy is used so a plan is always produced.
StrategyChoice choose_strategy(int n_transitions, const SamplerParams& params, Rng& rng);

/// Endpoint-inclusive even spread: index_i = round(i * (F-1) / (n-1)).
/// For F < n the same formula repeats indices rather than failing.
std::vector<int> extract_uniform(int frame_count, int n);

/// Contiguous window [start, start + n) with start uniform on [0, F - n].
/// Throws WindowTooLarge when F < n.
std::vector<int> extract_random_window(int frame_count, int n, Rng& rng);

/// Full policy: pick the strategy from the report's transition count, then
/// run the matching extractor. Deterministic given the rng state.
SamplingPlan extract(const VideoBuffer& video, const TransitionReport& report,
                     const SamplerParams& params, Rng& rng);

nlohmann::json to_json(const SamplingPlan& plan);
SamplingPlan sampling_plan_from_json(const nlohmann::json& j);

}  // namespace lapsekit

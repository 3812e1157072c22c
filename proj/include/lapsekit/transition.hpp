// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lapsekit/embeddings.hpp"
#include "lapsekit/media_io.hpp"

namespace lapsekit {

/// Two-stage cut-detector thresholds: theta on the mean absolute intensity
/// difference (0..255 scale), vartheta on the embedding cosine similarity.
struct DetectorParams {
    double theta = 40.0;
    double vartheta = 0.5;
};

/// Scores for the boundary between frame `index` and frame `index + 1`.
struct BoundaryScore {
    int index = 0;
    double pixel_score = 0.0;
    double embed_score = 1.0;
    bool is_transition = false;
    bool operator==(const BoundaryScore&) const = default;
};

struct TransitionReport {
    std::string source_id;
    std::vector<BoundaryScore> boundary_scores;  // one per adjacent frame pair
    std::vector<int> transitions;                // sorted boundary indices voted as cuts
    int n_clips = 1;                             // |transitions| + 1
    bool operator==(const TransitionReport&) const = default;
};

/// Mean absolute intensity difference over all pixels, in [0, 255].
double pixel_diff_score(const GrayFrame& a, const GrayFrame& b);

/// Cosine similarity of the two frame embeddings, in [-1, 1].
double embedding_diff_score(const Frame& a, const Frame& b, const EmbeddingProvider& embedder);

/// Scores every adjacent frame pair and votes: boundary i is a transition
/// iff pixel_score > theta AND embed_score < vartheta (strict on both).
/// Zero-norm embeddings count as identical content (embed_score 1.0).
TransitionReport detect_transitions(const VideoBuffer& video, const DetectorParams& params,
                                    const EmbeddingProvider& embedder);

/// Inclusive frame ranges partitioning [0, F-1]; transition index i closes a
/// clip at frame i and opens the next at frame i + 1.
std::vector<std::pair<int, int>> segment(const VideoBuffer& video, const TransitionReport& report);

nlohmann::json to_json(const TransitionReport& report);
TransitionReport transition_report_from_json(const nlohmann::json& j);

}  // namespace lapsekit

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/transition.hpp"

#include <Eigen/Dense>

#include "lapsekit/errors.hpp"

namespace lapsekit {

namespace {

using ByteArray = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

Eigen::Map<const ByteArray> as_array(const GrayFrame& g) {
    return {g.data.data(), static_cast<Eigen::Index>(g.data.size())};
}

}  // namespace

double pixel_diff_score(const GrayFrame& a, const GrayFrame& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("pixel_diff_score: frame dimensions differ");
    return (as_array(a).cast<double>() - as_array(b).cast<double>()).abs().mean();
}

double embedding_diff_score(const Frame& a, const Frame& b, const EmbeddingProvider& embedder) {
    return cosine(embedder.embed_image(a), embedder.embed_image(b));
}

TransitionReport detect_transitions(const VideoBuffer& video, const DetectorParams& params,
                                    const EmbeddingProvider& embedder) {
    validate(video);
    const int frame_count = static_cast<int>(video.frame_count());
    if (frame_count < 2) throw TooFewFrames("detect_transitions: need at least 2 frames");

    std::vector<GrayFrame> grays;
    std::vector<Eigen::VectorXd> embeds;
    grays.reserve(frame_count);
    embeds.reserve(frame_count);
    for (const Frame& f : video.frames) {
        grays.push_back(to_grayscale(f));
        embeds.push_back(embedder.embed_image(f));
    }

    TransitionReport report;
    report.source_id = video.source_id;
    report.boundary_scores.reserve(frame_count - 1);
    for (int i = 0; i + 1 < frame_count; ++i) {
        BoundaryScore score;
        score.index = i;
        score.pixel_score = pixel_diff_score(grays[i], grays[i + 1]);
        try {
            score.embed_score = cosine(embeds[i], embeds[i + 1]);
        } catch (const ZeroVector&) {
            score.embed_score = 1.0;  // no signal reads as identical content
        }
        score.is_transition = score.pixel_score > params.theta && score.embed_score < params.vartheta;
        if (score.is_transition) report.transitions.push_back(i);
        report.boundary_scores.push_back(score);
    }
    report.n_clips = static_cast<int>(report.transitions.size()) + 1;
    return report;
}

std::vector<std::pair<int, int>> segment(const VideoBuffer& video, const TransitionReport& report) {
    const int frame_count = static_cast<int>(video.frame_count());
    if (static_cast<int>(report.boundary_scores.size()) != frame_count - 1)
        throw InconsistentReport("segment: report does not match the video's frame count");
    if (report.n_clips != static_cast<int>(report.transitions.size()) + 1)
        throw InconsistentReport("segment: n_clips does not match the transition count");
    int previous = -1;
    for (int t : report.transitions) {
        if (t <= previous) throw InconsistentReport("segment: transitions must be sorted and unique");
        if (t < 0 || t > frame_count - 2)
            throw InconsistentReport("segment: transition index out of range");
        previous = t;
    }

    std::vector<std::pair<int, int>> clips;
    clips.reserve(report.transitions.size() + 1);
    int start = 0;
    for (int t : report.transitions) {
        clips.emplace_back(start, t);
        start = t + 1;
    }
    clips.emplace_back(start, frame_count - 1);
    return clips;
}

nlohmann::json to_json(const TransitionReport& report) {
    nlohmann::json boundaries = nlohmann::json::array();
    for (const BoundaryScore& b : report.boundary_scores) {
        boundaries.push_back({{"index", b.index},
                              {"pixel_score", b.pixel_score},
                              {"embed_score", b.embed_score},
                              {"is_transition", b.is_transition}});
    }
    return {{"schema", 1},
            {"source_id", report.source_id},
            {"boundaries", std::move(boundaries)},
            {"n_clips", report.n_clips}};
}

TransitionReport transition_report_from_json(const nlohmann::json& j) {
    TransitionReport report;
    report.source_id = j.at("source_id").get<std::string>();
    for (const auto& b : j.at("boundaries")) {
        BoundaryScore score;
        score.index = b.at("index").get<int>();
        score.pixel_score = b.at("pixel_score").get<double>();
        score.embed_score = b.at("embed_score").get<double>();
        score.is_transition = b.at("is_transition").get<bool>();
        if (score.is_transition) report.transitions.push_back(score.index);
        report.boundary_scores.push_back(score);
    }
    report.n_clips = j.at("n_clips").get<int>();
    return report;
}

}  // namespace lapsekit

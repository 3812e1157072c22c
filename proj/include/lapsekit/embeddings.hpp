// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "lapsekit/media_io.hpp"

namespace lapsekit {

/// Produces image and text embeddings of a fixed dimension. Providers are
/// immutable after construction and safe to share across threads; the same
/// input always yields the same vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Eigen::VectorXd embed_image(const Frame& frame) const = 0;
    virtual Eigen::VectorXd embed_text(const std::string& text) const = 0;
    virtual int dimension() const = 0;
    virtual std::string backend() const = 0;
};

/// Offline backend used wherever no model is available (tests, CI).
///
/// Images: the frame is converted to grayscale, box-averaged onto a fixed
/// 8x8 grid, flattened row-major, and mean-centered. Constant frames thus
/// map to the zero vector ("no signal"), which callers treat as identical
/// content rather than a transition vote.
///
/// Text: lowercase alphanumeric tokens are feature-hashed (FNV-1a) into the
/// same 64 buckets as counts, then mean-centered.
class DeterministicProvider final : public EmbeddingProvider {
public:
    static constexpr int kGrid = 8;

    Eigen::VectorXd embed_image(const Frame& frame) const override;
    Eigen::VectorXd embed_text(const std::string& text) const override;
    int dimension() const override { return kGrid * kGrid; }
    std::string backend() const override { return "deterministic-pixel"; }
};

/// Delegates to a model service speaking POST /embed with a JSON body
/// {"kind": "image"|"text", "payload": <base64 CMRV frame | UTF-8 string>}
/// and a {"vector": [..]} response. At most max_in_flight requests are
/// outstanding at any moment.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string endpoint, int dimension, int max_in_flight = 4);
    ~HttpEmbeddingProvider() override;

    Eigen::VectorXd embed_image(const Frame& frame) const override;
    Eigen::VectorXd embed_text(const std::string& text) const override;
    int dimension() const override { return dimension_; }
    std::string backend() const override { return "external-model"; }

private:
    Eigen::VectorXd post_embed(const std::string& kind, const std::string& payload) const;

    std::string endpoint_;
    int dimension_;
    struct Limiter;
    std::unique_ptr<Limiter> limiter_;
};

/// Scalar cosine similarity. Throws ZeroVector when either norm is zero and
/// DimensionMismatch when lengths differ.
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Mean over frames of cosine(embed_image(frame), embed_text(text)).
/// Frames whose embedding (or the text embedding) has zero norm are skipped
/// with a warning; AllFramesSkipped if nothing remains.
double clipsim(const std::vector<Frame>& frames, const std::string& text,
               const EmbeddingProvider& embedder);

}  // namespace lapsekit

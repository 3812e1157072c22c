// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "lapsekit/detail/httplib.hpp"
#include "json.hpp"
#include "lapsekit/base64.hpp"
#include "lapsekit/detail/limiter.hpp"
#include "lapsekit/errors.hpp"
#include "lapsekit/rng.hpp"

namespace lapsekit {

namespace {

Eigen::VectorXd mean_centered(Eigen::VectorXd v) {
    v.array() -= v.mean();
    return v;
}

}  // namespace

Eigen::VectorXd DeterministicProvider::embed_image(const Frame& frame) const {
    const GrayFrame gray = to_grayscale(frame);
    Eigen::VectorXd cells(kGrid * kGrid);
    for (int gy = 0; gy < kGrid; ++gy) {
        // Each cell averages its box of source pixels; degenerate inputs
        // (fewer than kGrid rows or columns) collapse to single-pixel boxes.
        int y0 = gy * gray.height / kGrid;
        int y1 = (gy + 1) * gray.height / kGrid;
        if (y1 <= y0) y1 = y0 + 1;
        y0 = std::min(y0, gray.height - 1);
        y1 = std::min(y1, gray.height);
        for (int gx = 0; gx < kGrid; ++gx) {
            int x0 = gx * gray.width / kGrid;
            int x1 = (gx + 1) * gray.width / kGrid;
            if (x1 <= x0) x1 = x0 + 1;
            x0 = std::min(x0, gray.width - 1);
            x1 = std::min(x1, gray.width);
            double sum = 0.0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    sum += gray.data[static_cast<std::size_t>(y) * gray.width + x];
            cells(gy * kGrid + gx) = sum / ((y1 - y0) * (x1 - x0));
        }
    }
    return mean_centered(std::move(cells));
}

Eigen::VectorXd DeterministicProvider::embed_text(const std::string& text) const {
    if (text.empty()) throw EmptyText("embed_text: text must be nonempty");
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(kGrid * kGrid);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            counts(static_cast<Eigen::Index>(fnv1a64(token) % (kGrid * kGrid))) += 1.0;
            token.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalnum(c))
            token.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return mean_centered(std::move(counts));
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw DimensionMismatch("cosine: vectors differ in length");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine: zero-norm vector");
    // rounding can push |value| an ulp past 1 for near-parallel vectors
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

double clipsim(const std::vector<Frame>& frames, const std::string& text,
               const EmbeddingProvider& embedder) {
    if (frames.empty()) throw Error("clipsim: at least one frame required");
    if (text.empty()) throw EmptyText("clipsim: text must be nonempty");
    const Eigen::VectorXd text_vec = embedder.embed_text(text);
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        try {
            total += cosine(embedder.embed_image(frames[i]), text_vec);
            ++used;
        } catch (const ZeroVector&) {
            std::fprintf(stderr, "clipsim: skipping frame %zu (zero-norm embedding)\n", i);
        }
    }
    if (used == 0) throw AllFramesSkipped("clipsim: no usable frame embeddings");
    return total / static_cast<double>(used);
}

// ---------------------------------------------------------------------------
// External backend

struct HttpEmbeddingProvider::Limiter : detail::Limiter {
    using detail::Limiter::Limiter;
};

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, int dimension, int max_in_flight)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {
    if (dimension_ < 1) throw Error("embedding dimension must be at least 1");
    if (max_in_flight < 1) throw Error("max_in_flight must be at least 1");
    limiter_ = std::make_unique<Limiter>(max_in_flight);
}

HttpEmbeddingProvider::~HttpEmbeddingProvider() = default;

Eigen::VectorXd HttpEmbeddingProvider::post_embed(const std::string& kind,
                                                  const std::string& payload) const {
    detail::Limiter::Guard guard(*limiter_);
    httplib::Client client(endpoint_);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);

    nlohmann::json body = {{"kind", kind}, {"payload", payload}};
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res) throw BackendUnavailable("embed backend unreachable: " + endpoint_);
    if (res->status != 200)
        throw BackendUnavailable("embed backend returned status " + std::to_string(res->status));

    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("vector") || !reply["vector"].is_array())
        throw BackendUnavailable("embed backend returned malformed body");
    const auto& values = reply["vector"];
    if (static_cast<int>(values.size()) != dimension_)
        throw DimensionMismatch("embed backend returned vector of wrong dimension");
    Eigen::VectorXd out(dimension_);
    for (int i = 0; i < dimension_; ++i) out(i) = values[i].get<double>();
    return out;
}

Eigen::VectorXd HttpEmbeddingProvider::embed_image(const Frame& frame) const {
    VideoBuffer single;
    single.frames.push_back(frame);
    return post_embed("image", base64_encode(write_cmrv(single)));
}

Eigen::VectorXd HttpEmbeddingProvider::embed_text(const std::string& text) const {
    if (text.empty()) throw EmptyText("embed_text: text must be nonempty");
    return post_embed("text", text);
}

}  // namespace lapsekit

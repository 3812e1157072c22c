// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lapsekit/catalog.hpp"
#include "lapsekit/detail/limiter.hpp"
#include "lapsekit/media_io.hpp"

namespace lapsekit {

/// Metadata thresholds for the keep/reject predicate. The banned set is
/// matched against lowercased hashtags. required_search_term documents the
/// retrieval query that produced the records; it is not re-checked here.
struct FilterPolicy {
    std::size_t min_title_chars = 20;
    std::uint64_t min_views = 100;
    std::set<std::string> banned_hashtags = {"youtube", "video", "shorts"};
    std::string required_search_term = "time-lapse";
};

struct FilterDecision {
    bool keep = false;
    std::string reason;  // short reject reason, empty when kept
};

/// Pure predicate over the record's metadata. Throws MissingMetadata when
/// title, view count or hashtags are absent.
FilterDecision metadata_filter(const VideoRecord& record, const FilterPolicy& policy);

/// Evenly spread keyframes (same index formula as the uniform extractor),
/// materialized as frames.
std::vector<Frame> select_keyframes(const VideoBuffer& video, int k);

// ---------------------------------------------------------------------------
// Captioning service interface

/// One wire-level request, mirroring POST /caption:
/// {stage, images?, texts?, title, hashtags}.
struct CaptionRequest {
    std::string stage;  // "keyframe" | "fuse" | "judge"
    std::vector<std::vector<std::uint8_t>> images;  // CMRV-encoded single frames
    std::vector<std::string> texts;
    std::string title;
    std::vector<std::string> hashtags;
};

struct CaptionResponse {
    std::vector<std::string> texts;
    std::optional<bool> verdict;
    std::string trace_id;
};

class CaptioningClient {
public:
    virtual ~CaptioningClient() = default;
    /// Transport for one request. Throws ServiceUnavailable on failure after
    /// exhausting the retry budget. Implementations bound their own
    /// concurrency to max_in_flight.
    virtual CaptionResponse call(const CaptionRequest& request) = 0;
};

/// Deterministic in-process stand-in for the real service. Responses come
/// from canned maps with stable hash-derived fallbacks, so tests never need
/// the network. Counters expose call volume and observed concurrency.
class MockCaptioningClient final : public CaptioningClient {
public:
    explicit MockCaptioningClient(int max_in_flight = 4);
    ~MockCaptioningClient() override;

    CaptionResponse call(const CaptionRequest& request) override;

    // canned responses
    void set_keyframe_caption(std::uint64_t image_hash, std::string caption);
    void set_fused_caption(const std::vector<std::string>& keyframe_captions, std::string fused);
    void set_verdict(const std::string& video_caption, bool verdict);

    /// Pause inside call() so tests can observe real overlap.
    void set_artificial_delay_ms(int ms) { delay_ms_ = ms; }

    std::size_t total_calls() const { return total_calls_.load(); }
    int max_concurrent_seen() const { return max_concurrent_.load(); }

    /// Deterministic fallback caption for an un-canned keyframe.
    static std::string default_keyframe_caption(std::uint64_t image_hash);
    /// Deterministic fallback fusion of keyframe captions.
    static std::string default_fused_caption(const std::vector<std::string>& captions,
                                             const std::string& title);

private:
    int max_in_flight_;
    int delay_ms_ = 0;
    std::unique_ptr<detail::Limiter> limiter_;
    std::mutex mutex_;
    std::map<std::uint64_t, std::string> keyframe_canned_;
    std::map<std::uint64_t, std::string> fused_canned_;
    std::map<std::string, bool> verdict_canned_;
    std::atomic<std::size_t> total_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_concurrent_{0};
    std::atomic<std::uint64_t> trace_counter_{0};
};

/// Speaks POST /caption against a real endpoint with retry/backoff and a
/// bounded number of in-flight requests. The bearer token, when configured,
/// is sent as an Authorization header.
class HttpCaptioningClient final : public CaptioningClient {
public:
    struct Options {
        std::string endpoint;       // e.g. http://127.0.0.1:8080
        std::string auth_token;     // empty = unauthenticated
        int max_in_flight = 4;
        int retry_budget = 3;       // retries after the first attempt
        int backoff_initial_ms = 100;
    };

    explicit HttpCaptioningClient(Options options);
    ~HttpCaptioningClient() override;

    CaptionResponse call(const CaptionRequest& request) override;

private:
    Options options_;
    struct Limiter;
    std::unique_ptr<Limiter> limiter_;
    std::atomic<std::uint64_t> trace_counter_{0};
};

// ---------------------------------------------------------------------------
// Staged captioning operations (Fig-style workflow: keyframes -> fusion ->
// verdict). Prompt templates are rendered into the request texts.

/// One caption per keyframe, in order. Keyframes are submitted one request
/// each; a failure partway through raises PartialFailure carrying the
/// completed prefix (or ServiceUnavailable when nothing completed).
std::vector<std::string> caption_keyframes(const std::vector<Frame>& frames,
                                           const std::string& title,
                                           const std::vector<std::string>& hashtags,
                                           CaptioningClient& client,
                                           std::vector<std::string>* trace = nullptr);

/// Second stage: fuses the keyframe captions (submitted order preserved)
/// into one whole-video caption.
std::string fuse_captions(const std::vector<std::string>& keyframe_captions,
                          const std::string& title, const std::vector<std::string>& hashtags,
                          CaptioningClient& client, std::vector<std::string>* trace = nullptr);

/// Third stage: verdict on whether the caption describes a time-lapse.
bool judge_timelapse(const std::string& video_caption, CaptioningClient& client,
                     std::vector<std::string>* trace = nullptr);

// ---------------------------------------------------------------------------
// Closed loop

/// Resolves a record id to its decoded video.
class VideoStore {
public:
    virtual ~VideoStore() = default;
    virtual VideoBuffer load(const VideoRecord& record) const = 0;
};

/// Reads {directory}/{id}.cmrv.
class DirectoryVideoStore final : public VideoStore {
public:
    explicit DirectoryVideoStore(std::filesystem::path directory, std::string decoder = "");
    VideoBuffer load(const VideoRecord& record) const override;

private:
    std::filesystem::path directory_;
    std::string decoder_;
};

struct CurationSummary {
    std::size_t seen = 0;
    std::size_t skipped = 0;   // already curated/rejected
    std::size_t kept = 0;
    std::size_t rejected = 0;  // by filter or by verdict
    std::size_t curated = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // id -> error
};

/// Runs filter -> keyframes -> captions -> fusion -> verdict over every
/// actionable record, mutating statuses and attaching caption bundles.
/// Terminal records are skipped (idempotent re-runs make no service calls);
/// a per-record failure is recorded and does not abort the batch. With
/// jobs > 1 records are processed by a worker pool.
CurationSummary run_closed_loop(std::vector<VideoRecord>& records, const VideoStore& store,
                                const FilterPolicy& policy, CaptioningClient& client,
                                int keyframes_per_video = 4, int jobs = 1);

}  // namespace lapsekit

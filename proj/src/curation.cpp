// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/curation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include "lapsekit/detail/httplib.hpp"
#include "json.hpp"
#include "lapsekit/base64.hpp"
#include "lapsekit/detail/limiter.hpp"
#include "lapsekit/errors.hpp"
#include "lapsekit/prompts.hpp"
#include "lapsekit/rng.hpp"
#include "lapsekit/sampler.hpp"

namespace lapsekit {

FilterDecision metadata_filter(const VideoRecord& record, const FilterPolicy& policy) {
    if (!record.title) throw MissingMetadata("record " + record.id + ": title missing");
    if (!record.view_count) throw MissingMetadata("record " + record.id + ": view_count missing");
    if (!record.hashtags) throw MissingMetadata("record " + record.id + ": hashtags missing");

    if (record.title->size() < policy.min_title_chars) return {false, "short_title"};
    if (*record.view_count < policy.min_views) return {false, "low_view_count"};
    if (record.hashtags->empty()) return {false, "absent_hashtags"};
    for (std::string tag : *record.hashtags) {
        std::transform(tag.begin(), tag.end(), tag.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (policy.banned_hashtags.count(tag)) return {false, "banned_hashtag"};
    }
    return {true, ""};
}

std::vector<Frame> select_keyframes(const VideoBuffer& video, int k) {
    validate(video);
    if (k < 1) throw Error("select_keyframes: k must be at least 1");
    std::vector<Frame> frames;
    frames.reserve(k);
    for (int index : extract_uniform(static_cast<int>(video.frame_count()), k))
        frames.push_back(video.frames[static_cast<std::size_t>(index)]);
    return frames;
}

// ---------------------------------------------------------------------------
// Prompt rendering

namespace {

std::string replace_all(std::string text, std::string_view token, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::string render_keyframe_prompt(const std::string& title, const std::vector<std::string>& hashtags) {
    std::string p(prompts::kKeyframeStage);
    p = replace_all(std::move(p), "{title}", title.empty() ? "(none)" : title);
    return replace_all(std::move(p), "{hashtags}", hashtags.empty() ? "(none)" : join(hashtags, ", "));
}

std::string render_fuse_prompt(const std::vector<std::string>& captions, const std::string& title,
                               const std::vector<std::string>& hashtags) {
    std::string numbered;
    for (std::size_t i = 0; i < captions.size(); ++i)
        numbered += std::to_string(i + 1) + ". " + captions[i] + "\n";
    std::string p(prompts::kFuseStage);
    p = replace_all(std::move(p), "{captions}", numbered);
    p = replace_all(std::move(p), "{title}", title.empty() ? "(none)" : title);
    return replace_all(std::move(p), "{hashtags}", hashtags.empty() ? "(none)" : join(hashtags, ", "));
}

std::string render_judge_prompt(const std::string& caption) {
    return replace_all(std::string(prompts::kJudgeStage), "{caption}", caption);
}

void push_trace(std::vector<std::string>* trace, const std::string& id) {
    if (trace) trace->push_back(id);
}

}  // namespace

std::vector<std::string> caption_keyframes(const std::vector<Frame>& frames,
                                           const std::string& title,
                                           const std::vector<std::string>& hashtags,
                                           CaptioningClient& client,
                                           std::vector<std::string>* trace) {
    if (frames.empty()) throw Error("caption_keyframes: at least one frame required");
    std::vector<std::string> captions;
    captions.reserve(frames.size());
    for (const Frame& frame : frames) {
        CaptionRequest request;
        request.stage = "keyframe";
        VideoBuffer single;
        single.frames.push_back(frame);
        request.images.push_back(write_cmrv(single));
        request.texts.push_back(render_keyframe_prompt(title, hashtags));
        request.title = title;
        request.hashtags = hashtags;
        try {
            CaptionResponse response = client.call(request);
            if (response.texts.empty())
                throw ServiceUnavailable("caption_keyframes: empty response");
            captions.push_back(response.texts.front());
            push_trace(trace, response.trace_id);
        } catch (const ServiceUnavailable&) {
            if (captions.empty()) throw;
            throw PartialFailure("caption_keyframes: failed after " +
                                     std::to_string(captions.size()) + " captions",
                                 captions);
        }
    }
    return captions;
}

std::string fuse_captions(const std::vector<std::string>& keyframe_captions,
                          const std::string& title, const std::vector<std::string>& hashtags,
                          CaptioningClient& client, std::vector<std::string>* trace) {
    if (keyframe_captions.empty()) throw Error("fuse_captions: caption list must be nonempty");
    CaptionRequest request;
    request.stage = "fuse";
    request.texts.push_back(render_fuse_prompt(keyframe_captions, title, hashtags));
    // captions ride along in submitted order; the fusion is order-sensitive
    request.texts.insert(request.texts.end(), keyframe_captions.begin(), keyframe_captions.end());
    request.title = title;
    request.hashtags = hashtags;
    CaptionResponse response = client.call(request);
    if (response.texts.empty() || response.texts.front().empty())
        throw ServiceUnavailable("fuse_captions: empty response");
    push_trace(trace, response.trace_id);
    return response.texts.front();
}

bool judge_timelapse(const std::string& video_caption, CaptioningClient& client,
                     std::vector<std::string>* trace) {
    if (video_caption.empty()) throw EmptyText("judge_timelapse: caption must be nonempty");
    CaptionRequest request;
    request.stage = "judge";
    request.texts.push_back(render_judge_prompt(video_caption));
    request.texts.push_back(video_caption);
    CaptionResponse response = client.call(request);
    if (!response.verdict) throw ServiceUnavailable("judge_timelapse: response carries no verdict");
    push_trace(trace, response.trace_id);
    return *response.verdict;
}

// ---------------------------------------------------------------------------
// Mock client

namespace {

std::uint64_t hash_bytes(const std::vector<std::uint8_t>& bytes) {
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string hex8(std::uint64_t h) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    return buf;
}

}  // namespace

MockCaptioningClient::MockCaptioningClient(int max_in_flight) : max_in_flight_(max_in_flight) {
    if (max_in_flight_ < 1) throw Error("max_in_flight must be at least 1");
    limiter_ = std::make_unique<detail::Limiter>(max_in_flight_);
}

MockCaptioningClient::~MockCaptioningClient() = default;

std::string MockCaptioningClient::default_keyframe_caption(std::uint64_t image_hash) {
    return "The subject as seen at stage " + hex8(image_hash) + ".";
}

std::string MockCaptioningClient::default_fused_caption(const std::vector<std::string>& captions,
                                                        const std::string& title) {
    const std::string joined = join(captions, " Then: ");
    return title.empty() ? joined : title + ": " + joined;
}

void MockCaptioningClient::set_keyframe_caption(std::uint64_t image_hash, std::string caption) {
    std::lock_guard guard(mutex_);
    keyframe_canned_[image_hash] = std::move(caption);
}

void MockCaptioningClient::set_fused_caption(const std::vector<std::string>& keyframe_captions,
                                             std::string fused) {
    std::lock_guard guard(mutex_);
    fused_canned_[fnv1a64(join(keyframe_captions, "\x1f"))] = std::move(fused);
}

void MockCaptioningClient::set_verdict(const std::string& video_caption, bool verdict) {
    std::lock_guard guard(mutex_);
    verdict_canned_[video_caption] = verdict;
}

CaptionResponse MockCaptioningClient::call(const CaptionRequest& request) {
    detail::Limiter::Guard gate(*limiter_);
    const int now = in_flight_.fetch_add(1) + 1;
    int seen = max_concurrent_.load();
    while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
    }
    total_calls_.fetch_add(1);
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));

    struct InFlight {
        std::atomic<int>& counter;
        ~InFlight() { counter.fetch_sub(1); }
    } in_flight_guard{in_flight_};

    CaptionResponse response;
    response.trace_id = "mock-" + request.stage + "-" + std::to_string(trace_counter_.fetch_add(1));
    std::lock_guard guard(mutex_);
    if (request.stage == "keyframe") {
        for (const auto& image : request.images) {
            const std::uint64_t h = hash_bytes(image);
            const auto it = keyframe_canned_.find(h);
            response.texts.push_back(it != keyframe_canned_.end() ? it->second
                                                                  : default_keyframe_caption(h));
        }
    } else if (request.stage == "fuse") {
        const std::vector<std::string> captions(request.texts.begin() + 1, request.texts.end());
        const auto it = fused_canned_.find(fnv1a64(join(captions, "\x1f")));
        response.texts.push_back(it != fused_canned_.end()
                                     ? it->second
                                     : default_fused_caption(captions, request.title));
    } else if (request.stage == "judge") {
        const std::string& caption = request.texts.back();
        const auto it = verdict_canned_.find(caption);
        response.verdict = it != verdict_canned_.end() ? it->second : true;
    } else {
        throw Error("mock client: unknown stage " + request.stage);
    }
    return response;
}

// ---------------------------------------------------------------------------
// HTTP client

struct HttpCaptioningClient::Limiter : detail::Limiter {
    using detail::Limiter::Limiter;
};

HttpCaptioningClient::HttpCaptioningClient(Options options) : options_(std::move(options)) {
    if (options_.max_in_flight < 1) throw Error("max_in_flight must be at least 1");
    if (options_.retry_budget < 0) throw Error("retry_budget must be nonnegative");
    limiter_ = std::make_unique<Limiter>(options_.max_in_flight);
}

HttpCaptioningClient::~HttpCaptioningClient() = default;

CaptionResponse HttpCaptioningClient::call(const CaptionRequest& request) {
    detail::Limiter::Guard guard(*limiter_);

    nlohmann::json body = {{"stage", request.stage},
                           {"title", request.title},
                           {"hashtags", request.hashtags}};
    if (!request.images.empty()) {
        auto images = nlohmann::json::array();
        for (const auto& bytes : request.images) images.push_back(base64_encode(bytes));
        body["images"] = std::move(images);
    }
    if (!request.texts.empty()) body["texts"] = request.texts;
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    int backoff_ms = options_.backoff_initial_ms;
    for (int attempt = 0; attempt <= options_.retry_budget; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(options_.endpoint);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
        httplib::Headers headers;
        if (!options_.auth_token.empty())
            headers.emplace("Authorization", "Bearer " + options_.auth_token);
        auto res = client.Post("/caption", headers, payload, "application/json");
        if (!res) {
            last_error = "caption endpoint unreachable: " + options_.endpoint;
            continue;
        }
        if (res->status >= 500) {
            last_error = "caption endpoint status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ServiceUnavailable("caption endpoint status " + std::to_string(res->status));

        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded())
            throw ServiceUnavailable("caption endpoint returned malformed body");
        CaptionResponse response;
        if (reply.contains("texts")) response.texts = reply["texts"].get<std::vector<std::string>>();
        if (reply.contains("verdict")) response.verdict = reply["verdict"].get<bool>();
        response.trace_id = reply.value(
            "trace_id", "http-" + request.stage + "-" + std::to_string(trace_counter_.fetch_add(1)));
        return response;
    }
    throw ServiceUnavailable(last_error + " (retry budget exhausted)");
}

// ---------------------------------------------------------------------------
// Closed loop

DirectoryVideoStore::DirectoryVideoStore(std::filesystem::path directory, std::string decoder)
    : directory_(std::move(directory)), decoder_(std::move(decoder)) {}

VideoBuffer DirectoryVideoStore::load(const VideoRecord& record) const {
    return load_video(directory_ / (record.id + ".cmrv"), decoder_);
}

CurationSummary run_closed_loop(std::vector<VideoRecord>& records, const VideoStore& store,
                                const FilterPolicy& policy, CaptioningClient& client,
                                int keyframes_per_video, int jobs) {
    if (keyframes_per_video < 1) throw Error("run_closed_loop: keyframes_per_video must be >= 1");
    CurationSummary summary;
    summary.seen = records.size();

    std::atomic<std::size_t> cursor{0};
    std::mutex summary_mutex;

    auto process = [&](VideoRecord& record) {
        if (record.status == RecordStatus::Rejected || record.status == RecordStatus::Curated) {
            std::lock_guard guard(summary_mutex);
            ++summary.skipped;
            return;
        }
        try {
            if (record.status == RecordStatus::Ingested) {
                const FilterDecision decision = metadata_filter(record, policy);
                if (!decision.keep) {
                    advance_status(record, RecordStatus::Rejected, decision.reason);
                    std::lock_guard guard(summary_mutex);
                    ++summary.rejected;
                    return;
                }
                advance_status(record, RecordStatus::Kept);
            }
            {
                std::lock_guard guard(summary_mutex);
                ++summary.kept;
            }

            const VideoBuffer video = store.load(record);
            const std::vector<Frame> keyframes = select_keyframes(video, keyframes_per_video);
            const std::string title = record.title.value_or("");
            const std::vector<std::string> hashtags =
                record.hashtags.value_or(std::vector<std::string>{});

            CaptionBundle bundle;
            bundle.keyframe_captions =
                caption_keyframes(keyframes, title, hashtags, client, &bundle.provider_trace);
            bundle.video_caption =
                fuse_captions(bundle.keyframe_captions, title, hashtags, client, &bundle.provider_trace);
            bundle.is_timelapse = judge_timelapse(bundle.video_caption, client, &bundle.provider_trace);
            record.captions = bundle;

            if (bundle.is_timelapse) {
                advance_status(record, RecordStatus::Curated);
                std::lock_guard guard(summary_mutex);
                ++summary.curated;
            } else {
                advance_status(record, RecordStatus::Rejected, "closed_loop");
                std::lock_guard guard(summary_mutex);
                ++summary.rejected;
            }
        } catch (const std::exception& e) {
            std::lock_guard guard(summary_mutex);
            summary.failures.emplace_back(record.id, e.what());
        }
    };

    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= records.size()) break;
            process(records[i]);
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return summary;
}

}  // namespace lapsekit

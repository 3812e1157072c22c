// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include <map>

#include "doctest.h"
#include "lapsekit/curation.hpp"
#include "lapsekit/errors.hpp"
#include "lapsekit/rng.hpp"

using namespace lapsekit;

namespace {

VideoRecord good_record(const std::string& id) {
    VideoRecord r;
    r.id = id;
    r.title = "Rose blooming over two weeks";
    r.view_count = 10000;
    r.hashtags = std::vector<std::string>{"timelapse"};
    return r;
}

VideoBuffer tiny_video(int frames, std::uint8_t base) {
    VideoBuffer v;
    for (int i = 0; i < frames; ++i) {
        Frame f;
        f.width = 2;
        f.height = 2;
        f.channels = 1;
        f.data.assign(4, static_cast<std::uint8_t>(base + i));
        v.frames.push_back(std::move(f));
    }
    return v;
}

/// Serves deterministic videos from memory, keyed by record id.
class MemoryVideoStore final : public VideoStore {
public:
    VideoBuffer load(const VideoRecord& record) const override {
        if (failing_ids.count(record.id)) throw IoFailure("store: cannot read " + record.id);
        return tiny_video(8, static_cast<std::uint8_t>(fnv1a64(record.id) % 200));
    }
    std::set<std::string> failing_ids;
};

/// Records every request; delegates to an inner client.
class RecordingClient final : public CaptioningClient {
public:
    explicit RecordingClient(CaptioningClient& inner) : inner_(inner) {}
    CaptionResponse call(const CaptionRequest& request) override {
        requests.push_back(request);
        return inner_.call(request);
    }
    std::vector<CaptionRequest> requests;

private:
    CaptioningClient& inner_;
};

/// Fails the first `failures` calls, then delegates.
class FlakyClient final : public CaptioningClient {
public:
    FlakyClient(CaptioningClient& inner, int failures) : inner_(inner), remaining_(failures) {}
    CaptionResponse call(const CaptionRequest& request) override {
        if (remaining_ > 0) {
            --remaining_;
            throw ServiceUnavailable("flaky: simulated outage");
        }
        return inner_.call(request);
    }

private:
    CaptioningClient& inner_;
    int remaining_;
};

std::uint64_t frame_hash(const Frame& frame) {
    VideoBuffer single;
    single.frames.push_back(frame);
    const auto bytes = write_cmrv(single);
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace

TEST_CASE("metadata_filter") {
    const FilterPolicy policy;

    SUBCASE("keeps a record satisfying every predicate") {
        const FilterDecision d = metadata_filter(good_record("vid-1"), policy);
        CHECK(d.keep);
        CHECK(d.reason.empty());
    }
    SUBCASE("banned hashtag rejects, case-insensitively") {
        VideoRecord r = good_record("vid-2");
        r.hashtags = std::vector<std::string>{"timelapse", "Shorts"};
        const FilterDecision d = metadata_filter(r, policy);
        CHECK_FALSE(d.keep);
        CHECK(d.reason == "banned_hashtag");
    }
    SUBCASE("absent hashtags reject") {
        VideoRecord r = good_record("vid-3");
        r.hashtags = std::vector<std::string>{};
        CHECK(metadata_filter(r, policy).reason == "absent_hashtags");
    }
    SUBCASE("short title rejects") {
        VideoRecord r = good_record("vid-4");
        r.title = "Rose";
        CHECK(metadata_filter(r, policy).reason == "short_title");
    }
    SUBCASE("low view count rejects") {
        VideoRecord r = good_record("vid-5");
        r.view_count = 3;
        CHECK(metadata_filter(r, policy).reason == "low_view_count");
    }
    SUBCASE("missing metadata is an error, not a verdict") {
        VideoRecord r = good_record("vid-6");
        r.title.reset();
        CHECK_THROWS_AS(metadata_filter(r, policy), MissingMetadata);
        r = good_record("vid-6");
        r.view_count.reset();
        CHECK_THROWS_AS(metadata_filter(r, policy), MissingMetadata);
        r = good_record("vid-6");
        r.hashtags.reset();
        CHECK_THROWS_AS(metadata_filter(r, policy), MissingMetadata);
    }
    SUBCASE("pure predicate: repeated evaluation agrees") {
        const VideoRecord r = good_record("vid-7");
        const FilterDecision a = metadata_filter(r, policy);
        const FilterDecision b = metadata_filter(r, policy);
        CHECK(a.keep == b.keep);
        CHECK(a.reason == b.reason);
    }
}

TEST_CASE("select_keyframes") {
    const VideoBuffer v = tiny_video(9, 0);
    SUBCASE("k=1 takes the first frame") {
        const auto frames = select_keyframes(v, 1);
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].data == v.frames[0].data);
    }
    SUBCASE("k=3 over 9 frames picks 0, 4, 8") {
        const auto frames = select_keyframes(v, 3);
        REQUIRE(frames.size() == 3);
        CHECK(frames[0].data == v.frames[0].data);
        CHECK(frames[1].data == v.frames[4].data);
        CHECK(frames[2].data == v.frames[8].data);
    }
    SUBCASE("k=F takes every frame") {
        const auto frames = select_keyframes(v, 9);
        REQUIRE(frames.size() == 9);
        for (int i = 0; i < 9; ++i) CHECK(frames[i].data == v.frames[i].data);
    }
    SUBCASE("k beyond F repeats frames instead of failing") {
        const VideoBuffer two = tiny_video(2, 5);
        const auto frames = select_keyframes(two, 5);
        REQUIRE(frames.size() == 5);
        CHECK(frames.front().data == two.frames.front().data);
        CHECK(frames.back().data == two.frames.back().data);
    }
}

TEST_CASE("caption_keyframes against the mock") {
    MockCaptioningClient mock;
    const VideoBuffer v = tiny_video(4, 10);

    SUBCASE("canned captions come back in keyframe order") {
        mock.set_keyframe_caption(frame_hash(v.frames[0]), "first state");
        mock.set_keyframe_caption(frame_hash(v.frames[3]), "final state");
        const auto captions =
            caption_keyframes({v.frames[0], v.frames[3]}, "t", {"h"}, mock);
        CHECK(captions == std::vector<std::string>{"first state", "final state"});
    }
    SUBCASE("identical requests give identical captions") {
        const auto a = caption_keyframes(v.frames, "t", {}, mock);
        const auto b = caption_keyframes(v.frames, "t", {}, mock);
        CHECK(a == b);
    }
    SUBCASE("prompt carries title and hashtags as context") {
        MockCaptioningClient inner;
        RecordingClient recorder(inner);
        caption_keyframes({v.frames[0]}, "My Title", {"tag1", "tag2"}, recorder);
        REQUIRE(recorder.requests.size() == 1);
        const CaptionRequest& req = recorder.requests[0];
        CHECK(req.stage == "keyframe");
        CHECK(req.title == "My Title");
        CHECK(req.hashtags == std::vector<std::string>{"tag1", "tag2"});
        REQUIRE(!req.texts.empty());
        CHECK(req.texts[0].find("My Title") != std::string::npos);
        CHECK(req.texts[0].find("tag1, tag2") != std::string::npos);
    }
    SUBCASE("immediate failure propagates as ServiceUnavailable") {
        MockCaptioningClient inner;
        FlakyClient flaky(inner, 100);
        CHECK_THROWS_AS(caption_keyframes(v.frames, "t", {}, flaky), ServiceUnavailable);
    }
    SUBCASE("failure partway carries the completed prefix") {
        MockCaptioningClient inner;
        // two successes, then an outage
        class TwoThenFail final : public CaptioningClient {
        public:
            explicit TwoThenFail(CaptioningClient& inner) : inner_(inner) {}
            CaptionResponse call(const CaptionRequest& request) override {
                if (++count_ > 2) throw ServiceUnavailable("down");
                return inner_.call(request);
            }

        private:
            CaptioningClient& inner_;
            int count_ = 0;
        } two_then_fail(inner);

        try {
            caption_keyframes(v.frames, "t", {}, two_then_fail);
            FAIL("expected PartialFailure");
        } catch (const PartialFailure& partial) {
            CHECK(partial.completed.size() == 2);
        }
    }
    SUBCASE("at least one frame required") {
        CHECK_THROWS_AS(caption_keyframes({}, "t", {}, mock), Error);
    }
}

TEST_CASE("fuse_captions") {
    MockCaptioningClient mock;

    SUBCASE("single caption fuses through the mock") {
        mock.set_fused_caption({"a bud"}, "A bud across time.");
        CHECK(fuse_captions({"a bud"}, "t", {}, mock) == "A bud across time.");
    }
    SUBCASE("payload preserves submitted caption order") {
        MockCaptioningClient inner;
        RecordingClient recorder(inner);
        fuse_captions({"c-two", "c-one", "c-three"}, "t", {}, recorder);
        REQUIRE(recorder.requests.size() == 1);
        const auto& texts = recorder.requests[0].texts;
        REQUIRE(texts.size() == 4);  // prompt + three captions
        CHECK(texts[1] == "c-two");
        CHECK(texts[2] == "c-one");
        CHECK(texts[3] == "c-three");
    }
    SUBCASE("empty caption list is a precondition error") {
        CHECK_THROWS_AS(fuse_captions({}, "t", {}, mock), Error);
    }
}

TEST_CASE("judge_timelapse") {
    MockCaptioningClient mock;
    mock.set_verdict("a flower blooms", true);
    mock.set_verdict("a man walks", false);
    std::vector<std::string> trace;
    CHECK(judge_timelapse("a flower blooms", mock, &trace));
    CHECK_FALSE(judge_timelapse("a man walks", mock, &trace));
    CHECK(trace.size() == 2);
    CHECK_THROWS_AS(judge_timelapse("", mock), EmptyText);
}

TEST_CASE("run_closed_loop") {
    const FilterPolicy policy;
    const MemoryVideoStore store;

    SUBCASE("mock-driven end to end: one verdict false") {
        std::vector<VideoRecord> records = {good_record("vid-0"), good_record("vid-1"),
                                            good_record("vid-2")};
        MockCaptioningClient mock;
        // derive the exact fused caption vid-1 will produce, then pin its verdict
        {
            MockCaptioningClient probe;
            std::vector<VideoRecord> preview = {good_record("vid-1")};
            run_closed_loop(preview, store, policy, probe, 4);
            REQUIRE(preview[0].captions.has_value());
            mock.set_verdict(preview[0].captions->video_caption, false);
        }

        const CurationSummary summary = run_closed_loop(records, store, policy, mock, 4);
        CHECK(summary.curated == 2);
        CHECK(summary.rejected == 1);
        CHECK(summary.failures.empty());
        CHECK(records[0].status == RecordStatus::Curated);
        CHECK(records[1].status == RecordStatus::Rejected);
        CHECK(records[1].reject_reason == "closed_loop");
        CHECK(records[2].status == RecordStatus::Curated);
        REQUIRE(records[0].captions.has_value());
        CHECK(records[0].captions->keyframe_captions.size() == 4);
        CHECK(records[0].captions->is_timelapse);
        // keyframes + fuse + judge per record
        CHECK(records[0].captions->provider_trace.size() == 6);

        SUBCASE("re-running the output is a fixpoint with zero service calls") {
            const std::size_t calls_before = mock.total_calls();
            const std::vector<VideoRecord> snapshot = records;
            const CurationSummary again = run_closed_loop(records, store, policy, mock, 4);
            CHECK(mock.total_calls() == calls_before);
            CHECK(again.skipped == 3);
            CHECK(records == snapshot);
        }
    }
    SUBCASE("filter rejections never reach the client") {
        VideoRecord banned = good_record("vid-b");
        banned.hashtags = std::vector<std::string>{"shorts"};
        std::vector<VideoRecord> records = {banned};
        MockCaptioningClient mock;
        const CurationSummary summary = run_closed_loop(records, store, policy, mock, 4);
        CHECK(summary.rejected == 1);
        CHECK(mock.total_calls() == 0);
        CHECK(records[0].status == RecordStatus::Rejected);
        CHECK(records[0].reject_reason == "banned_hashtag");
    }
    SUBCASE("per-record failures isolate") {
        MemoryVideoStore flaky_store;
        flaky_store.failing_ids.insert("vid-1");
        std::vector<VideoRecord> records = {good_record("vid-0"), good_record("vid-1"),
                                            good_record("vid-2")};
        MockCaptioningClient mock;
        const CurationSummary summary = run_closed_loop(records, flaky_store, policy, mock, 2);
        CHECK(summary.curated == 2);
        REQUIRE(summary.failures.size() == 1);
        CHECK(summary.failures[0].first == "vid-1");
        CHECK(records[0].status == RecordStatus::Curated);
        CHECK(records[2].status == RecordStatus::Curated);
    }
    SUBCASE("missing metadata is recorded as a failure, not a crash") {
        VideoRecord incomplete;
        incomplete.id = "vid-m";
        std::vector<VideoRecord> records = {incomplete, good_record("vid-ok")};
        MockCaptioningClient mock;
        const CurationSummary summary = run_closed_loop(records, store, policy, mock, 2);
        REQUIRE(summary.failures.size() == 1);
        CHECK(summary.failures[0].first == "vid-m");
        CHECK(records[0].status == RecordStatus::Ingested);
        CHECK(records[1].status == RecordStatus::Curated);
    }
    SUBCASE("worker pool stays within the client's in-flight bound") {
        std::vector<VideoRecord> records;
        for (int i = 0; i < 8; ++i) records.push_back(good_record("vid-" + std::to_string(i)));
        MockCaptioningClient mock(2);
        mock.set_artificial_delay_ms(3);
        const CurationSummary summary = run_closed_loop(records, store, policy, mock, 2, 8);
        CHECK(summary.failures.empty());
        CHECK(mock.max_concurrent_seen() <= 2);
        CHECK(summary.curated == 8);
    }
}

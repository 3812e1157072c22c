// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "lapsekit/errors.hpp"
#include "lapsekit/media_io.hpp"
#include "lapsekit/rng.hpp"

using namespace lapsekit;

namespace {

Frame make_frame(int w, int h, int c, std::vector<std::uint8_t> data) {
    Frame f;
    f.width = w;
    f.height = h;
    f.channels = c;
    f.data = std::move(data);
    return f;
}

VideoBuffer single_frame_video(int w, int h, int c, std::vector<std::uint8_t> data) {
    VideoBuffer v;
    v.frames.push_back(make_frame(w, h, c, std::move(data)));
    return v;
}

// Hand-assembled header, independent of write_cmrv.
std::vector<std::uint8_t> hand_header(std::uint32_t w, std::uint32_t h, std::uint32_t frames,
                                      std::uint32_t channels) {
    std::vector<std::uint8_t> bytes = {'C', 'M', 'R', 'V'};
    for (std::uint32_t v : {w, h, frames, channels})
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    return bytes;
}

VideoBuffer random_video(Rng& rng) {
    const int w = 1 + static_cast<int>(rng.next_index(6));
    const int h = 1 + static_cast<int>(rng.next_index(6));
    const int c = rng.next_index(2) == 0 ? 1 : 3;
    const int frames = 1 + static_cast<int>(rng.next_index(4));
    VideoBuffer v;
    for (int f = 0; f < frames; ++f) {
        std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * c);
        for (auto& byte : data) byte = static_cast<std::uint8_t>(rng.next_index(256));
        v.frames.push_back(make_frame(w, h, c, std::move(data)));
    }
    return v;
}

}  // namespace

TEST_CASE("read_cmrv decodes a hand-encoded single gray pixel") {
    std::vector<std::uint8_t> bytes = hand_header(1, 1, 1, 1);
    bytes.push_back(0x7f);
    const VideoBuffer v = read_cmrv(bytes);
    CHECK(v.frame_count() == 1);
    CHECK(v.width() == 1);
    CHECK(v.height() == 1);
    CHECK(v.channels() == 1);
    CHECK(v.frames[0].data == std::vector<std::uint8_t>{0x7f});
}

TEST_CASE("read_cmrv rejects malformed headers") {
    CHECK_THROWS_AS(read_cmrv(hand_header(2, 2, 0, 1)), MalformedHeader);  // zero frames
    CHECK_THROWS_AS(read_cmrv(hand_header(0, 2, 1, 1)), MalformedHeader);  // zero width
    CHECK_THROWS_AS(read_cmrv(hand_header(2, 2, 1, 2)), MalformedHeader);  // bad channels

    std::vector<std::uint8_t> bad_magic = hand_header(1, 1, 1, 1);
    bad_magic[0] = 'X';
    bad_magic.push_back(0);
    CHECK_THROWS_AS(read_cmrv(bad_magic), MalformedHeader);

    std::vector<std::uint8_t> short_input = {'C', 'M', 'R'};
    CHECK_THROWS_AS(read_cmrv(short_input), MalformedHeader);
}

TEST_CASE("read_cmrv distinguishes truncated from oversized payloads") {
    std::vector<std::uint8_t> truncated = hand_header(2, 2, 1, 1);
    truncated.insert(truncated.end(), {1, 2, 3});  // promises 4 bytes
    CHECK_THROWS_AS(read_cmrv(truncated), TruncatedPayload);

    std::vector<std::uint8_t> oversized = hand_header(1, 1, 1, 1);
    oversized.insert(oversized.end(), {1, 2});
    CHECK_THROWS_AS(read_cmrv(oversized), MalformedHeader);
}

TEST_CASE("write_cmrv emits the hand-assembled encoding") {
    const VideoBuffer v = single_frame_video(1, 1, 1, {0x00});
    std::vector<std::uint8_t> expected = hand_header(1, 1, 1, 1);
    expected.push_back(0x00);
    CHECK(write_cmrv(v) == expected);
}

TEST_CASE("write_cmrv payload length for a two-frame RGB buffer") {
    VideoBuffer v;
    v.frames.push_back(make_frame(2, 2, 3, std::vector<std::uint8_t>(12, 9)));
    v.frames.push_back(make_frame(2, 2, 3, std::vector<std::uint8_t>(12, 7)));
    const auto bytes = write_cmrv(v);
    CHECK(bytes.size() - 20 == 24);  // 2 frames * 2*2 px * 3 channels
}

TEST_CASE("write_cmrv validates buffer invariants") {
    VideoBuffer empty;
    CHECK_THROWS_AS(write_cmrv(empty), Error);

    VideoBuffer mixed;
    mixed.frames.push_back(make_frame(1, 1, 1, {0}));
    mixed.frames.push_back(make_frame(2, 1, 1, {0, 0}));
    CHECK_THROWS_AS(write_cmrv(mixed), Error);

    VideoBuffer bad_len = single_frame_video(2, 2, 1, {0, 0, 0});
    CHECK_THROWS_AS(write_cmrv(bad_len), Error);
}

TEST_CASE("cmrv round trip is byte-identical and content-preserving") {
    Rng rng(0x5eed);
    for (int i = 0; i < 100; ++i) {
        const VideoBuffer v = random_video(rng);
        const auto bytes = write_cmrv(v);
        const VideoBuffer decoded = read_cmrv(bytes);
        CHECK(write_cmrv(decoded) == bytes);
        REQUIRE(decoded.frame_count() == v.frame_count());
        for (std::size_t f = 0; f < v.frames.size(); ++f)
            CHECK(decoded.frames[f].data == v.frames[f].data);
    }
}

TEST_CASE("to_grayscale") {
    SUBCASE("identity on one-channel frames") {
        const Frame f = make_frame(2, 1, 1, {10, 200});
        const GrayFrame g = to_grayscale(f);
        CHECK(g.data == f.data);
    }
    SUBCASE("white maps to white") {
        const GrayFrame g = to_grayscale(make_frame(1, 1, 3, {255, 255, 255}));
        CHECK(g.data[0] == 255);
    }
    SUBCASE("pure red maps to 76") {
        // round(0.299 * 255) = round(76.245)
        const GrayFrame g = to_grayscale(make_frame(1, 1, 3, {255, 0, 0}));
        CHECK(g.data[0] == 76);
    }
    SUBCASE("constant RGB frame becomes a constant gray frame") {
        const GrayFrame g = to_grayscale(make_frame(3, 2, 3, std::vector<std::uint8_t>(18, 33)));
        for (std::uint8_t v : g.data) CHECK(v == g.data[0]);
    }
    SUBCASE("idempotent through the one-channel path") {
        Rng rng(77);
        const VideoBuffer v = random_video(rng);
        const GrayFrame once = to_grayscale(v.frames[0]);
        Frame as_frame = make_frame(once.width, once.height, 1, once.data);
        const GrayFrame twice = to_grayscale(as_frame);
        CHECK(once.data == twice.data);
    }
}

TEST_CASE("cmrv file round trip sets source_id from the stem") {
    const auto path = std::filesystem::temp_directory_path() / "lapsekit-io-test.cmrv";
    const VideoBuffer v = single_frame_video(2, 1, 1, {5, 6});
    write_cmrv_file(path, v);
    const VideoBuffer loaded = read_cmrv_file(path);
    CHECK(loaded.source_id == "lapsekit-io-test");
    CHECK(loaded.frames[0].data == v.frames[0].data);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_cmrv_file(path), IoFailure);
}

TEST_CASE("load_video runs an external decoder when configured") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "lapsekit-decoder-test.cmrv";
    const VideoBuffer v = single_frame_video(1, 2, 1, {1, 9});
    write_cmrv_file(path, v);

    // cp works as the identity decoder: decoder <input> <output>
    const VideoBuffer loaded = load_video(path, "cp");
    CHECK(loaded.source_id == "lapsekit-decoder-test");
    CHECK(loaded.frames[0].data == v.frames[0].data);

    CHECK_THROWS_AS(load_video(dir / "lapsekit-missing.mp4", "false"), IoFailure);
    std::filesystem::remove(path);
}

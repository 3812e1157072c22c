// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lapsekit {

/// One decoded frame. Samples are row-major and channel-interleaved;
/// channels is 1 (grayscale) or 3 (RGB).
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int y, int x, int c = 0) const {
        return data[static_cast<std::size_t>((y * width + x) * channels + c)];
    }
};

struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, width * height samples
};

/// Frame rate as an exact rational, e.g. 30000/1001.
struct Fps {
    std::uint32_t num = 30;
    std::uint32_t den = 1;
    bool operator==(const Fps&) const = default;
};

/// A decoded video: at least one frame, all frames sharing dimensions.
struct VideoBuffer {
    std::vector<Frame> frames;
    Fps fps{};
    std::string source_id;

    std::size_t frame_count() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int channels() const { return frames.empty() ? 0 : frames.front().channels; }
};

/// Throws Error when the frame or buffer invariants do not hold.
void validate(const Frame& frame);
void validate(const VideoBuffer& video);

// CMRV is the raw interchange container: the magic bytes "CMRV", then
// width, height, frame_count, channels as 32-bit little-endian unsigned,
// then the frames back to back, each width*height*channels bytes.
// It carries no frame-rate or identity metadata; read_cmrv fills those
// fields with defaults.

std::vector<std::uint8_t> write_cmrv(const VideoBuffer& video);
VideoBuffer read_cmrv(const std::vector<std::uint8_t>& bytes);
VideoBuffer read_cmrv(const std::uint8_t* bytes, std::size_t len);

void write_cmrv_file(const std::filesystem::path& path, const VideoBuffer& video);
/// Sets source_id to the file stem.
VideoBuffer read_cmrv_file(const std::filesystem::path& path);

/// ITU-R BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0,255].
/// One-channel input is copied unchanged.
GrayFrame to_grayscale(const Frame& frame);

/// Loads a video for the pipeline. With an empty decoder the file is read
/// as CMRV directly. Otherwise `decoder <input> <output.cmrv>` is invoked
/// and the produced CMRV is read; the decoder executable owns the codec.
VideoBuffer load_video(const std::filesystem::path& path, const std::string& decoder = "");

}  // namespace lapsekit

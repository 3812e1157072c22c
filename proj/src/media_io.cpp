// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/media_io.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "lapsekit/errors.hpp"

namespace lapsekit {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'R', 'V'};
constexpr std::size_t kHeaderSize = 4 + 4 * sizeof(std::uint32_t);

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void validate(const Frame& frame) {
    if (frame.width < 1 || frame.height < 1)
        throw Error("frame: width and height must be at least 1");
    if (frame.channels != 1 && frame.channels != 3)
        throw Error("frame: channels must be 1 or 3");
    const auto expected = static_cast<std::size_t>(frame.width) * frame.height * frame.channels;
    if (frame.data.size() != expected)
        throw Error("frame: data length does not match width*height*channels");
}

void validate(const VideoBuffer& video) {
    if (video.frames.empty()) throw Error("video: frame count must be at least 1");
    const Frame& first = video.frames.front();
    for (const Frame& f : video.frames) {
        validate(f);
        if (f.width != first.width || f.height != first.height || f.channels != first.channels)
            throw Error("video: frames must share width, height and channels");
    }
    if (video.fps.num == 0 || video.fps.den == 0) throw Error("video: fps must be positive");
}

std::vector<std::uint8_t> write_cmrv(const VideoBuffer& video) {
    validate(video);
    const auto frame_bytes = static_cast<std::size_t>(video.width()) * video.height() * video.channels();
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + frame_bytes * video.frame_count());
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32le(out, static_cast<std::uint32_t>(video.width()));
    put_u32le(out, static_cast<std::uint32_t>(video.height()));
    put_u32le(out, static_cast<std::uint32_t>(video.frame_count()));
    put_u32le(out, static_cast<std::uint32_t>(video.channels()));
    for (const Frame& f : video.frames) out.insert(out.end(), f.data.begin(), f.data.end());
    return out;
}

VideoBuffer read_cmrv(const std::uint8_t* bytes, std::size_t len) {
    if (len < kHeaderSize) throw MalformedHeader("cmrv: input shorter than header");
    if (!std::equal(kMagic, kMagic + 4, bytes)) throw MalformedHeader("cmrv: bad magic");
    const std::uint32_t width = get_u32le(bytes + 4);
    const std::uint32_t height = get_u32le(bytes + 8);
    const std::uint32_t frame_count = get_u32le(bytes + 12);
    const std::uint32_t channels = get_u32le(bytes + 16);
    if (width == 0 || height == 0) throw MalformedHeader("cmrv: zero width or height");
    if (frame_count == 0) throw MalformedHeader("cmrv: frame count must be at least 1");
    if (channels != 1 && channels != 3) throw MalformedHeader("cmrv: channels must be 1 or 3");

    const unsigned __int128 frame_bytes =
        static_cast<unsigned __int128>(width) * height * channels;
    const unsigned __int128 payload = frame_bytes * frame_count;
    const unsigned __int128 available = len - kHeaderSize;
    if (available < payload) throw TruncatedPayload("cmrv: fewer payload bytes than header promises");
    if (available > payload) throw MalformedHeader("cmrv: trailing bytes after payload");

    VideoBuffer video;
    video.frames.reserve(frame_count);
    const std::uint8_t* p = bytes + kHeaderSize;
    const auto per_frame = static_cast<std::size_t>(frame_bytes);
    for (std::uint32_t i = 0; i < frame_count; ++i, p += per_frame) {
        Frame f;
        f.width = static_cast<int>(width);
        f.height = static_cast<int>(height);
        f.channels = static_cast<int>(channels);
        f.data.assign(p, p + per_frame);
        video.frames.push_back(std::move(f));
    }
    return video;
}

VideoBuffer read_cmrv(const std::vector<std::uint8_t>& bytes) {
    return read_cmrv(bytes.data(), bytes.size());
}

void write_cmrv_file(const std::filesystem::path& path, const VideoBuffer& video) {
    const std::vector<std::uint8_t> bytes = write_cmrv(video);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cmrv: cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("cmrv: write failed: " + path.string());
}

VideoBuffer read_cmrv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cmrv: cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    VideoBuffer video = read_cmrv(bytes);
    video.source_id = path.stem().string();
    return video;
}

GrayFrame to_grayscale(const Frame& frame) {
    validate(frame);
    GrayFrame gray;
    gray.width = frame.width;
    gray.height = frame.height;
    if (frame.channels == 1) {
        gray.data = frame.data;
        return gray;
    }
    gray.data.resize(static_cast<std::size_t>(frame.width) * frame.height);
    const std::uint8_t* src = frame.data.data();
    for (std::size_t i = 0; i < gray.data.size(); ++i, src += 3) {
        const double luma = 0.299 * src[0] + 0.587 * src[1] + 0.114 * src[2];
        const long rounded = std::lround(luma);
        gray.data[i] = static_cast<std::uint8_t>(std::min(255L, std::max(0L, rounded)));
    }
    return gray;
}

VideoBuffer load_video(const std::filesystem::path& path, const std::string& decoder) {
    if (decoder.empty()) return read_cmrv_file(path);

    const std::filesystem::path tmp =
        std::filesystem::temp_directory_path() /
        ("lapsekit-decode-" + std::to_string(::getpid()) + "-" + path.stem().string() + ".cmrv");
    const std::string command = decoder + " '" + path.string() + "' '" + tmp.string() + "'";
    const int rc = std::system(command.c_str());
    if (rc != 0) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw IoFailure("decoder exited with status " + std::to_string(rc) + ": " + command);
    }
    VideoBuffer video;
    try {
        video = read_cmrv_file(tmp);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    video.source_id = path.stem().string();
    return video;
}

}  // namespace lapsekit

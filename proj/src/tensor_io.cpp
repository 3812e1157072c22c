// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/tensor_io.hpp"

#include <cstring>
#include <fstream>

#include "lapsekit/errors.hpp"

namespace lapsekit {

namespace {

constexpr std::size_t kHeaderSize = 5 * sizeof(std::uint32_t);

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

double get_f64le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace

std::vector<std::uint8_t> write_tensor(const diffusion::Tensor5<double>& tensor) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + static_cast<std::size_t>(tensor.data.size()) * 8);
    put_u32le(out, static_cast<std::uint32_t>(tensor.shape.b));
    put_u32le(out, static_cast<std::uint32_t>(tensor.shape.c));
    put_u32le(out, static_cast<std::uint32_t>(tensor.shape.f));
    put_u32le(out, static_cast<std::uint32_t>(tensor.shape.h));
    put_u32le(out, static_cast<std::uint32_t>(tensor.shape.w));
    for (Eigen::Index i = 0; i < tensor.data.size(); ++i) put_f64le(out, tensor.data(i));
    return out;
}

diffusion::Tensor5<double> read_tensor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderSize) throw MalformedHeader("tensor: input shorter than header");
    diffusion::Shape5 shape;
    shape.b = get_u32le(bytes.data());
    shape.c = get_u32le(bytes.data() + 4);
    shape.f = get_u32le(bytes.data() + 8);
    shape.h = get_u32le(bytes.data() + 12);
    shape.w = get_u32le(bytes.data() + 16);
    if (shape.b < 1 || shape.c < 1 || shape.f < 1 || shape.h < 1 || shape.w < 1)
        throw MalformedHeader("tensor: every dimension must be at least 1");
    const unsigned __int128 total = static_cast<unsigned __int128>(shape.b) * shape.c * shape.f *
                                    shape.h * shape.w;
    const unsigned __int128 payload = total * 8;
    if (bytes.size() - kHeaderSize < payload)
        throw TruncatedPayload("tensor: fewer payload bytes than header promises");
    if (bytes.size() - kHeaderSize > payload)
        throw MalformedHeader("tensor: trailing bytes after payload");

    diffusion::Vector<double> data(static_cast<Eigen::Index>(total));
    const std::uint8_t* p = bytes.data() + kHeaderSize;
    for (Eigen::Index i = 0; i < data.size(); ++i, p += 8) data(i) = get_f64le(p);
    return diffusion::Tensor5<double>::from_data(shape, std::move(data));
}

void write_tensor_file(const std::filesystem::path& path, const diffusion::Tensor5<double>& tensor) {
    const std::vector<std::uint8_t> bytes = write_tensor(tensor);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("tensor: cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("tensor: write failed: " + path.string());
}

diffusion::Tensor5<double> read_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("tensor: cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_tensor(bytes);
}

}  // namespace lapsekit

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lapsekit/diffusion.hpp"

namespace lapsekit {

// Flat binary tensor format for golden tests: five 32-bit little-endian
// unsigned dimensions (B, C, F, H, W) followed by the elements as 64-bit
// little-endian IEEE doubles in row-major order.

std::vector<std::uint8_t> write_tensor(const diffusion::Tensor5<double>& tensor);
diffusion::Tensor5<double> read_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor_file(const std::filesystem::path& path, const diffusion::Tensor5<double>& tensor);
diffusion::Tensor5<double> read_tensor_file(const std::filesystem::path& path);

}  // namespace lapsekit

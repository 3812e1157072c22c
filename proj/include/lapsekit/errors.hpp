// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lapsekit {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// media_io
struct MalformedHeader : Error { using Error::Error; };
struct TruncatedPayload : Error { using Error::Error; };

// shared numeric preconditions
struct DimensionMismatch : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// transition
struct TooFewFrames : Error { using Error::Error; };
struct InconsistentReport : Error { using Error::Error; };

// embeddings
struct EmptyText : Error { using Error::Error; };
struct BackendUnavailable : Error { using Error::Error; };
struct AllFramesSkipped : Error { using Error::Error; };

// sampler
struct WindowTooLarge : Error { using Error::Error; };

// curation
struct MissingMetadata : Error { using Error::Error; };
struct ServiceUnavailable : Error { using Error::Error; };

/// A batched captioning request failed partway; `completed` holds the
/// captions finished before the failure, in submission order.
struct PartialFailure : Error {
    PartialFailure(const std::string& what, std::vector<std::string> done)
        : Error(what), completed(std::move(done)) {}
    std::vector<std::string> completed;
};

// catalog
struct DuplicateId : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct StatusRegression : Error { using Error::Error; };

// diffusion kernel
struct InvalidRange : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct StepOutOfRange : Error { using Error::Error; };
struct StepOrderViolation : Error { using Error::Error; };
struct FrameAxisNotSingleton : Error { using Error::Error; };

}  // namespace lapsekit

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapsekit/media_io.hpp"
#include "lapsekit/sampler.hpp"

namespace lapsekit {

/// Lifecycle of a record. Transitions only move forward:
/// ingested -> kept | rejected, kept -> curated | rejected.
/// Rejected and curated are terminal.
enum class RecordStatus { Ingested, Kept, Rejected, Curated };

std::string to_string(RecordStatus s);
RecordStatus record_status_from_string(const std::string& s);

/// Captions produced by the staged annotation pipeline for one video.
struct CaptionBundle {
    std::vector<std::string> keyframe_captions;
    std::string video_caption;
    bool is_timelapse = false;
    std::vector<std::string> provider_trace;  // request/response log ids
    bool operator==(const CaptionBundle&) const = default;
};

/// One manifest entry. Title, hashtags and view count are optional because
/// scraped metadata can be missing; the filter treats absence as an error
/// rather than a silent pass.
struct VideoRecord {
    std::string id;
    std::string source_url;
    std::optional<std::string> title;
    std::optional<std::vector<std::string>> hashtags;
    std::optional<std::uint64_t> view_count;
    double duration_s = 0.0;
    int width = 0;
    int height = 0;
    Fps fps{};
    RecordStatus status = RecordStatus::Ingested;
    std::string reject_reason;  // nonempty only when status == Rejected
    std::optional<std::vector<int>> transitions;
    std::optional<int> n_clips;
    std::optional<SamplingPlan> sampling_plan;
    std::optional<CaptionBundle> captions;
    std::optional<std::string> category;

    bool operator==(const VideoRecord&) const = default;
};

/// Moves a record's status forward; throws StatusRegression on any backward
/// or out-of-order transition. Same-status assignment is a no-op.
void advance_status(VideoRecord& record, RecordStatus next, const std::string& reject_reason = "");

nlohmann::json record_to_json(const VideoRecord& record);
VideoRecord record_from_json(const nlohmann::json& j);

struct ManifestDiagnostic {
    int line = 0;
    std::string message;
};

struct ManifestLoad {
    std::vector<VideoRecord> records;
    std::vector<ManifestDiagnostic> diagnostics;
};

/// Appends one record as a single JSON line. Scans the file for a duplicate
/// id first; batch writers should prefer ManifestWriter, which keeps the id
/// set in memory.
void append_record(const std::filesystem::path& manifest, const VideoRecord& record);

/// Parses every line; malformed lines become diagnostics and parsing
/// continues. Missing file is an IoFailure, an empty file an empty load.
ManifestLoad load_manifest(const std::filesystem::path& manifest);

/// Atomic rewrite (temp file + rename). When the manifest already exists,
/// records that shrink an existing id's status backward are refused.
void save_manifest(const std::filesystem::path& manifest, const std::vector<VideoRecord>& records);

/// Single-writer append handle: in-process mutex plus an advisory file lock,
/// so concurrent appenders in one process or across processes serialize.
class ManifestWriter {
public:
    explicit ManifestWriter(std::filesystem::path manifest);
    void append(const VideoRecord& record);
    const std::set<std::string>& ids() const { return ids_; }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
    std::set<std::string> ids_;
};

// Fixed histogram bins so stats outputs are comparable across runs.
inline constexpr double kDurationBinEdges[] = {30.0, 60.0, 300.0};  // seconds; final bin open
inline constexpr int kCaptionWordBinEdges[] = {25, 50, 75, 100};    // words; final bin open

struct DatasetStats {
    std::size_t total = 0;
    std::map<std::string, std::size_t> status_counts;
    std::map<std::string, std::size_t> reject_reasons;
    std::vector<std::size_t> duration_hist;      // |kDurationBinEdges| + 1 bins over all records
    std::vector<std::size_t> caption_word_hist;  // |kCaptionWordBinEdges| + 1 bins over curated captions
    std::map<std::string, std::size_t> resolution_hist;  // by height class, all records
    std::map<std::string, std::size_t> category_counts;
    std::map<std::string, std::size_t> word_frequencies;  // over curated captions
};

/// Permutation-invariant summary of a record list. Word frequencies are
/// computed over curated video captions, lowercased with punctuation
/// stripped.
DatasetStats compute_stats(const std::vector<VideoRecord>& records);

nlohmann::json stats_to_json(const DatasetStats& stats);
std::string stats_to_table(const DatasetStats& stats);

}  // namespace lapsekit

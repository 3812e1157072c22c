// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#include "lapsekit/catalog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lapsekit/errors.hpp"

namespace lapsekit {

std::string to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::Ingested: return "ingested";
        case RecordStatus::Kept: return "kept";
        case RecordStatus::Rejected: return "rejected";
        case RecordStatus::Curated: return "curated";
    }
    return "ingested";
}

RecordStatus record_status_from_string(const std::string& s) {
    if (s == "ingested") return RecordStatus::Ingested;
    if (s == "kept") return RecordStatus::Kept;
    if (s == "rejected") return RecordStatus::Rejected;
    if (s == "curated") return RecordStatus::Curated;
    throw Error("unknown record status: " + s);
}

namespace {

bool transition_allowed(RecordStatus from, RecordStatus to) {
    if (from == to) return true;
    switch (from) {
        case RecordStatus::Ingested:
            return to == RecordStatus::Kept || to == RecordStatus::Rejected;
        case RecordStatus::Kept:
            return to == RecordStatus::Curated || to == RecordStatus::Rejected;
        case RecordStatus::Rejected:
        case RecordStatus::Curated:
            return false;
    }
    return false;
}

// A persisted snapshot may lag several hops behind the in-memory state, so
// rewrites are judged by forward reachability rather than adjacency.
bool status_reachable(RecordStatus from, RecordStatus to) {
    if (from == to) return true;
    switch (from) {
        case RecordStatus::Ingested:
            return true;
        case RecordStatus::Kept:
            return to == RecordStatus::Curated || to == RecordStatus::Rejected;
        case RecordStatus::Rejected:
        case RecordStatus::Curated:
            return false;
    }
    return false;
}

}  // namespace

void advance_status(VideoRecord& record, RecordStatus next, const std::string& reject_reason) {
    if (!transition_allowed(record.status, next))
        throw StatusRegression("record " + record.id + ": cannot move status " +
                               to_string(record.status) + " -> " + to_string(next));
    record.status = next;
    if (next == RecordStatus::Rejected)
        record.reject_reason = reject_reason;
}

nlohmann::json record_to_json(const VideoRecord& r) {
    nlohmann::json j = {{"schema", 1},
                        {"id", r.id},
                        {"source_url", r.source_url},
                        {"duration_s", r.duration_s},
                        {"width", r.width},
                        {"height", r.height},
                        {"fps", {{"num", r.fps.num}, {"den", r.fps.den}}},
                        {"status", to_string(r.status)}};
    if (r.title) j["title"] = *r.title;
    if (r.hashtags) j["hashtags"] = *r.hashtags;
    if (r.view_count) j["view_count"] = *r.view_count;
    if (r.status == RecordStatus::Rejected) j["reject_reason"] = r.reject_reason;
    if (r.transitions) j["transitions"] = *r.transitions;
    if (r.n_clips) j["n_clips"] = *r.n_clips;
    if (r.sampling_plan) j["sampling_plan"] = to_json(*r.sampling_plan);
    if (r.captions) {
        j["captions"] = {{"keyframe_captions", r.captions->keyframe_captions},
                         {"video_caption", r.captions->video_caption},
                         {"is_timelapse", r.captions->is_timelapse},
                         {"provider_trace", r.captions->provider_trace}};
    }
    if (r.category) j["category"] = *r.category;
    return j;
}

VideoRecord record_from_json(const nlohmann::json& j) {
    if (j.value("schema", 0) != 1) throw Error("record: unsupported schema");
    VideoRecord r;
    r.id = j.at("id").get<std::string>();
    if (r.id.empty()) throw Error("record: id must be nonempty");
    r.source_url = j.value("source_url", "");
    if (j.contains("title")) r.title = j["title"].get<std::string>();
    if (j.contains("hashtags")) r.hashtags = j["hashtags"].get<std::vector<std::string>>();
    if (j.contains("view_count")) r.view_count = j["view_count"].get<std::uint64_t>();
    r.duration_s = j.value("duration_s", 0.0);
    r.width = j.value("width", 0);
    r.height = j.value("height", 0);
    if (j.contains("fps")) {
        r.fps.num = j["fps"].value("num", 30u);
        r.fps.den = j["fps"].value("den", 1u);
    }
    r.status = record_status_from_string(j.value("status", "ingested"));
    r.reject_reason = j.value("reject_reason", "");
    if (j.contains("transitions")) r.transitions = j["transitions"].get<std::vector<int>>();
    if (j.contains("n_clips")) r.n_clips = j["n_clips"].get<int>();
    if (r.transitions && r.n_clips && *r.n_clips != static_cast<int>(r.transitions->size()) + 1)
        throw Error("record: n_clips must equal transition count + 1");
    if (j.contains("sampling_plan")) r.sampling_plan = sampling_plan_from_json(j["sampling_plan"]);
    if (j.contains("captions")) {
        const auto& c = j["captions"];
        CaptionBundle bundle;
        bundle.keyframe_captions = c.at("keyframe_captions").get<std::vector<std::string>>();
        bundle.video_caption = c.at("video_caption").get<std::string>();
        bundle.is_timelapse = c.at("is_timelapse").get<bool>();
        bundle.provider_trace = c.value("provider_trace", std::vector<std::string>{});
        r.captions = std::move(bundle);
    }
    if (j.contains("category")) r.category = j["category"].get<std::string>();
    return r;
}

namespace {

/// RAII advisory lock over the manifest; blocks until acquired.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoFailure("manifest: cannot open for locking: " + path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IoFailure("manifest: flock failed: " + path.string());
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }

private:
    int fd_ = -1;
};

void append_line_locked(const std::filesystem::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IoFailure("manifest: cannot open for append: " + path.string());
    out << line << '\n';
    out.flush();
    if (!out) throw IoFailure("manifest: append failed: " + path.string());
}

std::set<std::string> scan_ids(const std::filesystem::path& path) {
    std::set<std::string> ids;
    if (!std::filesystem::exists(path)) return ids;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("manifest: cannot open: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.contains("id") && j["id"].is_string())
            ids.insert(j["id"].get<std::string>());
    }
    return ids;
}

}  // namespace

void append_record(const std::filesystem::path& manifest, const VideoRecord& record) {
    if (record.id.empty()) throw Error("append_record: record id must be nonempty");
    FileLock lock(manifest);
    if (scan_ids(manifest).count(record.id))
        throw DuplicateId("append_record: id already present: " + record.id);
    append_line_locked(manifest, record_to_json(record).dump());
}

ManifestLoad load_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw IoFailure("manifest: cannot open: " + manifest.string());
    ManifestLoad load;
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            load.diagnostics.push_back({line_no, "invalid JSON"});
            continue;
        }
        try {
            VideoRecord record = record_from_json(j);
            if (!seen.insert(record.id).second) {
                load.diagnostics.push_back({line_no, "duplicate id: " + record.id});
                continue;
            }
            load.records.push_back(std::move(record));
        } catch (const std::exception& e) {
            load.diagnostics.push_back({line_no, e.what()});
        }
    }
    return load;
}

void save_manifest(const std::filesystem::path& manifest, const std::vector<VideoRecord>& records) {
    std::map<std::string, RecordStatus> previous;
    if (std::filesystem::exists(manifest)) {
        for (const VideoRecord& r : load_manifest(manifest).records)
            previous.emplace(r.id, r.status);
    }
    std::set<std::string> seen;
    for (const VideoRecord& r : records) {
        if (!seen.insert(r.id).second)
            throw DuplicateId("save_manifest: duplicate id: " + r.id);
        const auto it = previous.find(r.id);
        if (it != previous.end() && !status_reachable(it->second, r.status))
            throw StatusRegression("save_manifest: record " + r.id + " would move status " +
                                   to_string(it->second) + " -> " + to_string(r.status) +
                                   ", which is backward");
    }

    const std::filesystem::path tmp = manifest.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw IoFailure("manifest: cannot open for writing: " + tmp.string());
        for (const VideoRecord& r : records) out << record_to_json(r).dump() << '\n';
        out.flush();
        if (!out) throw IoFailure("manifest: write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, manifest, ec);
    if (ec) throw IoFailure("manifest: rename failed: " + ec.message());
}

ManifestWriter::ManifestWriter(std::filesystem::path manifest) : path_(std::move(manifest)) {
    ids_ = scan_ids(path_);
}

void ManifestWriter::append(const VideoRecord& record) {
    if (record.id.empty()) throw Error("append: record id must be nonempty");
    std::lock_guard guard(mutex_);
    if (ids_.count(record.id)) throw DuplicateId("append: id already present: " + record.id);
    FileLock lock(path_);
    append_line_locked(path_, record_to_json(record).dump());
    ids_.insert(record.id);
}

namespace {

std::string resolution_label(int height) {
    if (height < 480) return "under-480p";
    if (height < 720) return "480p";
    if (height < 1080) return "720p";
    if (height < 1440) return "1080p";
    if (height < 2160) return "1440p";
    return "2160p-plus";
}

std::size_t duration_bin(double seconds) {
    std::size_t bin = 0;
    for (double edge : kDurationBinEdges) {
        if (seconds < edge) return bin;
        ++bin;
    }
    return bin;
}

std::size_t caption_word_bin(std::size_t words) {
    std::size_t bin = 0;
    for (int edge : kCaptionWordBinEdges) {
        if (words < static_cast<std::size_t>(edge)) return bin;
        ++bin;
    }
    return bin;
}

std::vector<std::string> caption_words(const std::string& caption) {
    std::vector<std::string> words;
    std::string word;
    for (unsigned char c : caption) {
        if (std::isalnum(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else if (!word.empty()) {
            words.push_back(word);
            word.clear();
        }
    }
    if (!word.empty()) words.push_back(word);
    return words;
}

}  // namespace

DatasetStats compute_stats(const std::vector<VideoRecord>& records) {
    DatasetStats stats;
    stats.total = records.size();
    stats.duration_hist.assign(std::size(kDurationBinEdges) + 1, 0);
    stats.caption_word_hist.assign(std::size(kCaptionWordBinEdges) + 1, 0);

    for (const VideoRecord& r : records) {
        ++stats.status_counts[to_string(r.status)];
        if (r.status == RecordStatus::Rejected && !r.reject_reason.empty())
            ++stats.reject_reasons[r.reject_reason];
        ++stats.duration_hist[duration_bin(r.duration_s)];
        ++stats.resolution_hist[resolution_label(r.height)];
        ++stats.category_counts[r.category.value_or("uncategorized")];
        if (r.status == RecordStatus::Curated && r.captions) {
            const std::vector<std::string> words = caption_words(r.captions->video_caption);
            ++stats.caption_word_hist[caption_word_bin(words.size())];
            for (const std::string& w : words) ++stats.word_frequencies[w];
        }
    }
    return stats;
}

nlohmann::json stats_to_json(const DatasetStats& stats) {
    return {{"schema", 1},
            {"total", stats.total},
            {"status_counts", stats.status_counts},
            {"reject_reasons", stats.reject_reasons},
            {"duration_hist",
             {{"edges_s", std::vector<double>(std::begin(kDurationBinEdges), std::end(kDurationBinEdges))},
              {"counts", stats.duration_hist}}},
            {"caption_word_hist",
             {{"edges_words", std::vector<int>(std::begin(kCaptionWordBinEdges), std::end(kCaptionWordBinEdges))},
              {"counts", stats.caption_word_hist}}},
            {"resolution_hist", stats.resolution_hist},
            {"category_counts", stats.category_counts},
            {"word_frequencies", stats.word_frequencies}};
}

std::string stats_to_table(const DatasetStats& stats) {
    std::ostringstream out;
    out << "records: " << stats.total << "\n";
    out << "status:\n";
    for (const auto& [k, v] : stats.status_counts) out << "  " << k << ": " << v << "\n";
    if (!stats.reject_reasons.empty()) {
        out << "reject reasons:\n";
        for (const auto& [k, v] : stats.reject_reasons) out << "  " << k << ": " << v << "\n";
    }
    out << "duration (s):\n";
    const char* duration_labels[] = {"[0,30)", "[30,60)", "[60,300)", "300+"};
    for (std::size_t i = 0; i < stats.duration_hist.size(); ++i)
        out << "  " << duration_labels[i] << ": " << stats.duration_hist[i] << "\n";
    out << "caption words:\n";
    const char* word_labels[] = {"[0,25)", "[25,50)", "[50,75)", "[75,100)", "100+"};
    for (std::size_t i = 0; i < stats.caption_word_hist.size(); ++i)
        out << "  " << word_labels[i] << ": " << stats.caption_word_hist[i] << "\n";
    out << "resolution:\n";
    for (const auto& [k, v] : stats.resolution_hist) out << "  " << k << ": " << v << "\n";
    out << "categories:\n";
    for (const auto& [k, v] : stats.category_counts) out << "  " << k << ": " << v << "\n";
    out << "top words:\n";
    // frequency-descending, ties broken alphabetically
    std::vector<std::pair<std::string, std::size_t>> words(stats.word_frequencies.begin(),
                                                           stats.word_frequencies.end());
    std::stable_sort(words.begin(), words.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t top = std::min<std::size_t>(words.size(), 20);
    for (std::size_t i = 0; i < top; ++i)
        out << "  " << words[i].first << ": " << words[i].second << "\n";
    return out.str();
}

}  // namespace lapsekit

// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: segment, sample, filter, caption, stats, clipsim
// and ddim subcommands over CMRV videos and JSONL manifests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lapsekit/catalog.hpp"
#include "lapsekit/curation.hpp"
#include "lapsekit/diffusion.hpp"
#include "lapsekit/embeddings.hpp"
#include "lapsekit/errors.hpp"
#include "lapsekit/media_io.hpp"
#include "lapsekit/rng.hpp"
#include "lapsekit/sampler.hpp"
#include "lapsekit/tensor_io.hpp"
#include "lapsekit/transition.hpp"

namespace {

using nlohmann::json;

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

void emit(const json& payload, const std::string& output_path) {
    const std::string text = payload.dump(2) + "\n";
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
    if (!out) throw lapsekit::IoFailure("cannot open output: " + output_path);
    out << text;
}

struct EmbedderFlags {
    std::string backend = "deterministic";
    std::string endpoint;
    int dimension = 64;
    int max_in_flight = 4;

    void attach(CLI::App* cmd) {
        cmd->add_option("--embedder", backend, "Embedding backend: deterministic|http")
            ->check(CLI::IsMember({"deterministic", "http"}));
        cmd->add_option("--embed-endpoint", endpoint,
                        "Embedding service endpoint (default: EMBED_ENDPOINT env)");
        cmd->add_option("--embed-dim", dimension, "Embedding dimension for the http backend");
        cmd->add_option("--embed-max-in-flight", max_in_flight, "Max concurrent embed requests");
    }

    std::unique_ptr<lapsekit::EmbeddingProvider> make() const {
        if (backend == "deterministic") return std::make_unique<lapsekit::DeterministicProvider>();
        const std::string url = endpoint.empty() ? env_or("EMBED_ENDPOINT", "") : endpoint;
        if (url.empty())
            throw lapsekit::Error("http embedder needs --embed-endpoint or EMBED_ENDPOINT");
        return std::make_unique<lapsekit::HttpEmbeddingProvider>(url, dimension, max_in_flight);
    }
};

/// Usage-level failure (bad flag value); exits with code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

lapsekit::diffusion::Shape5 parse_shape(const std::string& text) {
    lapsekit::diffusion::Shape5 shape;
    Eigen::Index* axes[] = {&shape.b, &shape.c, &shape.f, &shape.h, &shape.w};
    std::stringstream stream(text);
    std::string item;
    int i = 0;
    while (std::getline(stream, item, ',')) {
        if (i >= 5) throw UsageError("--shape expects exactly 5 comma-separated axes");
        std::size_t used = 0;
        long long value = 0;
        try {
            value = std::stoll(item, &used);
        } catch (const std::exception&) {
            throw UsageError("--shape has a non-numeric axis: " + item);
        }
        if (used != item.size() || value < 1)
            throw UsageError("--shape axes must be positive integers, got: " + item);
        *axes[i++] = value;
    }
    if (i != 5) throw UsageError("--shape expects exactly 5 comma-separated axes");
    return shape;
}

// ---------------------------------------------------------------------------

int cmd_segment(const std::string& input, const std::string& output, double theta,
                double vartheta, const std::string& decoder, const EmbedderFlags& embedder_flags) {
    const lapsekit::VideoBuffer video = lapsekit::load_video(input, decoder);
    const auto embedder = embedder_flags.make();
    const lapsekit::TransitionReport report =
        lapsekit::detect_transitions(video, {theta, vartheta}, *embedder);
    emit(lapsekit::to_json(report), output);
    return 0;
}

int cmd_sample(const std::string& input, const std::string& output, int frames, double prob,
               int delta, std::uint64_t seed, double theta, double vartheta,
               const std::string& decoder, const EmbedderFlags& embedder_flags) {
    const lapsekit::VideoBuffer video = lapsekit::load_video(input, decoder);
    const auto embedder = embedder_flags.make();
    const lapsekit::TransitionReport report =
        lapsekit::detect_transitions(video, {theta, vartheta}, *embedder);
    lapsekit::SamplerParams params;
    params.n_frames = frames;
    params.prob = prob;
    params.delta = delta;
    params.seed = seed;
    lapsekit::Rng rng(lapsekit::derive_seed(seed, video.source_id));
    const lapsekit::SamplingPlan plan = lapsekit::extract(video, report, params, rng);
    emit(lapsekit::to_json(plan), output);
    return 0;
}

int cmd_filter(const std::string& manifest, const std::string& out, std::size_t min_title_chars,
               std::uint64_t min_views, const std::string& banned_csv) {
    lapsekit::FilterPolicy policy;
    policy.min_title_chars = min_title_chars;
    policy.min_views = min_views;
    if (!banned_csv.empty()) {
        policy.banned_hashtags.clear();
        std::stringstream stream(banned_csv);
        std::string tag;
        while (std::getline(stream, tag, ',')) {
            std::transform(tag.begin(), tag.end(), tag.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (!tag.empty()) policy.banned_hashtags.insert(tag);
        }
    }

    lapsekit::ManifestLoad load = lapsekit::load_manifest(manifest);
    for (const auto& diag : load.diagnostics)
        std::cerr << "filter: " << manifest << ":" << diag.line << ": " << diag.message << "\n";

    std::size_t kept = 0, rejected = 0, failed = 0;
    for (lapsekit::VideoRecord& record : load.records) {
        if (record.status != lapsekit::RecordStatus::Ingested) continue;
        try {
            const lapsekit::FilterDecision decision = lapsekit::metadata_filter(record, policy);
            if (decision.keep) {
                lapsekit::advance_status(record, lapsekit::RecordStatus::Kept);
                ++kept;
            } else {
                lapsekit::advance_status(record, lapsekit::RecordStatus::Rejected, decision.reason);
                ++rejected;
            }
        } catch (const std::exception& e) {
            std::cerr << "filter: record " << record.id << ": " << e.what() << "\n";
            ++failed;
        }
    }
    lapsekit::save_manifest(out.empty() ? manifest : out, load.records);
    std::cout << "filter: kept " << kept << ", rejected " << rejected << ", failed " << failed
              << "\n";
    return failed == 0 ? 0 : 1;
}

int cmd_caption(const std::string& manifest, const std::string& out, const std::string& provider,
                const std::string& endpoint, int keyframes, const std::string& videos_dir,
                const std::string& decoder, int jobs, int max_in_flight, int retry_budget,
                std::size_t min_title_chars, std::uint64_t min_views) {
    lapsekit::ManifestLoad load = lapsekit::load_manifest(manifest);
    for (const auto& diag : load.diagnostics)
        std::cerr << "caption: " << manifest << ":" << diag.line << ": " << diag.message << "\n";

    std::unique_ptr<lapsekit::CaptioningClient> client;
    if (provider == "mock") {
        client = std::make_unique<lapsekit::MockCaptioningClient>(max_in_flight);
    } else {
        lapsekit::HttpCaptioningClient::Options options;
        options.endpoint = endpoint.empty() ? env_or("CAPTION_ENDPOINT", "") : endpoint;
        if (options.endpoint.empty())
            throw lapsekit::Error("http provider needs --endpoint or CAPTION_ENDPOINT");
        options.auth_token = env_or("CAPTION_TOKEN", "");
        options.max_in_flight = max_in_flight;
        options.retry_budget = retry_budget;
        client = std::make_unique<lapsekit::HttpCaptioningClient>(std::move(options));
    }

    lapsekit::FilterPolicy policy;
    policy.min_title_chars = min_title_chars;
    policy.min_views = min_views;
    const lapsekit::DirectoryVideoStore store(videos_dir, decoder);
    const lapsekit::CurationSummary summary =
        lapsekit::run_closed_loop(load.records, store, policy, *client, keyframes, jobs);

    lapsekit::save_manifest(out.empty() ? manifest : out, load.records);
    std::cout << "caption: seen " << summary.seen << ", skipped " << summary.skipped << ", kept "
              << summary.kept << ", curated " << summary.curated << ", rejected "
              << summary.rejected << ", failed " << summary.failures.size() << "\n";
    for (const auto& [id, message] : summary.failures)
        std::cerr << "caption: record " << id << ": " << message << "\n";
    return summary.failures.empty() ? 0 : 1;
}

int cmd_stats(const std::string& manifest, const std::string& out, bool table) {
    lapsekit::ManifestLoad load = lapsekit::load_manifest(manifest);
    for (const auto& diag : load.diagnostics)
        std::cerr << "stats: " << manifest << ":" << diag.line << ": " << diag.message << "\n";
    const lapsekit::DatasetStats stats = lapsekit::compute_stats(load.records);
    emit(lapsekit::stats_to_json(stats), out);
    if (table) std::cout << lapsekit::stats_to_table(stats);
    return 0;
}

int cmd_clipsim(const std::string& input, const std::string& text, const std::string& output,
                const std::string& decoder, const EmbedderFlags& embedder_flags) {
    const lapsekit::VideoBuffer video = lapsekit::load_video(input, decoder);
    const auto embedder = embedder_flags.make();
    const double score = lapsekit::clipsim(video.frames, text, *embedder);
    emit(json{{"schema", 1},
              {"source_id", video.source_id},
              {"frames", video.frame_count()},
              {"clipsim", score}},
         output);
    return 0;
}

int cmd_ddim(int steps, double guidance, int total_steps, std::uint64_t seed,
             const std::string& shape_text, const std::string& dump_path) {
    namespace dd = lapsekit::diffusion;
    const dd::Shape5 shape = parse_shape(shape_text);
    lapsekit::Rng rng(seed);
    const auto target = dd::Tensor5<double>::gaussian(shape, rng);
    const auto x_start = dd::Tensor5<double>::gaussian(shape, rng);
    const auto schedule = dd::linear_beta_schedule<double>(total_steps, 8.5e-4, 1.2e-2);
    const auto denoiser = dd::point_mass_denoiser(target, schedule);

    const dd::Vector<double> conditioning = dd::Vector<double>::Zero(1);
    const auto terminal =
        dd::sample_ddim(x_start, denoiser, schedule, steps, guidance, &conditioning);
    const double error = (terminal.data - target.data).cwiseAbs().maxCoeff();

    if (!dump_path.empty()) lapsekit::write_tensor_file(dump_path, terminal);
    emit(json{{"schema", 1},
              {"steps", steps},
              {"guidance", guidance},
              {"total_steps", total_steps},
              {"seed", seed},
              {"shape", {shape.b, shape.c, shape.f, shape.h, shape.w}},
              {"terminal_error", error}},
         "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curation toolkit for time-lapse video datasets"};
    app.require_subcommand(1);

    // segment
    auto* segment = app.add_subcommand("segment", "Detect transitions and report clip boundaries");
    std::string seg_input, seg_output, seg_decoder;
    double seg_theta = 40.0, seg_vartheta = 0.5;
    EmbedderFlags seg_embedder;
    segment->add_option("--input", seg_input, "Input video (CMRV)")->required();
    segment->add_option("--output", seg_output, "Report path (default: stdout)");
    segment->add_option("--theta", seg_theta, "Pixel-difference threshold")->check(CLI::NonNegativeNumber);
    segment->add_option("--vartheta", seg_vartheta, "Embedding-similarity threshold")->check(CLI::Range(-1.0, 1.0));
    segment->add_option("--decoder", seg_decoder, "External decoder executable");
    seg_embedder.attach(segment);

    // sample
    auto* sample = app.add_subcommand("sample", "Choose a sampling strategy and extract frames");
    std::string smp_input, smp_output, smp_decoder;
    int smp_frames = 16, smp_delta = 3;
    double smp_prob = 0.9, smp_theta = 40.0, smp_vartheta = 0.5;
    std::uint64_t smp_seed = 0;
    EmbedderFlags smp_embedder;
    sample->add_option("--input", smp_input, "Input video (CMRV)")->required();
    sample->add_option("--output", smp_output, "Plan path (default: stdout)");
    sample->add_option("--frames", smp_frames, "Frames to extract")->check(CLI::PositiveNumber);
    sample->add_option("--prob", smp_prob, "Probability of honoring the preferred strategy")->check(CLI::Range(0.0, 1.0));
    sample->add_option("--delta", smp_delta, "Transition-count threshold")->check(CLI::NonNegativeNumber);
    sample->add_option("--seed", smp_seed, "Seed for the per-video generator");
    sample->add_option("--theta", smp_theta, "Pixel-difference threshold")->check(CLI::NonNegativeNumber);
    sample->add_option("--vartheta", smp_vartheta, "Embedding-similarity threshold")->check(CLI::Range(-1.0, 1.0));
    sample->add_option("--decoder", smp_decoder, "External decoder executable");
    smp_embedder.attach(sample);

    // filter
    auto* filter = app.add_subcommand("filter", "Apply the metadata keep/reject policy");
    std::string flt_manifest, flt_out, flt_banned;
    std::size_t flt_min_title = 20;
    std::uint64_t flt_min_views = 100;
    filter->add_option("--manifest", flt_manifest, "Manifest path (JSONL)")->required();
    filter->add_option("--out", flt_out, "Output manifest (default: rewrite input)");
    filter->add_option("--min-title-chars", flt_min_title, "Minimum title length");
    filter->add_option("--min-views", flt_min_views, "Minimum view count");
    filter->add_option("--banned", flt_banned, "Comma-separated banned hashtags");

    // caption
    auto* caption = app.add_subcommand("caption", "Run the closed-loop captioning pipeline");
    std::string cap_manifest, cap_out, cap_provider = "mock", cap_endpoint, cap_videos = ".",
                cap_decoder;
    int cap_keyframes = 4, cap_jobs = 1, cap_max_in_flight = 4, cap_retry = 3;
    std::size_t cap_min_title = 20;
    std::uint64_t cap_min_views = 100;
    caption->add_option("--manifest", cap_manifest, "Manifest path (JSONL)")->required();
    caption->add_option("--out", cap_out, "Output manifest (default: rewrite input)");
    caption->add_option("--provider", cap_provider, "Captioning provider: mock|http")
        ->check(CLI::IsMember({"mock", "http"}));
    caption->add_option("--endpoint", cap_endpoint,
                        "Captioning endpoint (default: CAPTION_ENDPOINT env)");
    caption->add_option("--keyframes", cap_keyframes, "Keyframes per video")->check(CLI::PositiveNumber);
    caption->add_option("--videos", cap_videos, "Directory holding {id}.cmrv videos");
    caption->add_option("--decoder", cap_decoder, "External decoder executable");
    caption->add_option("--jobs", cap_jobs, "Worker threads across records")->check(CLI::PositiveNumber);
    caption->add_option("--max-in-flight", cap_max_in_flight, "Max concurrent service requests")->check(CLI::PositiveNumber);
    caption->add_option("--retry-budget", cap_retry, "Retries per request")->check(CLI::NonNegativeNumber);
    caption->add_option("--min-title-chars", cap_min_title, "Minimum title length");
    caption->add_option("--min-views", cap_min_views, "Minimum view count");

    // stats
    auto* stats = app.add_subcommand("stats", "Compute dataset statistics from a manifest");
    std::string sts_manifest, sts_out;
    bool sts_table = false;
    stats->add_option("--manifest", sts_manifest, "Manifest path (JSONL)")->required();
    stats->add_option("--out", sts_out, "Stats JSON path (default: stdout)");
    stats->add_flag("--table", sts_table, "Also print a plain-text table");

    // clipsim
    auto* clipsim = app.add_subcommand("clipsim", "Frame/text similarity for one video");
    std::string cs_input, cs_text, cs_output, cs_decoder;
    EmbedderFlags cs_embedder;
    clipsim->add_option("--input", cs_input, "Input video (CMRV)")->required();
    clipsim->add_option("--text", cs_text, "Reference text")->required();
    clipsim->add_option("--output", cs_output, "Result path (default: stdout)");
    clipsim->add_option("--decoder", cs_decoder, "External decoder executable");
    cs_embedder.attach(clipsim);

    // ddim
    auto* ddim = app.add_subcommand("ddim", "Deterministic sampling demo on a point-mass target");
    int dd_steps = 25, dd_total = 1000;
    double dd_guidance = 8.0;
    std::uint64_t dd_seed = 0;
    std::string dd_shape = "1,1,1,4,4", dd_dump;
    ddim->add_option("--steps", dd_steps, "Sampling steps")->check(CLI::PositiveNumber);
    ddim->add_option("--guidance", dd_guidance, "Guidance scale");
    ddim->add_option("--t", dd_total, "Schedule length")->check(CLI::PositiveNumber);
    ddim->add_option("--seed", dd_seed, "Seed");
    ddim->add_option("--shape", dd_shape, "Tensor shape B,C,F,H,W");
    ddim->add_option("--dump", dd_dump, "Write the terminal tensor to this path");

    try {
        app.parse(argc, argv);
        if (segment->parsed())
            return cmd_segment(seg_input, seg_output, seg_theta, seg_vartheta, seg_decoder,
                               seg_embedder);
        if (sample->parsed())
            return cmd_sample(smp_input, smp_output, smp_frames, smp_prob, smp_delta, smp_seed,
                              smp_theta, smp_vartheta, smp_decoder, smp_embedder);
        if (filter->parsed())
            return cmd_filter(flt_manifest, flt_out, flt_min_title, flt_min_views, flt_banned);
        if (caption->parsed())
            return cmd_caption(cap_manifest, cap_out, cap_provider, cap_endpoint, cap_keyframes,
                               cap_videos, cap_decoder, cap_jobs, cap_max_in_flight, cap_retry,
                               cap_min_title, cap_min_views);
        if (stats->parsed()) return cmd_stats(sts_manifest, sts_out, sts_table);
        if (clipsim->parsed())
            return cmd_clipsim(cs_input, cs_text, cs_output, cs_decoder, cs_embedder);
        if (ddim->parsed())
            return cmd_ddim(dd_steps, dd_guidance, dd_total, dd_seed, dd_shape, dd_dump);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "lapsekit: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "lapsekit: " << e.what() << "\n";
        return 1;
    }
}

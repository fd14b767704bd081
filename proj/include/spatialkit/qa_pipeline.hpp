#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spatialkit/depth_map.hpp"
#include "spatialkit/object_depth.hpp"
#include "spatialkit/sampling.hpp"

namespace spatialkit::qa {

struct Annotation {
    std::string id;
    std::string name;  // object name or description
    BoundingBox bbox;
    std::string mask_path;  // optional; raster or RLE JSON
};

enum class DepthSource { sensor, mde };

/// One manifest entry: an RGB image with optional depth and annotations.
struct ImageRecord {
    std::string image_id;
    std::string rgb_path;
    std::string depth_path;  // empty = none
    DepthSource depth_source = DepthSource::sensor;
    std::vector<Annotation> annotations;
    nlohmann::ordered_json existing_conversations;  // optional pass-through
};

/// Reads a JSONL manifest; paths stay relative to the manifest directory.
/// Malformed lines or duplicate image ids abort with ValidationError.
std::vector<ImageRecord> load_manifest(const std::filesystem::path& path);

/// Loads a mask referenced by an annotation: .json means run-length
/// encoding {"height", "width", "rle": [n0, n1, ...]} with runs in
/// row-major order alternating non-member/member, starting non-member;
/// anything else is read as a single-channel raster (nonzero = member).
ObjectMask load_mask(const std::filesystem::path& path);

struct QATurn {
    std::string question;
    std::string answer;
};

/// One conversation unit of the output dataset.
struct QARecord {
    std::string record_id;
    std::string rgb_ref;
    std::string depth_ref;
    std::string level;  // low | mid | high | source
    bool api_allowed = true;
    std::vector<QATurn> turns;
    nlohmann::ordered_json meta;  // template id, sampled coordinates, annotation ids

    nlohmann::ordered_json to_json() const;
};

/// Question phrasings. Placeholders in braces are substituted; answers
/// are fixed ground-truth formats (integer millimeters, "mm" suffix).
struct QuestionTemplates {
    std::string point_depth = "What is the depth value of point ({x}, {y})?";
    std::string object_depth = "Describe the depth of {name}.";
    std::string point_closer = "Which point is closer to the camera, ({x1}, {y1}) or ({x2}, {y2})?";
    std::string point_further =
        "Which point is further from the camera, ({x1}, {y1}) or ({x2}, {y2})?";
    std::string object_closer = "Which is closer to the camera, {a} or {b}?";
    std::string object_further = "Which is further from the camera, {a} or {b}?";
};

struct ConvertConfig {
    std::vector<std::string> levels = {"low", "mid", "high"};
    int points_per_image = 3;
    int proximity_point_pairs = 2;
    int proximity_object_pairs = 2;
    std::uint32_t tie_threshold_mm = 0;
    std::vector<std::string> gpt_tasks = {"depthmap_understanding", "spatial_understanding",
                                          "robot_scene"};
    double api_allowed_fraction = 0.5;
    bool emit_u24 = false;
    int workers = 0;  // 0 = OpenMP default
    QuestionTemplates templates;

    bool level_enabled(const std::string& level) const;
    static ConvertConfig load_json(const std::filesystem::path& path);
};

/// Loaded per-image working set: the metric depth plus resolved masks.
struct ImageContext {
    const ImageRecord& record;
    const DepthMap& map;
    std::string rgb_ref;
    std::string depth_ref;
    // One entry per annotation: the clamped mask, or nullopt for bbox-only.
    std::vector<std::optional<ObjectMask>> masks;
};

/// Low level: n uniformly sampled points with depth > 0, asked one per
/// record. Throws NoValidDepthError when the map has no valid pixels.
std::vector<QARecord> generate_point_depth_qa(const ImageContext& ctx, int n,
                                              rng::Sampler& sampler,
                                              const QuestionTemplates& templates);

struct SkippedAnnotation {
    std::string annotation_id;
    std::string reason;
};

/// Middle level: one record per annotation. Mask path answers with the
/// full four-value descriptor; bbox-only answers with the center depth.
std::vector<QARecord> generate_object_depth_qa(const ImageContext& ctx,
                                               const QuestionTemplates& templates,
                                               std::vector<SkippedAnnotation>& skipped);

/// Middle level: point-pair and object-pair proximity questions. Tied
/// comparisons are dropped (ambiguous ground truth).
std::vector<QARecord> generate_proximity_qa(const ImageContext& ctx, const ConvertConfig& config,
                                            rng::Sampler& sampler);

/// High level: one offline prompt-job entry per task, carrying the
/// verbatim template. Unknown task names throw ValidationError.
std::vector<nlohmann::ordered_json> emit_gpt_prompt_jobs(const ImageContext& ctx,
                                                         const std::vector<std::string>& tasks);

struct ConvertSummary {
    std::size_t images_total = 0;
    std::size_t images_processed = 0;
    std::size_t images_skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;          // image-level
    std::map<std::string, std::size_t> records_per_level;     // low/mid/high/source
    std::size_t records_total = 0;
    std::size_t annotations_skipped = 0;
    std::size_t saturated_pixels = 0;

    nlohmann::ordered_json to_json() const;
};

/// Runs the whole conversion: encodes depth rasters, generates every
/// enabled level, and writes qa.jsonl, gpt_jobs.jsonl, depth rasters and
/// summary.json under out_dir. Deterministic: identical
/// (manifest, config, seed) produce byte-identical outputs regardless of
/// worker count.
ConvertSummary convert_dataset(const std::filesystem::path& manifest_path,
                               const std::filesystem::path& out_dir, const ConvertConfig& config,
                               std::uint64_t seed);

}  // namespace spatialkit::qa

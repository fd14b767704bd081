#include "spatialkit/qa_pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>

#include "spatialkit/depth_codec.hpp"
#include "spatialkit/prompts.hpp"
#include "spatialkit/raster.hpp"

namespace spatialkit::qa {

namespace {

namespace fs = std::filesystem;

std::string replace_all(std::string text, const std::string& token, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

std::string mm(std::uint32_t d) { return std::to_string(d) + "mm"; }

std::string point_str(int x, int y) {
    return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

BoundingBox bbox_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError("bbox must be [x_min, y_min, x_max, y_max]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

std::vector<ImageRecord> load_manifest(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest " + path.string());
    std::vector<ImageRecord> records;
    std::vector<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            ImageRecord rec;
            rec.image_id = j.at("image_id").get<std::string>();
            rec.rgb_path = j.at("rgb").get<std::string>();
            if (j.contains("depth") && !j.at("depth").is_null())
                rec.depth_path = j.at("depth").get<std::string>();
            if (j.contains("depth_source")) {
                const std::string s = j.at("depth_source").get<std::string>();
                if (s == "sensor")
                    rec.depth_source = DepthSource::sensor;
                else if (s == "mde")
                    rec.depth_source = DepthSource::mde;
                else
                    throw ValidationError("depth_source must be 'sensor' or 'mde'");
            }
            if (j.contains("annotations")) {
                for (const auto& aj : j.at("annotations")) {
                    Annotation a;
                    a.id = aj.at("id").get<std::string>();
                    a.name = aj.at("name").get<std::string>();
                    a.bbox = bbox_from_json(aj.at("bbox"));
                    if (aj.contains("mask") && !aj.at("mask").is_null())
                        a.mask_path = aj.at("mask").get<std::string>();
                    rec.annotations.push_back(std::move(a));
                }
            }
            if (j.contains("conversations")) rec.existing_conversations = j.at("conversations");
            if (std::find(seen_ids.begin(), seen_ids.end(), rec.image_id) != seen_ids.end())
                throw ValidationError("duplicate image_id '" + rec.image_id + "'");
            seen_ids.push_back(rec.image_id);
            records.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

ObjectMask load_mask(const fs::path& path) {
    if (path.extension() == ".json") {
        std::ifstream f(path);
        if (!f) throw IoError("cannot open mask " + path.string());
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ": " + e.what());
        }
        const int h = j.at("height").get<int>();
        const int w = j.at("width").get<int>();
        ObjectMask mask(h, w);
        std::size_t pos = 0;
        bool member = false;  // runs alternate starting with non-member
        for (const auto& run : j.at("rle")) {
            const std::size_t len = run.get<std::size_t>();
            if (pos + len > mask.membership.size())
                throw ValidationError(path.string() + ": RLE runs exceed height*width");
            if (member) std::fill_n(mask.membership.begin() + pos, len, std::uint8_t{1});
            pos += len;
            member = !member;
        }
        if (pos != mask.membership.size())
            throw ValidationError(path.string() + ": RLE runs do not cover height*width");
        return mask;
    }
    raster::Image img = raster::read_gray(path);
    ObjectMask mask(img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i) mask.membership[i] = img.data[i] ? 1 : 0;
    return mask;
}

bool ConvertConfig::level_enabled(const std::string& level) const {
    return std::find(levels.begin(), levels.end(), level) != levels.end();
}

ConvertConfig ConvertConfig::load_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    ConvertConfig c;
    if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<std::string>>();
    if (j.contains("points_per_image")) c.points_per_image = j.at("points_per_image").get<int>();
    if (j.contains("proximity_point_pairs"))
        c.proximity_point_pairs = j.at("proximity_point_pairs").get<int>();
    if (j.contains("proximity_object_pairs"))
        c.proximity_object_pairs = j.at("proximity_object_pairs").get<int>();
    if (j.contains("tie_threshold_mm"))
        c.tie_threshold_mm = j.at("tie_threshold_mm").get<std::uint32_t>();
    if (j.contains("gpt_tasks")) c.gpt_tasks = j.at("gpt_tasks").get<std::vector<std::string>>();
    if (j.contains("api_allowed_fraction"))
        c.api_allowed_fraction = j.at("api_allowed_fraction").get<double>();
    if (j.contains("emit_u24")) c.emit_u24 = j.at("emit_u24").get<bool>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("templates")) {
        const auto& t = j.at("templates");
        auto pick = [&](const char* key, std::string& slot) {
            if (t.contains(key)) slot = t.at(key).get<std::string>();
        };
        pick("point_depth", c.templates.point_depth);
        pick("object_depth", c.templates.object_depth);
        pick("point_closer", c.templates.point_closer);
        pick("point_further", c.templates.point_further);
        pick("object_closer", c.templates.object_closer);
        pick("object_further", c.templates.object_further);
    }
    for (const auto& task : c.gpt_tasks) prompts::template_for(task);  // reject unknown tasks early
    if (c.points_per_image < 0 || c.proximity_point_pairs < 0 || c.proximity_object_pairs < 0)
        throw ValidationError("per-image counts must be non-negative");
    if (c.api_allowed_fraction < 0.0 || c.api_allowed_fraction > 1.0)
        throw ValidationError("api_allowed_fraction must lie in [0, 1]");
    return c;
}

nlohmann::ordered_json QARecord::to_json() const {
    nlohmann::ordered_json j;
    j["id"] = record_id;
    auto images = nlohmann::ordered_json::array();
    images.push_back(rgb_ref);
    if (!depth_ref.empty()) images.push_back(depth_ref);
    j["image"] = std::move(images);
    j["level"] = level;
    j["api_allowed"] = api_allowed;
    auto convs = nlohmann::ordered_json::array();
    for (const auto& turn : turns) {
        convs.push_back({{"from", "human"}, {"value", turn.question}});
        convs.push_back({{"from", "gpt"}, {"value", turn.answer}});
    }
    j["conversations"] = std::move(convs);
    if (!meta.is_null()) j["meta"] = meta;
    return j;
}

std::vector<QARecord> generate_point_depth_qa(const ImageContext& ctx, int n,
                                              rng::Sampler& sampler,
                                              const QuestionTemplates& templates) {
    const DepthMap& map = ctx.map;
    std::vector<std::size_t> valid;
    valid.reserve(map.pixel_count());
    for (std::size_t i = 0; i < map.pixel_count(); ++i)
        if (map.values[i] > 0) valid.push_back(i);
    if (valid.empty()) throw NoValidDepthError("no pixel with valid depth");

    std::vector<QARecord> out;
    for (int k = 0; k < n; ++k) {
        const std::size_t idx = valid[sampler.below(valid.size())];
        const int x = static_cast<int>(idx % map.width);
        const int y = static_cast<int>(idx / map.width);
        const std::uint32_t d = depth_at_point(map, x, y);

        QARecord rec;
        rec.record_id = ctx.record.image_id + "#low#point_depth#" + std::to_string(k);
        rec.rgb_ref = ctx.rgb_ref;
        rec.depth_ref = ctx.depth_ref;
        rec.level = "low";
        std::string q = replace_all(templates.point_depth, "{x}", std::to_string(x));
        q = replace_all(q, "{y}", std::to_string(y));
        rec.turns.push_back({q, mm(d)});
        rec.meta = {{"template", "point_depth"}, {"point", {x, y}}};
        out.push_back(std::move(rec));
    }
    return out;
}

namespace {

// Scalar depth used when an annotation stands in a comparison:
// descriptor center for masked objects, bbox-center depth otherwise.
std::optional<std::uint32_t> annotation_scalar_depth(const ImageContext& ctx, std::size_t i) {
    try {
        if (ctx.masks[i]) return describe_object(ctx.map, *ctx.masks[i]).center_mm;
        return describe_bbox_center(ctx.map, ctx.record.annotations[i].bbox);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

}  // namespace

std::vector<QARecord> generate_object_depth_qa(const ImageContext& ctx,
                                               const QuestionTemplates& templates,
                                               std::vector<SkippedAnnotation>& skipped) {
    std::vector<QARecord> out;
    for (std::size_t i = 0; i < ctx.record.annotations.size(); ++i) {
        const Annotation& ann = ctx.record.annotations[i];
        QARecord rec;
        rec.record_id = ctx.record.image_id + "#mid#object_depth#" + ann.id;
        rec.rgb_ref = ctx.rgb_ref;
        rec.depth_ref = ctx.depth_ref;
        rec.level = "mid";
        const std::string q = replace_all(templates.object_depth, "{name}", ann.name);
        try {
            if (ctx.masks[i]) {
                const DepthDescriptor d = describe_object(ctx.map, *ctx.masks[i]);
                rec.turns.push_back({q, "min " + mm(d.min_mm) + ", max " + mm(d.max_mm) +
                                            ", mean " + mm(d.mean_mm) + ", center " +
                                            mm(d.center_mm)});
                rec.meta = {{"template", "object_depth_mask"}, {"annotation", ann.id}};
            } else {
                const std::uint32_t d = describe_bbox_center(ctx.map, ann.bbox);
                rec.turns.push_back({q, mm(d)});
                rec.meta = {{"template", "object_depth_bbox_center"}, {"annotation", ann.id}};
            }
        } catch (const NoValidDepthError&) {
            skipped.push_back({ann.id, "no_valid_depth"});
            continue;
        } catch (const ValidationError& e) {
            skipped.push_back({ann.id, e.what()});
            continue;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<QARecord> generate_proximity_qa(const ImageContext& ctx, const ConvertConfig& config,
                                            rng::Sampler& sampler) {
    std::vector<QARecord> out;
    const DepthMap& map = ctx.map;

    // Object pairs first: deterministic enumeration order, sampled down
    // when there are more pairs than requested.
    std::vector<std::pair<std::size_t, std::uint32_t>> resolved;
    for (std::size_t i = 0; i < ctx.record.annotations.size(); ++i)
        if (auto d = annotation_scalar_depth(ctx, i)) resolved.push_back({i, *d});

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < resolved.size(); ++a)
        for (std::size_t b = a + 1; b < resolved.size(); ++b) pairs.push_back({a, b});
    int emitted = 0;
    for (std::size_t p = 0; p < pairs.size() && emitted < config.proximity_object_pairs; ++p) {
        // Draw the pair, then the question direction.
        const std::size_t pick = p + sampler.below(pairs.size() - p);
        std::swap(pairs[p], pairs[pick]);
        const auto [ra, rb] = pairs[p];
        const bool ask_closer = sampler.below(2) == 0;
        const Annotation& ann_a = ctx.record.annotations[resolved[ra].first];
        const Annotation& ann_b = ctx.record.annotations[resolved[rb].first];
        const Proximity rel =
            compare_proximity(resolved[ra].second, resolved[rb].second, config.tie_threshold_mm);
        if (rel == Proximity::tie) continue;  // ambiguous ground truth

        const bool a_is_answer = ask_closer == (rel == Proximity::closer);
        QARecord rec;
        rec.record_id =
            ctx.record.image_id + "#mid#object_pair#" + std::to_string(emitted);
        rec.rgb_ref = ctx.rgb_ref;
        rec.depth_ref = ctx.depth_ref;
        rec.level = "mid";
        std::string q = ask_closer ? config.templates.object_closer : config.templates.object_further;
        q = replace_all(q, "{a}", ann_a.name);
        q = replace_all(q, "{b}", ann_b.name);
        rec.turns.push_back({q, a_is_answer ? ann_a.name : ann_b.name});
        rec.meta = {{"template", ask_closer ? "object_pair_closer" : "object_pair_further"},
                    {"annotations", {ann_a.id, ann_b.id}}};
        out.push_back(std::move(rec));
        ++emitted;
    }

    // Point pairs.
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < map.pixel_count(); ++i)
        if (map.values[i] > 0) valid.push_back(i);
    if (valid.size() >= 2) {
        int made = 0;
        int attempts = 0;
        const int max_attempts = config.proximity_point_pairs * 16 + 16;
        while (made < config.proximity_point_pairs && attempts < max_attempts) {
            ++attempts;
            const std::size_t ia = valid[sampler.below(valid.size())];
            const std::size_t ib = valid[sampler.below(valid.size())];
            if (ia == ib) continue;
            const int xa = static_cast<int>(ia % map.width), ya = static_cast<int>(ia / map.width);
            const int xb = static_cast<int>(ib % map.width), yb = static_cast<int>(ib / map.width);
            const bool ask_closer = sampler.below(2) == 0;
            const Proximity rel =
                compare_proximity(map.values[ia], map.values[ib], config.tie_threshold_mm);
            if (rel == Proximity::tie) continue;

            const bool a_is_answer = ask_closer == (rel == Proximity::closer);
            QARecord rec;
            rec.record_id = ctx.record.image_id + "#mid#point_pair#" + std::to_string(made);
            rec.rgb_ref = ctx.rgb_ref;
            rec.depth_ref = ctx.depth_ref;
            rec.level = "mid";
            std::string q =
                ask_closer ? config.templates.point_closer : config.templates.point_further;
            q = replace_all(q, "{x1}", std::to_string(xa));
            q = replace_all(q, "{y1}", std::to_string(ya));
            q = replace_all(q, "{x2}", std::to_string(xb));
            q = replace_all(q, "{y2}", std::to_string(yb));
            rec.turns.push_back({q, a_is_answer ? point_str(xa, ya) : point_str(xb, yb)});
            rec.meta = {{"template", ask_closer ? "point_pair_closer" : "point_pair_further"},
                        {"points", {{xa, ya}, {xb, yb}}}};
            out.push_back(std::move(rec));
            ++made;
        }
    }
    return out;
}

std::vector<nlohmann::ordered_json> emit_gpt_prompt_jobs(const ImageContext& ctx,
                                                         const std::vector<std::string>& tasks) {
    std::vector<nlohmann::ordered_json> out;
    for (const auto& task : tasks) {
        const std::string& prompt = prompts::template_for(task);
        nlohmann::ordered_json j;
        j["id"] = ctx.record.image_id + "#high#gpt#" + task;
        auto images = nlohmann::ordered_json::array();
        images.push_back(ctx.rgb_ref);
        if (!ctx.depth_ref.empty()) images.push_back(ctx.depth_ref);
        j["image"] = std::move(images);
        j["level"] = "high";
        j["task"] = task;
        j["prompt"] = prompt;
        out.push_back(std::move(j));
    }
    return out;
}

namespace {

DepthMap load_depth_file(const fs::path& path) {
    if (path.extension() == ".sbd") return codec::read_sbd1_file(path);
    return codec::decode_map(raster::from_raster(raster::read_png(path)));
}

struct RecordOutput {
    bool skipped = false;
    std::string skip_reason;
    std::vector<std::string> qa_lines;
    std::vector<std::string> job_lines;
    std::map<std::string, std::size_t> level_counts;
    std::size_t annotations_skipped = 0;
    std::size_t saturated_pixels = 0;
    std::string fatal;  // non-domain failure, aborts the conversion
};

}  // namespace

ConvertSummary convert_dataset(const fs::path& manifest_path, const fs::path& out_dir,
                               const ConvertConfig& config, std::uint64_t seed) {
    const auto records = load_manifest(manifest_path);
    const fs::path base_dir = manifest_path.parent_path();

    fs::create_directories(out_dir / "depth");
    if (config.emit_u24) fs::create_directories(out_dir / "depth_u24");

    std::vector<RecordOutput> outputs(records.size());
    const int nthreads = config.workers > 0 ? config.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::int64_t ri = 0; ri < static_cast<std::int64_t>(records.size()); ++ri) {
        const ImageRecord& rec = records[ri];
        RecordOutput& out = outputs[ri];
        try {
            if (rec.depth_path.empty()) {
                out.skipped = true;
                out.skip_reason = "missing_depth";
                continue;
            }
            DepthMap map;
            try {
                map = load_depth_file(base_dir / rec.depth_path);
            } catch (const IoError&) {
                out.skipped = true;
                out.skip_reason = "depth_unreadable";
                continue;
            } catch (const ValidationError&) {
                out.skipped = true;
                out.skip_reason = "depth_invalid";
                continue;
            }

            const std::string depth_ref = "depth/" + rec.image_id + ".png";
            auto encoded = codec::encode_map(map);
            out.saturated_pixels = encoded.saturated_pixels;
            raster::write_png(out_dir / depth_ref, raster::to_raster(encoded.image));
            if (config.emit_u24)
                codec::write_sbd1_file(out_dir / ("depth_u24/" + rec.image_id + ".sbd"), map);

            ImageContext ctx{rec, map, rec.rgb_path, depth_ref, {}};
            std::vector<SkippedAnnotation> skipped_annotations;
            for (const Annotation& ann : rec.annotations) {
                if (ann.mask_path.empty()) {
                    ctx.masks.push_back(std::nullopt);
                    continue;
                }
                try {
                    ObjectMask mask = load_mask(base_dir / ann.mask_path);
                    ctx.masks.push_back(clamp_mask_to_bbox(mask, ann.bbox));
                } catch (const Error& e) {
                    // Unusable mask: drop to bbox-only so the center
                    // fallback still applies.
                    skipped_annotations.push_back({ann.id, std::string("mask_unusable: ") + e.what()});
                    ctx.masks.push_back(std::nullopt);
                }
            }

            std::vector<QARecord> qa_records;
            if (config.level_enabled("low")) {
                rng::Sampler sampler(rng::mix_seed(seed, rec.image_id + "#points"));
                try {
                    auto low = generate_point_depth_qa(ctx, config.points_per_image, sampler,
                                                       config.templates);
                    qa_records.insert(qa_records.end(), low.begin(), low.end());
                } catch (const NoValidDepthError&) {
                    out.skipped = true;
                    out.skip_reason = "no_valid_depth";
                    continue;
                }
            }
            if (config.level_enabled("mid")) {
                auto mid = generate_object_depth_qa(ctx, config.templates, skipped_annotations);
                qa_records.insert(qa_records.end(), mid.begin(), mid.end());
                rng::Sampler sampler(rng::mix_seed(seed, rec.image_id + "#pairs"));
                auto prox = generate_proximity_qa(ctx, config, sampler);
                qa_records.insert(qa_records.end(), prox.begin(), prox.end());
            }
            if (!rec.existing_conversations.is_null() && !rec.existing_conversations.empty()) {
                QARecord source;
                source.record_id = rec.image_id + "#source#0";
                source.rgb_ref = ctx.rgb_ref;
                source.depth_ref = ctx.depth_ref;
                source.level = "source";
                source.meta = {{"template", "passthrough"}};
                nlohmann::ordered_json j = source.to_json();
                j["conversations"] = rec.existing_conversations;
                // Writes below use the pre-rendered line.
                rng::Sampler api_sampler(rng::mix_seed(seed, rec.image_id + "#api_source"));
                j["api_allowed"] = api_sampler.unit() < config.api_allowed_fraction;
                out.qa_lines.push_back(j.dump());
                out.level_counts["source"] += 1;
            }

            rng::Sampler api_sampler(rng::mix_seed(seed, rec.image_id + "#api"));
            for (auto& qa_record : qa_records) {
                qa_record.api_allowed = api_sampler.unit() < config.api_allowed_fraction;
                qa_record.meta["seed"] = seed;
                out.qa_lines.push_back(qa_record.to_json().dump());
                out.level_counts[qa_record.level] += 1;
            }
            if (config.level_enabled("high")) {
                for (const auto& job : emit_gpt_prompt_jobs(ctx, config.gpt_tasks)) {
                    out.job_lines.push_back(job.dump());
                    out.level_counts["high"] += 1;
                }
            }
            out.annotations_skipped = skipped_annotations.size();
        } catch (const Error& e) {
            out.skipped = true;
            out.skip_reason = std::string("error: ") + e.what();
        } catch (const std::exception& e) {
            out.fatal = e.what();
        }
    }

    for (const auto& out : outputs)
        if (!out.fatal.empty())
            throw Error(ErrorKind::internal, "conversion failed: " + out.fatal);

    // Shard assembly preserves manifest order regardless of worker count.
    std::ofstream qa_file(out_dir / "qa.jsonl", std::ios::binary);
    if (!qa_file) throw IoError("cannot write qa.jsonl");
    std::ofstream job_file;
    if (config.level_enabled("high")) {
        job_file.open(out_dir / "gpt_jobs.jsonl", std::ios::binary);
        if (!job_file) throw IoError("cannot write gpt_jobs.jsonl");
    }

    ConvertSummary summary;
    summary.images_total = records.size();
    for (const auto& out : outputs) {
        if (out.skipped) {
            summary.images_skipped += 1;
            summary.skip_reasons[out.skip_reason] += 1;
            continue;
        }
        summary.images_processed += 1;
        summary.annotations_skipped += out.annotations_skipped;
        summary.saturated_pixels += out.saturated_pixels;
        for (const auto& line : out.qa_lines) qa_file << line << "\n";
        for (const auto& line : out.job_lines) job_file << line << "\n";
        for (const auto& [level, count] : out.level_counts) {
            summary.records_per_level[level] += count;
            summary.records_total += count;
        }
    }
    qa_file.close();
    if (job_file.is_open()) job_file.close();

    std::ofstream summary_file(out_dir / "summary.json", std::ios::binary);
    if (!summary_file) throw IoError("cannot write summary.json");
    summary_file << summary.to_json().dump(2) << "\n";
    return summary;
}

nlohmann::ordered_json ConvertSummary::to_json() const {
    nlohmann::ordered_json j;
    j["images"] = {{"total", images_total},
                   {"processed", images_processed},
                   {"skipped", images_skipped}};
    j["skip_reasons"] = nlohmann::ordered_json::object();
    for (const auto& [reason, count] : skip_reasons) j["skip_reasons"][reason] = count;
    j["records"] = nlohmann::ordered_json::object();
    for (const auto& [level, count] : records_per_level) j["records"][level] = count;
    j["records_total"] = records_total;
    j["annotations_skipped"] = annotations_skipped;
    j["saturated_pixels"] = saturated_pixels;
    return j;
}

}  // namespace spatialkit::qa

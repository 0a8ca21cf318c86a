#include "inscene/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "inscene/config.hpp"
#include "inscene/image_io.hpp"
#include "inscene/imaging.hpp"
#include "inscene/log.hpp"
#include "inscene/raster.hpp"

namespace inscene {

namespace fs = std::filesystem;

std::string to_string(SkipReason r) {
    switch (r) {
        case SkipReason::no_person: return "no-person";
        case SkipReason::degenerate_bbox: return "degenerate-bbox";
        case SkipReason::empty_silhouette: return "empty-silhouette";
        case SkipReason::fit_failure: return "fit-failure";
        case SkipReason::too_few_frames: return "too-few-frames";
    }
    return "unknown";
}

void TrainingRecord::validate() const {
    gt.validate();
    scene.validate();
    reference.validate();
    depth_gt.validate();
    depth_scene.validate();
    depth_pose.validate();
    mask.validate();

    const int h = gt.height, w = gt.width;
    auto same = [&](int hh, int ww) { return hh == h && ww == w; };
    if (!same(scene.height, scene.width) || !same(reference.height, reference.width) ||
        !same(depth_gt.height, depth_gt.width) || !same(depth_scene.height, depth_scene.width) ||
        !same(depth_pose.height, depth_pose.width) || !same(mask.height, mask.width))
        throw ValidationError("record " + id + ": spatial sizes differ");

    if (depth_gt.norm == DepthNorm::raw || depth_scene.norm == DepthNorm::raw ||
        depth_pose.norm == DepthNorm::raw)
        throw ValidationError("record " + id + ": depths must be normalized");
    if (mask.count_zeros() == 0)
        throw ValidationError("record " + id + ": insertion region is empty");
}

std::vector<int> sample_frames(int frame_count, int k) {
    if (frame_count < 2) throw ValidationError("sample_frames: need at least 2 frames");
    if (k < 1) throw ValidationError("sample_frames: need k >= 1");
    std::vector<int> idx;
    if (k >= frame_count) {
        idx.resize(static_cast<size_t>(frame_count));
        for (int i = 0; i < frame_count; ++i) idx[static_cast<size_t>(i)] = i;
        return idx;
    }
    if (k == 1) return {0};
    const int stride = (frame_count - 1) / (k - 1);
    idx.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) idx.push_back(i * stride);
    return idx;
}

ImageRGB crop_person(const ImageRGB& frame, const BBox& bbox, int out_size) {
    if (bbox.width() < kMinBBoxSide || bbox.height() < kMinBBoxSide)
        throw ValidationError("crop_person: degenerate bbox");
    if (out_size < 1) throw ValidationError("crop_person: bad output size");

    const int side = std::max(bbox.width(), bbox.height());
    const int cx = (bbox.x0 + bbox.x1) / 2;
    const int cy = (bbox.y0 + bbox.y1) / 2;
    const int x0 = cx - side / 2;
    const int y0 = cy - side / 2;

    // Gather the square with symmetric reflection outside the frame.
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    ImageRGB square(side, side, frame.range);
    for (int y = 0; y < side; ++y) {
        const int sy = reflect(y0 + y, frame.height);
        for (int x = 0; x < side; ++x) {
            const int sx = reflect(x0 + x, frame.width);
            for (int c = 0; c < 3; ++c) square.at(y, x, c) = frame.at(sy, sx, c);
        }
    }
    if (side == out_size) return square;
    return resize_bilinear_rgb(square, out_size, out_size);
}

ImageRGB extract_reference(const ImageRGB& frame, const BinaryMask& silhouette,
                           const std::array<double, 3>& fill) {
    if (frame.height != silhouette.height || frame.width != silhouette.width)
        throw ValidationError("extract_reference: shape mismatch");
    const BBox box = silhouette_bbox(silhouette);
    if (box.empty()) throw ValidationError("extract_reference: empty silhouette");

    ImageRGB out = ImageRGB::constant(frame.height, frame.width, fill, ValueRange::unit);
    const ImageRGB unit = to_unit(frame);
    // Re-center the person: silhouette bbox center moves to the canvas center.
    const int dx = frame.width / 2 - (box.x0 + box.x1) / 2;
    const int dy = frame.height / 2 - (box.y0 + box.y1) / 2;
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            if (!silhouette.at(y, x)) continue;
            const int oy = y + dy, ox = x + dx;
            if (oy < 0 || oy >= frame.height || ox < 0 || ox >= frame.width) continue;
            for (int c = 0; c < 3; ++c) out.at(oy, ox, c) = unit.at(y, x, c);
        }
    }
    return out;
}

ImageRGB augment_reference(const ImageRGB& reference, const std::array<double, 3>& fill,
                           const AugmentConfig& cfg, Rng& rng) {
    ImageRGB out = to_unit(reference);

    const bool flip = cfg.flip_prob > 0.0 && rng.uniform() < cfg.flip_prob;
    if (flip) {
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width / 2; ++x)
                for (int c = 0; c < 3; ++c)
                    std::swap(out.at(y, x, c), out.at(y, out.width - 1 - x, c));
    }

    if (cfg.jitter > 0.0) {
        const double contrast = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter);
        const double brightness = rng.uniform(-cfg.jitter, cfg.jitter);
        const double tol = 1.0 / 512.0; // quantization-safe fill comparison
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                bool is_fill = true;
                for (int c = 0; c < 3; ++c)
                    if (std::abs(out.at(y, x, c) - fill[c]) > tol) is_fill = false;
                if (is_fill) continue; // jitter touches person pixels only
                for (int c = 0; c < 3; ++c)
                    out.at(y, x, c) =
                        std::clamp(out.at(y, x, c) * contrast + brightness, 0.0, 1.0);
            }
        }
    }
    return out;
}

BuildOutcome build_record(const FramePair& pair, const BackendRegistry& reg,
                          const RecordBuildParams& params) {
    reg.validate();
    auto skip = [](SkipReason r) { return BuildOutcome{std::nullopt, r}; };

    // GT side: detect -> crop -> segment -> inpaint -> fit -> render -> depths.
    const auto gt_box = reg.detector->detect_person(pair.gt_frame);
    if (!gt_box) return skip(SkipReason::no_person);
    if (gt_box->width() < kMinBBoxSide || gt_box->height() < kMinBBoxSide)
        return skip(SkipReason::degenerate_bbox);
    const ImageRGB gt = crop_person(pair.gt_frame, *gt_box, params.resolution);

    const BinaryMask gt_sil = reg.segmenter->segment_person(gt);
    if (gt_sil.count_ones() == 0) return skip(SkipReason::empty_silhouette);

    const ImageRGB scene = reg.inpainter->inpaint(gt, gt_sil, params.inpaint_prompt);

    const auto fit = reg.fitter->fit_body(gt);
    if (!fit) return skip(SkipReason::fit_failure);

    PoseInputs pose;
    try {
        pose = build_pose_inputs(fit->mesh, fit->camera, params.dilation_radius);
    } catch (const ValidationError&) {
        return skip(SkipReason::empty_silhouette);
    }

    // Reference side: detect -> crop -> segment -> extract on fill canvas.
    const auto ref_box = reg.detector->detect_person(pair.reference_frame);
    if (!ref_box) return skip(SkipReason::no_person);
    if (ref_box->width() < kMinBBoxSide || ref_box->height() < kMinBBoxSide)
        return skip(SkipReason::degenerate_bbox);
    const ImageRGB ref_crop = crop_person(pair.reference_frame, *ref_box, params.resolution);
    const BinaryMask ref_sil = reg.segmenter->segment_person(ref_crop);
    if (ref_sil.count_ones() == 0) return skip(SkipReason::empty_silhouette);
    const ImageRGB reference = extract_reference(ref_crop, ref_sil, params.fill_color);

    TrainingRecord rec;
    rec.id = pair.video_id + "_r" + std::to_string(pair.ref_index) + "_g" +
             std::to_string(pair.gt_index);
    rec.gt = gt;
    rec.scene = scene;
    rec.reference = reference;
    rec.fill_color = params.fill_color;
    rec.depth_gt = normalize_depth(reg.depth->estimate_depth(gt), DepthNorm::percentile);
    rec.depth_scene = normalize_depth(reg.depth->estimate_depth(scene), DepthNorm::percentile);
    rec.depth_pose = pose.pose_depth;
    rec.mask = pose.insertion_mask;
    rec.video_id = pair.video_id;
    rec.ref_frame = pair.ref_index;
    rec.gt_frame = pair.gt_index;
    rec.dilation_radius = params.dilation_radius;
    rec.config_hash = params.config_hash;
    rec.validate();
    return BuildOutcome{std::move(rec), std::nullopt};
}

namespace {

struct TempDirGuard {
    fs::path path;
    bool armed = true;
    ~TempDirGuard() {
        if (armed) {
            std::error_code ec;
            fs::remove_all(path, ec);
        }
    }
};

} // namespace

void write_record(const TrainingRecord& rec, const fs::path& dataset_dir) {
    rec.validate();
    fs::create_directories(dataset_dir);
    const fs::path final_dir = dataset_dir / rec.id;
    TempDirGuard tmp{dataset_dir / (".tmp_" + rec.id)};
    fs::remove_all(tmp.path);
    fs::create_directory(tmp.path);

    write_image(rec.gt, tmp.path / "gt.ppm");
    write_image(rec.scene, tmp.path / "scene.ppm");
    write_image(rec.reference, tmp.path / "ref.ppm");
    write_depth(rec.depth_gt, tmp.path / "depth_gt.pgm");
    write_depth(rec.depth_scene, tmp.path / "depth_scene.pgm");
    write_depth(rec.depth_pose, tmp.path / "depth_pose.pgm");
    write_mask(rec.mask, tmp.path / "mask.pgm");

    std::ostringstream meta;
    meta.precision(17);
    meta << "id = " << rec.id << "\n"
         << "video_id = " << rec.video_id << "\n"
         << "ref_frame = " << rec.ref_frame << "\n"
         << "gt_frame = " << rec.gt_frame << "\n"
         << "fill_color = " << rec.fill_color[0] << " " << rec.fill_color[1] << " "
         << rec.fill_color[2] << "\n"
         << "dilation_radius = " << rec.dilation_radius << "\n"
         << "config_hash = " << hash_hex(rec.config_hash) << "\n"
         << "norm_depth_gt = " << to_string(rec.depth_gt.norm) << "\n"
         << "norm_depth_scene = " << to_string(rec.depth_scene.norm) << "\n"
         << "norm_depth_pose = " << to_string(rec.depth_pose.norm) << "\n";
    atomic_write_text(tmp.path / "meta.txt", meta.str());

    fs::remove_all(final_dir);
    fs::rename(tmp.path, final_dir);
    tmp.armed = false;
}

TrainingRecord read_record(const fs::path& record_dir) {
    auto need = [&](const char* name) {
        const fs::path p = record_dir / name;
        if (!fs::exists(p))
            throw ValidationError("corrupt record " + record_dir.string() + ": missing " + name);
        return p;
    };

    const KeyValueConfig meta = KeyValueConfig::load(need("meta.txt"));
    TrainingRecord rec;
    rec.id = meta.get_string("id", record_dir.filename().string());
    rec.video_id = meta.get_string("video_id", "");
    rec.ref_frame = meta.get_int("ref_frame", -1);
    rec.gt_frame = meta.get_int("gt_frame", -1);
    rec.fill_color = meta.get_rgb("fill_color", kDefaultFillColor);
    rec.dilation_radius = meta.get_int("dilation_radius", 0);
    rec.config_hash = std::stoull(meta.get_string("config_hash", "0"), nullptr, 16);

    rec.gt = read_image(need("gt.ppm"));
    rec.scene = read_image(need("scene.ppm"));
    rec.reference = read_image(need("ref.ppm"));
    rec.depth_gt = read_depth(need("depth_gt.pgm"),
                              depth_norm_from_string(meta.get_string("norm_depth_gt", "percentile")));
    rec.depth_scene =
        read_depth(need("depth_scene.pgm"),
                   depth_norm_from_string(meta.get_string("norm_depth_scene", "percentile")));
    rec.depth_pose = read_depth(need("depth_pose.pgm"),
                                depth_norm_from_string(meta.get_string("norm_depth_pose", "minmax")));
    rec.mask = read_mask(need("mask.pgm"));
    rec.validate();
    return rec;
}

std::map<std::string, int> DatasetManifest::counts() const {
    std::map<std::string, int> out;
    for (const auto& e : entries) ++out[e.split];
    return out;
}

void write_manifest(const DatasetManifest& m, const fs::path& dataset_dir) {
    std::ostringstream out;
    out << "# dataset manifest: one `record_id split` line per record\n";
    out << "config_hash " << hash_hex(m.config_hash) << "\n";
    for (const auto& e : m.entries) out << e.id << " " << e.split << "\n";
    atomic_write_text(dataset_dir / "manifest.txt", out.str());
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
    const fs::path path = dataset_dir / "manifest.txt";
    std::ifstream in(path);
    if (!in) throw ValidationError("missing manifest: " + path.string());
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string a, b;
        if (!(ls >> a >> b)) throw ValidationError("bad manifest line: " + line);
        if (a == "config_hash") {
            m.config_hash = std::stoull(b, nullptr, 16);
        } else {
            if (b != "train" && b != "val" && b != "test")
                throw ValidationError("bad split in manifest: " + b);
            m.entries.push_back({a, b});
        }
    }
    return m;
}

std::vector<TrainingRecord> load_records(const fs::path& dataset_dir, const std::string& split) {
    std::vector<ManifestEntry> entries;
    if (fs::exists(dataset_dir / "manifest.txt")) {
        entries = read_manifest(dataset_dir).entries;
    } else {
        for (const auto& e : fs::directory_iterator(dataset_dir))
            if (e.is_directory()) entries.push_back({e.path().filename().string(), "train"});
    }
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });

    std::vector<TrainingRecord> records;
    for (const auto& e : entries) {
        if (!split.empty() && e.split != split) continue;
        records.push_back(read_record(dataset_dir / e.id));
    }
    return records;
}

PrepareStats prepare_dataset(const fs::path& videos_dir, const fs::path& out_dir,
                             const BackendRegistry& reg, const PrepareParams& params,
                             uint64_t seed) {
    reg.validate();
    if (!fs::exists(videos_dir)) throw ValidationError("videos dir missing: " + videos_dir.string());
    fs::create_directories(out_dir);

    std::vector<fs::path> videos;
    for (const auto& e : fs::directory_iterator(videos_dir))
        if (e.is_directory()) videos.push_back(e.path());
    std::sort(videos.begin(), videos.end());

    PrepareStats stats;
    DatasetManifest manifest;
    manifest.config_hash = params.record.config_hash;
    Rng pair_rng(Rng::derive(seed, "data"));
    Rng split_rng(Rng::derive(seed, "split"));

    for (const auto& video : videos) {
        std::vector<fs::path> frames;
        for (const auto& e : fs::directory_iterator(video))
            if (e.is_regular_file()) frames.push_back(e.path());
        std::sort(frames.begin(), frames.end());

        const std::string video_id = video.filename().string();
        if (frames.size() < 2) {
            ++stats.skipped[SkipReason::too_few_frames];
            log_kv("skip", {{"video", video_id}, {"reason", to_string(SkipReason::too_few_frames)}});
            continue;
        }

        const std::vector<int> indices =
            sample_frames(static_cast<int>(frames.size()), params.frames_per_video);

        for (int p = 0; p < params.pairs_per_video; ++p) {
            // Two distinct sampled frames, reference != GT.
            const int a = pair_rng.uniform_int(static_cast<int>(indices.size()));
            int b = pair_rng.uniform_int(static_cast<int>(indices.size()) - 1);
            if (b >= a) ++b;

            FramePair pair;
            pair.video_id = video_id;
            pair.ref_index = indices[static_cast<size_t>(a)];
            pair.gt_index = indices[static_cast<size_t>(b)];
            pair.reference_frame = read_image(frames[static_cast<size_t>(pair.ref_index)]);
            pair.gt_frame = read_image(frames[static_cast<size_t>(pair.gt_index)]);

            BuildOutcome outcome = build_record(pair, reg, params.record);
            if (outcome.skip) {
                ++stats.skipped[*outcome.skip];
                log_kv("skip", {{"video", video_id},
                                {"ref", std::to_string(pair.ref_index)},
                                {"gt", std::to_string(pair.gt_index)},
                                {"reason", to_string(*outcome.skip)}});
                continue;
            }

            write_record(*outcome.record, out_dir);
            const double u = split_rng.uniform();
            std::string split = "train";
            if (u < params.test_fraction)
                split = "test";
            else if (u < params.test_fraction + params.val_fraction)
                split = "val";
            manifest.entries.push_back({outcome.record->id, split});
            ++stats.written;
        }
    }

    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
    // Pair sampling can repeat (video, ref, gt); keep one manifest row per record.
    manifest.entries.erase(std::unique(manifest.entries.begin(), manifest.entries.end(),
                                       [](const ManifestEntry& a, const ManifestEntry& b) {
                                           return a.id == b.id;
                                       }),
                           manifest.entries.end());
    write_manifest(manifest, out_dir);
    return stats;
}

} // namespace inscene

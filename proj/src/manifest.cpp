#include "anoheal/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "anoheal/tensor_io.hpp"

namespace anoheal {

namespace {

using nlohmann::json;

const std::vector<std::string> kSplits = {"train", "val", "test"};

void check_split(const std::string& split) {
    if (std::find(kSplits.begin(), kSplits.end(), split) == kSplits.end()) {
        throw ConfigError("manifest split must be train, val, or test; got '" + split + "'");
    }
}

} // namespace

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    check_split(manifest.split);
    json j;
    j["name"] = manifest.name;
    j["split"] = manifest.split;
    j["provenance"] = manifest.provenance;
    j["seed"] = manifest.seed;
    j["items"] = json::array();
    for (const auto& item : manifest.items) {
        json entry;
        entry["image"] = item.image;
        if (!item.gt_mask.empty()) entry["gt_mask"] = item.gt_mask;
        j["items"].push_back(entry);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("manifest is not valid JSON: " + path.string());

    DatasetManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        m.split = j.at("split").get<std::string>();
        m.provenance = j.value("provenance", "");
        m.seed = j.value("seed", uint64_t{0});
        for (const auto& entry : j.at("items")) {
            ManifestItem item;
            item.image = entry.at("image").get<std::string>();
            item.gt_mask = entry.value("gt_mask", "");
            m.items.push_back(item);
        }
    } catch (const json::exception& e) {
        throw DataError("manifest missing fields in " + path.string() + ": " + e.what());
    }
    check_split(m.split);
    return m;
}

void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
    std::vector<int> image_shape, mask_shape;
    for (const auto& item : manifest.items) {
        const auto image_path = base_dir / item.image;
        if (!std::filesystem::exists(image_path)) {
            throw DataError("manifest references missing file: " + image_path.string());
        }
        const auto shape = peek_tensor_shape(image_path);
        if (image_shape.empty()) {
            image_shape = shape;
        } else if (shape != image_shape) {
            throw DataError("manifest images disagree in shape at " + image_path.string());
        }
        if (!item.gt_mask.empty()) {
            const auto mask_path = base_dir / item.gt_mask;
            if (!std::filesystem::exists(mask_path)) {
                throw DataError("manifest references missing mask: " + mask_path.string());
            }
            const auto ms = peek_tensor_shape(mask_path);
            if (mask_shape.empty()) {
                mask_shape = ms;
            } else if (ms != mask_shape) {
                throw DataError("manifest masks disagree in shape at " + mask_path.string());
            }
        }
    }
    if (!image_shape.empty() && !mask_shape.empty() && image_shape != mask_shape) {
        throw DataError("manifest image and mask shapes disagree");
    }
}

std::vector<Image> load_manifest_images(const DatasetManifest& manifest,
                                        const std::filesystem::path& base_dir) {
    std::vector<Image> out;
    out.reserve(manifest.items.size());
    for (const auto& item : manifest.items) out.push_back(load_image(base_dir / item.image));
    return out;
}

std::vector<Image> load_manifest_masks(const DatasetManifest& manifest,
                                       const std::filesystem::path& base_dir) {
    std::vector<Image> out;
    out.reserve(manifest.items.size());
    for (const auto& item : manifest.items) {
        if (item.gt_mask.empty()) {
            out.emplace_back();
        } else {
            out.push_back(load_image(base_dir / item.gt_mask));
        }
    }
    return out;
}

namespace {

Image fit_to_size(const Image& src, int target) {
    if (src.h == target && src.w == target) return src;
    Image out(target, target, 0.0f);
    // Center crop and center pad compose per axis.
    const int copy_h = std::min(src.h, target);
    const int copy_w = std::min(src.w, target);
    const int src_y = (src.h - copy_h) / 2;
    const int src_x = (src.w - copy_w) / 2;
    const int dst_y = (target - copy_h) / 2;
    const int dst_x = (target - copy_w) / 2;
    for (int y = 0; y < copy_h; ++y) {
        for (int x = 0; x < copy_w; ++x) {
            out.at(dst_y + y, dst_x + x) = src.at(src_y + y, src_x + x);
        }
    }
    return out;
}

} // namespace

DatasetManifest ingest_slices(const std::filesystem::path& src_dir,
                              const std::filesystem::path& out_dir,
                              const IngestOptions& options) {
    if (!std::filesystem::is_directory(src_dir)) {
        throw DataError("ingest_slices: not a directory: " + src_dir.string());
    }
    if (options.target_size < 32) throw ConfigError("ingest_slices: target_size must be >= 32");
    if (!(options.percentile > 0.0 && options.percentile <= 100.0)) {
        throw ConfigError("ingest_slices: percentile must lie in (0, 100]");
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(src_dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.name = options.name;
    manifest.split = options.split;
    manifest.provenance = "ingested from " + src_dir.string();

    int kept = 0;
    for (const auto& file : files) {
        Image slice;
        try {
            slice = load_image(file);
        } catch (const Error& e) {
            std::cerr << "ingest: skipping " << file << ": " << e.what() << "\n";
            continue;
        }

        size_t fg = 0;
        for (float v : slice.v) fg += v > 0.0f;
        if (static_cast<double>(fg) / slice.v.size() < options.min_foreground_frac) continue;

        // Clip at the requested percentile, then min-max to [0, 1].
        std::vector<float> sorted = slice.v;
        std::sort(sorted.begin(), sorted.end());
        const size_t idx = static_cast<size_t>(
            std::llround(options.percentile / 100.0 * (sorted.size() - 1)));
        const float clip_hi = sorted[idx];
        float lo = sorted.front();
        float hi = std::min(clip_hi, sorted.back());
        if (!(hi > lo)) {
            std::cerr << "ingest: skipping flat slice " << file << "\n";
            continue;
        }
        for (float& v : slice.v) {
            v = (std::min(v, clip_hi) - lo) / (hi - lo);
            v = std::clamp(v, 0.0f, 1.0f);
        }

        Image fitted = fit_to_size(slice, options.target_size);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "slice_%05d.ahtc", kept);
        save_image(out_dir / buf, fitted);
        manifest.items.push_back({buf, ""});
        ++kept;
    }

    if (manifest.items.empty()) {
        throw DataError("ingest_slices: no usable slices in " + src_dir.string());
    }
    save_manifest(out_dir / (options.split + ".json"), manifest);
    return manifest;
}

} // namespace anoheal

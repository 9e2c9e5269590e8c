#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anoheal/image.hpp"

namespace anoheal {

struct ManifestItem {
    std::string image;    // path relative to the manifest's directory
    std::string gt_mask;  // optional; empty when absent
};

struct DatasetManifest {
    std::string name;
    std::string split;  // train | val | test
    std::string provenance;
    uint64_t seed = 0;
    std::vector<ManifestItem> items;
};

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Referential integrity: every referenced file exists and all images within
// the split share one shape (likewise the masks).
void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

std::vector<Image> load_manifest_images(const DatasetManifest& manifest,
                                        const std::filesystem::path& base_dir);
// Missing gt entries come back as empty (0x0) images.
std::vector<Image> load_manifest_masks(const DatasetManifest& manifest,
                                       const std::filesystem::path& base_dir);

struct IngestOptions {
    int target_size = 64;
    double percentile = 99.8;          // upper clip before min-max scaling
    double min_foreground_frac = 0.01; // slices below this are dropped
    std::string name = "ingested";
    std::string split = "train";
};

// Reads pre-extracted 2D slices (tensor containers) from src_dir, drops
// near-empty ones, rescales to [0,1] via percentile clip + min-max, center
// crops or zero-pads to target_size, writes the results plus a manifest
// under out_dir. Unreadable files are skipped with a warning on stderr.
DatasetManifest ingest_slices(const std::filesystem::path& src_dir,
                              const std::filesystem::path& out_dir, const IngestOptions& options);

} // namespace anoheal

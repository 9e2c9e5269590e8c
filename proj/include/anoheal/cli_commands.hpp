#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anoheal/config.hpp"

namespace anoheal::cli {

// Refuses to write into an existing non-empty directory unless forced.
void prepare_out_dir(const std::filesystem::path& out, bool force);

void cmd_phantom(const RunConfig& config, const std::filesystem::path& out, bool force);

void cmd_corrupt_preview(const RunConfig& config, const std::filesystem::path& manifest_path,
                         int index, const std::vector<int>& t_list,
                         const std::filesystem::path& out, bool force);

void cmd_train(const RunConfig& config, const std::filesystem::path& train_manifest,
               const std::filesystem::path& val_manifest, const std::filesystem::path& out,
               bool force, bool quiet = false);

void cmd_score(const RunConfig& config, const std::filesystem::path& checkpoint,
               const std::filesystem::path& manifest_path, const std::string& mode,
               const std::filesystem::path& out, int workers, bool force);

void cmd_eval(const RunConfig& config, const std::vector<std::filesystem::path>& checkpoints,
              const std::vector<std::filesystem::path>& score_dirs,
              const std::filesystem::path& manifest_path, const std::filesystem::path& out,
              int workers, bool force);

} // namespace anoheal::cli

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anoheal/cli_commands.hpp"
#include "anoheal/errors.hpp"

namespace {

// Exit codes: 0 success, 2 config/usage, 3 data, 4 runtime.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCompute = 4;

struct GlobalArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    int64_t seed = -1;
    int workers = -1;
    bool force = false;
};

anoheal::RunConfig resolve_config(const GlobalArgs& args) {
    anoheal::RunConfig config;
    if (!args.config_file.empty()) config.load_file(args.config_file);
    for (const auto& assignment : args.overrides) config.apply_override(assignment);
    if (args.seed >= 0) config.set("run.seed", std::to_string(args.seed));
    if (args.workers >= 1) config.set("run.workers", std::to_string(args.workers));
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic-corruption restoration pipeline for pixel-level anomaly detection"};
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--config", global.config_file, "Configuration file (key = value lines)");
    app.add_option("--set", global.overrides, "Override a config key (key=value), repeatable");
    app.add_option("--seed", global.seed, "Override run.seed");
    app.add_option("--workers", global.workers, "Override run.workers");
    app.add_flag("--force", global.force, "Overwrite non-empty output directories");

    // phantom
    auto* phantom = app.add_subcommand("phantom", "Generate the procedural phantom dataset");
    std::string phantom_out;
    phantom->add_option("--out", phantom_out, "Output directory")->required();

    // corrupt-preview
    auto* preview = app.add_subcommand("corrupt-preview",
                                       "Render the forward corruption at chosen timesteps");
    std::string preview_manifest, preview_out;
    int preview_index = 0;
    std::vector<int> preview_ts = {0, 25, 50, 75, 100};
    preview->add_option("--manifest", preview_manifest, "Dataset manifest")->required();
    preview->add_option("--index", preview_index, "Image index within the manifest");
    preview->add_option("--t", preview_ts, "Timesteps to render");
    preview->add_option("--out", preview_out, "Output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Train the restoration model");
    std::string train_manifest, train_val_manifest, train_out;
    train->add_option("--manifest", train_manifest, "Training manifest")->required();
    train->add_option("--val-manifest", train_val_manifest, "Validation manifest");
    train->add_option("--out", train_out, "Output directory")->required();

    // score
    auto* score = app.add_subcommand("score", "Score images with a trained checkpoint");
    std::string score_checkpoint, score_manifest, score_mode = "multi", score_out;
    score->add_option("--checkpoint", score_checkpoint, "Checkpoint file")->required();
    score->add_option("--manifest", score_manifest, "Manifest of images to score")->required();
    score->add_option("--mode", score_mode, "multi (iterative) or single (one-step)");
    score->add_option("--out", score_out, "Output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate scores against ground truth");
    std::vector<std::string> eval_checkpoints, eval_score_dirs;
    std::string eval_manifest, eval_out;
    eval->add_option("--checkpoint", eval_checkpoints,
                     "Checkpoint(s) to sweep and evaluate (repeatable)");
    eval->add_option("--scores", eval_score_dirs,
                     "Precomputed score directories (repeatable)");
    eval->add_option("--manifest", eval_manifest, "Test manifest with ground truth")->required();
    eval->add_option("--out", eval_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const anoheal::RunConfig config = resolve_config(global);
        const int workers = config.get_int("run.workers");

        if (phantom->parsed()) {
            anoheal::cli::cmd_phantom(config, phantom_out, global.force);
        } else if (preview->parsed()) {
            anoheal::cli::cmd_corrupt_preview(config, preview_manifest, preview_index, preview_ts,
                                              preview_out, global.force);
        } else if (train->parsed()) {
            anoheal::cli::cmd_train(config, train_manifest, train_val_manifest, train_out,
                                    global.force);
        } else if (score->parsed()) {
            anoheal::cli::cmd_score(config, score_checkpoint, score_manifest, score_mode,
                                    score_out, workers, global.force);
        } else if (eval->parsed()) {
            std::vector<std::filesystem::path> cps(eval_checkpoints.begin(),
                                                   eval_checkpoints.end());
            std::vector<std::filesystem::path> dirs(eval_score_dirs.begin(),
                                                    eval_score_dirs.end());
            anoheal::cli::cmd_eval(config, cps, dirs, eval_manifest, eval_out, workers,
                                   global.force);
        }
        return 0;
    } catch (const anoheal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const anoheal::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const anoheal::ComputeError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitCompute;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

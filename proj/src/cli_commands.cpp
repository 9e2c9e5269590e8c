#include "anoheal/cli_commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "anoheal/inference.hpp"
#include "anoheal/manifest.hpp"
#include "anoheal/metrics.hpp"
#include "anoheal/report.hpp"
#include "anoheal/tensor_io.hpp"

namespace anoheal::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string item_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%04d", index);
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write: " + path.string());
    out << j.dump(2) << "\n";
}

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("not valid JSON: " + path.string());
    return j;
}

// Pooled pixel vectors across the whole test set.
std::vector<uint8_t> pool_labels(const std::vector<Image>& images,
                                 const std::vector<Image>& masks) {
    std::vector<uint8_t> labels;
    for (size_t i = 0; i < images.size(); ++i) {
        if (masks[i].v.empty()) {
            labels.insert(labels.end(), images[i].size(), 0);
        } else {
            require_same_shape(images[i], masks[i], "eval: image/gt");
            for (float v : masks[i].v) labels.push_back(v > 0.5f ? 1 : 0);
        }
    }
    return labels;
}

std::vector<float> pool_scores(const std::vector<Image>& score_maps) {
    std::vector<float> scores;
    for (const auto& m : score_maps) scores.insert(scores.end(), m.v.begin(), m.v.end());
    return scores;
}

} // namespace

void prepare_out_dir(const fs::path& out, bool force) {
    if (fs::exists(out) && !fs::is_directory(out)) {
        throw DataError("output path exists and is not a directory: " + out.string());
    }
    if (fs::is_directory(out) && !fs::is_empty(out)) {
        if (!force) {
            throw DataError("output directory not empty (use --force): " + out.string());
        }
        fs::remove_all(out);
    }
    fs::create_directories(out);
}

void cmd_phantom(const RunConfig& config, const fs::path& out, bool force) {
    const PhantomSpec spec = config.phantom_spec();
    prepare_out_dir(out, force);

    Rng rng(spec.seed);
    const std::vector<Image> train = generate_healthy(spec, rng, spec.n_train);
    const std::vector<Image> val = generate_healthy(spec, rng, spec.n_val);
    const std::vector<Image> test_sources = generate_healthy(spec, rng, spec.n_test);
    const std::vector<LabeledTestImage> test = generate_anomalous(spec, test_sources, rng);

    const auto write_split = [&](const std::string& split, const std::vector<Image>& images,
                                 const std::vector<LabeledTestImage>* labeled) {
        fs::create_directories(out / split);
        DatasetManifest manifest;
        manifest.name = "phantom";
        manifest.split = split;
        manifest.seed = spec.seed;
        manifest.provenance = "procedural nested-ellipse phantom generator";
        const size_t count = labeled ? labeled->size() : images.size();
        for (size_t i = 0; i < count; ++i) {
            const std::string stem = item_name(static_cast<int>(i));
            const std::string rel = split + "/" + stem + ".ahtc";
            ManifestItem item;
            item.image = rel;
            if (labeled) {
                save_image(out / rel, (*labeled)[i].image);
                item.gt_mask = split + "/" + stem + "_gt.ahtc";
                save_image(out / item.gt_mask, (*labeled)[i].gt_mask);
            } else {
                save_image(out / rel, images[i]);
            }
            manifest.items.push_back(item);
        }
        save_manifest(out / (split + ".json"), manifest);
    };

    write_split("train", train, nullptr);
    write_split("val", val, nullptr);
    write_split("test", {}, &test);
    config.write_echo(out / "config.echo.cfg");
}

void cmd_corrupt_preview(const RunConfig& config, const fs::path& manifest_path, int index,
                         const std::vector<int>& t_list, const fs::path& out, bool force) {
    if (t_list.empty()) throw ConfigError("corrupt-preview: empty t list");
    const Schedule schedule = config.make_schedule();
    for (int t : t_list) {
        if (t < 0 || t > schedule.T) {
            throw IndexError("corrupt-preview: t = " + std::to_string(t) + " outside [0, " +
                             std::to_string(schedule.T) + "]");
        }
    }

    const DatasetManifest manifest = load_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    validate_manifest(manifest, base);
    const std::vector<Image> images = load_manifest_images(manifest, base);
    if (index < 0 || index >= static_cast<int>(images.size())) {
        throw IndexError("corrupt-preview: image index out of range");
    }

    prepare_out_dir(out, force);
    const Image& x0 = images[index];

    Rng rng(config.get_u64("run.seed"));
    Image fg(x0.h, x0.w);
    int fg_count = 0;
    const double fg_threshold = config.get_double("train.fg_threshold");
    for (size_t i = 0; i < x0.v.size(); ++i) {
        fg.v[i] = x0.v[i] > fg_threshold ? 1.0f : 0.0f;
        fg_count += fg.v[i] > 0.0f;
    }
    const AnomalyMask mask = generate_mask(x0.h, x0.w, rng, config.mask_config(),
                                           fg_count > 0 ? &fg : nullptr);
    const Image x_fp = sample_foreign_patch(images, index, rng);

    Image grid(x0.h, x0.w * static_cast<int>(t_list.size()));
    for (size_t k = 0; k < t_list.size(); ++k) {
        const Image tile = corrupt(x0, x_fp, mask.m, alpha_at(schedule, t_list[k]));
        for (int y = 0; y < x0.h; ++y) {
            for (int x = 0; x < x0.w; ++x) {
                grid.at(y, static_cast<int>(k) * x0.w + x) = tile.at(y, x);
            }
        }
    }

    save_image(out / "preview.ahtc", grid);
    write_pgm(out / "preview.pgm", grid);
    save_image(out / "mask.ahtc", mask.m);
    save_image(out / "foreign.ahtc", x_fp);
    json meta;
    meta["t_list"] = t_list;
    meta["index"] = index;
    meta["tile_width"] = x0.w;
    write_json(out / "preview.json", meta);
    config.write_echo(out / "config.echo.cfg");
}

void cmd_train(const RunConfig& config, const fs::path& train_manifest,
               const fs::path& val_manifest, const fs::path& out, bool force, bool quiet) {
    const DatasetManifest tm = load_manifest(train_manifest);
    validate_manifest(tm, train_manifest.parent_path());
    const std::vector<Image> train_images =
        load_manifest_images(tm, train_manifest.parent_path());

    std::vector<Image> val_images;
    if (!val_manifest.empty()) {
        const DatasetManifest vm = load_manifest(val_manifest);
        validate_manifest(vm, val_manifest.parent_path());
        val_images = load_manifest_images(vm, val_manifest.parent_path());
    }

    prepare_out_dir(out, force);

    TrainConfig tcfg = config.train_config();
    tcfg.diagnostics_path = (out / "diagnostics.json").string();
    Restorer model(config.restorer_config(), tcfg.seed);

    const int log_interval = config.get_int("train.log_interval");
    ProgressFn progress;
    if (!quiet && log_interval > 0) {
        progress = [log_interval](int step, double loss, double lr) {
            if ((step + 1) % log_interval == 0) {
                std::cerr << "step " << step + 1 << "  loss " << loss << "  lr " << lr << "\n";
            }
        };
    }

    const TrainResult result = train(model, train_images, val_images, tcfg, progress);
    save_checkpoint(out / "checkpoint.ahck", model, &tcfg);

    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < result.loss_curve.size(); ++i) {
        rows.push_back({std::to_string(i), std::to_string(result.loss_curve[i])});
    }
    write_csv(out / "loss_curve.csv", {"step", "loss"}, rows);
    rows.clear();
    for (const auto& [step, loss] : result.val_curve) {
        rows.push_back({std::to_string(step), std::to_string(loss)});
    }
    write_csv(out / "val_curve.csv", {"step", "val_loss"}, rows);

    json log;
    log["steps"] = tcfg.steps;
    log["seed"] = tcfg.seed;
    log["param_count"] = model.param_count();
    log["val_loss_initial"] = result.val_loss_initial;
    log["val_loss_final"] = result.val_loss_final;
    log["wall_seconds"] = result.wall_seconds;
    write_json(out / "train_log.json", log);
    config.write_echo(out / "config.echo.cfg");
}

void cmd_score(const RunConfig& config, const fs::path& checkpoint, const fs::path& manifest_path,
               const std::string& mode, const fs::path& out, int workers, bool force) {
    ScoreSpec spec;
    if (mode == "multi") {
        spec.mode = ScoreSpec::Mode::multi_step;
        spec.step_size = config.get_int("inference.step_size");
    } else if (mode == "single") {
        spec.mode = ScoreSpec::Mode::single_step;
        spec.t = config.get_int("inference.single_t");
    } else {
        throw ConfigError("score: mode must be 'multi' or 'single', got '" + mode + "'");
    }

    Restorer model = load_checkpoint(checkpoint);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    validate_manifest(manifest, base);
    const std::vector<Image> images = load_manifest_images(manifest, base);

    prepare_out_dir(out, force);
    const std::vector<ScoreMap> results = score_batch(model, images, spec, workers);

    json meta;
    meta["mode"] = mode == "multi" ? "multi_step" : "single_step";
    if (spec.mode == ScoreSpec::Mode::multi_step) {
        meta["step_size"] = spec.step_size;
    } else {
        meta["t"] = spec.t;
    }
    meta["seed"] = model.init_seed();
    meta["T"] = model.schedule().T;
    meta["manifest"] = manifest_path.string();
    meta["items"] = json::array();
    for (size_t i = 0; i < results.size(); ++i) {
        const std::string stem = item_name(static_cast<int>(i));
        const std::string as_rel = stem + "_as.ahtc";
        const std::string restored_rel = stem + "_restored.ahtc";
        save_image(out / as_rel, results[i].anomaly_score);
        save_image(out / restored_rel, results[i].restoration);
        json entry;
        entry["source"] = manifest.items[i].image;
        entry["anomaly_score"] = as_rel;
        entry["restoration"] = restored_rel;
        meta["items"].push_back(entry);
    }
    write_json(out / "scores.json", meta);
    config.write_echo(out / "config.echo.cfg");
}

namespace {

struct EvalRow {
    std::string mode;  // "single_step" | "multi_step"
    int param = 0;     // t or step_size
    uint64_t seed = 0;
    EvalResult result;
};

json grouped_table(std::vector<EvalRow> rows, const std::string& mode, bool with_dice) {
    std::map<int, std::vector<EvalRow>> by_param;
    for (auto& r : rows) {
        if (r.mode == mode) by_param[r.param].push_back(r);
    }
    json table = json::array();
    for (const auto& [param, group] : by_param) {
        std::vector<EvalResult> results;
        for (const auto& g : group) results.push_back(g.result);
        const AggregateResult agg = aggregate_seeds(results);
        json row;
        row[mode == "single_step" ? "t" : "step_size"] = param;
        row["ap_mean"] = agg.ap.mean;
        row["ap_std"] = agg.ap.std;
        json per_seed = json::array();
        for (const auto& g : group) per_seed.push_back({{"seed", g.seed}, {"ap", g.result.ap}});
        row["per_seed"] = per_seed;
        if (with_dice) {
            row["dice_mean"] = agg.best_dice.mean;
            row["dice_std"] = agg.best_dice.std;
        }
        table.push_back(row);
    }
    return table;
}

} // namespace

void cmd_eval(const RunConfig& config, const std::vector<fs::path>& checkpoints,
              const std::vector<fs::path>& score_dirs, const fs::path& manifest_path,
              const fs::path& out, int workers, bool force) {
    if (checkpoints.empty() && score_dirs.empty()) {
        throw ConfigError("eval: need at least one --checkpoint or --scores directory");
    }

    const DatasetManifest manifest = load_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    validate_manifest(manifest, base);
    const std::vector<Image> images = load_manifest_images(manifest, base);
    const std::vector<Image> masks = load_manifest_masks(manifest, base);
    const std::vector<uint8_t> labels = pool_labels(images, masks);
    const size_t n_positive = static_cast<size_t>(
        std::count_if(labels.begin(), labels.end(), [](uint8_t l) { return l != 0; }));

    prepare_out_dir(out, force);
    const int n_thresholds = config.get_int("eval.n_thresholds");
    const int default_step_size = config.get_int("inference.step_size");

    std::vector<EvalRow> rows;
    // Cumulative-score profile rows (t -> AP of the score accumulated down to
    // that stage) at the default step size, one entry per seed.
    std::map<int, std::vector<std::pair<uint64_t, double>>> cumulative_profile;

    for (const auto& cp_path : checkpoints) {
        Restorer model = load_checkpoint(cp_path);
        const uint64_t seed = model.init_seed();

        for (int t : config.get_int_list("eval.t_grid")) {
            ScoreSpec spec;
            spec.mode = ScoreSpec::Mode::single_step;
            spec.t = t;
            const auto score_maps = score_batch(model, images, spec, workers);
            std::vector<Image> as;
            for (const auto& s : score_maps) as.push_back(s.anomaly_score);
            rows.push_back({"single_step", t, seed, evaluate(pool_scores(as), labels,
                                                             n_thresholds)});
        }

        for (int s : config.get_int_list("eval.step_size_grid")) {
            ScoreSpec spec;
            spec.mode = ScoreSpec::Mode::multi_step;
            spec.step_size = s;
            const auto score_maps = score_batch(model, images, spec, workers);
            std::vector<Image> as;
            for (const auto& m : score_maps) as.push_back(m.anomaly_score);
            rows.push_back({"multi_step", s, seed, evaluate(pool_scores(as), labels,
                                                            n_thresholds)});
        }

        // Stage-wise cumulative profile at the default step size.
        std::map<int, std::vector<Image>> stage_scores;
        Restorer local = model;
        const RestoreFn fn = [&local](const Image& img, int t) {
            return local.restore_single(img, t);
        };
        for (const auto& img : images) {
            const HealTrace trace = heal_traced(fn, local.schedule(), img, default_step_size);
            for (const auto& [t, as] : trace.cumulative) stage_scores[t].push_back(as);
        }
        for (const auto& [t, maps] : stage_scores) {
            cumulative_profile[t].emplace_back(seed, average_precision(pool_scores(maps), labels));
        }
    }

    for (const auto& dir : score_dirs) {
        const json meta = load_json(dir / "scores.json");
        if (!meta.contains("items") || meta["items"].size() != manifest.items.size()) {
            throw DataError("eval: score set " + dir.string() +
                            " does not match the manifest item count");
        }
        std::vector<Image> as;
        for (const auto& entry : meta["items"]) {
            as.push_back(load_image(dir / entry.at("anomaly_score").get<std::string>()));
        }
        EvalRow row;
        row.mode = meta.at("mode").get<std::string>();
        row.param = row.mode == "single_step" ? meta.at("t").get<int>()
                                              : meta.at("step_size").get<int>();
        row.seed = meta.value("seed", uint64_t{0});
        row.result = evaluate(pool_scores(as), labels, n_thresholds);
        rows.push_back(row);
    }

    json results;
    results["dataset"] = manifest.name;
    results["n_images"] = images.size();
    results["n_pixels"] = labels.size();
    results["n_positive"] = n_positive;
    results["prevalence"] = static_cast<double>(n_positive) / static_cast<double>(labels.size());
    results["single_step"] = grouped_table(rows, "single_step", false);
    results["multi_step"] = grouped_table(rows, "multi_step", true);

    json cumulative = json::array();
    for (const auto& [t, entries] : cumulative_profile) {
        std::vector<double> aps;
        for (const auto& [seed, ap] : entries) aps.push_back(ap);
        const MeanStd ms = mean_std(aps);
        cumulative.push_back({{"t", t}, {"ap_mean", ms.mean}, {"ap_std", ms.std}});
    }
    results["cumulative"] = cumulative;

    // Headline summary at the default step size.
    json summary;
    {
        std::vector<EvalResult> defaults;
        for (const auto& r : rows) {
            if (r.mode == "multi_step" && r.param == default_step_size) {
                defaults.push_back(r.result);
            }
        }
        if (!defaults.empty()) {
            const AggregateResult agg = aggregate_seeds(defaults);
            summary["step_size"] = default_step_size;
            summary["n_seeds"] = defaults.size();
            summary["ap_mean"] = agg.ap.mean;
            summary["ap_std"] = agg.ap.std;
            summary["dice_mean"] = agg.best_dice.mean;
            summary["dice_std"] = agg.best_dice.std;
        }
    }
    results["summary"] = summary;
    write_json(out / "results.json", results);
    write_json(out / "summary.json", summary);

    // Tables and plots.
    std::vector<std::vector<std::string>> csv_rows;
    ChartSpec profile_chart;
    profile_chart.title = "AP vs conditioning step";
    profile_chart.x_label = "t";
    profile_chart.y_label = "AP";
    ChartSeries single_series{"single-step", {}};
    for (const auto& row : results["single_step"]) {
        csv_rows.push_back({std::to_string(row["t"].get<int>()),
                            std::to_string(row["ap_mean"].get<double>()),
                            std::to_string(row["ap_std"].get<double>())});
        single_series.points.emplace_back(row["t"].get<double>(), row["ap_mean"].get<double>());
    }
    write_csv(out / "ap_vs_t.csv", {"t", "ap_mean", "ap_std"}, csv_rows);
    if (!single_series.points.empty()) profile_chart.series.push_back(single_series);

    ChartSeries cum_series{"cumulative (step_size=" + std::to_string(default_step_size) + ")", {}};
    for (const auto& row : cumulative) {
        cum_series.points.emplace_back(row["t"].get<double>(), row["ap_mean"].get<double>());
    }
    if (!cum_series.points.empty()) profile_chart.series.push_back(cum_series);
    if (!profile_chart.series.empty()) write_svg_chart(out / "ap_vs_t.svg", profile_chart);

    csv_rows.clear();
    ChartSpec step_chart;
    step_chart.title = "AP vs step size";
    step_chart.x_label = "step_size";
    step_chart.y_label = "AP";
    ChartSeries step_series{"multi-step", {}};
    for (const auto& row : results["multi_step"]) {
        csv_rows.push_back({std::to_string(row["step_size"].get<int>()),
                            std::to_string(row["ap_mean"].get<double>()),
                            std::to_string(row["ap_std"].get<double>()),
                            std::to_string(row["dice_mean"].get<double>()),
                            std::to_string(row["dice_std"].get<double>())});
        step_series.points.emplace_back(row["step_size"].get<double>(),
                                        row["ap_mean"].get<double>());
    }
    write_csv(out / "ap_vs_step_size.csv", {"step_size", "ap_mean", "ap_std", "dice_mean",
                                            "dice_std"}, csv_rows);
    if (!step_series.points.empty()) {
        step_chart.series.push_back(step_series);
        write_svg_chart(out / "ap_vs_step_size.svg", step_chart);
    }

    config.write_echo(out / "config.echo.cfg");
}

} // namespace anoheal::cli

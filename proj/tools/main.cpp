#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sceneparse/bundle.hpp"
#include "sceneparse/context_layer.hpp"
#include "sceneparse/dataset.hpp"
#include "sceneparse/errors.hpp"
#include "sceneparse/features.hpp"
#include "sceneparse/ga_select.hpp"
#include "sceneparse/image.hpp"
#include "sceneparse/metrics.hpp"
#include "sceneparse/pipeline.hpp"
#include "sceneparse/rng.hpp"
#include "sceneparse/superpixels.hpp"

namespace fs = std::filesystem;
using namespace sceneparse;

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw DataError("failed while writing " + path.string());
}

// Applies key=value lines to options the command line left untouched;
// explicit flags always win over file values.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    const auto strip = [](const std::string& s) {
        const std::size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return std::string();
        const std::size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = strip(s.substr(0, eq));
        const std::string value = strip(s.substr(eq + 1));
        CLI::Option* opt = key == "config" ? nullptr : cmd.get_option_no_throw("--" + key);
        if (!opt) throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown option '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

void add_run_config_options(CLI::App& cmd, RunConfig& cfg, bool& no_ga, bool& no_context, std::string& config_path) {
    cmd.add_option("--seed", cfg.seed, "Master seed; every random stage derives from it")->capture_default_str();
    cmd.add_option("--image-side", cfg.image_side, "Square working resolution")->capture_default_str();
    cmd.add_option("--split-ratio", cfg.split_ratio, "Fraction of scenes used for training")->capture_default_str();
    cmd.add_option("--segmenter", cfg.segmenter, "Superpixel method")
        ->check(CLI::IsMember({"grid", "slic"}))
        ->capture_default_str();
    cmd.add_option("--superpixels", cfg.superpixels, "Requested superpixel count per image")->capture_default_str();
    cmd.add_option("--blocks-per-side", cfg.blocks_per_side, "Block grid side for the block prior")->capture_default_str();
    cmd.add_option("--compactness", cfg.compactness, "SLIC compactness weight")->capture_default_str();
    cmd.add_option("--slic-iters", cfg.slic_iters, "SLIC k-means iterations")->capture_default_str();
    cmd.add_flag("--no-ga", no_ga, "Skip feature selection and keep every feature");
    cmd.add_option("--ga-population", cfg.ga_population, "Selection population size")->capture_default_str();
    cmd.add_option("--ga-generations", cfg.ga_generations, "Selection generations")->capture_default_str();
    cmd.add_option("--ga-crossover", cfg.ga_crossover, "Crossover probability")->capture_default_str();
    cmd.add_option("--ga-mutation", cfg.ga_mutation, "Per-bit mutation probability")->capture_default_str();
    cmd.add_option("--ga-alpha", cfg.ga_alpha, "Fitness weight on validation error")->capture_default_str();
    cmd.add_option("--ga-beta", cfg.ga_beta, "Fitness weight on selected fraction")->capture_default_str();
    cmd.add_option("--ga-elitism", cfg.ga_elitism, "Elites copied unchanged per generation")->capture_default_str();
    cmd.add_option("--ga-val-fraction", cfg.ga_val_fraction, "Share of the selection pool held out")->capture_default_str();
    cmd.add_option("--ga-sample-cap", cfg.ga_sample_cap, "Max labeled superpixels in the selection pool")->capture_default_str();
    cmd.add_option("--ova-l2", cfg.ova_l2, "L2 strength for the one-vs-all classifiers")->capture_default_str();
    cmd.add_flag("--no-context", no_context, "Replace both context priors with uniform distributions");
    cmd.add_option("--mlp-hidden", cfg.mlp_hidden, "Integration hidden width")->capture_default_str();
    cmd.add_option("--mlp-epochs", cfg.mlp_epochs, "Integration training epochs")->capture_default_str();
    cmd.add_option("--mlp-lr0", cfg.mlp_lr0, "Integration initial learning rate")->capture_default_str();
    cmd.add_option("--mlp-batch", cfg.mlp_batch, "Integration mini-batch size")->capture_default_str();
    cmd.add_option("--config", config_path, "Key=value file; keys match the long option names");
}

Dataset load_for(const std::string& root, const std::string& class_config) {
    return class_config.empty() ? load_dataset(root) : load_dataset(root, class_config);
}

std::vector<std::string> dataset_ids(const Dataset& data) {
    std::vector<std::string> ids;
    ids.reserve(data.images.size());
    for (const auto& img : data.images) ids.push_back(img.id);
    return ids;
}

Dataset subset_by_ids(const Dataset& data, const std::vector<std::string>& ids) {
    Dataset out;
    out.classes = data.classes;
    for (const auto& id : ids) {
        const LabeledImage* img = data.find(id);
        if (!img) throw DataError("split references missing image id " + id);
        out.images.push_back(*img);
    }
    return out;
}

std::vector<std::uint8_t> class_palette(int n_classes) {
    std::vector<std::uint8_t> palette;
    for (int c = 0; c < n_classes; ++c) {
        const auto color = class_color(c);
        palette.insert(palette.end(), color.begin(), color.end());
    }
    return palette;
}

fs::path unique_stem(const fs::path& out_dir, const std::string& stem, std::set<std::string>& used) {
    std::string name = stem;
    for (int n = 2; used.count(name); ++n) name = stem + "_" + std::to_string(n);
    used.insert(name);
    return out_dir / name;
}

void write_prediction_files(const fs::path& base, const ModelBundle& bundle, const PredictionDetail& d,
                            bool dump_superpixels) {
    std::vector<std::uint8_t> indices(d.pixel_labels.size());
    for (std::size_t p = 0; p < indices.size(); ++p)
        indices[p] = static_cast<std::uint8_t>(d.pixel_labels[p] < 0 ? 0 : d.pixel_labels[p]);
    const auto palette = class_palette(bundle.n_classes());
    write_png_indexed(base.string() + "_labels.png", d.resized.height, d.resized.width, indices, palette);

    const Raster8 overlay = render_overlay(d.resized, d.pixel_labels);
    write_png_rgb(base.string() + "_overlay.png", overlay.height, overlay.width, overlay.data);

    if (dump_superpixels) {
        if (d.map.n_actual > 65535) throw DataError("too many superpixels for a 16-bit assignment dump");
        std::vector<std::uint16_t> assignment(d.map.assignment.size());
        for (std::size_t p = 0; p < assignment.size(); ++p)
            assignment[p] = static_cast<std::uint16_t>(d.map.assignment[p]);
        write_pgm16(base.string() + "_superpixels.pgm", d.map.height, d.map.width, assignment);
        const Raster8 bounds = overlay_boundaries(d.resized, d.map);
        write_png_rgb(base.string() + "_boundaries.png", bounds.height, bounds.width, bounds.data);
    }
}

std::string render_ablation_text(const AblationAccuracies& ab) {
    std::ostringstream out;
    out << "[ablation]\n";
    out << "visual only: " << fmt_double(ab.visual_only) << "\n";
    out << "visual + adjacency: " << fmt_double(ab.with_adjacent) << "\n";
    out << "visual + adjacency + block: " << fmt_double(ab.with_block) << "\n";
    out << "full integration: " << fmt_double(ab.full) << "\n";
    return out.str();
}

int run_cli(int argc, char** argv) {
    CLI::App app{"sceneparse: superpixel scene labeling with selected features and context priors"};
    app.require_subcommand(1);

    // --- synth -------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene dataset");
    std::string synth_out;
    SceneSpec spec;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_out, "Dataset directory to create")->required();
    synth->add_option("--scenes", spec.scenes, "Number of scenes")->capture_default_str();
    synth->add_option("--side", spec.side, "Scene side length in pixels")->capture_default_str();
    synth->add_option("--classes", spec.n_classes, "Class count (4 to 6)")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth->callback([&] {
        const Dataset data = generate_synthetic(spec, synth_seed);
        save_dataset(data, synth_out);
        std::cout << "wrote " << data.images.size() << " scenes to " << synth_out << "\n";
    });

    // --- train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a model on the training side of the dataset split");
    std::string train_data, train_cc, train_out, train_config;
    RunConfig train_cfg;
    bool train_no_ga = false, train_no_context = false;
    train->add_option("--data", train_data, "Dataset root directory")->required();
    train->add_option("--class-config", train_cc, "Class config file overriding <data>/classes.cfg");
    train->add_option("--out", train_out, "Output directory for the bundle and reports")->required();
    add_run_config_options(*train, train_cfg, train_no_ga, train_no_context, train_config);
    train->callback([&] {
        if (!train_config.empty()) apply_config_file(*train, train_config);
        train_cfg.use_ga = !train_no_ga;
        train_cfg.use_context = !train_no_context;
        train_cfg.validate();
        const Dataset all = load_for(train_data, train_cc);
        const DatasetSplit split =
            split_dataset(dataset_ids(all), train_cfg.split_ratio, derive_seed(train_cfg.seed, "split"));
        const Dataset train_set = subset_by_ids(all, split.train);
        const TrainResult result = run_train(train_set, train_cfg);

        fs::create_directories(train_out);
        const fs::path out_dir(train_out);
        save_bundle(out_dir / "model.bundle", result.bundle);
        write_text_file(out_dir / "report.txt", render_train_report(result));
        if (!result.ga_skipped) {
            std::ostringstream csv;
            write_ga_history_csv(csv, result.ga);
            write_text_file(out_dir / "ga_history.csv", csv.str());
        }
        {
            std::ostringstream csv;
            write_epoch_loss_csv(csv, result.epoch_loss);
            write_text_file(out_dir / "epoch_loss.csv", csv.str());
        }
        {
            std::ostringstream lines;
            for (const auto& id : split.train) lines << "train " << id << "\n";
            for (const auto& id : split.test) lines << "test " << id << "\n";
            write_text_file(out_dir / "split.txt", lines.str());
        }
        std::cout << "model: " << (out_dir / "model.bundle").string() << "\n";
        std::cout << "trained on " << train_set.images.size() << " of " << all.images.size() << " images\n";
        std::cout << "train pixel accuracy: " << fmt_double(result.train_eval.global_acc) << "\n";
    });

    // --- select-features -----------------------------------------------------
    auto* sel = app.add_subcommand("select-features", "Run only the feature selection stage");
    std::string sel_data, sel_cc, sel_out, sel_config;
    RunConfig sel_cfg;
    bool sel_no_ga = false, sel_no_context = false, sel_features_csv = false;
    sel->add_option("--data", sel_data, "Dataset root directory")->required();
    sel->add_option("--class-config", sel_cc, "Class config file overriding <data>/classes.cfg");
    sel->add_option("--out", sel_out, "Output directory")->required();
    sel->add_flag("--features-csv", sel_features_csv, "Also dump the standardized labeled feature matrix");
    add_run_config_options(*sel, sel_cfg, sel_no_ga, sel_no_context, sel_config);
    sel->callback([&] {
        if (!sel_config.empty()) apply_config_file(*sel, sel_config);
        sel_cfg.use_ga = true;
        sel_cfg.use_context = !sel_no_context;
        sel_cfg.validate();
        const Dataset all = load_for(sel_data, sel_cc);
        const DatasetSplit split =
            split_dataset(dataset_ids(all), sel_cfg.split_ratio, derive_seed(sel_cfg.seed, "split"));
        const Dataset train_set = subset_by_ids(all, split.train);

        const auto started = std::chrono::steady_clock::now();
        const SelectionResult result = run_select_features(train_set, sel_cfg);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        fs::create_directories(sel_out);
        const fs::path out_dir(sel_out);
        write_text_file(out_dir / "mask.txt", mask_to_string(result.ga.best.mask) + "\n");
        {
            std::ostringstream csv;
            write_ga_history_csv(csv, result.ga);
            write_text_file(out_dir / "ga_history.csv", csv.str());
        }
        std::ostringstream summary;
        summary << "selected: " << result.ga.best.mask.s_count() << " of " << result.ga.best.mask.bits.size() << "\n";
        summary << "best fitness: " << fmt_double(result.ga.best.fitness) << "\n";
        summary << "best error: " << fmt_double(result.ga.best.error) << "\n";
        summary.precision(3);
        summary << std::fixed << "time: " << seconds << " s\n";
        write_text_file(out_dir / "selection.txt", summary.str());
        if (sel_features_csv) {
            std::ostringstream csv;
            write_features_csv(csv, default_catalog(), result.labeled_features);
            write_text_file(out_dir / "features.csv", csv.str());
        }
        std::cout << summary.str();
        std::cout << "mask: " << mask_to_string(result.ga.best.mask) << "\n";
    });

    // --- predict -------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Label images with a trained model");
    std::string pred_model, pred_out;
    std::vector<std::string> pred_images;
    bool pred_dump_sp = false;
    predict->add_option("--model", pred_model, "Model bundle file")->required();
    predict->add_option("--out", pred_out, "Output directory")->required();
    predict->add_flag("--dump-superpixels", pred_dump_sp, "Also dump superpixel assignments and boundaries");
    predict->add_option("images", pred_images, "Image files (PNG or PNM)")->required()->expected(-1);
    predict->callback([&] {
        const ModelBundle bundle = load_bundle(pred_model);
        fs::create_directories(pred_out);
        const fs::path out_dir(pred_out);
        std::set<std::string> used;
        for (const auto& path : pred_images) {
            const Raster8 raster = read_image_any(path);
            LabeledImage img;
            img.height = raster.height;
            img.width = raster.width;
            img.pixels = raster.data;
            img.labels.assign(img.pixel_count(), -1);
            img.id = fs::path(path).stem().string();
            const PredictionDetail d = predict_detail(bundle, img);
            const fs::path base = unique_stem(out_dir, img.id, used);
            write_prediction_files(base, bundle, d, pred_dump_sp);
            std::cout << path << " -> " << base.string() << "_labels.png\n";
        }
    });

    // --- eval ----------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a dataset split");
    std::string eval_model, eval_data, eval_cc, eval_split = "test", eval_out;
    bool eval_ablation = false, eval_dump_pred = false, eval_dump_m1 = false;
    eval->add_option("--model", eval_model, "Model bundle file")->required();
    eval->add_option("--data", eval_data, "Dataset root directory")->required();
    eval->add_option("--class-config", eval_cc, "Class config file overriding <data>/classes.cfg");
    eval->add_option("--split", eval_split, "Which side of the training split to evaluate")
        ->check(CLI::IsMember({"train", "test", "all"}))
        ->capture_default_str();
    eval->add_option("--out", eval_out, "Output directory")->required();
    eval->add_flag("--ablation", eval_ablation, "Also report per-layer accuracies");
    eval->add_flag("--dump-predictions", eval_dump_pred, "Write per-image label and overlay images");
    eval->add_flag("--dump-m1", eval_dump_m1, "Write the adjacency prior as CSV");
    eval->callback([&] {
        const ModelBundle bundle = load_bundle(eval_model);
        const Dataset all = load_for(eval_data, eval_cc);
        if (!(all.classes == bundle.classes))
            throw DataError("dataset class table does not match the model bundle");
        std::vector<std::string> ids = dataset_ids(all);
        if (eval_split != "all") {
            const DatasetSplit split =
                split_dataset(ids, bundle.config.split_ratio, derive_seed(bundle.config.seed, "split"));
            ids = eval_split == "train" ? split.train : split.test;
        }
        const Dataset subset = subset_by_ids(all, ids);
        const EvalResult result = evaluate_images(bundle, subset.images, eval_ablation);

        fs::create_directories(eval_out);
        const fs::path out_dir(eval_out);
        std::ostringstream report;
        report << "split: " << eval_split << " (" << subset.images.size() << " images)\n";
        write_report_text(report, result.report, all.classes.names);
        if (result.ablation) report << render_ablation_text(*result.ablation);
        write_text_file(out_dir / "report.txt", report.str());
        {
            std::ostringstream csv;
            write_confusion_csv(csv, result.report, all.classes.names);
            write_text_file(out_dir / "confusion.csv", csv.str());
        }
        if (eval_dump_m1) {
            std::ostringstream csv;
            write_m1_csv(csv, bundle.priors.m1);
            write_text_file(out_dir / "m1.csv", csv.str());
        }
        if (eval_dump_pred) {
            const fs::path pred_dir = out_dir / "predictions";
            fs::create_directories(pred_dir);
            std::set<std::string> used;
            for (const auto& img : subset.images) {
                const PredictionDetail d = predict_detail(bundle, img);
                write_prediction_files(unique_stem(pred_dir, img.id, used), bundle, d, false);
            }
        }
        std::cout << report.str();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

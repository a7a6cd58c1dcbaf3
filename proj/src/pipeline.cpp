#include "sceneparse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sceneparse/errors.hpp"
#include "sceneparse/parallel.hpp"
#include "sceneparse/rng.hpp"

namespace sceneparse {

namespace {

class StageTimer {
public:
    StageTimer() : last_(std::chrono::steady_clock::now()) {}

    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return seconds;
    }

private:
    std::chrono::steady_clock::time_point last_;
};

SuperpixelMap segment_for(const RunConfig& cfg, const LabeledImage& img) {
    SuperpixelMap map = cfg.segmenter == "slic"
                            ? segment_slic(img, cfg.superpixels, cfg.compactness, cfg.slic_iters)
                            : segment_grid(img, cfg.superpixels);
    map.neighbors = build_adjacency(map);
    map.block_of = assign_blocks(map, cfg.blocks_per_side);
    return map;
}

int argmax_lowest(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

Matrix concat_probability_rows(const std::vector<VisualProbability>& vis,
                               const std::vector<ContextProbability>& ctx, int n_classes) {
    Matrix out(vis.size(), static_cast<std::size_t>(3 * n_classes));
    for (std::size_t s = 0; s < vis.size(); ++s) {
        double* row = out.row(s).data();
        for (int c = 0; c < n_classes; ++c) row[c] = vis[s].p[static_cast<std::size_t>(c)];
        for (int c = 0; c < n_classes; ++c) row[n_classes + c] = ctx[s].p_adj[static_cast<std::size_t>(c)];
        for (int c = 0; c < n_classes; ++c) row[2 * n_classes + c] = ctx[s].p_blk[static_cast<std::size_t>(c)];
    }
    return out;
}

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(x.row(rows[i]).data(), x.cols, out.row(i).data());
    return out;
}

struct Prepared {
    std::vector<LabeledImage> images;              // resized
    std::vector<SuperpixelMap> maps;               // with adjacency and blocks
    std::vector<Matrix> features;                  // standardized, per image
    std::vector<std::vector<std::int32_t>> sp_labels;
    Standardizer standardizer;
    Matrix all_features;                           // standardized, all superpixels stacked
    std::vector<std::int32_t> all_labels;
    std::vector<std::size_t> labeled_rows;         // rows of all_features with a known label
    std::vector<std::int32_t> labeled_y;
};

Prepared prepare_training_data(const Dataset& data, const RunConfig& cfg,
                               std::vector<std::pair<std::string, double>>* timings) {
    if (data.images.empty()) throw DataError("training dataset is empty");
    const std::size_t n_images = data.images.size();
    Prepared prep;
    StageTimer timer;

    prep.images.resize(n_images);
    parallel_for(n_images, [&](std::size_t i) { prep.images[i] = resize_image(data.images[i], cfg.image_side); });
    if (timings) timings->emplace_back("resize", timer.lap());

    prep.maps.resize(n_images);
    parallel_for(n_images, [&](std::size_t i) { prep.maps[i] = segment_for(cfg, prep.images[i]); });
    if (timings) timings->emplace_back("segment", timer.lap());

    prep.features.resize(n_images);
    prep.sp_labels.resize(n_images);
    parallel_for(n_images, [&](std::size_t i) {
        prep.features[i] = extract_features(prep.images[i], prep.maps[i]);
        prep.sp_labels[i] = superpixel_majority_labels(prep.maps[i], prep.images[i].labels);
    });
    if (timings) timings->emplace_back("extract", timer.lap());

    std::size_t total_sp = 0;
    for (const auto& f : prep.features) total_sp += f.rows;
    prep.all_features = Matrix(total_sp, prep.features.front().cols);
    prep.all_labels.resize(total_sp);
    {
        std::size_t at = 0;
        for (std::size_t i = 0; i < n_images; ++i) {
            std::copy(prep.features[i].data.begin(), prep.features[i].data.end(),
                      prep.all_features.data.begin() + static_cast<std::ptrdiff_t>(at * prep.all_features.cols));
            std::copy(prep.sp_labels[i].begin(), prep.sp_labels[i].end(),
                      prep.all_labels.begin() + static_cast<std::ptrdiff_t>(at));
            at += prep.features[i].rows;
        }
    }
    prep.standardizer = fit_standardizer(prep.all_features);
    apply_standardizer(prep.standardizer, prep.all_features);
    parallel_for(n_images, [&](std::size_t i) { apply_standardizer(prep.standardizer, prep.features[i]); });
    if (timings) timings->emplace_back("standardize", timer.lap());

    for (std::size_t r = 0; r < total_sp; ++r) {
        if (prep.all_labels[r] < 0) continue;
        prep.labeled_rows.push_back(r);
        prep.labeled_y.push_back(prep.all_labels[r]);
    }
    if (prep.labeled_rows.empty()) throw DataError("training set contains no labeled superpixels");
    return prep;
}

GAConfig ga_config_from(const RunConfig& cfg) {
    GAConfig ga;
    ga.population = cfg.ga_population;
    ga.generations = cfg.ga_generations;
    ga.p_crossover = cfg.ga_crossover;
    ga.p_mutation = cfg.ga_mutation;
    ga.alpha = cfg.ga_alpha;
    ga.beta = cfg.ga_beta;
    ga.elitism = cfg.ga_elitism;
    ga.seed = derive_seed(cfg.seed, "ga");
    return ga;
}

// The 1-NN fitness is quadratic in pool size, so the GA sees a seeded
// sample of the labeled superpixels, split into fit and validation parts.
GAResult ga_select_rows(const Prepared& prep, const RunConfig& cfg) {
    std::vector<std::size_t> pool(prep.labeled_rows.size());
    std::iota(pool.begin(), pool.end(), 0);
    Rng pool_rng(derive_seed(cfg.seed, "ga-pool"));
    pool_rng.shuffle(pool);
    if (pool.size() > static_cast<std::size_t>(cfg.ga_sample_cap))
        pool.resize(static_cast<std::size_t>(cfg.ga_sample_cap));
    if (pool.size() < 2) throw DataError("not enough labeled superpixels for feature selection");

    auto n_val = static_cast<std::size_t>(std::llround(cfg.ga_val_fraction * static_cast<double>(pool.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, pool.size() - 1);
    std::vector<std::size_t> fit_rows, val_rows;
    std::vector<std::int32_t> fit_y, val_y;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const std::size_t global = prep.labeled_rows[pool[i]];
        if (i < pool.size() - n_val) {
            fit_rows.push_back(global);
            fit_y.push_back(prep.all_labels[global]);
        } else {
            val_rows.push_back(global);
            val_y.push_back(prep.all_labels[global]);
        }
    }
    const Matrix fit_x = gather_rows(prep.all_features, fit_rows);
    const Matrix val_x = gather_rows(prep.all_features, val_rows);
    return run_ga(fit_x, fit_y, val_x, val_y, ga_config_from(cfg));
}

} // namespace

TrainResult run_train(const Dataset& train_data, const RunConfig& cfg) {
    cfg.validate();
    const int n_classes = train_data.classes.n_classes();
    if (n_classes < 1) throw DataError("class table is empty");

    TrainResult res;
    Prepared prep = prepare_training_data(train_data, cfg, &res.timings_seconds);
    const std::size_t n_images = prep.images.size();
    StageTimer timer;

    FeatureMask mask;
    mask.bits.assign(prep.all_features.cols, 1);
    if (cfg.use_ga) {
        res.ga = ga_select_rows(prep, cfg);
        mask = res.ga.best.mask;
    } else {
        res.ga_skipped = true;
    }
    res.timings_seconds.emplace_back("select-features", timer.lap());

    const Matrix ova_x = apply_mask_columns(gather_rows(prep.all_features, prep.labeled_rows), mask);
    OvaConfig ova_cfg;
    ova_cfg.l2 = cfg.ova_l2;
    const auto classifiers = train_ova(ova_x, prep.labeled_y, n_classes, ova_cfg, &res.ova_report);
    res.timings_seconds.emplace_back("classifiers", timer.lap());

    ContextPriors priors;
    if (cfg.use_context) {
        std::vector<const SuperpixelMap*> map_ptrs(n_images);
        for (std::size_t i = 0; i < n_images; ++i) map_ptrs[i] = &prep.maps[i];
        priors = fit_priors(map_ptrs, prep.sp_labels, n_classes, cfg.blocks_per_side);
    } else {
        priors = fit_priors({}, {}, n_classes, cfg.blocks_per_side);
    }
    res.timings_seconds.emplace_back("priors", timer.lap());

    std::vector<Matrix> rows3c(n_images);
    parallel_for(n_images, [&](std::size_t i) {
        const Matrix masked = apply_mask_columns(prep.features[i], mask);
        std::vector<VisualProbability> vis(masked.rows);
        for (std::size_t s = 0; s < masked.rows; ++s) vis[s] = predict_visual(masked.row(s), classifiers);
        const auto ctx = predict_context(prep.maps[i], vis, priors);
        rows3c[i] = concat_probability_rows(vis, ctx, n_classes);
    });

    Matrix mlp_x(prep.labeled_rows.size(), static_cast<std::size_t>(3 * n_classes));
    std::vector<std::int32_t> mlp_y(prep.labeled_rows.size());
    {
        std::size_t out_row = 0;
        for (std::size_t i = 0; i < n_images; ++i) {
            for (std::size_t s = 0; s < rows3c[i].rows; ++s) {
                if (prep.sp_labels[i][s] < 0) continue;
                std::copy_n(rows3c[i].row(s).data(), rows3c[i].cols, mlp_x.row(out_row).data());
                mlp_y[out_row] = prep.sp_labels[i][s];
                ++out_row;
            }
        }
    }
    res.timings_seconds.emplace_back("context", timer.lap());

    TrainSchedule schedule;
    schedule.lr0 = cfg.mlp_lr0;
    schedule.batch = cfg.mlp_batch;
    schedule.epochs = cfg.mlp_epochs;
    schedule.hidden = cfg.mlp_hidden;
    schedule.seed = cfg.seed;
    const IntegrationMLP mlp = train_integration(mlp_x, mlp_y, n_classes, schedule, &res.epoch_loss);
    res.timings_seconds.emplace_back("mlp", timer.lap());

    res.bundle.format_version = 1;
    res.bundle.config = cfg;
    res.bundle.classes = train_data.classes;
    res.bundle.catalog_version = default_catalog().version;
    res.bundle.standardizer = prep.standardizer;
    res.bundle.mask = mask;
    res.bundle.classifiers = classifiers;
    res.bundle.priors = std::move(priors);
    res.bundle.mlp = mlp;
    res.bundle.validate();

    MetricsAccumulator acc(n_classes);
    std::vector<std::vector<std::int32_t>> pixel_preds(n_images);
    parallel_for(n_images, [&](std::size_t i) {
        pixel_preds[i] = pixelize(prep.maps[i], assign_labels(rows3c[i], mlp));
    });
    for (std::size_t i = 0; i < n_images; ++i) acc.add(pixel_preds[i], prep.images[i].labels);
    res.train_eval = acc.finalize();
    res.timings_seconds.emplace_back("evaluate", timer.lap());
    return res;
}

SelectionResult run_select_features(const Dataset& data, const RunConfig& cfg) {
    cfg.validate();
    SelectionResult result;
    Prepared prep = prepare_training_data(data, cfg, nullptr);
    result.ga = ga_select_rows(prep, cfg);
    result.labeled_features = gather_rows(prep.all_features, prep.labeled_rows);
    result.labels = prep.labeled_y;
    return result;
}

PredictionDetail predict_detail(const ModelBundle& bundle, const LabeledImage& img) {
    PredictionDetail d;
    d.resized = resize_image(img, bundle.config.image_side);
    d.map = segment_for(bundle.config, d.resized);
    Matrix features = extract_features(d.resized, d.map);
    apply_standardizer(bundle.standardizer, features);
    const Matrix masked = apply_mask_columns(features, bundle.mask);

    d.visual.resize(masked.rows);
    for (std::size_t s = 0; s < masked.rows; ++s) d.visual[s] = predict_visual(masked.row(s), bundle.classifiers);
    d.context = predict_context(d.map, d.visual, bundle.priors);

    const Matrix rows3c = concat_probability_rows(d.visual, d.context, bundle.n_classes());
    d.sp_labels = assign_labels(rows3c, bundle.mlp);
    d.pixel_labels = pixelize(d.map, d.sp_labels);
    return d;
}

EvalResult evaluate_images(const ModelBundle& bundle, const std::vector<LabeledImage>& images,
                           bool with_ablation) {
    bundle.validate();
    const int n_classes = bundle.n_classes();
    if (images.empty()) throw DataError("no evaluable pixels");

    std::vector<PredictionDetail> details(images.size());
    parallel_for(images.size(), [&](std::size_t i) { details[i] = predict_detail(bundle, images[i]); });

    EvalResult result;
    MetricsAccumulator full_acc(n_classes);
    MetricsAccumulator vis_acc(n_classes), adj_acc(n_classes), blk_acc(n_classes);

    std::vector<double> score(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < images.size(); ++i) {
        const PredictionDetail& d = details[i];
        full_acc.add(d.pixel_labels, d.resized.labels);
        if (!with_ablation) continue;

        const auto n_sp = static_cast<std::size_t>(d.map.n_actual);
        std::vector<std::int32_t> vis_lbl(n_sp), adj_lbl(n_sp), blk_lbl(n_sp);
        for (std::size_t s = 0; s < n_sp; ++s) {
            vis_lbl[s] = d.visual[s].argmax;
            for (int c = 0; c < n_classes; ++c)
                score[static_cast<std::size_t>(c)] =
                    d.visual[s].p[static_cast<std::size_t>(c)] * d.context[s].p_adj[static_cast<std::size_t>(c)];
            adj_lbl[s] = argmax_lowest(score);
            for (int c = 0; c < n_classes; ++c)
                score[static_cast<std::size_t>(c)] *= d.context[s].p_blk[static_cast<std::size_t>(c)];
            blk_lbl[s] = argmax_lowest(score);
        }
        vis_acc.add(pixelize(d.map, vis_lbl), d.resized.labels);
        adj_acc.add(pixelize(d.map, adj_lbl), d.resized.labels);
        blk_acc.add(pixelize(d.map, blk_lbl), d.resized.labels);
    }
    result.report = full_acc.finalize();
    if (with_ablation) {
        AblationAccuracies ab;
        ab.visual_only = vis_acc.finalize().global_acc;
        ab.with_adjacent = adj_acc.finalize().global_acc;
        ab.with_block = blk_acc.finalize().global_acc;
        ab.full = result.report.global_acc;
        result.ablation = ab;
    }
    return result;
}

std::string render_train_report(const TrainResult& result) {
    std::ostringstream out;
    out << "sceneparse training report\n";
    out << "[selection]\n";
    if (result.ga_skipped) {
        out << "skipped: yes (mask = all features)\n";
    } else {
        out << "skipped: no\n";
        out << "generations: " << result.ga.history.size() << "\n";
        out << "best fitness: " << fmt_double(result.ga.best.fitness) << "\n";
        out << "best error: " << fmt_double(result.ga.best.error) << "\n";
        out << "selected: " << result.ga.best.mask.s_count() << " of " << result.ga.best.mask.bits.size() << "\n";
    }
    out << "mask: " << mask_to_string(result.bundle.mask) << "\n";
    out << "[classifiers]\n";
    out << "gradient iterations: " << result.ova_report.total_iterations << "\n";
    out << "max loss increase: " << fmt_double(result.ova_report.max_loss_increase) << "\n";
    out << "[integration]\n";
    out << "epochs: " << result.epoch_loss.size() << "\n";
    if (!result.epoch_loss.empty()) {
        out << "first epoch loss: " << fmt_double(result.epoch_loss.front()) << "\n";
        out << "final epoch loss: " << fmt_double(result.epoch_loss.back()) << "\n";
    }
    out << "[train-eval]\n";
    write_report_text(out, result.train_eval, result.bundle.classes.names);
    out << "[timings]\n";
    out.precision(3);
    out << std::fixed;
    for (const auto& [stage, seconds] : result.timings_seconds) out << stage << ": " << seconds << " s\n";
    return out.str();
}

void write_ga_history_csv(std::ostream& out, const GAResult& ga) {
    out << "generation,best,mean\n";
    for (std::size_t g = 0; g < ga.history.size(); ++g)
        out << g << "," << fmt_double(ga.history[g].best) << "," << fmt_double(ga.history[g].mean) << "\n";
}

void write_epoch_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss) {
    out << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << e << "," << fmt_double(epoch_loss[e]) << "\n";
}

Raster8 render_overlay(const LabeledImage& resized, const std::vector<std::int32_t>& pixel_labels) {
    if (pixel_labels.size() != resized.pixels.size() / 3) throw DataError("label raster does not match image");
    Raster8 out;
    out.height = resized.height;
    out.width = resized.width;
    out.channels = 3;
    out.data.resize(resized.pixels.size());
    for (std::size_t p = 0; p < pixel_labels.size(); ++p) {
        const auto color = class_color(pixel_labels[p] < 0 ? 0 : pixel_labels[p]);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double blended = 0.6 * resized.pixels[p * 3 + ch] + 0.4 * color[ch];
            out.data[p * 3 + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L));
        }
    }
    return out;
}

} // namespace sceneparse

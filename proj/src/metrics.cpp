#include "sceneparse/metrics.hpp"

#include <numeric>
#include <ostream>

#include "sceneparse/errors.hpp"

namespace sceneparse {

MetricsAccumulator::MetricsAccumulator(int classes) : n_classes(classes) {
    if (classes < 1) throw ConfigError("class count must be >= 1");
    confusion.assign(static_cast<std::size_t>(classes) * classes, 0);
}

void MetricsAccumulator::add(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& gt) {
    if (pred.size() != gt.size()) throw DataError("prediction and ground truth differ in size");
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const std::int32_t g = gt[i];
        if (g < 0) continue;
        if (g >= n_classes) throw DataError("ground-truth label out of class range");
        const std::int32_t p = pred[i];
        if (p < 0 || p >= n_classes) throw DataError("predicted label out of class range");
        confusion[static_cast<std::size_t>(g) * n_classes + p]++;
    }
}

EvalReport MetricsAccumulator::finalize() const {
    EvalReport rep;
    rep.n_classes = n_classes;
    rep.confusion = confusion;
    rep.evaluated_pixels = std::accumulate(confusion.begin(), confusion.end(), std::int64_t{0});
    if (rep.evaluated_pixels == 0) throw DataError("no evaluable pixels");

    rep.confusion_norm.assign(confusion.size(), 0.0);
    std::int64_t diagonal = 0;
    double recall_sum = 0.0;
    int present = 0;
    for (int g = 0; g < n_classes; ++g) {
        std::int64_t row = 0;
        for (int p = 0; p < n_classes; ++p) row += rep.count(g, p);
        if (row > 0) {
            for (int p = 0; p < n_classes; ++p)
                rep.confusion_norm[static_cast<std::size_t>(g) * n_classes + p] =
                    static_cast<double>(rep.count(g, p)) / static_cast<double>(row);
            recall_sum += static_cast<double>(rep.count(g, g)) / static_cast<double>(row);
            ++present;
        }
        diagonal += rep.count(g, g);
    }
    rep.global_acc = static_cast<double>(diagonal) / static_cast<double>(rep.evaluated_pixels);
    rep.class_acc = present > 0 ? recall_sum / present : 0.0;

    rep.iou.assign(static_cast<std::size_t>(n_classes), 0.0);
    double iou_sum = 0.0, weighted = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        std::int64_t gt_total = 0, pred_total = 0;
        for (int k = 0; k < n_classes; ++k) {
            gt_total += rep.count(c, k);
            pred_total += rep.count(k, c);
        }
        const std::int64_t tp = rep.count(c, c);
        const std::int64_t denom = gt_total + pred_total - tp; // TP+FP+FN
        if (denom > 0) rep.iou[static_cast<std::size_t>(c)] = static_cast<double>(tp) / static_cast<double>(denom);
        if (gt_total > 0) {
            iou_sum += rep.iou[static_cast<std::size_t>(c)];
            weighted += rep.iou[static_cast<std::size_t>(c)] *
                        (static_cast<double>(gt_total) / static_cast<double>(rep.evaluated_pixels));
        }
    }
    rep.mean_iou = present > 0 ? iou_sum / present : 0.0;
    rep.weighted_iou = weighted;
    return rep;
}

EvalReport evaluate(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& gt,
                    int n_classes) {
    MetricsAccumulator acc(n_classes);
    acc.add(pred, gt);
    return acc.finalize();
}

void write_report_text(std::ostream& out, const EvalReport& rep,
                       const std::vector<std::string>& class_names) {
    out.precision(6);
    out << "evaluated pixels: " << rep.evaluated_pixels << "\n";
    out << "global accuracy:  " << rep.global_acc << "\n";
    out << "class accuracy:   " << rep.class_acc << "\n";
    out << "mean iou:         " << rep.mean_iou << "\n";
    out << "weighted iou:     " << rep.weighted_iou << "\n";
    out << "per-class iou:\n";
    for (int c = 0; c < rep.n_classes; ++c) {
        const std::string name =
            static_cast<std::size_t>(c) < class_names.size() ? class_names[static_cast<std::size_t>(c)] : std::to_string(c);
        out << "  " << name << ": " << rep.iou[static_cast<std::size_t>(c)] << "\n";
    }
}

void write_confusion_csv(std::ostream& out, const EvalReport& rep,
                         const std::vector<std::string>& class_names) {
    auto name = [&](int c) {
        return static_cast<std::size_t>(c) < class_names.size() ? class_names[static_cast<std::size_t>(c)]
                                                                : std::to_string(c);
    };
    out << "gt\\pred";
    for (int p = 0; p < rep.n_classes; ++p) out << "," << name(p);
    out << "\n";
    out.precision(17);
    for (int g = 0; g < rep.n_classes; ++g) {
        out << name(g);
        for (int p = 0; p < rep.n_classes; ++p)
            out << "," << rep.confusion_norm[static_cast<std::size_t>(g) * rep.n_classes + p];
        out << "\n";
    }
}

} // namespace sceneparse

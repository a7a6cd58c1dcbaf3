#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sceneparse {

struct EvalReport {
    int n_classes = 0;
    std::vector<std::int64_t> confusion;  // C*C, [gt][pred]
    std::vector<double> confusion_norm;   // rows normalized where the row has pixels
    double global_acc = 0.0;
    double class_acc = 0.0;               // mean recall over classes present in gt
    std::vector<double> iou;              // per class, 0 where undefined
    double mean_iou = 0.0;                // over classes present in gt
    double weighted_iou = 0.0;            // gt-frequency weighted
    std::int64_t evaluated_pixels = 0;

    std::int64_t count(int gt, int pred) const {
        return confusion[static_cast<std::size_t>(gt) * n_classes + pred];
    }
};

// Per-image confusion counts merge by addition, so evaluation over many
// images accumulates into one of these.
struct MetricsAccumulator {
    int n_classes = 0;
    std::vector<std::int64_t> confusion;

    explicit MetricsAccumulator(int classes);
    void add(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& gt);
    EvalReport finalize() const; // throws DataError when nothing was evaluable
};

EvalReport evaluate(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& gt,
                    int n_classes);

void write_report_text(std::ostream& out, const EvalReport& report,
                       const std::vector<std::string>& class_names);
void write_confusion_csv(std::ostream& out, const EvalReport& report,
                         const std::vector<std::string>& class_names);

} // namespace sceneparse

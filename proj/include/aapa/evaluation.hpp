#pragma once

#include <aapa/geometry.hpp>
#include <aapa/simulator.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aapa {

/// Streaming mean/SEM accumulator. Merging two accumulators gives the same
/// statistics as feeding one with both sample sets, so per-scenario results
/// can be pooled in any grouping.
struct MetricAccumulator {
    std::size_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sumsq += x * x;
    }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    double sem() const {
        if (n < 2) return 0.0;
        const double m = mean();
        double variance = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        if (variance < 0.0) variance = 0.0;  // guard fp cancellation
        return std::sqrt(variance) / std::sqrt(static_cast<double>(n));
    }
    void merge(const MetricAccumulator& other) {
        n += other.n;
        sum += other.sum;
        sumsq += other.sumsq;
    }
};

/// Scores for one task category. IoU counts every scored frame; the center
/// distance only counts frames where the model produced a box, with the
/// rest tallied as missing so the mean stays convention-free.
struct CategoryScore {
    MetricAccumulator iou;
    MetricAccumulator l2;
    std::size_t missing = 0;

    void merge(const CategoryScore& other) {
        iou.merge(other.iou);
        l2.merge(other.l2);
        missing += other.missing;
    }
};

inline const std::vector<TaskLabel>& all_task_labels() {
    static const std::vector<TaskLabel> labels{TaskLabel::visible, TaskLabel::occluded,
                                               TaskLabel::contained, TaskLabel::carried};
    return labels;
}

struct EvalReport {
    std::string model;
    double tau = 0.0;
    std::string noise;
    std::uint64_t seed = 0;
    int first_scored_frame = -1;
    std::size_t scored_frames = 0;
    std::map<TaskLabel, CategoryScore> categories;
    CategoryScore overall;

    EvalReport() {
        for (const TaskLabel label : all_task_labels()) categories[label] = CategoryScore{};
    }

    void merge(const EvalReport& other) {
        scored_frames += other.scored_frames;
        for (const TaskLabel label : all_task_labels())
            categories[label].merge(other.categories.at(label));
        overall.merge(other.overall);
        if (other.first_scored_frame >= 0 &&
            (first_scored_frame < 0 || other.first_scored_frame < first_scored_frame))
            first_scored_frame = other.first_scored_frame;
    }
};

/// Scores a per-frame target prediction stream against ground truth.
/// `first_scored_frame` is the frame the target first appeared in the
/// detection stream fed to the model; earlier frames contribute nothing.
/// An absent prediction scores IoU 0 and is tallied as missing for the
/// center-distance metric. A negative `first_scored_frame` means the target
/// was never detected, so nothing is scored.
inline EvalReport evaluate(const std::vector<BoundingBox>& predictions,
                           const std::vector<BoundingBox>& truth,
                           const std::vector<TaskLabel>& labels, int first_scored_frame) {
    if (predictions.size() != truth.size() || truth.size() != labels.size())
        throw std::invalid_argument("prediction, truth, and label lengths differ");

    EvalReport report;
    report.first_scored_frame = first_scored_frame;
    if (first_scored_frame < 0) return report;

    for (std::size_t t = static_cast<std::size_t>(first_scored_frame); t < truth.size(); ++t) {
        if (truth[t].absent()) continue;
        CategoryScore& category = report.categories[labels[t]];
        const double overlap = iou(predictions[t], truth[t]);
        category.iou.add(overlap);
        report.overall.iou.add(overlap);
        if (predictions[t].absent()) {
            category.missing += 1;
            report.overall.missing += 1;
        } else {
            const double dist = l2_center(predictions[t], truth[t]);
            category.l2.add(dist);
            report.overall.l2.add(dist);
        }
        report.scored_frames += 1;
    }
    return report;
}

namespace detail {

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline void append_row(std::string& out, const std::vector<std::string>& cells,
                       const std::vector<std::size_t>& widths) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string cell = cells[i];
        if (cell.size() < widths[i]) cell.append(widths[i] - cell.size(), ' ');
        out += cell;
        if (i + 1 < cells.size()) out += "  ";
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
}

}  // namespace detail

/// Plain-text tabulation of one or more reports, one row per model and
/// category plus an overall row. Deterministic: row order follows the input
/// order and the fixed category order.
inline std::string render_text_table(const std::vector<EvalReport>& reports) {
    const std::vector<std::string> header{"model", "tau",      "noise",   "category",
                                          "frames", "mean_iou", "sem_iou", "mean_l2",
                                          "sem_l2", "missing"};
    std::vector<std::vector<std::string>> rows{header};

    const auto score_row = [&](const EvalReport& r, const std::string& category,
                               const CategoryScore& s) {
        rows.push_back({r.model, detail::fixed4(r.tau), r.noise, category,
                        std::to_string(s.iou.n), detail::fixed4(s.iou.mean()),
                        detail::fixed4(s.iou.sem()), detail::fixed4(s.l2.mean()),
                        detail::fixed4(s.l2.sem()), std::to_string(s.missing)});
    };
    for (const auto& r : reports) {
        for (const TaskLabel label : all_task_labels())
            score_row(r, to_string(label), r.categories.at(label));
        score_row(r, "overall", r.overall);
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

    std::string out;
    for (const auto& row : rows) detail::append_row(out, row, widths);
    return out;
}

}  // namespace aapa

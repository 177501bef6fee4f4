#pragma once

#include <aapa/attachment.hpp>
#include <aapa/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aapa {

/// Per-frame id of the object an attention model should look at: the target
/// itself while it is visible, otherwise whatever currently holds it.
struct TrackingVector {
    std::vector<SymbolId> entries;
};

inline TrackingVector build_tracking_vector(const std::vector<TaskLabel>& labels,
                                            const std::vector<AttachmentHierarchy>& timeline,
                                            SymbolId target) {
    if (labels.size() != timeline.size())
        throw std::invalid_argument("label and timeline lengths differ");
    TrackingVector v;
    v.entries.reserve(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == TaskLabel::visible) {
            v.entries.push_back(target);
        } else {
            // root_of returns the symbol itself when it is unattached, which
            // covers the occluded-but-free case.
            v.entries.push_back(timeline[t].root_of(target));
        }
    }
    return v;
}

inline TrackingVector build_tracking_vector(const std::vector<FrameAnnotation>& annotations,
                                            const std::vector<AttachmentHierarchy>& timeline,
                                            SymbolId target) {
    std::vector<TaskLabel> labels;
    labels.reserve(annotations.size());
    for (const auto& fa : annotations) labels.push_back(fa.target_label);
    return build_tracking_vector(labels, timeline, target);
}

/// Maps object ids to matrix columns in order of first appearance in the
/// annotation stream. Ids beyond `width` columns stay unmapped; referencing
/// one later is an error.
struct ColumnMap {
    std::map<SymbolId, std::size_t> columns;
    std::size_t width = 0;

    std::size_t at(SymbolId id) const {
        const auto it = columns.find(id);
        if (it == columns.end())
            throw std::invalid_argument("no column for symbol " + std::to_string(id));
        return it->second;
    }
};

inline ColumnMap column_map_from_first_appearance(const std::vector<FrameAnnotation>& annotations,
                                                  std::size_t width) {
    ColumnMap map;
    map.width = width;
    for (const auto& fa : annotations) {
        for (const auto& [id, box] : fa.boxes) {
            (void)box;
            if (map.columns.count(id) || map.columns.size() >= width) continue;
            map.columns[id] = map.columns.size();
        }
    }
    return map;
}

/// N×K attention guidance weights: all ones except the tracked column of
/// each frame, which carries w. Optionally row-softmaxed.
struct GuidanceMatrix {
    std::vector<std::vector<double>> values;
    bool normalized = false;
};

inline GuidanceMatrix build_weight_matrix(const TrackingVector& v, const ColumnMap& map,
                                          double w, bool normalize) {
    if (w <= 0.0) throw std::invalid_argument("guidance weight must be positive");
    if (map.width == 0) throw std::invalid_argument("column map has zero width");

    GuidanceMatrix m;
    m.normalized = normalize;
    m.values.assign(v.entries.size(), std::vector<double>(map.width, 1.0));
    for (std::size_t t = 0; t < v.entries.size(); ++t)
        m.values[t][map.at(v.entries[t])] = w;

    if (normalize) {
        for (auto& row : m.values) {
            const double top = *std::max_element(row.begin(), row.end());
            double sum = 0.0;
            for (double& x : row) {
                x = std::exp(x - top);
                sum += x;
            }
            for (double& x : row) x /= sum;
        }
    }
    return m;
}

}  // namespace aapa

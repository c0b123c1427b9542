#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vialnet/image.hpp"

namespace vialnet {

enum class Fill { filled, empty };
enum class VialSize { large, small };

/// 2-label: anticoagulant present/absent. 4-label: fill state x vial size.
enum class Scenario { two_label = 2, four_label = 4 };

inline int label_count(Scenario s) { return static_cast<int>(s); }

inline Scenario scenario_from_labels(int n) {
    if (n == 2) return Scenario::two_label;
    if (n == 4) return Scenario::four_label;
    throw std::invalid_argument("scenario must have 2 or 4 output labels, got " + std::to_string(n));
}

struct LabeledImage {
    ImageU8 image;
    Fill fill = Fill::filled;
    VialSize size = VialSize::large;
};

struct Dataset {
    std::vector<LabeledImage> items;
    Scenario scenario = Scenario::two_label;

    int n_labels() const { return label_count(scenario); }
};

int label_of(const LabeledImage& item, Scenario scenario);

/// Item count per label index under the dataset's scenario.
inline std::vector<int> class_counts(const Dataset& d) {
    std::vector<int> counts(static_cast<std::size_t>(d.n_labels()), 0);
    for (const LabeledImage& item : d.items) {
        ++counts[static_cast<std::size_t>(label_of(item, d.scenario))];
    }
    return counts;
}

/// Label index of an item under a scenario.
/// 2-label: filled -> 0, empty -> 1.
/// 4-label: filled-large 0, empty-large 1, filled-small 2, empty-small 3.
inline int label_of(const LabeledImage& item, Scenario scenario) {
    const int fill_bit = item.fill == Fill::filled ? 0 : 1;
    if (scenario == Scenario::two_label) {
        return fill_bit;
    }
    const int size_bit = item.size == VialSize::large ? 0 : 1;
    return size_bit * 2 + fill_bit;
}

inline const char* fill_name(Fill f) { return f == Fill::filled ? "filled" : "empty"; }
inline const char* size_name(VialSize s) { return s == VialSize::large ? "large" : "small"; }

inline std::string label_name(int label, Scenario scenario) {
    if (scenario == Scenario::two_label) {
        return label == 0 ? "filled" : "empty";
    }
    switch (label) {
        case 0: return "filled-large";
        case 1: return "empty-large";
        case 2: return "filled-small";
        default: return "empty-small";
    }
}

}  // namespace vialnet

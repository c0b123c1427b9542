#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vialnet/dataset.hpp"
#include "vialnet/model.hpp"

namespace vialnet {

// ---------------------------------------------------------------------------
// Confusion matrix and scalar metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<std::int64_t> counts;  // row = true class, col = predicted

    explicit ConfusionMatrix(int n = 0)
        : n_classes(n), counts(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0) {}

    std::int64_t& at(int truth, int pred) {
        return counts[static_cast<std::size_t>(truth) * n_classes + pred];
    }
    std::int64_t at(int truth, int pred) const {
        return counts[static_cast<std::size_t>(truth) * n_classes + pred];
    }
    std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
    std::int64_t trace() const {
        std::int64_t t = 0;
        for (int i = 0; i < n_classes; ++i) {
            t += at(i, i);
        }
        return t;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truths,
                                 int n_classes) {
    if (preds.size() != truths.size()) {
        throw std::invalid_argument("confusion: prediction and truth lists differ in length");
    }
    if (n_classes < 2) {
        throw std::invalid_argument("confusion: need at least 2 classes");
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int p = preds[i];
        const int t = truths[i];
        if (p < 0 || p >= n_classes || t < 0 || t >= n_classes) {
            throw std::invalid_argument("confusion: label out of range at item " + std::to_string(i));
        }
        ++cm.at(t, p);
    }
    return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw std::invalid_argument("accuracy of an empty confusion matrix");
    }
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

struct MetricsReport {
    double accuracy = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// Binary metrics with the zero-denominator convention: undefined ratios
/// (no predicted positives, no actual positives) report as 0, the value a
/// collapsed constant classifier earns.
inline MetricsReport binary_metrics(const ConfusionMatrix& cm, int positive_class = 0) {
    if (cm.n_classes != 2) {
        throw std::invalid_argument("binary_metrics requires a 2x2 confusion matrix");
    }
    if (positive_class != 0 && positive_class != 1) {
        throw std::invalid_argument("positive class must be 0 or 1");
    }
    const int neg = 1 - positive_class;
    const double tp = static_cast<double>(cm.at(positive_class, positive_class));
    const double fn = static_cast<double>(cm.at(positive_class, neg));
    const double fp = static_cast<double>(cm.at(neg, positive_class));
    const double tn = static_cast<double>(cm.at(neg, neg));
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };

    MetricsReport m;
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    m.recall = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.precision = ratio(tp, tp + fp);
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (false positive rate, true positive rate)
    double auc = 0.0;
};

/// Threshold sweep over the distinct scores, descending; tied scores form a
/// single step so the trapezoid rule awards half credit, matching the
/// pairwise-comparison definition of AUC.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& is_positive) {
    if (scores.size() != is_positive.size() || scores.empty()) {
        throw std::invalid_argument("roc_auc: scores and truth labels must align and be nonempty");
    }
    std::int64_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < is_positive.size(); ++i) {
        if (is_positive[i] != 0 && is_positive[i] != 1) {
            throw std::invalid_argument("roc_auc: truths must be 0/1");
        }
        if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
            throw std::invalid_argument("roc_auc: scores must lie in [0,1]");
        }
        ++(is_positive[i] ? n_pos : n_neg);
    }
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("roc_auc: AUC undefined with a single class");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    std::int64_t tp = 0, fp = 0;
    double auc = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            ++(is_positive[order[i]] ? tp : fp);
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        const auto& prev = curve.points.back();
        auc += (fpr - prev.first) * (tpr + prev.second) * 0.5;
        curve.points.emplace_back(fpr, tpr);
    }
    curve.auc = auc;
    return curve;
}

// ---------------------------------------------------------------------------
// Fold aggregation and post-validation
// ---------------------------------------------------------------------------

inline double fold_average(const std::vector<double>& fold_values) {
    if (fold_values.empty()) {
        throw std::invalid_argument("fold_average of an empty list");
    }
    double sum = 0.0;
    for (double v : fold_values) {
        sum += v;
    }
    return sum / static_cast<double>(fold_values.size());
}

/// Predictions of a network over dataset items (all of them, or a subset by
/// index). `positive_score` is the probability of `positive_class`, the
/// ROC input for the binary scenario.
struct Predictions {
    std::vector<int> predicted;
    std::vector<int> truth;
    std::vector<double> positive_score;
};

inline Predictions classify(const Network& net, const Dataset& data, const std::vector<int>& indices,
                            int positive_class = 0) {
    Predictions out;
    out.predicted.reserve(indices.size());
    out.truth.reserve(indices.size());
    out.positive_score.reserve(indices.size());
    Workspace ws;
    for (int i : indices) {
        const LabeledImage& item = data.items.at(static_cast<std::size_t>(i));
        const Tensor img = image_to_tensor(item.image);
        const ForwardResult r = net.forward(img, ws);
        int best = 0;
        for (int c = 1; c < r.probs.dim(0); ++c) {
            if (r.probs[static_cast<std::size_t>(c)] > r.probs[static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        out.predicted.push_back(best);
        out.truth.push_back(label_of(item, data.scenario));
        out.positive_score.push_back(static_cast<double>(r.probs[static_cast<std::size_t>(positive_class)]));
    }
    return out;
}

inline Predictions classify_all(const Network& net, const Dataset& data, int positive_class = 0) {
    std::vector<int> indices(data.items.size());
    std::iota(indices.begin(), indices.end(), 0);
    return classify(net, data, indices, positive_class);
}

/// Misclassification rate (1 - accuracy) on each validation set.
inline std::vector<double> post_validate(const Network& net, const std::vector<Dataset>& sets) {
    std::vector<double> errors;
    errors.reserve(sets.size());
    for (const Dataset& set : sets) {
        if (set.items.empty()) {
            throw std::invalid_argument("post_validate: empty validation set");
        }
        const Predictions p = classify_all(net, set);
        const ConfusionMatrix cm = confusion(p.predicted, p.truth, set.n_labels());
        errors.push_back(1.0 - accuracy(cm));
    }
    return errors;
}

// ---------------------------------------------------------------------------
// Report emitters
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true\\pred";
    for (int p = 0; p < cm.n_classes; ++p) {
        out << ",class" << p;
    }
    out << "\n";
    for (int t = 0; t < cm.n_classes; ++t) {
        out << "class" << t;
        for (int p = 0; p < cm.n_classes; ++p) {
            out << "," << cm.at(t, p);
        }
        out << "\n";
    }
}

inline void write_metrics_csv(std::ostream& out, const MetricsReport& m) {
    out << "metric,value\n";
    out << "accuracy," << detail::fmt_g(m.accuracy) << "\n";
    out << "recall," << detail::fmt_g(m.recall) << "\n";
    out << "specificity," << detail::fmt_g(m.specificity) << "\n";
    out << "precision," << detail::fmt_g(m.precision) << "\n";
    out << "f1," << detail::fmt_g(m.f1) << "\n";
}

inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : curve.points) {
        out << detail::fmt_g(fpr) << "," << detail::fmt_g(tpr) << "\n";
    }
}

/// Per-fold accuracy table:
/// one row per fold plus mean accuracy and mean error rows.
inline void write_fold_table(std::ostream& out, const std::vector<double>& fold_accuracies) {
    out << "fold,accuracy\n";
    for (std::size_t i = 0; i < fold_accuracies.size(); ++i) {
        out << (i + 1) << "," << detail::fmt_g(fold_accuracies[i]) << "\n";
    }
    const double mean_acc = fold_average(fold_accuracies);
    out << "average," << detail::fmt_g(mean_acc) << "\n";
    std::vector<double> errors;
    errors.reserve(fold_accuracies.size());
    for (double a : fold_accuracies) {
        errors.push_back(1.0 - a);
    }
    out << "average_error," << detail::fmt_g(fold_average(errors)) << "\n";
}

inline void write_postval_csv(std::ostream& out, const std::vector<double>& errors) {
    out << "val_set,error\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        out << (i + 1) << "," << detail::fmt_g(errors[i]) << "\n";
    }
}

}  // namespace vialnet

#include "afa/metrics.hpp"

#include <vector>

#include "afa/error.hpp"

namespace afa {

double f1_macro(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                std::size_t n_class) {
    if (predictions.size() != labels.size())
        throw InputError("f1_macro: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
    if (n_class == 0) throw InputError("f1_macro: n_class must be positive");
    std::vector<std::size_t> tp(n_class, 0), fp(n_class, 0), fn(n_class, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t y = labels[i], p = predictions[i];
        if (y >= n_class || p >= n_class) throw InputError("f1_macro: class index out of range");
        if (y == p) {
            ++tp[y];
        } else {
            ++fp[p];
            ++fn[y];
        }
    }
    // F1 = 2PR / (P + R) = 2TP / (2TP + FP + FN)
    double total = 0.0;
    for (std::size_t c = 0; c < n_class; ++c) {
        if (tp[c] == 0) continue;
        total += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    }
    return total / static_cast<double>(n_class);
}

AccuracyReport accuracy_report(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> labels,
                               const std::set<std::size_t>& base_classes) {
    if (predictions.size() != labels.size())
        throw InputError("accuracy_report: predictions and labels differ in length");
    std::size_t correct = 0, base_correct = 0, new_correct = 0;
    AccuracyReport r;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool hit = predictions[i] == labels[i];
        correct += hit;
        if (base_classes.contains(labels[i])) {
            ++r.n_base;
            base_correct += hit;
        } else {
            ++r.n_new;
            new_correct += hit;
        }
    }
    if (!labels.empty()) r.acc_mean = static_cast<double>(correct) / static_cast<double>(labels.size());
    if (r.n_base) r.acc_base = static_cast<double>(base_correct) / static_cast<double>(r.n_base);
    if (r.n_new) r.acc_new = static_cast<double>(new_correct) / static_cast<double>(r.n_new);
    return r;
}

}  // namespace afa

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>

namespace afa {

/// Unweighted mean over n_class classes of the one-vs-rest F1 score. A
/// class with no true positives (including one that never occurs in either
/// list) contributes 0.
double f1_macro(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                std::size_t n_class);

struct AccuracyReport {
    double acc_mean = 0.0;
    std::optional<double> acc_base;  // empty when no sample has a base label
    std::optional<double> acc_new;   // empty when no sample has a new label
    std::size_t n_base = 0;
    std::size_t n_new = 0;
};

AccuracyReport accuracy_report(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> labels,
                               const std::set<std::size_t>& base_classes);

}  // namespace afa

#include "omicsnet/errors.hpp"
#include "omicsnet/pipeline.hpp"

#include <cmath>

namespace omicsnet {

ClassificationMetrics compute_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                      std::size_t n_classes) {
    if (y_true.empty()) {
        throw DataError("compute_metrics: empty label vectors");
    }
    if (y_true.size() != y_pred.size()) {
        throw DataError("compute_metrics: " + std::to_string(y_true.size()) + " true labels but " +
                        std::to_string(y_pred.size()) + " predictions");
    }
    if (n_classes == 0) {
        throw DataError("compute_metrics: n_classes must be positive");
    }
    std::vector<std::vector<std::size_t>> confusion(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= n_classes || y_pred[i] >= n_classes) {
            throw DataError("compute_metrics: label out of range at position " + std::to_string(i));
        }
        ++confusion[y_true[i]][y_pred[i]];
    }
    return metrics_from_confusion(confusion);
}

ClassificationMetrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
    const std::size_t k = confusion.size();
    ClassificationMetrics m;
    m.confusion = confusion;
    m.per_class_f1.assign(k, 0.0);
    std::size_t total = 0, correct = 0;
    std::vector<std::size_t> support(k, 0), predicted(k, 0);
    for (std::size_t t = 0; t < k; ++t) {
        if (confusion[t].size() != k) {
            throw DataError("confusion matrix is not square");
        }
        for (std::size_t p = 0; p < k; ++p) {
            total += confusion[t][p];
            support[t] += confusion[t][p];
            predicted[p] += confusion[t][p];
        }
        correct += confusion[t][t];
    }
    if (total == 0) {
        throw DataError("confusion matrix is empty");
    }
    double weighted = 0.0, macro = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(confusion[c][c]);
        const double precision = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
        const double recall = support[c] ? tp / static_cast<double>(support[c]) : 0.0;
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        m.per_class_f1[c] = f1;
        macro += f1;
        weighted += f1 * static_cast<double>(support[c]);
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    m.f1_macro = macro / static_cast<double>(k);
    m.f1_weighted = weighted / static_cast<double>(total);
    return m;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    if (values.empty()) {
        return s;
    }
    double acc = 0.0;
    for (double v : values) {
        acc += v;
    }
    s.mean = acc / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

} // namespace omicsnet

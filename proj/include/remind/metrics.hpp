#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "remind/error.hpp"

namespace remind {

struct ScoredSet {
    std::vector<double> scores;
    std::vector<bool> positive;

    void add(double score, bool is_positive) {
        if (!std::isfinite(score)) raise(ErrorKind::Data, "non-finite score");
        scores.push_back(score);
        positive.push_back(is_positive);
    }
    size_t size() const { return scores.size(); }
};

namespace detail {

inline void require_both_classes(const ScoredSet& s) {
    if (s.size() == 0) raise(ErrorKind::Metric, "empty scored set");
    const size_t pos = static_cast<size_t>(
        std::count(s.positive.begin(), s.positive.end(), true));
    if (pos == 0 || pos == s.size())
        raise(ErrorKind::Metric, "ROC needs both a positive and a negative class");
}

// ROC vertices in order of decreasing threshold, starting at (0,0) and
// ending at (1,1). Tied scores collapse into a single vertex.
struct RocCurve {
    std::vector<double> fpr, tpr;
};

inline RocCurve roc_curve(const ScoredSet& s) {
    require_both_classes(s);
    std::vector<size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s.scores[a] > s.scores[b]; });
    const double total_pos = static_cast<double>(
        std::count(s.positive.begin(), s.positive.end(), true));
    const double total_neg = static_cast<double>(s.size()) - total_pos;

    RocCurve curve;
    curve.fpr.push_back(0);
    curve.tpr.push_back(0);
    double tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double threshold = s.scores[order[i]];
        while (i < order.size() && s.scores[order[i]] == threshold) {
            if (s.positive[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        curve.fpr.push_back(fp / total_neg);
        curve.tpr.push_back(tp / total_pos);
    }
    return curve;
}

}  // namespace detail

// Mann-Whitney rank formulation; ties contribute half credit.
inline double roc_auc(const ScoredSet& s) {
    detail::require_both_classes(s);
    std::vector<size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s.scores[a] < s.scores[b]; });

    // Midranks: tied values share the average of their rank range.
    std::vector<double> rank(s.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (size_t k = i; k < j; ++k) rank[order[k]] = mid;
        i = j;
    }

    double pos_rank_sum = 0, n_pos = 0;
    for (size_t k = 0; k < s.size(); ++k) {
        if (s.positive[k]) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    }
    const double n_neg = static_cast<double>(s.size()) - n_pos;
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

// O(n^2) pair enumeration; the independent reference implementation.
inline double brute_force_auc(const ScoredSet& s) {
    detail::require_both_classes(s);
    if (s.size() > 2000) raise(ErrorKind::Parameter, "brute-force AUC capped at 2000 points");
    double wins = 0, pairs = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (!s.positive[i]) continue;
        for (size_t j = 0; j < s.size(); ++j) {
            if (s.positive[j]) continue;
            pairs += 1;
            if (s.scores[i] > s.scores[j]) wins += 1;
            else if (s.scores[i] == s.scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// TPR of the ROC curve at the given FPR, linearly interpolated between
// vertices. The headline low-FPR number (reported as a percentage).
inline double tpr_at_fpr(const ScoredSet& s, double fpr_cap = 0.01) {
    if (fpr_cap < 0 || fpr_cap > 1) raise(ErrorKind::Parameter, "fpr_cap must be in [0,1]");
    const auto curve = detail::roc_curve(s);
    // Among vertices at equal FPR keep the highest TPR (vertical ROC jumps).
    double best = 0;
    for (size_t i = 0; i < curve.fpr.size(); ++i) {
        if (curve.fpr[i] <= fpr_cap) {
            best = std::max(best, curve.tpr[i]);
            continue;
        }
        // First vertex beyond the cap: interpolate from the previous one.
        const double x0 = curve.fpr[i - 1], y0 = curve.tpr[i - 1];
        const double x1 = curve.fpr[i], y1 = curve.tpr[i];
        const double t = (fpr_cap - x0) / (x1 - x0);
        return std::max(best, y0 + t * (y1 - y0));
    }
    return best;
}

// Partial AUC over [0, fpr_cap], rescaled to [0,1] (chance level 0.5).
// Exposed behind a config switch as the alternative low-FPR summary.
inline double standardized_partial_auc(const ScoredSet& s, double fpr_cap = 0.01) {
    if (fpr_cap <= 0 || fpr_cap > 1) raise(ErrorKind::Parameter, "fpr_cap must be in (0,1]");
    const auto curve = detail::roc_curve(s);
    double area = 0;
    for (size_t i = 1; i < curve.fpr.size(); ++i) {
        const double x0 = curve.fpr[i - 1], y0 = curve.tpr[i - 1];
        double x1 = curve.fpr[i], y1 = curve.tpr[i];
        if (x0 >= fpr_cap) break;
        if (x1 > fpr_cap) {
            const double t = (fpr_cap - x0) / (x1 - x0);
            y1 = y0 + t * (y1 - y0);
            x1 = fpr_cap;
        }
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    const double max_area = fpr_cap;
    const double min_area = fpr_cap * fpr_cap / 2.0;  // chance diagonal
    return 0.5 * (1.0 + (area - min_area) / (max_area - min_area));
}

// Macro one-vs-rest AUC over the classes present in `labels`. Each class
// uses its own probability column. Classes absent from the labels are
// skipped (noted via the optional warning sink).
inline double multiclass_auc(const std::vector<int>& labels,
                             const std::vector<std::vector<double>>& probabilities,
                             int class_count, std::vector<std::string>* warnings = nullptr) {
    if (labels.size() != probabilities.size())
        raise(ErrorKind::Parameter, "label and probability counts differ");
    if (labels.empty()) raise(ErrorKind::Metric, "empty label set");
    double sum = 0;
    int terms = 0;
    for (int c = 0; c < class_count; ++c) {
        const auto present = std::count(labels.begin(), labels.end(), c);
        if (present == 0 || static_cast<size_t>(present) == labels.size()) {
            if (warnings)
                warnings->push_back("class " + std::to_string(c) +
                                    " absent from one-vs-rest AUC, term skipped");
            continue;
        }
        ScoredSet s;
        for (size_t i = 0; i < labels.size(); ++i)
            s.add(probabilities[i].at(static_cast<size_t>(c)), labels[i] == c);
        sum += roc_auc(s);
        ++terms;
    }
    if (terms == 0) raise(ErrorKind::Metric, "fewer than two classes present");
    return sum / static_cast<double>(terms);
}

struct ClassificationSummary {
    double accuracy = 0;
    double macro_f1 = 0;
};

// Macro-F1 averages over all `class_count` classes; a class with zero
// precision+recall contributes an F1 of 0.
inline ClassificationSummary accuracy_and_macro_f1(const std::vector<int>& labels,
                                                   const std::vector<int>& predictions,
                                                   int class_count) {
    if (labels.size() != predictions.size())
        raise(ErrorKind::Parameter, "label and prediction counts differ");
    if (labels.empty()) raise(ErrorKind::Metric, "empty label set");

    size_t correct = 0;
    std::vector<double> tp(class_count, 0), fp(class_count, 0), fn(class_count, 0);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count || predictions[i] < 0 ||
            predictions[i] >= class_count)
            raise(ErrorKind::Parameter, "label outside [0, class_count)");
        if (labels[i] == predictions[i]) {
            ++correct;
            tp[labels[i]] += 1;
        } else {
            fp[predictions[i]] += 1;
            fn[labels[i]] += 1;
        }
    }

    double f1_sum = 0;
    for (int c = 0; c < class_count; ++c) {
        const double precision_den = tp[c] + fp[c];
        const double recall_den = tp[c] + fn[c];
        const double precision = precision_den > 0 ? tp[c] / precision_den : 0;
        const double recall = recall_den > 0 ? tp[c] / recall_den : 0;
        f1_sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
    }

    ClassificationSummary out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    out.macro_f1 = f1_sum / static_cast<double>(class_count);
    return out;
}

}  // namespace remind

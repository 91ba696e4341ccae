#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "remind/encoder.hpp"
#include "remind/error.hpp"
#include "remind/oracle.hpp"

namespace remind {

inline constexpr size_t kFeatureCount = 14;
inline constexpr double kDistanceEpsilon = 1e-8;

struct IllFeatureVector {
    // f1 original loss, f2..f6 neighbor loss statistics, f7..f10 deltas
    // against the original, f11..f13 finite-difference gradient magnitudes,
    // f14 volatility along the distance-sorted walk.
    std::array<double, kFeatureCount> values{};

    double operator[](size_t i) const { return values[i]; }
    double& operator[](size_t i) { return values[i]; }

    static std::vector<std::string> names() {
        std::vector<std::string> out;
        for (size_t i = 1; i <= kFeatureCount; ++i) out.push_back("f" + std::to_string(i));
        return out;
    }
};

namespace detail {

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population variance (divide by N), matching the convention used for every
// variance-valued feature.
inline double population_variance(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

}  // namespace detail

inline IllFeatureVector extract_features(const LossProfile& original,
                                         const std::vector<LossProfile>& neighbor_profiles,
                                         const std::vector<std::string>& neighbor_texts,
                                         const std::string& original_text,
                                         const TextEncoder& encoder) {
    const size_t k = neighbor_profiles.size();
    if (k < 2) raise(ErrorKind::Parameter, "feature extraction needs at least 2 neighbors");
    if (neighbor_texts.size() != k)
        raise(ErrorKind::Parameter, "neighbor profile and text counts differ");

    const double l_orig = original.mean_nll;
    std::vector<double> losses(k);
    for (size_t j = 0; j < k; ++j) losses[j] = neighbor_profiles[j].mean_nll;

    const auto origin = encoder.encode(original_text);
    std::vector<double> distances(k);
    for (size_t j = 0; j < k; ++j)
        distances[j] = euclidean_distance(origin, encoder.encode(neighbor_texts[j]));

    std::vector<double> abs_deltas(k), gradients(k);
    for (size_t j = 0; j < k; ++j) {
        abs_deltas[j] = std::abs(losses[j] - l_orig);
        gradients[j] = distances[j] < kDistanceEpsilon
                           ? 0.0
                           : abs_deltas[j] / std::max(distances[j], kDistanceEpsilon);
    }

    // Walk outward by distance; loss value breaks distance ties so the
    // result does not depend on input order.
    std::vector<size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return losses[a] < losses[b];
    });
    double volatility = 0;
    for (size_t j = 0; j + 1 < k; ++j)
        volatility += std::abs(losses[order[j + 1]] - losses[order[j]]);
    volatility /= static_cast<double>(k - 1);

    IllFeatureVector f;
    f[0] = l_orig;
    f[1] = detail::mean(losses);
    f[2] = *std::max_element(losses.begin(), losses.end());
    f[3] = *std::min_element(losses.begin(), losses.end());
    f[5] = detail::population_variance(losses);
    f[4] = std::sqrt(f[5]);
    f[6] = f[1] - l_orig;
    f[7] = f[2] - l_orig;
    f[8] = f[3] - l_orig;
    f[9] = detail::population_variance(abs_deltas);
    f[10] = detail::mean(gradients);
    f[11] = *std::max_element(gradients.begin(), gradients.end());
    f[12] = detail::population_variance(gradients);
    f[13] = volatility;

    for (double v : f.values)
        if (!std::isfinite(v)) raise(ErrorKind::Data, "non-finite value in feature vector");
    return f;
}

}  // namespace remind

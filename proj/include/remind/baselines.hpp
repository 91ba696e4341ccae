#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <zlib.h>

#include "remind/error.hpp"
#include "remind/oracle.hpp"

namespace remind {

// Scalar membership scores. Each scorer has a fixed documented orientation
// and is never auto-flipped.
namespace baselines {

// Orientation: higher means less memorized.
inline double loss_score(const LossProfile& original) { return original.mean_nll; }

inline size_t deflate_length(const std::string& text, int level = 6) {
    if (text.empty()) raise(ErrorKind::Parameter, "cannot compress empty text");
    uLong bound = compressBound(static_cast<uLong>(text.size()));
    std::vector<unsigned char> out(bound);
    const int rc = compress2(out.data(), &bound,
                             reinterpret_cast<const unsigned char*>(text.data()),
                             static_cast<uLong>(text.size()), level);
    if (rc != Z_OK) raise(ErrorKind::Data, "deflate failed with code " + std::to_string(rc));
    return static_cast<size_t>(bound);
}

// Total NLL over DEFLATE-compressed byte length (level 6). Orientation:
// higher means less memorized per unit of incompressibility.
inline double zlib_score(const LossProfile& original, const std::string& text) {
    const double total_nll =
        std::accumulate(original.token_nll.begin(), original.token_nll.end(), 0.0);
    return total_nll / static_cast<double>(deflate_length(text));
}

// Negated mean of the ceil(k_pct% * tokens) largest NLLs. Orientation:
// higher means more memorized.
inline double min_k_score(const LossProfile& original, double k_pct = 20.0) {
    if (!(k_pct > 0 && k_pct <= 100)) raise(ErrorKind::Parameter, "k_pct must be in (0, 100]");
    auto nlls = original.token_nll;
    const size_t take = static_cast<size_t>(
        std::ceil(k_pct / 100.0 * static_cast<double>(nlls.size())));
    std::partial_sort(nlls.begin(), nlls.begin() + static_cast<ptrdiff_t>(take), nlls.end(),
                      std::greater<double>());
    const double mean =
        std::accumulate(nlls.begin(), nlls.begin() + static_cast<ptrdiff_t>(take), 0.0) /
        static_cast<double>(take);
    return -mean;
}

// Mean of the lowest k_pct% vocabulary-normalized token scores
// (log p - mu) / max(sigma, 1e-6). Orientation: higher means more memorized.
inline double min_k_pp_score(const LossProfile& original, const DistributionStats& stats,
                             double k_pct = 20.0) {
    if (!(k_pct > 0 && k_pct <= 100)) raise(ErrorKind::Parameter, "k_pct must be in (0, 100]");
    const size_t n = original.token_nll.size();
    if (stats.mu.size() != n || stats.sigma.size() != n)
        raise(ErrorKind::Data, "distribution stats length does not match token count");
    std::vector<double> normalized(n);
    for (size_t i = 0; i < n; ++i) {
        const double logp = -original.token_nll[i];
        normalized[i] = (logp - stats.mu[i]) / std::max(stats.sigma[i], 1e-6);
    }
    const size_t take =
        static_cast<size_t>(std::ceil(k_pct / 100.0 * static_cast<double>(n)));
    std::partial_sort(normalized.begin(), normalized.begin() + static_cast<ptrdiff_t>(take),
                      normalized.end());
    return std::accumulate(normalized.begin(), normalized.begin() + static_cast<ptrdiff_t>(take),
                           0.0) /
           static_cast<double>(take);
}

inline size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline double rouge_l_f1(const std::vector<std::string>& generated,
                         const std::vector<std::string>& reference) {
    if (generated.empty() || reference.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(generated, reference));
    const double precision = lcs / static_cast<double>(generated.size());
    const double recall = lcs / static_cast<double>(reference.size());
    if (precision + recall == 0) return 0.0;
    return 2 * precision * recall / (precision + recall);
}

// Prompt = first ceil(n/2) tokens, reference = the rest; greedy-generate
// |reference| tokens and compare. Orientation: higher means more memorized.
inline double rouge_l_f1_score(const std::string& text, Oracle& oracle,
                               const std::string& sample_id = {}) {
    if (!oracle.capabilities().generation)
        raise(ErrorKind::Capability,
              "ROUGE-L F1 needs a generation-capable oracle ('" + oracle.identity() + "')");
    const auto tokens = whitespace_tokens(text);
    if (tokens.size() < 2)
        raise(ErrorKind::Data, "sample too short to split into prompt and continuation");
    const size_t prompt_len = (tokens.size() + 1) / 2;
    std::string prompt;
    for (size_t i = 0; i < prompt_len; ++i) {
        if (i) prompt.push_back(' ');
        prompt += tokens[i];
    }
    const std::vector<std::string> reference(tokens.begin() + static_cast<ptrdiff_t>(prompt_len),
                                             tokens.end());
    const std::string generated =
        oracle.generate(prompt, static_cast<int>(reference.size()), sample_id);
    return rouge_l_f1(whitespace_tokens(generated), reference);
}

enum class SpvMode { Mean, Max };

inline SpvMode spv_mode_from_name(const std::string& name) {
    if (name == "mean") return SpvMode::Mean;
    if (name == "max") return SpvMode::Max;
    raise(ErrorKind::Parameter, "SPV mode must be 'mean' or 'max', got '" + name + "'");
}

// Calibrated loss difference against the neighborhood. Orientation: more
// negative means the original sits in a local dip (more memorized).
inline double spv_mia_simplified(const LossProfile& original,
                                 const std::vector<LossProfile>& neighbors, SpvMode mode) {
    if (neighbors.empty()) raise(ErrorKind::Parameter, "SPV needs at least one neighbor");
    if (mode == SpvMode::Max) {
        double top = neighbors.front().mean_nll;
        for (const auto& p : neighbors) top = std::max(top, p.mean_nll);
        return original.mean_nll - top;
    }
    double sum = 0;
    for (const auto& p : neighbors) sum += p.mean_nll;
    return original.mean_nll - sum / static_cast<double>(neighbors.size());
}

inline const char* orientation(const std::string& method) {
    if (method == "loss_based") return "higher-means-less-memorized";
    if (method == "zlib_compression") return "higher-means-less-memorized";
    if (method == "min_k") return "higher-means-more-memorized";
    if (method == "min_k_pp") return "higher-means-more-memorized";
    if (method == "rouge_l_f1") return "higher-means-more-memorized";
    if (method == "spv_mia_mean") return "lower-means-more-memorized";
    if (method == "spv_mia_max") return "lower-means-more-memorized";
    raise(ErrorKind::Parameter, "unknown baseline method '" + method + "'");
}

}  // namespace baselines
}  // namespace remind

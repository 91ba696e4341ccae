#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remind/embedding.hpp"
#include "remind/error.hpp"
#include "remind/rng.hpp"

namespace remind {

struct PerturbationConfig {
    double p = 0.3;        // per-position replacement probability
    int m = 20;            // neighbor pool size, 1 <= m <= table m_max
    int K = 15;            // number of perturbed variants
    uint64_t seed = 0;
    int max_tokens = 300;  // inputs are truncated to this length first
    int resample_cap = 10; // max redraws for variants identical to the input

    void validate(const TokenEmbeddingTable& table) const {
        if (p < 0.0 || p > 1.0)
            raise(ErrorKind::Parameter, "replacement probability p must be in [0,1]");
        if (m < 1 || m > table.m_max())
            raise(ErrorKind::Parameter, "neighbor pool m must be in [1, m_max=" +
                                            std::to_string(table.m_max()) + "]");
        if (K < 1) raise(ErrorKind::Parameter, "K must be >= 1");
        if (max_tokens < 1) raise(ErrorKind::Parameter, "max_tokens must be >= 1");
        if (resample_cap < 0) raise(ErrorKind::Parameter, "resample_cap must be >= 0");
    }
};

// The K perturbed variants of one input plus which positions changed.
struct NeighborhoodSet {
    std::vector<TokenId> original;  // after truncation to max_tokens
    std::vector<std::vector<TokenId>> variants;
    std::vector<std::vector<int32_t>> replaced_positions;
};

// Embedding-proximity perturbation: independently per variant and position,
// replace token i with its rank-j cosine neighbor (j uniform on {1..m})
// with probability p. Variants that come out identical to the input are
// redrawn up to resample_cap times and kept if still identical. Every draw
// is keyed by (seed, variant, attempt, position), so the output is a pure
// function of (x, table, cfg) regardless of evaluation order.
inline NeighborhoodSet perturb(const std::vector<TokenId>& x,
                               const TokenEmbeddingTable& table,
                               const PerturbationConfig& cfg) {
    cfg.validate(table);
    if (x.empty()) raise(ErrorKind::Parameter, "cannot perturb an empty token sequence");
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0 || x[i] >= table.vocab_size())
            raise(ErrorKind::Data, "token id " + std::to_string(x[i]) + " at position " +
                                       std::to_string(i) + " outside vocabulary");
    }

    NeighborhoodSet ns;
    ns.original.assign(x.begin(),
                       x.size() > static_cast<size_t>(cfg.max_tokens)
                           ? x.begin() + cfg.max_tokens
                           : x.end());
    const size_t n = ns.original.size();
    ns.variants.reserve(cfg.K);
    ns.replaced_positions.reserve(cfg.K);

    for (int k = 0; k < cfg.K; ++k) {
        std::vector<TokenId> variant;
        std::vector<int32_t> replaced;
        for (int attempt = 0; attempt <= cfg.resample_cap; ++attempt) {
            variant = ns.original;
            replaced.clear();
            for (size_t i = 0; i < n; ++i) {
                CounterRng rng = CounterRng::keyed(cfg.seed, static_cast<uint64_t>(k),
                                                   static_cast<uint64_t>(attempt), i);
                if (!rng.next_bernoulli(cfg.p)) continue;
                const int j = static_cast<int>(rng.next_range(1, static_cast<uint64_t>(cfg.m)));
                variant[i] = table.nearest_neighbor(ns.original[i], j);
                if (variant[i] != ns.original[i]) replaced.push_back(static_cast<int32_t>(i));
            }
            if (!replaced.empty()) break;
        }
        ns.variants.push_back(std::move(variant));
        ns.replaced_positions.push_back(std::move(replaced));
    }
    return ns;
}

}  // namespace remind

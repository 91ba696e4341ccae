#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "remind/embedding.hpp"
#include "remind/error.hpp"
#include "remind/tokenizer.hpp"

namespace remind {

// Deterministic text -> vector map used for the finite-difference gradient
// features. The default reuses the perturbation embedding table.
class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual int dim() const = 0;
    virtual std::vector<double> encode(const std::string& text) const = 0;
};

class MeanPooledEncoder final : public TextEncoder {
public:
    MeanPooledEncoder(const TokenEmbeddingTable& table, const Tokenizer& tokenizer)
        : table_(&table), tokenizer_(&tokenizer) {}

    int dim() const override { return table_->dim(); }

    // Mean of the token embedding rows of the text's tokens.
    std::vector<double> encode(const std::string& text) const override {
        const auto ids = tokenizer_->encode(text);
        if (ids.empty()) raise(ErrorKind::Data, "cannot encode text with no tokens");
        std::vector<double> out(table_->dim(), 0.0);
        for (TokenId id : ids) {
            table_->check_token(id);
            const double* row = table_->row(id);
            for (int d = 0; d < table_->dim(); ++d) out[d] += row[d];
        }
        const double inv = 1.0 / static_cast<double>(ids.size());
        for (double& v : out) v *= inv;
        return out;
    }

private:
    const TokenEmbeddingTable* table_;
    const Tokenizer* tokenizer_;
};

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        raise(ErrorKind::Parameter, "encoder vectors have mismatched dimensions");
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace remind

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "remind/detail/strings.hpp"
#include "remind/error.hpp"

namespace remind {

using TokenId = int32_t;

// Vocabulary of tokens with unit-normalized embedding rows and eagerly
// computed exact cosine nearest-neighbor lists. Immutable after load and
// safe to share across threads.
class TokenEmbeddingTable {
public:
    // Builds from in-memory rows. Rows are L2-normalized; a zero row is a
    // data error since cosine similarity is undefined for it.
    static TokenEmbeddingTable build(std::vector<std::string> tokens,
                                     std::vector<std::vector<double>> rows,
                                     int m_max) {
        TokenEmbeddingTable t;
        if (tokens.size() != rows.size())
            raise(ErrorKind::Parameter, "token/row count mismatch");
        if (tokens.empty()) raise(ErrorKind::Parameter, "empty embedding table");
        if (m_max < 1 || static_cast<size_t>(m_max) >= tokens.size())
            raise(ErrorKind::Parameter,
                  "m_max must satisfy 1 <= m_max < vocab_size (got m_max=" +
                      std::to_string(m_max) + ", vocab_size=" + std::to_string(tokens.size()) + ")");
        t.dim_ = static_cast<int>(rows[0].size());
        if (t.dim_ < 1) raise(ErrorKind::Format, "embedding dimension must be >= 1");
        t.tokens_ = std::move(tokens);
        t.vocab_size_ = static_cast<TokenId>(t.tokens_.size());
        t.m_max_ = m_max;
        t.embeddings_.resize(static_cast<size_t>(t.vocab_size_) * t.dim_);
        for (size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<int>(rows[i].size()) != t.dim_)
                raise(ErrorKind::Format, "row " + std::to_string(i) + " has dimension " +
                                             std::to_string(rows[i].size()) + ", expected " +
                                             std::to_string(t.dim_));
            double norm2 = 0;
            for (double v : rows[i]) {
                if (!std::isfinite(v))
                    raise(ErrorKind::Format, "non-finite value in embedding row " + std::to_string(i));
                norm2 += v * v;
            }
            if (norm2 <= 0)
                raise(ErrorKind::Data, "zero embedding vector at row " + std::to_string(i) +
                                           " cannot be normalized");
            // Already-unit rows pass through untouched so save/load round-trips
            // to the exact same doubles.
            const double inv = std::abs(norm2 - 1.0) <= 1e-12 ? 1.0 : 1.0 / std::sqrt(norm2);
            for (int d = 0; d < t.dim_; ++d)
                t.embeddings_[i * t.dim_ + d] = rows[i][d] * inv;
        }
        t.build_neighbor_lists();
        return t;
    }

    // Loads the `ill-emb v1` table format: a header line
    // `ill-emb v1 <vocab_size> <dim>`, then one `token \t floats...` line
    // per token.
    static TokenEmbeddingTable load(const std::string& path, int m_max) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorKind::Format, "cannot open embedding table file: " + path);
        std::string line;
        if (!std::getline(in, line))
            raise(ErrorKind::Format, path + ":1: empty file, expected 'ill-emb v1' header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto header = detail::split(line, ' ');
        if (header.size() != 4 || header[0] != "ill-emb" || header[1] != "v1")
            raise(ErrorKind::Format, path + ":1: bad header, expected 'ill-emb v1 <vocab_size> <dim>'");
        const long vocab_size = detail::parse_long(header[2], path + ":1");
        const long dim = detail::parse_long(header[3], path + ":1");
        if (vocab_size < 1 || dim < 1)
            raise(ErrorKind::Format, path + ":1: vocab_size and dim must be positive");
        if (m_max >= vocab_size)
            raise(ErrorKind::Parameter, "m_max (" + std::to_string(m_max) +
                                            ") must be smaller than vocab_size (" +
                                            std::to_string(vocab_size) + ")");
        std::vector<std::string> tokens;
        std::vector<std::vector<double>> rows;
        tokens.reserve(vocab_size);
        rows.reserve(vocab_size);
        long lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() && static_cast<long>(tokens.size()) == vocab_size) continue;
            const std::string where = path + ":" + std::to_string(lineno);
            size_t tab = line.find('\t');
            if (tab == std::string::npos)
                raise(ErrorKind::Format, where + ": missing tab between token and embedding");
            tokens.push_back(detail::unescape_token(std::string_view(line).substr(0, tab), where));
            auto fields = detail::split(std::string_view(line).substr(tab + 1), ' ');
            if (static_cast<long>(fields.size()) != dim)
                raise(ErrorKind::Format, where + ": expected " + std::to_string(dim) +
                                             " floats, got " + std::to_string(fields.size()));
            std::vector<double> row(dim);
            for (long d = 0; d < dim; ++d) row[d] = detail::parse_double(fields[d], where);
            rows.push_back(std::move(row));
        }
        if (static_cast<long>(tokens.size()) != vocab_size)
            raise(ErrorKind::Format, path + ": header declares " + std::to_string(vocab_size) +
                                         " tokens but file has " + std::to_string(tokens.size()));
        return build(std::move(tokens), std::move(rows), m_max);
    }

    // Writes the same format `load` reads.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) raise(ErrorKind::Format, "cannot open for writing: " + path);
        out << "ill-emb v1 " << vocab_size_ << ' ' << dim_ << '\n';
        for (TokenId t = 0; t < vocab_size_; ++t) {
            out << detail::escape_token(tokens_[t]) << '\t';
            for (int d = 0; d < dim_; ++d) {
                if (d) out << ' ';
                out << detail::format_full(embeddings_[static_cast<size_t>(t) * dim_ + d]);
            }
            out << '\n';
        }
    }

    TokenId vocab_size() const { return vocab_size_; }
    int dim() const { return dim_; }
    int m_max() const { return m_max_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(TokenId id) const { return tokens_[id]; }

    const double* row(TokenId id) const { return embeddings_.data() + static_cast<size_t>(id) * dim_; }

    double cosine(TokenId a, TokenId b) const {
        const double* ra = row(a);
        const double* rb = row(b);
        double dot = 0;
        for (int d = 0; d < dim_; ++d) dot += ra[d] * rb[d];
        return dot;
    }

    const std::vector<TokenId>& neighbor_list(TokenId id) const {
        check_token(id);
        return neighbor_lists_[id];
    }

    // j-th nearest neighbor by cosine similarity, 1-indexed, self excluded.
    TokenId nearest_neighbor(TokenId id, int j) const {
        check_token(id);
        if (j < 1 || j > m_max_)
            raise(ErrorKind::Parameter, "neighbor rank " + std::to_string(j) +
                                            " outside [1, " + std::to_string(m_max_) + "]");
        return neighbor_lists_[id][j - 1];
    }

    void check_token(TokenId id) const {
        if (id < 0 || id >= vocab_size_)
            raise(ErrorKind::Data, "token id " + std::to_string(id) + " outside vocabulary of size " +
                                       std::to_string(vocab_size_));
    }

private:
    TokenEmbeddingTable() = default;

    void build_neighbor_lists() {
        neighbor_lists_.assign(vocab_size_, {});
        const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(vocab_size_));
        auto work = [&](TokenId begin, TokenId end) {
            std::vector<std::pair<double, TokenId>> sims;
            sims.reserve(vocab_size_ - 1);
            for (TokenId t = begin; t < end; ++t) {
                sims.clear();
                for (TokenId u = 0; u < vocab_size_; ++u) {
                    if (u == t) continue;
                    sims.emplace_back(cosine(t, u), u);
                }
                // non-increasing similarity, ties by ascending token id
                auto cmp = [](const std::pair<double, TokenId>& a, const std::pair<double, TokenId>& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second < b.second;
                };
                std::partial_sort(sims.begin(), sims.begin() + m_max_, sims.end(), cmp);
                auto& list = neighbor_lists_[t];
                list.resize(m_max_);
                for (int j = 0; j < m_max_; ++j) list[j] = sims[j].second;
            }
        };
        if (workers <= 1) {
            work(0, vocab_size_);
            return;
        }
        std::vector<std::thread> threads;
        const TokenId chunk = (vocab_size_ + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            TokenId begin = static_cast<TokenId>(w) * chunk;
            TokenId end = std::min<TokenId>(begin + chunk, vocab_size_);
            if (begin >= end) break;
            threads.emplace_back(work, begin, end);
        }
        for (auto& th : threads) th.join();
    }

    TokenId vocab_size_ = 0;
    int dim_ = 0;
    int m_max_ = 0;
    std::vector<std::string> tokens_;
    std::vector<double> embeddings_;  // row-major vocab_size x dim, unit rows
    std::vector<std::vector<TokenId>> neighbor_lists_;
};

}  // namespace remind

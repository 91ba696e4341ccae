#pragma once

#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "remind/detail/strings.hpp"
#include "remind/embedding.hpp"
#include "remind/error.hpp"

namespace remind {

// Maps text to token ids and back. Two kinds:
//  - whitespace: words are non-whitespace runs looked up verbatim in a
//    vocabulary (typically the embedding table's token list); decode joins
//    with single spaces.
//  - bpe: byte-level byte-pair encoding from the usual two-file layout
//    (vocab: one token per line, rank = line number; merges: `tokenA tokenB`
//    per line, `#`-header line skipped). Token strings in both files use
//    the same \xNN escaping as the embedding table, with space rendered as
//    \x20 so the space- and line-delimited layouts stay unambiguous.
class Tokenizer {
public:
    enum class Kind { Whitespace, Bpe };

    static Tokenizer whitespace(const std::vector<std::string>& vocab) {
        Tokenizer t;
        t.kind_ = Kind::Whitespace;
        t.init_vocab(vocab, "whitespace vocab");
        return t;
    }

    static Tokenizer bpe_from_files(const std::string& vocab_path, const std::string& merges_path) {
        Tokenizer t;
        t.kind_ = Kind::Bpe;
        std::vector<std::string> vocab;
        {
            std::ifstream in(vocab_path, std::ios::binary);
            if (!in) raise(ErrorKind::Format, "cannot open vocab file: " + vocab_path);
            std::string line;
            long lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                vocab.push_back(detail::unescape_token(line, vocab_path + ":" + std::to_string(lineno)));
            }
            if (vocab.empty()) raise(ErrorKind::Format, vocab_path + ": empty vocab file");
        }
        t.init_vocab(vocab, vocab_path);
        {
            std::ifstream in(merges_path, std::ios::binary);
            if (!in) raise(ErrorKind::Format, "cannot open merges file: " + merges_path);
            std::string line;
            long lineno = 0;
            int rank = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                if (lineno == 1 && line[0] == '#') continue;  // header line
                const std::string where = merges_path + ":" + std::to_string(lineno);
                size_t sp = line.find(' ');
                if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() ||
                    line.find(' ', sp + 1) != std::string::npos)
                    raise(ErrorKind::Format, where + ": expected exactly 'tokenA tokenB'");
                std::string a = detail::unescape_token(std::string_view(line).substr(0, sp), where);
                std::string b = detail::unescape_token(std::string_view(line).substr(sp + 1), where);
                t.merge_ranks_.emplace(std::make_pair(std::move(a), std::move(b)), rank++);
            }
        }
        return t;
    }

    Kind kind() const { return kind_; }
    size_t vocab_size() const { return vocab_.size(); }
    const std::vector<std::string>& vocab() const { return vocab_; }

    std::vector<TokenId> encode(const std::string& text) const {
        return kind_ == Kind::Whitespace ? encode_whitespace(text) : encode_bpe(text);
    }

    std::string decode(const std::vector<TokenId>& ids) const {
        std::string out;
        for (size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= vocab_.size())
                raise(ErrorKind::Data, "token id " + std::to_string(ids[i]) + " outside vocabulary");
            if (kind_ == Kind::Whitespace && i > 0) out.push_back(' ');
            out += vocab_[ids[i]];
        }
        return out;
    }

private:
    Tokenizer() = default;

    void init_vocab(const std::vector<std::string>& vocab, const std::string& where) {
        vocab_ = vocab;
        token_to_id_.reserve(vocab.size());
        for (size_t i = 0; i < vocab_.size(); ++i) {
            auto [it, fresh] = token_to_id_.emplace(vocab_[i], static_cast<TokenId>(i));
            if (!fresh)
                raise(ErrorKind::Format, where + ": duplicate token '" +
                                             detail::escape_token(vocab_[i], true) + "'");
        }
    }

    static bool is_ws(char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    TokenId lookup(const std::string& tok, const char* what) const {
        auto it = token_to_id_.find(tok);
        if (it == token_to_id_.end())
            raise(ErrorKind::Data, std::string(what) + " '" + detail::escape_token(tok, true) +
                                       "' not in vocabulary");
        return it->second;
    }

    std::vector<TokenId> encode_whitespace(const std::string& text) const {
        std::vector<TokenId> ids;
        size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && is_ws(text[i])) ++i;
            size_t j = i;
            while (j < text.size() && !is_ws(text[j])) ++j;
            if (j > i) ids.push_back(lookup(text.substr(i, j - i), "word"));
            i = j;
        }
        return ids;
    }

    // Splits text into BPE work units: each non-whitespace run takes at most
    // one directly preceding space with it (the " word" convention); any
    // remaining whitespace forms its own unit. Concatenating the units
    // reproduces the input exactly.
    std::vector<std::string> chunk(const std::string& text) const {
        std::vector<std::string> chunks;
        size_t i = 0;
        const size_t n = text.size();
        while (i < n) {
            if (!is_ws(text[i])) {
                size_t j = i;
                while (j < n && !is_ws(text[j])) ++j;
                chunks.push_back(text.substr(i, j - i));
                i = j;
                continue;
            }
            size_t j = i;
            while (j < n && is_ws(text[j])) ++j;
            if (j < n && text[j - 1] == ' ') {
                if (j - 1 > i) chunks.push_back(text.substr(i, j - 1 - i));
                size_t k = j;
                while (k < n && !is_ws(text[k])) ++k;
                chunks.push_back(" " + text.substr(j, k - j));
                i = k;
            } else {
                chunks.push_back(text.substr(i, j - i));
                i = j;
            }
        }
        return chunks;
    }

    std::vector<TokenId> encode_bpe(const std::string& text) const {
        std::vector<TokenId> ids;
        for (const auto& c : chunk(text)) bpe_chunk(c, ids);
        return ids;
    }

    void bpe_chunk(const std::string& chunk, std::vector<TokenId>& out) const {
        std::vector<std::string> parts;
        parts.reserve(chunk.size());
        for (char c : chunk) parts.emplace_back(1, c);
        while (parts.size() >= 2) {
            int best_rank = std::numeric_limits<int>::max();
            size_t best = 0;
            for (size_t i = 0; i + 1 < parts.size(); ++i) {
                auto it = merge_ranks_.find(std::make_pair(parts[i], parts[i + 1]));
                if (it != merge_ranks_.end() && it->second < best_rank) {
                    best_rank = it->second;
                    best = i;
                }
            }
            if (best_rank == std::numeric_limits<int>::max()) break;
            const std::string a = parts[best];
            const std::string b = parts[best + 1];
            std::vector<std::string> merged;
            merged.reserve(parts.size());
            for (size_t i = 0; i < parts.size();) {
                if (i + 1 < parts.size() && parts[i] == a && parts[i + 1] == b) {
                    merged.push_back(a + b);
                    i += 2;
                } else {
                    merged.push_back(std::move(parts[i]));
                    ++i;
                }
            }
            parts = std::move(merged);
        }
        for (const auto& p : parts) out.push_back(lookup(p, "BPE token"));
    }

    Kind kind_ = Kind::Whitespace;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::map<std::pair<std::string, std::string>, int> merge_ranks_;
};

}  // namespace remind

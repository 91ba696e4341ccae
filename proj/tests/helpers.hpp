#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "remind/embedding.hpp"
#include "remind/encoder.hpp"
#include "remind/rng.hpp"

namespace test_support {

// Encoder mapping each text to a fixed low-dimensional point so distances
// are easy to hand-check. Unmapped texts land on a text-dependent point.
class PointEncoder final : public remind::TextEncoder {
public:
    int dim() const override { return 2; }
    std::vector<double> encode(const std::string& text) const override {
        auto it = points_.find(text);
        if (it != points_.end()) return it->second;
        const uint64_t h = remind::rng::hash_bytes(1, text.data(), text.size());
        return {remind::rng::to_unit_double(h),
                remind::rng::to_unit_double(remind::rng::splitmix64(h))};
    }
    void put(const std::string& text, std::vector<double> p) { points_[text] = std::move(p); }

private:
    std::map<std::string, std::vector<double>> points_;
};

// Self-cleaning unique directory under the system temp root.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<uint64_t> counter{0};
        std::random_device rd;
        const auto name = "remind-test-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)) + "-" + std::to_string(rd());
        path = std::filesystem::temp_directory_path() / name;
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

// Deterministic random embedding table with tokens w0..w{n-1}.
inline remind::TokenEmbeddingTable random_table(int vocab, int dim, int m_max,
                                                uint64_t seed = 11) {
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> rows;
    tokens.reserve(vocab);
    rows.reserve(vocab);
    for (int i = 0; i < vocab; ++i) {
        tokens.push_back("w" + std::to_string(i));
        auto rng = remind::CounterRng::keyed(seed, static_cast<uint64_t>(i));
        std::vector<double> row(dim);
        for (int d = 0; d < dim; ++d) row[d] = rng.next_signed_unit();
        rows.push_back(std::move(row));
    }
    return remind::TokenEmbeddingTable::build(std::move(tokens), std::move(rows), m_max);
}

// Random token text over the w0..w{vocab-1} vocabulary.
inline std::string random_text(int vocab, int length, uint64_t seed) {
    auto rng = remind::CounterRng::keyed(seed, 0x7e47);
    std::string out;
    for (int t = 0; t < length; ++t) {
        if (t) out += ' ';
        out += "w" + std::to_string(rng.next_range(0, static_cast<uint64_t>(vocab - 1)));
    }
    return out;
}

}  // namespace test_support

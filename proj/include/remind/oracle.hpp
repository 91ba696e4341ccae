#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "remind/detail/sha256.hpp"
#include "remind/encoder.hpp"
#include "remind/error.hpp"
#include "remind/rng.hpp"

namespace remind {

// Per-token negative log-likelihoods of one text under the audited model.
struct LossProfile {
    std::vector<double> token_nll;  // nats
    double mean_nll = 0.0;

    int token_count() const { return static_cast<int>(token_nll.size()); }

    static LossProfile from_nlls(std::vector<double> nlls) {
        if (nlls.empty()) raise(ErrorKind::Data, "loss profile must have at least one token");
        double sum = 0;
        for (double v : nlls) {
            if (!std::isfinite(v)) raise(ErrorKind::Data, "non-finite token NLL in loss profile");
            sum += v;
        }
        LossProfile p;
        p.mean_nll = sum / static_cast<double>(nlls.size());
        p.token_nll = std::move(nlls);
        return p;
    }
};

// Per-position mean / standard deviation of log-probability over the full
// vocabulary (consumed by MIN-K%++).
struct DistributionStats {
    std::vector<double> mu;
    std::vector<double> sigma;
};

struct OracleCapabilities {
    bool per_token_nll = true;  // always present
    bool vocab_distribution_stats = false;
    bool generation = false;
};

// One scoring request. `sample_id` identifies which audited sample the text
// belongs to; the synthetic oracle needs it to locate the sample's
// registered geometry, real oracles ignore it.
struct ScoreRequest {
    std::string text;
    std::string sample_id;
};

// Black-box interface to the model under audit.
class Oracle {
public:
    virtual ~Oracle() = default;

    virtual std::string identity() const = 0;
    virtual OracleCapabilities capabilities() const = 0;

    virtual LossProfile score_text(const ScoreRequest& req) = 0;

    virtual DistributionStats distribution_stats(const ScoreRequest&) {
        raise(ErrorKind::Capability, "oracle '" + identity() +
                                         "' does not expose vocab distribution stats");
    }

    virtual std::string generate(const std::string&, int, const std::string& = {}) {
        raise(ErrorKind::Capability, "oracle '" + identity() + "' does not support generation");
    }

    // Material (beyond kind and identity) that makes a request unique for
    // caching. Defaults to the exact request text; oracles whose answers
    // depend on more than the text extend it.
    virtual std::string request_key_material(const ScoreRequest& req) const { return req.text; }
};

inline std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> toks;
    std::istringstream in(text);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

// ---------------------------------------------------------------------------
// Synthetic geometry oracle: a test double whose loss surface around each
// registered sample follows a configured profile. Losses are a pure
// function of (sample id, text, seed).
// ---------------------------------------------------------------------------

struct SyntheticProfile {
    enum class Kind { Flat, Basin, Volatile };
    Kind kind = Kind::Flat;
    double center_loss = 0.0;  // flat/basin center; volatile mean
    double slope = 0.0;        // basin only
    double jitter = 0.0;       // flat/basin
    double amplitude = 0.0;    // volatile only

    static SyntheticProfile flat(double center, double jitter) {
        return {Kind::Flat, center, 0.0, jitter, 0.0};
    }
    static SyntheticProfile basin(double center, double slope, double jitter) {
        return {Kind::Basin, center, slope, jitter, 0.0};
    }
    static SyntheticProfile volatile_field(double mean, double amplitude) {
        return {Kind::Volatile, mean, 0.0, 0.0, amplitude};
    }
};

class SyntheticOracle final : public Oracle {
public:
    // `distribution` (optional): next-token probabilities reported by
    // distribution_stats at every position. An empty vector disables the
    // stats capability; `uniform_vocab(n)` below is the common setup.
    SyntheticOracle(const TextEncoder& encoder, uint64_t seed, std::string tag = "default",
                    std::vector<double> distribution = {})
        : encoder_(&encoder), seed_(seed), tag_(std::move(tag)) {
        set_distribution(std::move(distribution));
    }

    void set_distribution(std::vector<double> probs) {
        if (probs.empty()) {
            stats_mu_ = stats_sigma_ = 0;
            has_stats_ = false;
            return;
        }
        double sum = 0;
        for (double q : probs) {
            if (q <= 0) raise(ErrorKind::Config, "distribution probabilities must be positive");
            sum += q;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            raise(ErrorKind::Config, "distribution probabilities must sum to 1");
        double mu = 0;
        for (double q : probs) mu += std::log(q);
        mu /= static_cast<double>(probs.size());
        double var = 0;
        for (double q : probs) {
            const double d = std::log(q) - mu;
            var += d * d;
        }
        var /= static_cast<double>(probs.size());
        stats_mu_ = mu;
        stats_sigma_ = std::sqrt(var);
        has_stats_ = true;
    }

    void set_uniform_distribution(size_t vocab_size) {
        if (vocab_size == 0) raise(ErrorKind::Config, "uniform distribution needs vocab_size >= 1");
        stats_mu_ = -std::log(static_cast<double>(vocab_size));
        stats_sigma_ = 0.0;
        has_stats_ = true;
    }

    void set_generation_enabled(bool on) { generation_ = on; }

    void register_sample(const std::string& id, const std::string& original_text,
                         const SyntheticProfile& profile) {
        std::lock_guard<std::mutex> lock(mutex_);
        registry_[id] = Entry{original_text, encoder_->encode(original_text), profile};
    }

    std::string identity() const override {
        return "synthetic|" + tag_ + "|seed=" + std::to_string(seed_);
    }

    OracleCapabilities capabilities() const override {
        return {true, has_stats_, generation_};
    }

    LossProfile score_text(const ScoreRequest& req) override {
        const auto toks = whitespace_tokens(req.text);
        if (toks.empty()) raise(ErrorKind::Data, "text has no tokens");
        const Entry entry = find(req.sample_id);
        double value;
        if (req.text == entry.original_text) {
            value = entry.profile.center_loss;  // originals sit exactly at the profile center
        } else {
            const double dist = euclidean_distance(entry.embedding, encoder_->encode(req.text));
            const double u = noise(req.sample_id, req.text);
            const auto& pr = entry.profile;
            switch (pr.kind) {
                case SyntheticProfile::Kind::Flat:
                    value = pr.center_loss + pr.jitter * u;
                    break;
                case SyntheticProfile::Kind::Basin:
                    value = pr.center_loss + pr.slope * dist + pr.jitter * u;
                    break;
                case SyntheticProfile::Kind::Volatile:
                default:
                    value = pr.center_loss + pr.amplitude * u;
                    break;
            }
        }
        if (value < 0) value = 0;  // NLLs are non-negative
        return LossProfile::from_nlls(std::vector<double>(toks.size(), value));
    }

    DistributionStats distribution_stats(const ScoreRequest& req) override {
        if (!has_stats_)
            raise(ErrorKind::Capability, "synthetic oracle configured without a distribution");
        const auto toks = whitespace_tokens(req.text);
        if (toks.empty()) raise(ErrorKind::Data, "text has no tokens");
        DistributionStats s;
        s.mu.assign(toks.size(), stats_mu_);
        s.sigma.assign(toks.size(), stats_sigma_);
        return s;
    }

    // Echo generator: returns the prompt's last max_new_tokens tokens.
    std::string generate(const std::string& prompt, int max_new_tokens,
                         const std::string& = {}) override {
        if (!generation_) raise(ErrorKind::Capability, "synthetic oracle generation disabled");
        if (max_new_tokens < 0) raise(ErrorKind::Parameter, "max_new_tokens must be >= 0");
        if (max_new_tokens == 0) return "";
        const auto toks = whitespace_tokens(prompt);
        const size_t take = std::min(toks.size(), static_cast<size_t>(max_new_tokens));
        std::string out;
        for (size_t i = toks.size() - take; i < toks.size(); ++i) {
            if (!out.empty()) out.push_back(' ');
            out += toks[i];
        }
        return out;
    }

    // Synthetic losses depend on the sample, not just the text.
    std::string request_key_material(const ScoreRequest& req) const override {
        return req.sample_id + '\x1f' + req.text;
    }

private:
    struct Entry {
        std::string original_text;
        std::vector<double> embedding;
        SyntheticProfile profile;
    };

    Entry find(const std::string& sample_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = registry_.find(sample_id);
        if (it == registry_.end())
            raise(ErrorKind::Data, "sample '" + sample_id + "' not registered with synthetic oracle");
        return it->second;
    }

    double noise(const std::string& sample_id, const std::string& text) const {
        uint64_t h = rng::splitmix64(seed_);
        h = rng::hash_bytes(h, sample_id.data(), sample_id.size());
        h = rng::hash_bytes(h, text.data(), text.size());
        return rng::to_signed_unit(rng::splitmix64(h));
    }

    const TextEncoder* encoder_;
    uint64_t seed_;
    std::string tag_;
    double stats_mu_ = 0, stats_sigma_ = 0;
    bool has_stats_ = false;
    bool generation_ = true;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Entry> registry_;
};

// ---------------------------------------------------------------------------
// Caching oracle: append-only JSON-lines replay cache, optionally backed by
// an inner oracle. Each completed call is appended and flushed before its
// result is returned, so an interrupted run resumes from the cache.
// ---------------------------------------------------------------------------

struct CacheStats {
    std::atomic<uint64_t> hits{0};
    std::atomic<uint64_t> misses{0};
    std::atomic<uint64_t> network_calls{0};
};

class CachingOracle final : public Oracle {
public:
    // inner == nullptr creates a replay-only oracle; replay_identity must
    // then name the oracle the cache was recorded against.
    CachingOracle(std::string cache_path, Oracle* inner, std::string replay_identity = "")
        : path_(std::move(cache_path)), inner_(inner), replay_identity_(std::move(replay_identity)) {
        if (!inner_ && replay_identity_.empty())
            raise(ErrorKind::Config, "replay cache requires the recorded oracle identity");
        load();
        out_.open(path_, std::ios::binary | std::ios::app);
        if (!out_) raise(ErrorKind::Oracle, "cannot open cache file for append: " + path_);
    }

    std::string identity() const override {
        return inner_ ? inner_->identity() : replay_identity_;
    }

    OracleCapabilities capabilities() const override {
        if (inner_) return inner_->capabilities();
        // Replay capabilities are whatever kinds the recorded run used.
        OracleCapabilities caps;
        caps.vocab_distribution_stats = seen_kinds_.count("stats") > 0;
        caps.generation = seen_kinds_.count("gen") > 0;
        return caps;
    }

    LossProfile score_text(const ScoreRequest& req) override {
        nlohmann::json request{{"text", req.text}};
        if (!req.sample_id.empty()) request["sample_id"] = req.sample_id;
        auto response = fetch("nll", score_materials(req), request, [&]() {
            auto profile = inner_->score_text(req);
            return nlohmann::json{{"token_nll", profile.token_nll}};
        });
        auto it = response.find("token_nll");
        if (it == response.end() || !it->is_array())
            raise(ErrorKind::Format, "cache record for kind 'nll' lacks token_nll array");
        return LossProfile::from_nlls(it->get<std::vector<double>>());
    }

    DistributionStats distribution_stats(const ScoreRequest& req) override {
        nlohmann::json request{{"text", req.text}};
        if (!req.sample_id.empty()) request["sample_id"] = req.sample_id;
        auto response = fetch("stats", score_materials(req), request, [&]() {
            auto stats = inner_->distribution_stats(req);
            return nlohmann::json{{"mu", stats.mu}, {"sigma", stats.sigma}};
        });
        DistributionStats s;
        s.mu = response.at("mu").get<std::vector<double>>();
        s.sigma = response.at("sigma").get<std::vector<double>>();
        if (s.mu.size() != s.sigma.size())
            raise(ErrorKind::Format, "cache record for kind 'stats' has mismatched mu/sigma");
        return s;
    }

    std::string generate(const std::string& prompt, int max_new_tokens,
                         const std::string& sample_id = {}) override {
        const std::string material = prompt + '\x1f' + std::to_string(max_new_tokens);
        nlohmann::json request{{"prompt", prompt}, {"max_new_tokens", max_new_tokens}};
        auto response = fetch("gen", {material}, request, [&]() {
            return nlohmann::json{{"text", inner_->generate(prompt, max_new_tokens, sample_id)}};
        });
        return response.at("text").get<std::string>();
    }

    std::string request_key_material(const ScoreRequest& req) const override {
        return inner_ ? inner_->request_key_material(req) : Oracle::request_key_material(req);
    }

    const CacheStats& stats() const { return stats_; }
    size_t record_count() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_.size();
    }

    std::string key_for(const std::string& kind, const std::string& material) const {
        detail::Sha256 h;
        const std::string id = identity();
        h.update(id.data(), id.size());
        h.update("\x1f", 1);
        h.update(kind.data(), kind.size());
        h.update("\x1f", 1);
        h.update(material.data(), material.size());
        return const_cast<detail::Sha256&>(h).hex_digest();
    }

private:
    // Key-material candidates for a scoring request. With a live inner
    // oracle the inner's convention is authoritative; replay mode cannot
    // know which convention recorded the file, so it probes both.
    std::vector<std::string> score_materials(const ScoreRequest& req) const {
        if (inner_) return {inner_->request_key_material(req)};
        if (req.sample_id.empty()) return {req.text};
        return {req.sample_id + '\x1f' + req.text, req.text};
    }

    template <typename Fetch>
    nlohmann::json fetch(const std::string& kind, const std::vector<std::string>& materials,
                         const nlohmann::json& request, Fetch&& call_inner) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            for (const auto& material : materials) {
                auto it = records_.find(key_for(kind, material));
                if (it != records_.end()) {
                    stats_.hits.fetch_add(1, std::memory_order_relaxed);
                    return it->second;
                }
            }
        }
        if (!inner_)
            raise(ErrorKind::Oracle, "cache miss for kind '" + kind +
                                         "' and no backing oracle (cold or partial cache)");
        stats_.misses.fetch_add(1, std::memory_order_relaxed);
        stats_.network_calls.fetch_add(1, std::memory_order_relaxed);
        nlohmann::json response = call_inner();
        const std::string key = key_for(kind, materials.front());
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto [it, fresh] = records_.emplace(key, response);
            if (!fresh) return it->second;  // another thread beat us; keep the first record
            nlohmann::json record{{"key", key}, {"kind", kind}, {"request", request},
                                  {"response", response}};
            out_ << record.dump() << '\n';
            out_.flush();
            if (!out_) raise(ErrorKind::Oracle, "failed to append to cache file: " + path_);
            seen_kinds_.insert(kind);
        }
        return response;
    }

    void load() {
        std::ifstream in(path_, std::ios::binary);
        if (!in) return;  // absent cache file starts empty
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
            if (record.is_discarded()) {
                // A truncated final line is the footprint of an interrupted
                // append; anything earlier is corruption.
                if (in.peek() == EOF) break;
                raise(ErrorKind::Format,
                      path_ + ":" + std::to_string(lineno) + ": malformed cache record");
            }
            if (!record.contains("key") || !record.contains("kind") || !record.contains("response"))
                raise(ErrorKind::Format,
                      path_ + ":" + std::to_string(lineno) + ": cache record missing fields");
            records_.emplace(record["key"].get<std::string>(), record["response"]);
            seen_kinds_.insert(record["kind"].get<std::string>());
        }
    }

    std::string path_;
    Oracle* inner_;
    std::string replay_identity_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> records_;
    std::set<std::string> seen_kinds_;
    std::ofstream out_;
    CacheStats stats_;
};

}  // namespace remind

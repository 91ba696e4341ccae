#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "remind/detail/sha256.hpp"
#include "remind/detail/strings.hpp"
#include "remind/error.hpp"
#include "remind/oracle.hpp"

namespace remind {

enum class OracleKind { Synthetic, Http, Replay };
enum class EncoderKind { MeanPooled, Remote };
enum class TokenizerKind { Whitespace, Bpe };
enum class AucAtFprMode { Tpr, Partial };

struct ExperimentConfig {
    // corpus
    std::string corpus_retain, corpus_forget, corpus_holdout;
    std::string text_template;
    std::string view = "original";  // original | paraphrased | both
    long per_class_cap = 1000;

    // oracle
    OracleKind oracle_kind = OracleKind::Synthetic;
    std::string oracle_url, oracle_model, oracle_identity, oracle_auth_env;
    long oracle_parallelism = 1;
    std::string cache_path;

    // synthetic geometry (class profile templates; center drawn per sample)
    std::string synthetic_retained = "basin(slope=3,jitter=0.05)";
    std::string synthetic_forgotten = "flat(jitter=0.05)";
    std::string synthetic_holdout = "volatile(amplitude=1.0)";
    double synthetic_loss_low = 1.5, synthetic_loss_high = 2.5;
    long synthetic_vocab_size = 50;  // 0 disables distribution stats

    // vocabulary and tokenization
    std::string embedding_table;
    TokenizerKind tokenizer = TokenizerKind::Whitespace;
    std::string tokenizer_vocab, tokenizer_merges;

    // perturbation
    double p = 0.3;
    long m = 20;
    long K = 15;
    long max_tokens = 300;
    long resample_cap = 10;
    uint64_t seed = 0;

    // encoder
    EncoderKind encoder = EncoderKind::MeanPooled;
    std::string encoder_url, encoder_model, encoder_auth_env;

    // classifiers
    std::string classifiers = "logistic_regression,random_forest";
    double lr_lambda = 1e-3;
    double lr_tolerance = 1e-7;
    long lr_max_iterations = 5000;
    long rf_trees = 200;
    long rf_max_depth = 12;
    long rf_min_leaf = 2;
    long rf_features_per_split = 0;  // 0 selects ceil(sqrt(feature count))

    // metrics and baselines
    double fpr_cap = 0.01;
    AucAtFprMode auc_at_fpr_mode = AucAtFprMode::Tpr;
    double min_k_pct = 20.0;
    std::string baselines =
        "loss_based,zlib_compression,min_k,min_k_pp,rouge_l_f1,spv_mia_mean,spv_mia_max";
    double test_size = 0.2;

    // outputs
    std::string output_dir = "out";
    long histogram_bins = 40;

    std::vector<std::string> classifier_list() const {
        std::vector<std::string> out;
        for (auto part : detail::split(classifiers, ','))
            if (!detail::trim(part).empty()) out.emplace_back(detail::trim(part));
        return out;
    }
    std::vector<std::string> baseline_list() const {
        std::vector<std::string> out;
        for (auto part : detail::split(baselines, ','))
            if (!detail::trim(part).empty()) out.emplace_back(detail::trim(part));
        return out;
    }

    // Every field as key=value, sorted by key. This is the hashed form, so
    // defaults participate in the hash and any change misses old caches.
    std::map<std::string, std::string> canonical_items() const {
        std::map<std::string, std::string> kv;
        kv["corpus_retain"] = corpus_retain;
        kv["corpus_forget"] = corpus_forget;
        kv["corpus_holdout"] = corpus_holdout;
        kv["text_template"] = text_template;
        kv["view"] = view;
        kv["per_class_cap"] = std::to_string(per_class_cap);
        kv["oracle_kind"] = oracle_kind == OracleKind::Synthetic ? "synthetic"
                            : oracle_kind == OracleKind::Http    ? "http"
                                                                 : "replay";
        kv["oracle_url"] = oracle_url;
        kv["oracle_model"] = oracle_model;
        kv["oracle_identity"] = oracle_identity;
        kv["oracle_auth_env"] = oracle_auth_env;
        kv["oracle_parallelism"] = std::to_string(oracle_parallelism);
        kv["cache_path"] = cache_path;
        kv["synthetic_retained"] = synthetic_retained;
        kv["synthetic_forgotten"] = synthetic_forgotten;
        kv["synthetic_holdout"] = synthetic_holdout;
        kv["synthetic_loss_low"] = detail::format_full(synthetic_loss_low);
        kv["synthetic_loss_high"] = detail::format_full(synthetic_loss_high);
        kv["synthetic_vocab_size"] = std::to_string(synthetic_vocab_size);
        kv["embedding_table"] = embedding_table;
        kv["tokenizer"] = tokenizer == TokenizerKind::Whitespace ? "whitespace" : "bpe";
        kv["tokenizer_vocab"] = tokenizer_vocab;
        kv["tokenizer_merges"] = tokenizer_merges;
        kv["p"] = detail::format_full(p);
        kv["m"] = std::to_string(m);
        kv["K"] = std::to_string(K);
        kv["max_tokens"] = std::to_string(max_tokens);
        kv["resample_cap"] = std::to_string(resample_cap);
        kv["seed"] = std::to_string(seed);
        kv["encoder"] = encoder == EncoderKind::MeanPooled ? "mean-pooled" : "remote";
        kv["encoder_url"] = encoder_url;
        kv["encoder_model"] = encoder_model;
        kv["encoder_auth_env"] = encoder_auth_env;
        kv["classifiers"] = classifiers;
        kv["lr_lambda"] = detail::format_full(lr_lambda);
        kv["lr_tolerance"] = detail::format_full(lr_tolerance);
        kv["lr_max_iterations"] = std::to_string(lr_max_iterations);
        kv["rf_trees"] = std::to_string(rf_trees);
        kv["rf_max_depth"] = std::to_string(rf_max_depth);
        kv["rf_min_leaf"] = std::to_string(rf_min_leaf);
        kv["rf_features_per_split"] = std::to_string(rf_features_per_split);
        kv["fpr_cap"] = detail::format_full(fpr_cap);
        kv["auc_at_fpr_mode"] = auc_at_fpr_mode == AucAtFprMode::Tpr ? "tpr" : "partial";
        kv["min_k_pct"] = detail::format_full(min_k_pct);
        kv["baselines"] = baselines;
        kv["test_size"] = detail::format_full(test_size);
        kv["output_dir"] = output_dir;
        kv["histogram_bins"] = std::to_string(histogram_bins);
        return kv;
    }

    std::string config_hash() const {
        std::string doc;
        for (const auto& [k, v] : canonical_items()) doc += k + "=" + v + "\n";
        return detail::sha256_hex(doc);
    }
};

namespace detail {

inline OracleKind oracle_kind_from(const std::string& v, const std::string& where) {
    if (v == "synthetic") return OracleKind::Synthetic;
    if (v == "http") return OracleKind::Http;
    if (v == "replay") return OracleKind::Replay;
    raise(ErrorKind::Config, where + ": oracle_kind must be synthetic, http, or replay");
}

inline uint64_t parse_seed(std::string_view s, const std::string& where) {
    uint64_t value = 0;
    bool any = false;
    for (char c : trim(s)) {
        if (c < '0' || c > '9') raise(ErrorKind::Config, where + ": seed must be a non-negative integer");
        value = value * 10 + static_cast<uint64_t>(c - '0');
        any = true;
    }
    if (!any) raise(ErrorKind::Config, where + ": empty seed");
    return value;
}

}  // namespace detail

// Applies one key to the config. Shared by the file parser and CLI
// overrides; unknown keys are config errors.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value, const std::string& where,
                               bool& seed_seen) {
    using detail::parse_double;
    using detail::parse_long;
    if (key == "corpus_retain") cfg.corpus_retain = value;
    else if (key == "corpus_forget") cfg.corpus_forget = value;
    else if (key == "corpus_holdout") cfg.corpus_holdout = value;
    else if (key == "text_template") cfg.text_template = value;
    else if (key == "view") cfg.view = value;
    else if (key == "per_class_cap") cfg.per_class_cap = parse_long(value, where);
    else if (key == "oracle_kind") cfg.oracle_kind = detail::oracle_kind_from(value, where);
    else if (key == "oracle_url") cfg.oracle_url = value;
    else if (key == "oracle_model") cfg.oracle_model = value;
    else if (key == "oracle_identity") cfg.oracle_identity = value;
    else if (key == "oracle_auth_env") cfg.oracle_auth_env = value;
    else if (key == "oracle_parallelism") cfg.oracle_parallelism = parse_long(value, where);
    else if (key == "cache_path") cfg.cache_path = value;
    else if (key == "synthetic_retained") cfg.synthetic_retained = value;
    else if (key == "synthetic_forgotten") cfg.synthetic_forgotten = value;
    else if (key == "synthetic_holdout") cfg.synthetic_holdout = value;
    else if (key == "synthetic_loss_low") cfg.synthetic_loss_low = parse_double(value, where);
    else if (key == "synthetic_loss_high") cfg.synthetic_loss_high = parse_double(value, where);
    else if (key == "synthetic_vocab_size") cfg.synthetic_vocab_size = parse_long(value, where);
    else if (key == "embedding_table") cfg.embedding_table = value;
    else if (key == "tokenizer") {
        if (value == "whitespace") cfg.tokenizer = TokenizerKind::Whitespace;
        else if (value == "bpe") cfg.tokenizer = TokenizerKind::Bpe;
        else raise(ErrorKind::Config, where + ": tokenizer must be whitespace or bpe");
    } else if (key == "tokenizer_vocab") cfg.tokenizer_vocab = value;
    else if (key == "tokenizer_merges") cfg.tokenizer_merges = value;
    else if (key == "p") cfg.p = parse_double(value, where);
    else if (key == "m") cfg.m = parse_long(value, where);
    else if (key == "K") cfg.K = parse_long(value, where);
    else if (key == "max_tokens") cfg.max_tokens = parse_long(value, where);
    else if (key == "resample_cap") cfg.resample_cap = parse_long(value, where);
    else if (key == "seed") {
        cfg.seed = detail::parse_seed(value, where);
        seed_seen = true;
    } else if (key == "encoder") {
        if (value == "mean-pooled") cfg.encoder = EncoderKind::MeanPooled;
        else if (value == "remote") cfg.encoder = EncoderKind::Remote;
        else raise(ErrorKind::Config, where + ": encoder must be mean-pooled or remote");
    } else if (key == "encoder_url") cfg.encoder_url = value;
    else if (key == "encoder_model") cfg.encoder_model = value;
    else if (key == "encoder_auth_env") cfg.encoder_auth_env = value;
    else if (key == "classifiers") cfg.classifiers = value;
    else if (key == "lr_lambda") cfg.lr_lambda = parse_double(value, where);
    else if (key == "lr_tolerance") cfg.lr_tolerance = parse_double(value, where);
    else if (key == "lr_max_iterations") cfg.lr_max_iterations = parse_long(value, where);
    else if (key == "rf_trees") cfg.rf_trees = parse_long(value, where);
    else if (key == "rf_max_depth") cfg.rf_max_depth = parse_long(value, where);
    else if (key == "rf_min_leaf") cfg.rf_min_leaf = parse_long(value, where);
    else if (key == "rf_features_per_split") cfg.rf_features_per_split = parse_long(value, where);
    else if (key == "fpr_cap") cfg.fpr_cap = parse_double(value, where);
    else if (key == "auc_at_fpr_mode") {
        if (value == "tpr") cfg.auc_at_fpr_mode = AucAtFprMode::Tpr;
        else if (value == "partial") cfg.auc_at_fpr_mode = AucAtFprMode::Partial;
        else raise(ErrorKind::Config, where + ": auc_at_fpr_mode must be tpr or partial");
    } else if (key == "min_k_pct") cfg.min_k_pct = parse_double(value, where);
    else if (key == "baselines") cfg.baselines = value;
    else if (key == "test_size") cfg.test_size = parse_double(value, where);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "histogram_bins") cfg.histogram_bins = parse_long(value, where);
    else raise(ErrorKind::Config, where + ": unknown config key '" + key + "'");
}

// Flat `key = value` lines; '#' starts a comment; blank lines ignored.
inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Config, "cannot open config file: " + path);
    ExperimentConfig cfg;
    bool seed_seen = false;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos)
            raise(ErrorKind::Config, where + ": expected 'key = value'");
        const std::string key{detail::trim(trimmed.substr(0, eq))};
        const std::string value{detail::trim(trimmed.substr(eq + 1))};
        if (key.empty()) raise(ErrorKind::Config, where + ": empty key");
        apply_config_entry(cfg, key, value, where, seed_seen);
    }
    if (!seed_seen) raise(ErrorKind::Config, path + ": config must set a seed");
    return cfg;
}

// Existence and range checks; run before anything touches the network.
inline void validate_config(const ExperimentConfig& cfg) {
    auto must_exist = [](const std::string& path, const std::string& what) {
        if (path.empty()) raise(ErrorKind::Config, what + " path is not set");
        if (!std::filesystem::exists(path))
            raise(ErrorKind::Config, what + " does not exist: " + path);
    };
    must_exist(cfg.corpus_retain, "corpus_retain");
    must_exist(cfg.corpus_forget, "corpus_forget");
    must_exist(cfg.corpus_holdout, "corpus_holdout");
    must_exist(cfg.embedding_table, "embedding_table");
    if (cfg.tokenizer == TokenizerKind::Bpe) {
        must_exist(cfg.tokenizer_vocab, "tokenizer_vocab");
        must_exist(cfg.tokenizer_merges, "tokenizer_merges");
    }
    if (cfg.view != "original" && cfg.view != "paraphrased" && cfg.view != "both")
        raise(ErrorKind::Config, "view must be original, paraphrased, or both");
    if (cfg.oracle_kind == OracleKind::Http) {
        if (cfg.oracle_url.empty()) raise(ErrorKind::Config, "http oracle requires oracle_url");
        if (cfg.oracle_model.empty()) raise(ErrorKind::Config, "http oracle requires oracle_model");
    }
    if (cfg.oracle_kind == OracleKind::Replay) {
        must_exist(cfg.cache_path, "cache_path (replay oracle)");
        if (cfg.oracle_identity.empty() && (cfg.oracle_url.empty() || cfg.oracle_model.empty()))
            raise(ErrorKind::Config,
                  "replay oracle requires oracle_identity (or oracle_url + oracle_model)");
    }
    if (cfg.encoder == EncoderKind::Remote && cfg.encoder_url.empty())
        raise(ErrorKind::Config, "remote encoder requires encoder_url");
    if (cfg.oracle_parallelism < 1) raise(ErrorKind::Config, "oracle_parallelism must be >= 1");
    if (!(cfg.test_size > 0 && cfg.test_size < 1))
        raise(ErrorKind::Config, "test_size must be in (0, 1)");
    if (cfg.per_class_cap < 1) raise(ErrorKind::Config, "per_class_cap must be >= 1");
    if (cfg.histogram_bins < 1) raise(ErrorKind::Config, "histogram_bins must be >= 1");
    if (!(cfg.fpr_cap > 0 && cfg.fpr_cap <= 1)) raise(ErrorKind::Config, "fpr_cap must be in (0, 1]");
    if (!(cfg.min_k_pct > 0 && cfg.min_k_pct <= 100))
        raise(ErrorKind::Config, "min_k_pct must be in (0, 100]");
    if (cfg.synthetic_loss_low > cfg.synthetic_loss_high)
        raise(ErrorKind::Config, "synthetic loss range is inverted");
    if (cfg.synthetic_vocab_size < 0) raise(ErrorKind::Config, "synthetic_vocab_size must be >= 0");
    for (const auto& name : cfg.classifier_list())
        if (name != "logistic_regression" && name != "random_forest")
            raise(ErrorKind::Config, "unknown classifier '" + name + "'");
    for (const auto& name : cfg.baseline_list())
        if (name != "loss_based" && name != "zlib_compression" && name != "min_k" &&
            name != "min_k_pp" && name != "rouge_l_f1" && name != "spv_mia_mean" &&
            name != "spv_mia_max")
            raise(ErrorKind::Config, "unknown baseline '" + name + "'");
}

// Parses "flat(jitter=0.05)" style profile templates. The center loss is
// supplied per sample by the runner, not by the template.
inline SyntheticProfile parse_profile(const std::string& text, const std::string& where) {
    const auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')')
        raise(ErrorKind::Config, where + ": profile must look like kind(key=value,...)");
    const std::string kind{detail::trim(text.substr(0, open))};
    SyntheticProfile profile;
    if (kind == "flat") profile.kind = SyntheticProfile::Kind::Flat;
    else if (kind == "basin") profile.kind = SyntheticProfile::Kind::Basin;
    else if (kind == "volatile") profile.kind = SyntheticProfile::Kind::Volatile;
    else raise(ErrorKind::Config, where + ": profile kind must be flat, basin, or volatile");

    const std::string args = text.substr(open + 1, text.size() - open - 2);
    for (auto part : detail::split(args, ',')) {
        const auto entry = detail::trim(part);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos)
            raise(ErrorKind::Config, where + ": profile arguments must be key=value");
        const std::string key{detail::trim(entry.substr(0, eq))};
        const double value = detail::parse_double(entry.substr(eq + 1), where);
        if (key == "slope") profile.slope = value;
        else if (key == "jitter") profile.jitter = value;
        else if (key == "amplitude") profile.amplitude = value;
        else raise(ErrorKind::Config, where + ": unknown profile argument '" + key + "'");
    }
    return profile;
}

}  // namespace remind

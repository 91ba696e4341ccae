#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "remind/baselines.hpp"
#include "remind/classifiers.hpp"
#include "remind/config.hpp"
#include "remind/datasets.hpp"
#include "remind/embedding.hpp"
#include "remind/encoder.hpp"
#include "remind/features.hpp"
#include "remind/histograms.hpp"
#include "remind/http.hpp"
#include "remind/metrics.hpp"
#include "remind/oracle.hpp"
#include "remind/perturbation.hpp"
#include "remind/report.hpp"
#include "remind/tokenizer.hpp"

namespace remind {

// Test hooks: before_inner_call runs ahead of every request that reaches the
// backing oracle (cache hits bypass it) and may throw to simulate a crash.
struct RunHooks {
    std::function<void()> before_inner_call;
};

// Full runs everything; WarmCache stops after the scoring loop (fills the
// cache, no evaluation rows); BaselinesOnly skips classifier training.
enum class RunPhase { Full, WarmCache, BaselinesOnly };

struct RunArtifacts {
    std::vector<MethodRow> rows;
    std::vector<FeatureRecord> feature_records;
    std::vector<ScoreRecord> score_records;
    std::string report_csv, report_txt, features_csv, scores_csv;
    std::string config_hash, oracle_identity;
    nlohmann::json cache_stats;  // null when no cache is configured
    std::vector<std::string> warnings;
    std::map<std::string, size_t> samples_per_arm;
    std::string started_at, finished_at;
};

namespace detail {

class HookedOracle final : public Oracle {
public:
    HookedOracle(Oracle& inner, std::function<void()> hook)
        : inner_(&inner), hook_(std::move(hook)) {}

    std::string identity() const override { return inner_->identity(); }
    OracleCapabilities capabilities() const override { return inner_->capabilities(); }
    LossProfile score_text(const ScoreRequest& req) override {
        hook_();
        return inner_->score_text(req);
    }
    DistributionStats distribution_stats(const ScoreRequest& req) override {
        hook_();
        return inner_->distribution_stats(req);
    }
    std::string generate(const std::string& prompt, int max_new_tokens,
                         const std::string& sample_id = {}) override {
        hook_();
        return inner_->generate(prompt, max_new_tokens, sample_id);
    }
    std::string request_key_material(const ScoreRequest& req) const override {
        return inner_->request_key_material(req);
    }

private:
    Oracle* inner_;
    std::function<void()> hook_;
};

template <typename Fn>
void parallel_for(size_t count, long workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const size_t n = std::min(static_cast<size_t>(workers), count);
    threads.reserve(n);
    for (size_t t = 0; t < n; ++t) threads.emplace_back(body);
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

inline std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline double percent(double v) { return 100.0 * v; }

// Per-class one-vs-rest AUC and low-FPR summary from one score column.
struct OneVsAll {
    std::optional<double> auc, auc_at_fpr;
};

inline OneVsAll one_vs_all(const std::vector<int>& labels, const std::vector<double>& scores,
                           int positive_class, double fpr_cap, AucAtFprMode mode,
                           std::vector<std::string>& warnings, const std::string& context) {
    ScoredSet s;
    for (size_t i = 0; i < labels.size(); ++i) s.add(scores[i], labels[i] == positive_class);
    const auto positives = std::count(labels.begin(), labels.end(), positive_class);
    if (positives == 0 || static_cast<size_t>(positives) == labels.size()) {
        warnings.push_back(context + ": class " +
                           label_name(static_cast<MembershipLabel>(positive_class)) +
                           " absent, one-vs-all AUC skipped");
        return {};
    }
    OneVsAll out;
    out.auc = percent(roc_auc(s));
    out.auc_at_fpr = percent(mode == AucAtFprMode::Tpr ? tpr_at_fpr(s, fpr_cap)
                                                       : standardized_partial_auc(s, fpr_cap));
    return out;
}

struct SampleComputation {
    IllFeatureVector features;
    std::map<std::string, double> baseline_scores;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// The experiment pipeline: perturb, score through the oracle, extract
// features, train and evaluate, assemble the report.
// ---------------------------------------------------------------------------

inline RunArtifacts run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {},
                                   RunPhase phase = RunPhase::Full) {
    validate_config(cfg);
    RunArtifacts artifacts;
    artifacts.started_at = detail::iso_utc_now();
    artifacts.config_hash = cfg.config_hash();

    const auto table = TokenEmbeddingTable::load(cfg.embedding_table, static_cast<int>(cfg.m));
    const Tokenizer tokenizer = cfg.tokenizer == TokenizerKind::Whitespace
                                    ? Tokenizer::whitespace(table.tokens())
                                    : Tokenizer::bpe_from_files(cfg.tokenizer_vocab,
                                                                cfg.tokenizer_merges);

    std::unique_ptr<TextEncoder> encoder;
    if (cfg.encoder == EncoderKind::MeanPooled) {
        encoder = std::make_unique<MeanPooledEncoder>(table, tokenizer);
    } else {
        RemoteEncoder::Options opts;
        opts.url = cfg.encoder_url;
        opts.model = cfg.encoder_model;
        opts.auth_env = cfg.encoder_auth_env;
        encoder = std::make_unique<RemoteEncoder>(std::move(opts));
    }

    // Oracle stack: inner model (or nothing for replay), optional test hook,
    // optional append-only cache on the outside.
    SyntheticOracle* synthetic = nullptr;
    std::unique_ptr<Oracle> inner;
    if (cfg.oracle_kind == OracleKind::Synthetic) {
        auto synth = std::make_unique<SyntheticOracle>(*encoder, cfg.seed, "geom");
        if (cfg.synthetic_vocab_size > 0)
            synth->set_uniform_distribution(static_cast<size_t>(cfg.synthetic_vocab_size));
        synthetic = synth.get();
        inner = std::move(synth);
    } else if (cfg.oracle_kind == OracleKind::Http) {
        HttpOracle::Options opts;
        opts.url = cfg.oracle_url;
        opts.model = cfg.oracle_model;
        opts.identity = cfg.oracle_identity;
        opts.auth_env = cfg.oracle_auth_env;
        inner = std::make_unique<HttpOracle>(std::move(opts));
    }

    std::unique_ptr<detail::HookedOracle> hooked;
    Oracle* backing = inner.get();
    if (hooks.before_inner_call && backing) {
        hooked = std::make_unique<detail::HookedOracle>(*backing, hooks.before_inner_call);
        backing = hooked.get();
    }

    std::unique_ptr<CachingOracle> cache;
    Oracle* oracle = backing;
    if (!cfg.cache_path.empty() || cfg.oracle_kind == OracleKind::Replay) {
        std::string replay_identity = cfg.oracle_identity;
        if (replay_identity.empty() && !cfg.oracle_url.empty())
            replay_identity = cfg.oracle_url + "|" + cfg.oracle_model;
        cache = std::make_unique<CachingOracle>(cfg.cache_path, backing, replay_identity);
        oracle = cache.get();
    }
    if (!oracle) raise(ErrorKind::Config, "no oracle configured");
    artifacts.oracle_identity = oracle->identity();

    const auto capabilities = oracle->capabilities();
    const auto corpus =
        load_corpus(cfg.corpus_retain, cfg.corpus_forget, cfg.corpus_holdout, cfg.text_template);

    const std::array<SyntheticProfile, kClassCount> profile_templates = {
        parse_profile(cfg.synthetic_retained, "synthetic_retained"),
        parse_profile(cfg.synthetic_forgotten, "synthetic_forgotten"),
        parse_profile(cfg.synthetic_holdout, "synthetic_holdout"),
    };

    std::vector<ViewSelector> arms;
    if (cfg.view == "original") arms = {ViewSelector::Original};
    else if (cfg.view == "paraphrased") arms = {ViewSelector::Paraphrased};
    else arms = {ViewSelector::Original, ViewSelector::Paraphrased};

    const auto enabled_baselines = cfg.baseline_list();
    const auto enabled_classifiers = cfg.classifier_list();
    auto baseline_enabled = [&](const std::string& name) {
        return std::find(enabled_baselines.begin(), enabled_baselines.end(), name) !=
               enabled_baselines.end();
    };
    const bool want_stats = baseline_enabled("min_k_pp");
    const bool want_generation = baseline_enabled("rouge_l_f1");
    if (want_stats && !capabilities.vocab_distribution_stats)
        artifacts.warnings.push_back(
            "min_k_pp: n/a (oracle lacks vocab distribution stats capability)");
    if (want_generation && !capabilities.generation)
        artifacts.warnings.push_back("rouge_l_f1: n/a (oracle lacks generation capability)");

    struct ArmData {
        std::string name;
        std::vector<Sample> samples;
        std::vector<detail::SampleComputation> computed;
    };
    std::vector<ArmData> arm_data;

    for (size_t arm_index = 0; arm_index < arms.size(); ++arm_index) {
        const auto view = select_view(corpus, arms[arm_index],
                                      static_cast<size_t>(cfg.per_class_cap), cfg.seed);
        ArmData arm;
        arm.name = arms[arm_index] == ViewSelector::Original ? "orig" : "reph";
        arm.samples = view.samples;
        arm.computed.resize(arm.samples.size());
        artifacts.samples_per_arm[arm.name] = arm.samples.size();

        detail::parallel_for(arm.samples.size(), cfg.oracle_parallelism, [&](size_t i) {
            const Sample& sample = arm.samples[i];
            PerturbationConfig pcfg;
            pcfg.p = cfg.p;
            pcfg.m = static_cast<int>(cfg.m);
            pcfg.K = static_cast<int>(cfg.K);
            pcfg.max_tokens = static_cast<int>(cfg.max_tokens);
            pcfg.resample_cap = static_cast<int>(cfg.resample_cap);
            uint64_t h = rng::splitmix64(cfg.seed);
            h = rng::mix(h, arm_index);
            pcfg.seed = rng::hash_bytes(h, sample.id.data(), sample.id.size());

            const auto ids = tokenizer.encode(sample.text);
            const auto neighborhood = perturb(ids, table, pcfg);
            const std::string original_text = tokenizer.decode(neighborhood.original);
            std::vector<std::string> variant_texts;
            variant_texts.reserve(neighborhood.variants.size());
            for (const auto& v : neighborhood.variants) variant_texts.push_back(tokenizer.decode(v));

            if (synthetic) {
                // Center loss is a per-sample draw shared by both arms, so
                // all classes share the same marginal loss distribution.
                uint64_t ch = rng::splitmix64(cfg.seed);
                ch = rng::hash_bytes(ch, "center", 6);
                ch = rng::hash_bytes(ch, sample.id.data(), sample.id.size());
                SyntheticProfile profile = profile_templates[static_cast<int>(sample.label)];
                profile.center_loss =
                    cfg.synthetic_loss_low + (cfg.synthetic_loss_high - cfg.synthetic_loss_low) *
                                                 rng::to_unit_double(rng::splitmix64(ch));
                synthetic->register_sample(sample.id, original_text, profile);
            }

            const auto original_profile = oracle->score_text({original_text, sample.id});
            std::vector<LossProfile> variant_profiles;
            variant_profiles.reserve(variant_texts.size());
            for (const auto& text : variant_texts)
                variant_profiles.push_back(oracle->score_text({text, sample.id}));

            auto& slot = arm.computed[i];
            slot.features = extract_features(original_profile, variant_profiles, variant_texts,
                                             original_text, *encoder);

            auto& scores = slot.baseline_scores;
            if (baseline_enabled("loss_based"))
                scores["loss_based"] = baselines::loss_score(original_profile);
            if (baseline_enabled("zlib_compression"))
                scores["zlib_compression"] = baselines::zlib_score(original_profile, original_text);
            if (baseline_enabled("min_k"))
                scores["min_k"] = baselines::min_k_score(original_profile, cfg.min_k_pct);
            if (want_stats && capabilities.vocab_distribution_stats) {
                const auto stats = oracle->distribution_stats({original_text, sample.id});
                scores["min_k_pp"] =
                    baselines::min_k_pp_score(original_profile, stats, cfg.min_k_pct);
            }
            if (want_generation && capabilities.generation)
                scores["rouge_l_f1"] = baselines::rouge_l_f1_score(original_text, *oracle,
                                                                   sample.id);
            if (baseline_enabled("spv_mia_mean"))
                scores["spv_mia_mean"] = baselines::spv_mia_simplified(
                    original_profile, variant_profiles, baselines::SpvMode::Mean);
            if (baseline_enabled("spv_mia_max"))
                scores["spv_mia_max"] = baselines::spv_mia_simplified(
                    original_profile, variant_profiles, baselines::SpvMode::Max);
        });

        for (size_t i = 0; i < arm.samples.size(); ++i)
            artifacts.feature_records.push_back({arm.samples[i].id,
                                                 label_name(arm.samples[i].label), arm.name,
                                                 arm.computed[i].features});
        arm_data.push_back(std::move(arm));
    }

    // Evaluation. Row order: baselines in config order, then the trained
    // classifiers; each method lists its arms together.
    const std::vector<std::string> no_methods;
    const auto& baseline_methods =
        phase != RunPhase::WarmCache ? enabled_baselines : no_methods;
    const auto& classifier_methods =
        phase == RunPhase::Full ? enabled_classifiers : no_methods;
    for (const auto& method : baseline_methods) {
        for (const auto& arm : arm_data) {
            MethodRow row;
            row.method = method;
            row.arm = arm.name;
            const bool available =
                !arm.computed.empty() && arm.computed.front().baseline_scores.count(method) > 0;
            if (available) {
                std::vector<int> labels;
                std::vector<double> scores;
                for (size_t i = 0; i < arm.samples.size(); ++i) {
                    labels.push_back(static_cast<int>(arm.samples[i].label));
                    const auto& per_sample = arm.computed[i].baseline_scores;
                    auto it = per_sample.find(method);
                    if (it == per_sample.end())
                        raise(ErrorKind::Data, "missing baseline score for sample '" +
                                                   arm.samples[i].id + "'");
                    scores.push_back(it->second);
                    ScoreRecord record;
                    record.method = method;
                    record.arm = arm.name;
                    record.sample_id = arm.samples[i].id;
                    record.label = label_name(arm.samples[i].label);
                    record.scores = {it->second, it->second, it->second};
                    record.orientation = baselines::orientation(method);
                    artifacts.score_records.push_back(std::move(record));
                }
                const auto retained =
                    detail::one_vs_all(labels, scores, 0, cfg.fpr_cap, cfg.auc_at_fpr_mode,
                                       artifacts.warnings, method + "/" + arm.name);
                const auto forgotten =
                    detail::one_vs_all(labels, scores, 1, cfg.fpr_cap, cfg.auc_at_fpr_mode,
                                       artifacts.warnings, method + "/" + arm.name);
                const auto holdout =
                    detail::one_vs_all(labels, scores, 2, cfg.fpr_cap, cfg.auc_at_fpr_mode,
                                       artifacts.warnings, method + "/" + arm.name);
                row.retain_vs_all_auc = retained.auc;
                row.forget_vs_all_auc = forgotten.auc;
                row.holdout_vs_all_auc = holdout.auc;
                row.retain_vs_all_auc_at_1_fp = retained.auc_at_fpr;
                row.forget_vs_all_auc_at_1_fp = forgotten.auc_at_fpr;
                row.holdout_vs_all_auc_at_1_fp = holdout.auc_at_fpr;
                // A scalar score cannot express joint 3-class ranking; 50 by
                // convention, matching how such rows are reported.
                row.multi_class_auc = 50.0;
            }
            artifacts.rows.push_back(std::move(row));
        }
    }

    for (const auto& classifier_name : classifier_methods) {
        for (const auto& arm : arm_data) {
            FeatureDataset dataset;
            for (size_t i = 0; i < arm.samples.size(); ++i)
                dataset.add(arm.computed[i].features, arm.samples[i].label, arm.samples[i].id);

            const auto split = stratified_split(dataset, cfg.test_size, cfg.seed);
            std::set<int> view_classes, train_classes;
            for (const auto& r : dataset.rows) view_classes.insert(static_cast<int>(r.label));
            for (const auto& r : split.train.rows) train_classes.insert(static_cast<int>(r.label));
            if (train_classes != view_classes)
                raise(ErrorKind::Training,
                      "class missing from the training split; adjust test_size or caps");

            std::unique_ptr<Classifier> model;
            if (classifier_name == "logistic_regression") {
                LogisticRegressionParams params;
                params.l2_lambda = cfg.lr_lambda;
                params.tolerance = cfg.lr_tolerance;
                params.max_iterations = static_cast<int>(cfg.lr_max_iterations);
                model = std::make_unique<LogisticRegressionModel>(
                    train_logistic_regression(split.train, params, cfg.seed));
            } else {
                RandomForestParams params;
                params.trees = static_cast<int>(cfg.rf_trees);
                params.max_depth = static_cast<int>(cfg.rf_max_depth);
                params.min_leaf = static_cast<int>(cfg.rf_min_leaf);
                params.features_per_split = static_cast<int>(cfg.rf_features_per_split);
                model = std::make_unique<RandomForestModel>(
                    train_random_forest(split.train, params, cfg.seed));
            }

            const std::string method = "remind_" + classifier_name;
            std::vector<int> labels, predictions;
            std::vector<std::vector<double>> probabilities;
            for (const auto& r : split.test.rows) {
                const auto p = model->predict_proba(r.features);
                labels.push_back(static_cast<int>(r.label));
                predictions.push_back(
                    static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
                probabilities.push_back({p[0], p[1], p[2]});
                ScoreRecord record;
                record.method = method;
                record.arm = arm.name;
                record.sample_id = r.sample_id;
                record.label = label_name(r.label);
                record.scores = p;
                record.orientation = "class-probability";
                artifacts.score_records.push_back(std::move(record));
            }

            MethodRow row;
            row.method = method;
            row.arm = arm.name;
            std::array<detail::OneVsAll, kClassCount> ova;
            for (int c = 0; c < kClassCount; ++c) {
                std::vector<double> column;
                column.reserve(labels.size());
                for (const auto& p : probabilities) column.push_back(p[static_cast<size_t>(c)]);
                ova[c] = detail::one_vs_all(labels, column, c, cfg.fpr_cap, cfg.auc_at_fpr_mode,
                                            artifacts.warnings, method + "/" + arm.name);
            }
            row.retain_vs_all_auc = ova[0].auc;
            row.forget_vs_all_auc = ova[1].auc;
            row.holdout_vs_all_auc = ova[2].auc;
            row.retain_vs_all_auc_at_1_fp = ova[0].auc_at_fpr;
            row.forget_vs_all_auc_at_1_fp = ova[1].auc_at_fpr;
            row.holdout_vs_all_auc_at_1_fp = ova[2].auc_at_fpr;
            row.multi_class_auc = detail::percent(
                multiclass_auc(labels, probabilities, kClassCount, &artifacts.warnings));
            const auto summary = accuracy_and_macro_f1(labels, predictions, kClassCount);
            row.accuracy = detail::percent(summary.accuracy);
            row.macro_f1 = detail::percent(summary.macro_f1);
            artifacts.rows.push_back(std::move(row));
        }
    }

    if (cache) {
        artifacts.cache_stats = {{"hits", cache->stats().hits.load()},
                                 {"misses", cache->stats().misses.load()},
                                 {"network_calls", cache->stats().network_calls.load()},
                                 {"records", cache->record_count()}};
    }

    artifacts.report_csv = render_report_csv(artifacts.rows, artifacts.config_hash, cfg.seed,
                                             artifacts.oracle_identity);
    artifacts.report_txt = render_report_text(artifacts.rows, artifacts.config_hash, cfg.seed,
                                              artifacts.oracle_identity);
    artifacts.features_csv = render_features_csv(artifacts.feature_records);
    artifacts.scores_csv = render_scores_csv(artifacts.score_records);
    artifacts.finished_at = detail::iso_utc_now();
    return artifacts;
}

// Writes report.csv, report.txt, features.csv, scores.csv, histograms, and
// run-manifest.json (the only file carrying timestamps) under output_dir.
inline std::vector<std::string> write_run_outputs(const ExperimentConfig& cfg,
                                                  const RunArtifacts& artifacts) {
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = cfg.output_dir + "/" + name;
        write_file(path, content);
        written.push_back(path);
    };
    emit("report.csv", artifacts.report_csv);
    emit("report.txt", artifacts.report_txt);
    emit("features.csv", artifacts.features_csv);
    emit("scores.csv", artifacts.scores_csv);

    const auto plots = emit_feature_histograms(artifacts.feature_records,
                                               cfg.output_dir + "/histograms", cfg.histogram_bins);
    written.insert(written.end(), plots.begin(), plots.end());

    nlohmann::json manifest{{"config_hash", artifacts.config_hash},
                            {"seed", cfg.seed},
                            {"oracle", artifacts.oracle_identity},
                            {"cache", artifacts.cache_stats},
                            {"samples_per_arm", artifacts.samples_per_arm},
                            {"warnings", artifacts.warnings},
                            {"started_at", artifacts.started_at},
                            {"finished_at", artifacts.finished_at},
                            {"outputs", written}};
    const std::string manifest_path = cfg.output_dir + "/run-manifest.json";
    write_file(manifest_path, manifest.dump(2) + "\n");
    written.push_back(manifest_path);
    return written;
}

}  // namespace remind

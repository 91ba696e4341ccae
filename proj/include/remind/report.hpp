#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "remind/classifiers.hpp"
#include "remind/detail/strings.hpp"
#include "remind/error.hpp"

namespace remind {

// One report row. All rates are percentages; unset fields render as empty
// cells (method not applicable or metric undefined for scalar scorers).
struct MethodRow {
    std::string method;
    std::string arm;  // "orig" or "reph"
    std::optional<double> retain_vs_all_auc;
    std::optional<double> forget_vs_all_auc;
    std::optional<double> holdout_vs_all_auc;
    std::optional<double> multi_class_auc;
    std::optional<double> retain_vs_all_auc_at_1_fp;
    std::optional<double> forget_vs_all_auc_at_1_fp;
    std::optional<double> holdout_vs_all_auc_at_1_fp;
    std::optional<double> accuracy;
    std::optional<double> macro_f1;
};

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "method",
        "arm",
        "retain_vs_all_auc",
        "forget_vs_all_auc",
        "holdout_vs_all_auc",
        "multi_class_auc",
        "retain_vs_all_auc_at_1_fp",
        "forget_vs_all_auc_at_1_fp",
        "holdout_vs_all_auc_at_1_fp",
        "accuracy",
        "macro_f1",
    };
    return cols;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) {
    return v ? format_fixed(*v, 4) : std::string{};
}

inline std::vector<std::string> row_cells(const MethodRow& r) {
    return {r.method,
            r.arm,
            cell(r.retain_vs_all_auc),
            cell(r.forget_vs_all_auc),
            cell(r.holdout_vs_all_auc),
            cell(r.multi_class_auc),
            cell(r.retain_vs_all_auc_at_1_fp),
            cell(r.forget_vs_all_auc_at_1_fp),
            cell(r.holdout_vs_all_auc_at_1_fp),
            cell(r.accuracy),
            cell(r.macro_f1)};
}

}  // namespace detail

// Deterministic byte-for-byte given (rows, hash, seed, oracle identity).
// Timestamps live in the run manifest, never here.
inline std::string render_report_csv(const std::vector<MethodRow>& rows,
                                     const std::string& config_hash, uint64_t seed,
                                     const std::string& oracle_identity) {
    std::string out;
    out += "# config_hash=" + config_hash + "\n";
    out += "# seed=" + std::to_string(seed) + "\n";
    out += "# oracle=" + oracle_identity + "\n";
    const auto& cols = report_columns();
    for (size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
    for (const auto& row : rows) {
        const auto cells = detail::row_cells(row);
        for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += "\n";
    }
    return out;
}

inline std::string render_report_text(const std::vector<MethodRow>& rows,
                                      const std::string& config_hash, uint64_t seed,
                                      const std::string& oracle_identity) {
    const auto& cols = report_columns();
    std::vector<size_t> width(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) width[i] = cols[i].size();
    std::vector<std::vector<std::string>> table;
    for (const auto& row : rows) {
        table.push_back(detail::row_cells(row));
        for (size_t i = 0; i < cols.size(); ++i)
            width[i] = std::max(width[i], table.back()[i].size());
    }

    auto pad = [](const std::string& s, size_t w) { return s + std::string(w - s.size(), ' '); };
    std::string out;
    for (size_t i = 0; i < cols.size(); ++i) out += (i ? "  " : "") + pad(cols[i], width[i]);
    out += "\n";
    for (size_t i = 0; i < cols.size(); ++i)
        out += (i ? "  " : "") + std::string(width[i], '-');
    out += "\n";
    for (const auto& cells : table) {
        for (size_t i = 0; i < cols.size(); ++i) out += (i ? "  " : "") + pad(cells[i], width[i]);
        out += "\n";
    }
    out += "\n";
    out += "All rates are percentages. Classifier rows are evaluated on the held-out\n";
    out += "test split; scalar baselines are evaluated on the full view (no training\n";
    out += "step) and take multi_class_auc = 50 by convention. Empty cells mark\n";
    out += "metrics the method cannot produce.\n";
    out += "\n";
    out += "config_hash: " + config_hash + "\n";
    out += "seed: " + std::to_string(seed) + "\n";
    out += "oracle: " + oracle_identity + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// features.csv and scores.csv
// ---------------------------------------------------------------------------

struct FeatureRecord {
    std::string sample_id;
    std::string label;
    std::string arm;
    IllFeatureVector features;
};

inline std::string render_features_csv(const std::vector<FeatureRecord>& records) {
    std::string out = "sample_id,label,arm";
    for (const auto& name : IllFeatureVector::names()) out += "," + name;
    out += "\n";
    for (const auto& r : records) {
        out += r.sample_id + "," + r.label + "," + r.arm;
        for (double v : r.features.values) out += "," + detail::format_full(v);
        out += "\n";
    }
    return out;
}

inline std::vector<FeatureRecord> parse_features_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Data, "cannot open features file: " + path);
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::Data, path + ": empty features file");
    std::string expected = "sample_id,label,arm";
    for (const auto& name : IllFeatureVector::names()) expected += "," + name;
    if (line != expected) raise(ErrorKind::Format, path + ":1: unexpected features header");

    std::vector<FeatureRecord> records;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto parts = detail::split(line, ',');
        if (parts.size() != 3 + kFeatureCount)
            raise(ErrorKind::Format, where + ": wrong column count");
        FeatureRecord r;
        r.sample_id = std::string(parts[0]);
        r.label = std::string(parts[1]);
        r.arm = std::string(parts[2]);
        label_from_name(r.label);  // validates
        for (size_t i = 0; i < kFeatureCount; ++i)
            r.features[i] = detail::parse_double(parts[3 + i], where);
        records.push_back(std::move(r));
    }
    if (records.empty()) raise(ErrorKind::Data, path + ": no feature rows");
    return records;
}

struct ScoreRecord {
    std::string method;
    std::string arm;
    std::string sample_id;
    std::string label;
    // Scalar methods repeat their score across all three columns; classifier
    // methods store per-class probabilities.
    std::array<double, kClassCount> scores{};
    std::string orientation;
};

inline std::string render_scores_csv(const std::vector<ScoreRecord>& records) {
    std::string out =
        "method,arm,sample_id,label,score_retained,score_forgotten,score_holdout,orientation\n";
    for (const auto& r : records) {
        out += r.method + "," + r.arm + "," + r.sample_id + "," + r.label;
        for (double v : r.scores) out += "," + detail::format_full(v);
        out += "," + r.orientation + "\n";
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::Data, "cannot write file: " + path);
    out << content;
    if (!out) raise(ErrorKind::Data, "failed writing file: " + path);
}

}  // namespace remind

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "remind/detail/strings.hpp"
#include "remind/error.hpp"
#include "remind/report.hpp"

namespace remind {

// Class colors follow the established convention: forgotten green,
// retained blue, holdout red.
inline const char* class_color(MembershipLabel l) {
    switch (l) {
        case MembershipLabel::Retained: return "#1f77b4";
        case MembershipLabel::Forgotten: return "#2ca02c";
        case MembershipLabel::Holdout: return "#d62728";
    }
    return "#000000";
}

namespace detail {

struct FeatureHistogram {
    std::array<std::vector<double>, kClassCount> counts;  // per class, per bin
    double value_min = 0, value_max = 0;
};

inline FeatureHistogram bin_feature(const std::vector<FeatureRecord>& records, size_t feature,
                                    long bins) {
    FeatureHistogram h;
    for (auto& c : h.counts) c.assign(static_cast<size_t>(bins), 0.0);
    h.value_min = records.front().features[feature];
    h.value_max = h.value_min;
    for (const auto& r : records) {
        h.value_min = std::min(h.value_min, r.features[feature]);
        h.value_max = std::max(h.value_max, r.features[feature]);
    }
    const double span = h.value_max - h.value_min;
    for (const auto& r : records) {
        // Min-max normalization across all data points of the arm; a
        // degenerate constant feature lands entirely in the first bin.
        const double norm = span > 0 ? (r.features[feature] - h.value_min) / span : 0.0;
        const auto bin = std::min(static_cast<size_t>(norm * static_cast<double>(bins)),
                                  static_cast<size_t>(bins - 1));
        h.counts[static_cast<int>(label_from_name(r.label))][bin] += 1;
    }
    return h;
}

inline std::string histogram_svg(const FeatureHistogram& h, const std::string& feature_name,
                                 long bins) {
    constexpr double width = 640, height = 400;
    constexpr double left = 50, right = 20, top = 40, bottom = 40;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double peak = 1;
    for (const auto& counts : h.counts)
        for (double c : counts) peak = std::max(peak, c);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(width, 0) +
           "\" height=\"" + format_fixed(height, 0) + "\" viewBox=\"0 0 " +
           format_fixed(width, 0) + " " + format_fixed(height, 0) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + format_fixed(left, 0) + "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + feature_name + "</text>\n";

    // legend
    double lx = width - right - 250;
    for (int c = 0; c < kClassCount; ++c) {
        const auto label = static_cast<MembershipLabel>(c);
        svg += "<rect x=\"" + format_fixed(lx, 1) + "\" y=\"12\" width=\"12\" height=\"12\" fill=\"" +
               std::string(class_color(label)) + "\" fill-opacity=\"0.6\"/>\n";
        svg += "<text x=\"" + format_fixed(lx + 16, 1) +
               "\" y=\"23\" font-family=\"sans-serif\" font-size=\"12\">" +
               std::string(label_name(label)) + "</text>\n";
        lx += 85;
    }

    const double bar_w = plot_w / static_cast<double>(bins);
    for (int c = 0; c < kClassCount; ++c) {
        for (long b = 0; b < bins; ++b) {
            const double count = h.counts[c][static_cast<size_t>(b)];
            if (count == 0) continue;
            const double bar_h = plot_h * count / peak;
            svg += "<rect x=\"" + format_fixed(left + bar_w * static_cast<double>(b), 2) +
                   "\" y=\"" + format_fixed(top + plot_h - bar_h, 2) + "\" width=\"" +
                   format_fixed(bar_w, 2) + "\" height=\"" + format_fixed(bar_h, 2) +
                   "\" fill=\"" + class_color(static_cast<MembershipLabel>(c)) +
                   "\" fill-opacity=\"0.45\"/>\n";
        }
    }

    // axes: x spans the normalized [0,1] range, y the counts
    svg += "<line x1=\"" + format_fixed(left, 0) + "\" y1=\"" + format_fixed(top + plot_h, 0) +
           "\" x2=\"" + format_fixed(left + plot_w, 0) + "\" y2=\"" +
           format_fixed(top + plot_h, 0) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_fixed(left, 0) + "\" y1=\"" + format_fixed(top, 0) +
           "\" x2=\"" + format_fixed(left, 0) + "\" y2=\"" + format_fixed(top + plot_h, 0) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_fixed(left, 0) + "\" y=\"" + format_fixed(height - 12, 0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">0 (value " +
           format_fixed(h.value_min, 4) + ")</text>\n";
    svg += "<text x=\"" + format_fixed(left + plot_w - 120, 0) + "\" y=\"" +
           format_fixed(height - 12, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">1 (value " +
           format_fixed(h.value_max, 4) + ")</text>\n";
    svg += "<text x=\"8\" y=\"" + format_fixed(top + 10, 0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + format_fixed(peak, 0) +
           "</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

// One overlaid per-class histogram panel per feature (14 SVG files per arm)
// plus the binned counts as CSV. Values are min-max normalized per feature
// across all of the arm's data points before binning.
inline std::vector<std::string> emit_feature_histograms(const std::vector<FeatureRecord>& records,
                                                        const std::string& out_dir,
                                                        long bins = 40) {
    if (records.empty()) raise(ErrorKind::Data, "no feature rows to plot");
    if (bins < 1) raise(ErrorKind::Parameter, "histogram bins must be >= 1");

    std::map<std::string, std::vector<FeatureRecord>> by_arm;
    for (const auto& r : records) by_arm[r.arm].push_back(r);

    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    for (const auto& [arm, rows] : by_arm) {
        std::set<std::string> classes;
        for (const auto& r : rows) classes.insert(r.label);
        if (classes.size() < 2)
            raise(ErrorKind::Data, "histograms need at least 2 classes, arm '" + arm +
                                       "' has " + std::to_string(classes.size()));

        std::string bins_csv = "feature,bin,lo,hi,retained,forgotten,holdout\n";
        for (size_t f = 0; f < kFeatureCount; ++f) {
            const auto h = detail::bin_feature(rows, f, bins);
            const std::string name = "f" + std::to_string(f + 1);
            const std::string path = out_dir + "/" + arm + "_" + name + ".svg";
            write_file(path, detail::histogram_svg(h, name + " (" + arm + ")", bins));
            written.push_back(path);

            const double span = h.value_max - h.value_min;
            for (long b = 0; b < bins; ++b) {
                const double lo = h.value_min + span * static_cast<double>(b) / static_cast<double>(bins);
                const double hi = h.value_min + span * static_cast<double>(b + 1) / static_cast<double>(bins);
                bins_csv += name + "," + std::to_string(b) + "," + detail::format_full(lo) + "," +
                            detail::format_full(hi);
                for (int c = 0; c < kClassCount; ++c)
                    bins_csv += "," + detail::format_fixed(h.counts[c][static_cast<size_t>(b)], 0);
                bins_csv += "\n";
            }
        }
        const std::string bins_path = out_dir + "/" + arm + "_bins.csv";
        write_file(bins_path, bins_csv);
        written.push_back(bins_path);
    }
    return written;
}

}  // namespace remind

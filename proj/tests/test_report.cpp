#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "helpers.hpp"
#include "remind/histograms.hpp"
#include "remind/report.hpp"

using namespace remind;
using test_support::TempDir;
using test_support::read_text;
using test_support::write_text;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

FeatureRecord make_record(const std::string& id, const std::string& label, const std::string& arm,
                          double base) {
    FeatureRecord r;
    r.sample_id = id;
    r.label = label;
    r.arm = arm;
    for (size_t i = 0; i < kFeatureCount; ++i)
        r.features[i] = base + static_cast<double>(i) * 0.125;
    return r;
}

}  // namespace

TEST_CASE("report column layout") {
    const auto& cols = report_columns();
    REQUIRE(cols.size() == 11);
    CHECK(cols[0] == "method");
    CHECK(cols[1] == "arm");
    CHECK(cols[2] == "retain_vs_all_auc");
    CHECK(cols[3] == "forget_vs_all_auc");
    CHECK(cols[4] == "holdout_vs_all_auc");
    CHECK(cols[5] == "multi_class_auc");
    CHECK(cols[6] == "retain_vs_all_auc_at_1_fp");
    CHECK(cols[7] == "forget_vs_all_auc_at_1_fp");
    CHECK(cols[8] == "holdout_vs_all_auc_at_1_fp");
    CHECK(cols[9] == "accuracy");
    CHECK(cols[10] == "macro_f1");
}

TEST_CASE("report csv bytes") {
    MethodRow full;
    full.method = "remind_logistic_regression";
    full.arm = "orig";
    full.retain_vs_all_auc = 99.125;
    full.forget_vs_all_auc = 98.0;
    full.holdout_vs_all_auc = 97.5;
    full.multi_class_auc = 98.208333333333;
    full.retain_vs_all_auc_at_1_fp = 91.0;
    full.forget_vs_all_auc_at_1_fp = 90.0;
    full.holdout_vs_all_auc_at_1_fp = 89.0;
    full.accuracy = 95.0;
    full.macro_f1 = 94.875;

    MethodRow scalar;
    scalar.method = "loss_based";
    scalar.arm = "reph";
    scalar.retain_vs_all_auc = 61.5;
    scalar.forget_vs_all_auc = 55.25;
    scalar.holdout_vs_all_auc = 50.0;
    scalar.multi_class_auc = 50.0;
    scalar.retain_vs_all_auc_at_1_fp = 2.0;
    scalar.forget_vs_all_auc_at_1_fp = 1.5;
    scalar.holdout_vs_all_auc_at_1_fp = 1.0;
    // accuracy and macro_f1 stay unset: scalar scorers never predict a class

    const std::string csv =
        render_report_csv({full, scalar}, "deadbeef", 42, "synthetic|geom|seed=42");
    const std::string expected =
        "# config_hash=deadbeef\n"
        "# seed=42\n"
        "# oracle=synthetic|geom|seed=42\n"
        "method,arm,retain_vs_all_auc,forget_vs_all_auc,holdout_vs_all_auc,multi_class_auc,"
        "retain_vs_all_auc_at_1_fp,forget_vs_all_auc_at_1_fp,holdout_vs_all_auc_at_1_fp,"
        "accuracy,macro_f1\n"
        "remind_logistic_regression,orig,99.1250,98.0000,97.5000,98.2083,91.0000,90.0000,"
        "89.0000,95.0000,94.8750\n"
        "loss_based,reph,61.5000,55.2500,50.0000,50.0000,2.0000,1.5000,1.0000,,\n";
    CHECK(csv == expected);
}

TEST_CASE("report csv with no rows keeps preamble and header") {
    const std::string csv = render_report_csv({}, "cafe", 7, "oracle-id");
    const auto lines = lines_of(csv);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "# config_hash=cafe");
    CHECK(lines[1] == "# seed=7");
    CHECK(lines[2] == "# oracle=oracle-id");
    CHECK(lines[3].substr(0, 11) == "method,arm,");
}

TEST_CASE("report text table") {
    MethodRow row;
    row.method = "zlib_compression";
    row.arm = "orig";
    row.retain_vs_all_auc = 51.0;
    row.multi_class_auc = 50.0;

    const std::string text = render_report_text({row}, "hash-h", 13, "some-oracle");
    const auto lines = lines_of(text);
    REQUIRE(lines.size() >= 4);

    // Header, separator, and data rows line up column by column.
    CHECK(lines[0].substr(0, 6) == "method");
    CHECK(lines[1].find_first_not_of("- ") == std::string::npos);
    CHECK(lines[0].size() == lines[1].size());
    CHECK(lines[0].size() == lines[2].size());
    CHECK(lines[2].substr(0, 16) == "zlib_compression");

    CHECK(text.find("multi_class_auc = 50 by convention") != std::string::npos);
    CHECK(text.find("All rates are percentages.") != std::string::npos);
    CHECK(text.find("Empty cells mark") != std::string::npos);
    CHECK(text.find("config_hash: hash-h\n") != std::string::npos);
    CHECK(text.find("seed: 13\n") != std::string::npos);
    CHECK(text.find("oracle: some-oracle\n") != std::string::npos);
}

TEST_CASE("features csv roundtrip preserves exact doubles") {
    std::vector<FeatureRecord> records;
    FeatureRecord a;
    a.sample_id = "s-1";
    a.label = "retained";
    a.arm = "orig";
    const double tricky[kFeatureCount] = {
        1.0 / 3.0,   2.718281828459045, -0.1,     1e-300,   1e300,  -3.0,     0.0,
        0.1 + 0.2,   123456.789,        -1e-12,   7.0,      0.5,    1.25e-7,  9.999999999999999,
    };
    for (size_t i = 0; i < kFeatureCount; ++i) a.features[i] = tricky[i];
    records.push_back(a);
    records.push_back(make_record("s-2", "forgotten", "reph", 10.0));
    records.push_back(make_record("s-3", "holdout", "orig", -4.0));

    const std::string csv = render_features_csv(records);
    const auto lines = lines_of(csv);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] ==
          "sample_id,label,arm,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14");

    TempDir dir;
    const auto path = dir.file("features.csv");
    write_file(path, csv);
    const auto parsed = parse_features_csv(path);
    REQUIRE(parsed.size() == records.size());
    for (size_t r = 0; r < records.size(); ++r) {
        CHECK(parsed[r].sample_id == records[r].sample_id);
        CHECK(parsed[r].label == records[r].label);
        CHECK(parsed[r].arm == records[r].arm);
        for (size_t i = 0; i < kFeatureCount; ++i)
            CHECK(parsed[r].features[i] == records[r].features[i]);
    }
}

TEST_CASE("features csv parser skips blank lines") {
    TempDir dir;
    const std::string one = render_features_csv({make_record("a", "retained", "orig", 1.0)});
    const std::string two = render_features_csv({make_record("b", "holdout", "orig", 2.0)});
    const auto header_end = two.find('\n');
    const std::string body_two = two.substr(header_end + 1);
    const auto path = dir.file("gap.csv");
    write_file(path, one + "\n\n" + body_two);

    const auto parsed = parse_features_csv(path);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].sample_id == "a");
    CHECK(parsed[1].sample_id == "b");
}

TEST_CASE("features csv parse failures") {
    TempDir dir;
    const std::string good = render_features_csv({make_record("a", "retained", "orig", 1.0)});

    SECTION("missing file") {
        CHECK_THROWS_AS(parse_features_csv(dir.file("absent.csv")), Error);
    }
    SECTION("empty file") {
        const auto path = dir.file("empty.csv");
        write_text(path, "");
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
    }
    SECTION("wrong header") {
        const auto path = dir.file("header.csv");
        write_text(path, "id,label,arm,f1\n");
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Format);
            CHECK(std::string(e.what()).find(":1") != std::string::npos);
        }
    }
    SECTION("header only, no rows") {
        const auto path = dir.file("norows.csv");
        write_text(path, good.substr(0, good.find('\n') + 1));
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
    }
    SECTION("wrong column count") {
        const auto path = dir.file("cols.csv");
        write_text(path, good + "x,retained,orig,1,2,3\n");
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Format);
            CHECK(std::string(e.what()).find(":3") != std::string::npos);
        }
    }
    SECTION("unknown label") {
        auto bad = make_record("x", "retained", "orig", 1.0);
        std::string row = render_features_csv({bad});
        row = good + row.substr(row.find('\n') + 1);
        const auto pos = row.rfind("retained");
        row.replace(pos, 8, "caverns!");
        const auto path = dir.file("label.csv");
        write_text(path, row);
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
    }
    SECTION("unparseable number") {
        std::string row = good + "x,retained,orig";
        for (size_t i = 0; i < kFeatureCount - 1; ++i) row += ",1.5";
        row += ",oops\n";
        const auto path = dir.file("num.csv");
        write_text(path, row);
        try {
            parse_features_csv(path);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Format);
            CHECK(std::string(e.what()).find("oops") != std::string::npos);
        }
    }
}

TEST_CASE("scores csv layout") {
    ScoreRecord scalar;
    scalar.method = "loss_based";
    scalar.arm = "orig";
    scalar.sample_id = "s9";
    scalar.label = "forgotten";
    scalar.scores = {-2.5, -2.5, -2.5};
    scalar.orientation = "higher-means-less-memorized";

    ScoreRecord probs;
    probs.method = "remind_random_forest";
    probs.arm = "reph";
    probs.sample_id = "s10";
    probs.label = "holdout";
    probs.scores = {0.25, 0.25, 0.5};
    probs.orientation = "class-probability";

    const std::string csv = render_scores_csv({scalar, probs});
    const auto lines = lines_of(csv);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "method,arm,sample_id,label,score_retained,score_forgotten,score_holdout,orientation");
    CHECK(lines[1] ==
          "loss_based,orig,s9,forgotten,-2.5,-2.5,-2.5,higher-means-less-memorized");
    CHECK(lines[2] == "remind_random_forest,reph,s10,holdout,0.25,0.25,0.5,class-probability");
}

TEST_CASE("write_file failures") {
    TempDir dir;
    SECTION("roundtrip content") {
        const auto path = dir.file("blob.bin");
        const std::string payload = std::string("abc\0def\n\xff", 9);
        write_file(path, payload);
        CHECK(read_text(path) == payload);
    }
    SECTION("unwritable path") {
        try {
            write_file(dir.file("no-such-dir/out.txt"), "x");
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
    }
}

TEST_CASE("feature histograms emit one panel per feature plus bin counts") {
    // f1 carries a crafted spread; every other feature is constant and must
    // land entirely in the first bin.
    std::vector<FeatureRecord> records;
    const struct {
        const char* id;
        const char* label;
        double f1;
    } spec[] = {
        {"r1", "retained", 0.0},  {"r2", "retained", 1.0}, {"g1", "forgotten", 0.5},
        {"h1", "holdout", 0.25},  {"h2", "holdout", 0.74},
    };
    for (const auto& s : spec) {
        FeatureRecord r;
        r.sample_id = s.id;
        r.label = s.label;
        r.arm = "orig";
        for (size_t i = 0; i < kFeatureCount; ++i) r.features[i] = 7.0;
        r.features[0] = s.f1;
        records.push_back(r);
    }

    TempDir dir;
    const auto out_dir = dir.file("hist");
    const auto written = emit_feature_histograms(records, out_dir, 4);

    REQUIRE(written.size() == kFeatureCount + 1);
    for (size_t i = 0; i < kFeatureCount; ++i)
        CHECK(written[i] == out_dir + "/orig_f" + std::to_string(i + 1) + ".svg");
    CHECK(written.back() == out_dir + "/orig_bins.csv");

    const std::string svg = read_text(written[0]);
    CHECK(svg.substr(0, 4) == "<svg");
    CHECK(svg.find("f1 (orig)") != std::string::npos);
    CHECK(svg.find("#1f77b4") != std::string::npos);
    CHECK(svg.find("#2ca02c") != std::string::npos);
    CHECK(svg.find("#d62728") != std::string::npos);

    const auto lines = lines_of(read_text(written.back()));
    REQUIRE(lines.size() == 1 + kFeatureCount * 4);
    CHECK(lines[0] == "feature,bin,lo,hi,retained,forgotten,holdout");

    // f1 spans [0,1]: 0.0 -> bin 0, 0.25 -> bin 1, {0.5, 0.74} -> bin 2,
    // 1.0 clamps into bin 3.
    CHECK(lines[1] == "f1,0,0,0.25,1,0,0");
    CHECK(lines[2] == "f1,1,0.25,0.5,0,0,1");
    CHECK(lines[3] == "f1,2,0.5,0.75,0,1,1");
    CHECK(lines[4] == "f1,3,0.75,1,1,0,0");

    // Constant f2 degenerates to a single occupied bin with lo == hi.
    CHECK(lines[5] == "f2,0,7,7,2,1,2");
    CHECK(lines[6] == "f2,1,7,7,0,0,0");

    // Every class count column sums to the class's record count per feature.
    for (size_t f = 0; f < kFeatureCount; ++f) {
        double retained = 0, forgotten = 0, holdout = 0;
        for (size_t b = 0; b < 4; ++b) {
            const auto parts = detail::split(lines[1 + f * 4 + b], ',');
            REQUIRE(parts.size() == 7);
            retained += detail::parse_double(parts[4], "test");
            forgotten += detail::parse_double(parts[5], "test");
            holdout += detail::parse_double(parts[6], "test");
        }
        CHECK(retained == 2.0);
        CHECK(forgotten == 1.0);
        CHECK(holdout == 2.0);
    }
}

TEST_CASE("feature histograms split arms into separate file sets") {
    std::vector<FeatureRecord> records;
    for (const char* arm : {"orig", "reph"}) {
        records.push_back(make_record(std::string("a-") + arm, "retained", arm, 0.0));
        records.push_back(make_record(std::string("b-") + arm, "forgotten", arm, 1.0));
    }
    TempDir dir;
    const auto written = emit_feature_histograms(records, dir.file("h"), 3);
    REQUIRE(written.size() == 2 * (kFeatureCount + 1));
    CHECK(written[0] == dir.file("h") + "/orig_f1.svg");
    CHECK(written[kFeatureCount] == dir.file("h") + "/orig_bins.csv");
    CHECK(written[kFeatureCount + 1] == dir.file("h") + "/reph_f1.svg");
    CHECK(written.back() == dir.file("h") + "/reph_bins.csv");
}

TEST_CASE("feature histogram failures") {
    TempDir dir;
    SECTION("no records") {
        CHECK_THROWS_AS(emit_feature_histograms({}, dir.file("h")), Error);
    }
    SECTION("bins below one") {
        std::vector<FeatureRecord> records = {make_record("a", "retained", "orig", 0.0),
                                              make_record("b", "holdout", "orig", 1.0)};
        try {
            emit_feature_histograms(records, dir.file("h"), 0);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Parameter);
        }
    }
    SECTION("single-class arm") {
        std::vector<FeatureRecord> records = {make_record("a", "retained", "orig", 0.0),
                                              make_record("b", "retained", "orig", 1.0),
                                              make_record("c", "retained", "reph", 2.0),
                                              make_record("d", "holdout", "reph", 3.0)};
        try {
            emit_feature_histograms(records, dir.file("h"), 4);
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
            CHECK(std::string(e.what()).find("'orig'") != std::string::npos);
        }
    }
}

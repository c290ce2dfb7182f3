#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace vesselq;
using test::finding;

TEST(ReportJsonTest, FindingRoundTrip) {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> deg(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        StenosisFinding f = finding(int(rng() % 9), {int(rng() % 50), int(rng() % 50), int(rng() % 50)}, deg(rng));
        f.index = rng() % 300;
        const StenosisFinding back = finding_from_json(to_json(f));
        EXPECT_EQ(back.segment_id, f.segment_id);
        EXPECT_EQ(back.index, f.index);
        EXPECT_EQ(back.position, f.position);
        EXPECT_EQ(back.a_min, f.a_min);
        EXPECT_EQ(back.a_ref, f.a_ref);
        EXPECT_EQ(back.degree, f.degree);
        EXPECT_EQ(back.grade, f.grade);
    }
}

TEST(ReportJsonTest, FindingsReportRoundTrip) {
    const std::vector<StenosisFinding> fs{finding(0, {3, 4, 5}, 0.55), finding(1, {9, 9, 2}, 0.3)};
    const std::vector<ArterySegment> segs{{0, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}}, {1, {{5, 5, 5}, {6, 6, 6}}}};
    const auto j = findings_to_json(fs, segs, {0.4, 0.4, 0.5}, std::nullopt);
    EXPECT_EQ(j.at("schema"), "vesselq.findings");
    EXPECT_FALSE(j.contains("timestamp"));
    EXPECT_EQ(j.at("grade_colors").at("severe"), "red");
    const FindingSet back = findings_from_json(j);
    ASSERT_EQ(back.findings.size(), 2u);
    EXPECT_EQ(back.findings[1].position, (Voxel{9, 9, 2}));
    ASSERT_EQ(back.segments.size(), 2u);
    EXPECT_EQ(back.segments[0].end, (Voxel{2, 0, 0}));
    EXPECT_EQ(back.segments[1].start, (Voxel{5, 5, 5}));
    EXPECT_TRUE(findings_to_json(fs, segs, {1, 1, 1}, std::string("2026-01-01T00:00:00Z")).contains("timestamp"));
}

TEST(ReportJsonTest, MalformedFindingsReport) {
    EXPECT_THROW(findings_from_json(nlohmann::json::array()), Error);
    EXPECT_THROW(findings_from_json(nlohmann::json{{"schema", "other"}, {"findings", nlohmann::json::array()}}),
                 Error);
    try {
        findings_from_json(nlohmann::json{{"findings", {{{"segment_id", "x"}}}}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::format);
    }
}

TEST(ReportJsonTest, EvalTableColumns) {
    FindingSet p, g;
    p.findings = {finding(0, {0, 0, 0}, 0.6)};
    g.findings = {finding(0, {1, 0, 0}, 0.5)};
    const auto r = stratified_report(match(p, g), p, g);
    const std::string table = eval_report_table(r);
    std::istringstream is(table);
    std::string header;
    std::getline(is, header);
    for (const char* col : {"Stenosis Type", "TPR", "PPV", "ARMSE", "RRMSE"}) {
        EXPECT_NE(header.find(col), std::string::npos) << col;
    }
    std::size_t lines = 0;
    for (std::string line; std::getline(is, line);) ++lines;
    EXPECT_EQ(lines, 5u);
    EXPECT_NE(table.find("n/a"), std::string::npos);
    const auto j = eval_report_to_json(r, match(p, g), std::nullopt);
    EXPECT_EQ(j.at("rows").size(), 5u);
}

TEST(ReportJsonTest, CsvLayouts) {
    const std::vector<ArterySegment> segs{{4, {{1, 2, 3}, {2, 2, 3}}}};
    EXPECT_EQ(centerline_csv(segs), "segment_id,point_index,x,y,z\n4,0,1,2,3\n4,1,2,2,3\n");
}

TEST(ReportJsonTest, WriteIsAtomicAndReadable) {
    const auto dir = test::scratch_dir("report_json");
    const auto path = dir / "a.json";
    write_json(path, nlohmann::json{{"k", 1}});
    EXPECT_EQ(read_json(path).at("k"), 1);
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        EXPECT_EQ(e.path().filename(), "a.json");
    }
    EXPECT_THROW(read_json(dir / "missing.json"), Error);
    std::ofstream(dir / "bad.json") << "{not json";
    EXPECT_THROW(read_json(dir / "bad.json"), Error);
}

TEST(ReportJsonTest, PhantomTruthReadsAsFindings) {
    const auto spec = phantom_spec_from_json(read_json(test::data_dir() / "phantoms" / "notch50.json"));
    const Phantom ph = rasterize(spec);
    const FindingSet s = findings_from_json(phantom_truth_to_json(spec, ph));
    ASSERT_EQ(s.findings.size(), 1u);
    EXPECT_NEAR(s.findings[0].degree, 0.5, 1e-9);
    ASSERT_EQ(s.segments.size(), 1u);
}

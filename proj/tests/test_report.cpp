#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "confaudit/report.hpp"
#include "test_support.hpp"

using namespace confaudit;
using confaudit::testing::make_record;
using confaudit::testing::TempDir;

namespace {

SweepResult fake_sweep(const BinaryTask& target, const BinaryTask& confounder) {
    SweepResult r;
    r.config.target = target;
    r.config.confounder = confounder;
    r.config.seed = 9;
    r.config.repeats = 1;
    for (double b : r.config.bias_grid) {
        SweepPoint p;
        p.bias = b;
        p.auc = {MetricKind::Auroc, 0.5 + (b - 0.5) * 0.6, 0.49 + (b - 0.5) * 0.6, 0.51 + (b - 0.5) * 0.6, 100, 1, 0.95, 0};
        p.repeats = {p.auc};
        r.points.push_back(p);
    }
    const auto s = shortcut_score(r.points);
    r.shortcut_score = s.value;
    r.monotone = s.monotone;
    r.reference_curve = reference_curve_for(r.config);
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

}  // namespace

TEST(Report, RaceSweepRowLabels) {
    const auto r = fake_sweep(BinaryTask::race(Race::White), BinaryTask::sex());
    EXPECT_EQ(bias_row_label(r.config, 0.5), "50% Male in White Cohort / Female in Non White");
    EXPECT_EQ(bias_row_label(r.config, 1.0), "100% Male in White Cohort / Female in Non White");
    EXPECT_EQ(sweep_title(r.config), "Training Task To Predict Race (White/Non White)");
    const auto table = sweep_table(r);
    ASSERT_EQ(table.size(), 7u);
    EXPECT_EQ(table[0][0], "Proportion Biased");
    EXPECT_EQ(table[1][1], "0.500 [0.490, 0.510]");
    EXPECT_EQ(table[1][2], "0.57");
    EXPECT_EQ(table[6][2], "0.84");
}

TEST(Report, SexSweepRowLabels) {
    const auto r = fake_sweep(BinaryTask::sex(), BinaryTask::race(Race::White));
    EXPECT_EQ(bias_row_label(r.config, 0.7), "70% White in Male Cohort / Non White in Not Male");
    EXPECT_EQ(sweep_title(r.config), "Training Task To Predict Sex (Male/Not Male)");
}

TEST(Report, TwoSweepsShareRows) {
    ReportInputs in;
    in.sweeps = {fake_sweep(BinaryTask::race(Race::White), BinaryTask::sex()),
                 fake_sweep(BinaryTask::sex(), BinaryTask::race(Race::White))};
    const std::string text = render_report(in);
    const auto lines = lines_of(text);
    ASSERT_GE(lines.size(), 8u);
    EXPECT_TRUE(contains(lines[0], "Training Task To Predict Race"));
    EXPECT_TRUE(contains(lines[0], "Training Task To Predict Sex"));
    EXPECT_TRUE(contains(lines[2], "50% Male in White Cohort / Female in Non White"));
    EXPECT_TRUE(contains(lines[2], "50% White in Male Cohort / Non White in Not Male"));
    EXPECT_TRUE(contains(lines[7], "100% Male in White Cohort"));
    EXPECT_TRUE(contains(text, "eval_mode=matched"));
    EXPECT_TRUE(contains(text, "shortcut score 0.300"));
    for (const auto& l : lines) EXPECT_TRUE(l.empty() || l.back() != ' ');
}

TEST(Report, EmptyInputsRejected) { EXPECT_THROW(render_report(ReportInputs{}), DataError); }

TEST(Report, DemographicsLayout) {
    std::vector<StudyRecord> recs{make_record("P1", "S1", 60, Sex::Male, Race::White),
                                  make_record("P1", "S2", 61, Sex::Male, Race::White),
                                  make_record("P2", "S3", 50, Sex::Female, Race::Black)};
    ReportInputs in;
    in.demographics.emplace_back("cohort", summarize_demographics(Cohort(recs, 2)));
    const std::string text = render_report(in);
    EXPECT_TRUE(contains(text, "cohort (by patient)"));
    EXPECT_TRUE(contains(text, "cohort (by study)"));
    EXPECT_TRUE(contains(text, "Race/Ethnicity, n (%)"));
    const auto lines = lines_of(text);
    bool male = false;
    for (const auto& l : lines)
        if (l.rfind("Male (%)", 0) == 0) {
            male = true;
            EXPECT_TRUE(contains(l, "1 (50.0%)"));
            EXPECT_TRUE(contains(l, "2 (66.7%)"));
        }
    EXPECT_TRUE(male);
}

TEST(Report, BaselineAndTransferSections) {
    ReportInputs in;
    BaselineResult b;
    b.auc = {MetricKind::Auroc, 0.61, 0.6, 0.62, 100, 0, 0.95, 0};
    b.coefficient_names = baseline_input_names();
    b.coefficients.assign(kBaselineInputDim, 0.1);
    b.bayes_oracle_auc = 0.63;
    in.baselines.push_back(b);
    TransferResult t;
    t.train_profile = "csmc_like";
    t.test_profile = "shc_like";
    t.internal = {MetricKind::Auroc, 0.88, 0.87, 0.89, 100, 0, 0.95, 0};
    t.external = {MetricKind::Auroc, 0.87, 0.86, 0.88, 100, 0, 0.95, 0};
    t.gap = 0.01;
    in.transfers.push_back(t);
    const std::string text = render_report(in);
    EXPECT_TRUE(contains(text, "Bayes oracle AUC 0.630"));
    EXPECT_TRUE(contains(text, "Published real-data AUC 0.62"));
    EXPECT_TRUE(contains(text, "external shc_like AUC 0.870 [0.860, 0.880]"));
}

TEST(Report, EmitWritesPlotFiles) {
    TempDir dir;
    ReportInputs in;
    in.sweeps = {fake_sweep(BinaryTask::race(Race::White), BinaryTask::sex())};
    const std::string text = emit_report(in, dir / "out");
    std::ifstream report(dir / "out/report.txt");
    std::stringstream buf;
    buf << report.rdbuf();
    EXPECT_EQ(buf.str(), text);
    std::ifstream csv(dir / "out/sweep_0_race-WHITE_by_sex-M.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "bias,auc,ci_low,ci_high,repeat");
}

#include "expbias/eval/report.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace expbias;
using namespace expbias::eval;
using expbias::testutil::entity;
using expbias::testutil::kind_of;
using expbias::testutil::panel;
using models::ForecastResult;

namespace {

ForecastResult fc(const std::string &id, std::int64_t origin, std::vector<double> values) {
  ForecastResult r;
  r.entity_id = id;
  r.origin_time = origin;
  r.values = std::move(values);
  return r;
}

// Truth rows at times 1..n for the target column (second feature).
data::Entity truth_entity(const std::string &id, const std::vector<double> &ys) {
  data::Entity e;
  e.id = id;
  e.values.resize(static_cast<Eigen::Index>(ys.size()), 2);
  for (std::size_t t = 0; t < ys.size(); ++t) {
    e.times.push_back(static_cast<std::int64_t>(t + 1));
    e.values(static_cast<Eigen::Index>(t), 0) = 0.0;
    e.values(static_cast<Eigen::Index>(t), 1) = ys[t];
  }
  return e;
}

data::PanelDataset truth_panel(std::vector<data::Entity> es) { return panel({"x", "y"}, 1, std::move(es)); }

HorizonReport report_with_curve(const std::string &label, const std::vector<double> &curve) {
  std::vector<double> zeros(curve.size(), 0.0);
  return horizon_mae(label, {fc("e", 0, curve)}, truth_panel({truth_entity("e", zeros)}));
}

} // namespace

TEST(HorizonMae, PerfectForecastsScoreZero) {
  const auto truth = truth_panel({truth_entity("a", {1, 2, 3}), truth_entity("b", {4, 5, 6})});
  const auto r = horizon_mae("m", {fc("a", 0, {1, 2, 3}), fc("b", 0, {4, 5, 6})}, truth);
  EXPECT_EQ(r.mae, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(r.overall, 0.0);
  EXPECT_EQ(r.n_entities, (std::vector<std::size_t>{2, 2, 2}));
}

TEST(HorizonMae, OneEntityErrorCurve) {
  const auto truth = truth_panel({truth_entity("a", {10, 10, 10})});
  const auto r = horizon_mae("m", {fc("a", 0, {11, 8, 13})}, truth);
  EXPECT_EQ(r.mae, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(r.overall, 2.0);
  EXPECT_EQ(r.horizon(), 3u);
}

TEST(HorizonMae, StepMeanAcrossEntities) {
  const auto truth = truth_panel({truth_entity("a", {0}), truth_entity("b", {0})});
  const auto r = horizon_mae("m", {fc("a", 0, {1}), fc("b", 0, {-3})}, truth);
  EXPECT_EQ(r.mae[0], 2.0);
}

TEST(HorizonMae, DropoutsOnlyCountWhereTruthExists) {
  auto short_e = truth_entity("s", {1});
  auto gap = truth_entity("g", {0, 0, 0});
  gap.values(1, 1) = std::nan("");
  const auto truth = truth_panel({truth_entity("a", {0, 0, 0}), short_e, gap});
  const auto r =
      horizon_mae("m", {fc("a", 0, {1, 1, 1}), fc("s", 0, {4, 4, 4}), fc("g", 0, {2, 2, 2})}, truth);
  EXPECT_EQ(r.n_entities, (std::vector<std::size_t>{3, 1, 2}));
  EXPECT_EQ(r.mae[0], 2.0);
  EXPECT_EQ(r.mae[1], 1.0);
  EXPECT_EQ(r.mae[2], 1.5);
  EXPECT_DOUBLE_EQ(r.overall, (1 + 3 + 2 + 1 + 1 + 2) / 6.0);
  EXPECT_TRUE(std::isnan(r.abs_errors[1][1]));
}

TEST(HorizonMae, OriginAndTimeStepAlignment) {
  auto e = truth_entity("a", {5, 6, 7, 8});
  e.times = {10, 20, 30, 40};
  auto truth = truth_panel({e});
  truth.time_step = 10;
  const auto r = horizon_mae("m", {fc("a", 20, {7, 9})}, truth);
  EXPECT_EQ(r.mae, (std::vector<double>{0, 1}));
}

TEST(HorizonMae, Errors) {
  const auto truth = truth_panel({truth_entity("a", {1, 2})});
  EXPECT_EQ(kind_of([&] { horizon_mae("m", {fc("zz", 0, {1})}, truth); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { horizon_mae("m", {fc("a", 50, {1})}, truth); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { horizon_mae("m", {fc("a", 0, {1}), fc("a", 0, {1, 2})}, truth); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { horizon_mae("m", {}, truth); }), ErrorKind::InvalidInput);
}

TEST(HorizonMae, TranslationInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<data::Entity> es, shifted_es;
  std::vector<ForecastResult> f, shifted_f;
  const double c = 1024.0;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> ys(6), ps(6), ys2(6), ps2(6);
    for (int t = 0; t < 6; ++t) {
      ys[t] = n(rng);
      ps[t] = n(rng);
      ys2[t] = ys[t] + c;
      ps2[t] = ps[t] + c;
    }
    es.push_back(truth_entity("e" + std::to_string(i), ys));
    shifted_es.push_back(truth_entity("e" + std::to_string(i), ys2));
    f.push_back(fc("e" + std::to_string(i), 0, ps));
    shifted_f.push_back(fc("e" + std::to_string(i), 0, ps2));
  }
  const auto a = horizon_mae("m", f, truth_panel(es));
  const auto b = horizon_mae("m", shifted_f, truth_panel(shifted_es));
  for (std::size_t h = 0; h < 6; ++h) {
    EXPECT_NEAR(a.mae[h], b.mae[h], 1e-12);
  }
}

TEST(HorizonMae, MeanOverSteps) {
  const auto r = report_with_curve("m", {1, 2, 3, 4});
  EXPECT_EQ(r.mean_over(1, 2), 1.5);
  EXPECT_EQ(r.mean_over(3, 4), 3.5);
  EXPECT_EQ(kind_of([&] { r.mean_over(0, 2); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { r.mean_over(2, 5); }), ErrorKind::InvalidInput);
}

TEST(Compare, SingleReportRatioOne) {
  const auto cmp = compare_reports({report_with_curve("a", {1, 2})});
  EXPECT_EQ(cmp.ratio, (std::vector<double>{1.0}));
}

TEST(Compare, HalfErrorsHalfRatio) {
  const auto cmp = compare_reports({report_with_curve("a", {2, 4, 6}), report_with_curve("b", {1, 2, 3})});
  EXPECT_EQ(cmp.ratio[1], 0.5);
  for (const auto &w : cmp.step_winner) {
    EXPECT_EQ(w, std::optional<std::size_t>(1));
  }
}

TEST(Compare, IdenticalReportsNoWinner) {
  const auto r = report_with_curve("a", {3, 1});
  auto r2 = r;
  r2.label = "b";
  const auto cmp = compare_reports({r, r2});
  EXPECT_EQ(cmp.ratio, (std::vector<double>{1.0, 1.0}));
  for (const auto &w : cmp.step_winner) {
    EXPECT_FALSE(w.has_value());
  }
}

TEST(Compare, RatiosIndependentOfNonBaselineOrder) {
  const auto a = report_with_curve("a", {2, 2});
  const auto b = report_with_curve("b", {1, 3});
  const auto c = report_with_curve("c", {5, 1});
  const auto x = compare_reports({a, b, c});
  const auto y = compare_reports({a, c, b});
  EXPECT_EQ(x.ratio[1], y.ratio[2]);
  EXPECT_EQ(x.ratio[2], y.ratio[1]);
  EXPECT_EQ(x.step_winner[0], std::optional<std::size_t>(1));
  EXPECT_EQ(y.step_winner[0], std::optional<std::size_t>(2));
}

TEST(Compare, MismatchedHorizonsRejected) {
  EXPECT_EQ(kind_of([] { compare_reports({report_with_curve("a", {1}), report_with_curve("b", {1, 2})}); }),
            ErrorKind::InvalidInput);
}

TEST(Compare, TableListsEveryModel) {
  const auto table =
      format_table(compare_reports({report_with_curve("persistence", {2, 2}), report_with_curve("x", {1, 1})}));
  EXPECT_NE(table.find("overall_mae"), std::string::npos);
  EXPECT_NE(table.find("persistence"), std::string::npos);
  EXPECT_NE(table.find("0.5000"), std::string::npos);
}

TEST(Emit, FilesRowsAndSummaryConsistency) {
  std::vector<double> curve(24);
  for (std::size_t h = 0; h < 24; ++h) {
    curve[h] = 0.25 * static_cast<double>(h);
  }
  auto truth = truth_panel({truth_entity("e", std::vector<double>(24, 0.0)), truth_entity("f", std::vector<double>(10, 0.0))});
  const auto r = horizon_mae("model/one", {fc("e", 0, curve), fc("f", 0, curve)}, truth);
  const auto base = horizon_mae("persistence", {fc("e", 0, std::vector<double>(24, 1.0)), fc("f", 0, std::vector<double>(24, 1.0))}, truth);
  const auto dir = testutil::scratch_dir("emit");
  emit_outputs({base, r}, dir);

  std::istringstream lines(testutil::slurp(dir / "mae_curve_model_one.csv"));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "horizon_step,mae,n_entities");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
  }
  EXPECT_EQ(rows, 24);
  EXPECT_TRUE(std::filesystem::exists(dir / "per_entity_model_one.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "per_entity_persistence.csv"));

  const auto doc = nlohmann::json::parse(testutil::slurp(dir / "summary.json"));
  EXPECT_EQ(doc["baseline"], "persistence");
  EXPECT_EQ(doc["horizon"], 24);
  EXPECT_EQ(doc["units"], "original");
  double weighted = 0.0, n = 0.0;
  for (std::size_t h = 0; h < 24; ++h) {
    weighted += r.mae[h] * static_cast<double>(r.n_entities[h]);
    n += static_cast<double>(r.n_entities[h]);
  }
  EXPECT_NEAR(doc["models"][1]["overall_mae"].get<double>(), weighted / n, 1e-12);
  EXPECT_NEAR(doc["models"][1]["ratio_to_baseline"].get<double>(), r.overall / base.overall, 1e-15);
}

TEST(Emit, RerunIsByteIdentical) {
  const auto r = report_with_curve("a", {0.1, 0.2, 1.0 / 3.0});
  const auto d1 = testutil::scratch_dir("emit_a");
  const auto d2 = testutil::scratch_dir("emit_b");
  emit_outputs({r}, d1);
  emit_outputs({r}, d2);
  for (const char *f : {"mae_curve_a.csv", "per_entity_a.csv", "summary.json"}) {
    EXPECT_EQ(testutil::slurp(d1 / f), testutil::slurp(d2 / f)) << f;
  }
}

TEST(Emit, UnwritableDirectoryIsIoError) {
  const auto dir = testutil::scratch_dir("emit_blocked");
  testutil::write_text(dir / "file", "x");
  EXPECT_EQ(kind_of([&] { emit_outputs({report_with_curve("a", {1})}, dir / "file" / "sub"); }), ErrorKind::Io);
}

TEST(Units, ParseAndLabels) {
  EXPECT_EQ(parse_units("transformed"), Units::Transformed);
  EXPECT_EQ(kind_of([] { parse_units("kelvin"); }), ErrorKind::InvalidConfiguration);
  EXPECT_EQ(file_label("a b/c"), "a_b_c");
}

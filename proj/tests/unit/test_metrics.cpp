#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/metrics/curves.hpp"
#include "tilebench/metrics/metrics.hpp"
#include "tilebench/metrics/report.hpp"

using namespace tilebench;
using namespace tilebench::metrics;

TEST_SUITE("metrics") {

TEST_CASE("four point fixture") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(auroc(s, y) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(auprc(s, y) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("auroc and auprc agree with brute force on random tied instances") {
  Rng rng(11);
  for (int k = 0; k < 300; ++k) {
    const auto [s, y] = tbtest::random_instance(rng);
    CHECK(auroc(s, y) == tbtest::brute_auroc(s, y));
    CHECK(std::abs(auprc(s, y) - tbtest::brute_auprc(s, y)) <= 1e-12);
  }
}

TEST_CASE("hand-worked ties") {
  // one positive tied with one negative: 0.5 credit
  CHECK(auroc({0.5, 0.5}, {1, 0}) == 0.5);
  CHECK(auroc({0.2, 0.9, 0.9}, {0, 1, 0}) == doctest::Approx(0.75));
  // all tied: a single cutoff at prevalence
  CHECK(auprc({0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 0}) == doctest::Approx(0.25));
  CHECK(auroc({1, 2, 3}, {0, 0, 1}) == 1.0);
  CHECK(auroc({3, 2, 1}, {0, 0, 1}) == 0.0);
  // perfect ranking is exactly 1, never a rounding step above or below
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 49; ++i) {
    s.push_back(i / 49.0);
    y.push_back(i >= 30);
  }
  CHECK(auprc(s, y) == 1.0);
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), SingleClass);
  CHECK_THROWS_AS(auprc({0.1, 0.2}, {0, 0}), NoPositives);
  CHECK_THROWS_AS(auroc({0.1}, {1, 0}), InvariantViolation);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {2, 0}), InvariantViolation);
  CHECK_THROWS_AS(auroc({NAN, 0.2}, {1, 0}), InvariantViolation);
  CHECK(auprc({0.4, 0.1}, {1, 1}) == 1.0);
}

TEST_CASE("quantile interpolates between order statistics") {
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
}

TEST_CASE("bootstrap is seed-reproducible and thread-independent") {
  Rng rng(5);
  const auto [s, y] = tbtest::normal_cohort(120, rng);
  const auto a = bootstrap_ci(s, y, Metric::AUROC, 1000, 0.95, 42, 1);
  const auto b = bootstrap_ci(s, y, Metric::AUROC, 1000, 0.95, 42, 1);
  const auto c = bootstrap_ci(s, y, Metric::AUROC, 1000, 0.95, 42, 4);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.ci_low == c.ci_low);
  CHECK(a.ci_high == c.ci_high);
  CHECK(a.contains_point());
  CHECK(a.n_patients == 120);
  CHECK(a.n_bootstrap == 1000);
  const auto d = bootstrap_ci(s, y, Metric::AUROC, 1000, 0.95, 43, 1);
  CHECK((d.ci_low != a.ci_low || d.ci_high != a.ci_high));
  const auto p = bootstrap_ci(s, y, Metric::AUPRC, 200, 0.9, 1, 1);
  CHECK(p.point_estimate == auprc(s, y));
  CHECK(p.level == 0.9);
}

TEST_CASE("bootstrap replicate r depends only on its own stream") {
  Rng rng(9);
  const auto [s, y] = tbtest::normal_cohort(40, rng);
  const auto a = bootstrap_replicates(s, y, Metric::AUROC, 50, 3, 1);
  const auto b = bootstrap_replicates(s, y, Metric::AUROC, 80, 3, 3);
  for (std::size_t r = 0; r < 50; ++r) CHECK(a.values[r] == b.values[r]);
}

TEST_CASE("tiny cohorts redraw single-class resamples") {
  const auto rep = bootstrap_ci({0.2, 0.8, 0.6}, {0, 1, 0}, Metric::AUROC, 300, 0.95, 0);
  CHECK(rep.rejected_resamples > 0);
  CHECK(rep.ci_low >= 0.0);
  CHECK(rep.ci_high <= 1.0);
}

TEST_CASE("confidence interval width shrinks as 1/sqrt(n)") {
  Rng rng(21);
  double w100 = 0.0, w400 = 0.0;
  for (int k = 0; k < 6; ++k) {
    const auto [s1, y1] = tbtest::normal_cohort(100, rng);
    const auto [s4, y4] = tbtest::normal_cohort(400, rng);
    const auto a = bootstrap_ci(s1, y1, Metric::AUROC, 1000, 0.95, k);
    const auto b = bootstrap_ci(s4, y4, Metric::AUROC, 1000, 0.95, k);
    w100 += a.ci_high - a.ci_low;
    w400 += b.ci_high - b.ci_low;
  }
  CHECK(w100 / w400 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("roc curve area equals auroc") {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const auto [s, y] = tbtest::random_instance(rng);
    const auto roc = roc_curve(s, y);
    CHECK(roc.front().x == 0.0);
    CHECK(roc.front().y == 0.0);
    CHECK(roc.back().x == doctest::Approx(1.0));
    CHECK(roc.back().y == doctest::Approx(1.0));
    CHECK(trapezoid_area(roc) == doctest::Approx(auroc(s, y)).epsilon(1e-12));
    const auto pr = pr_curve(s, y);
    CHECK(pr.back().x == doctest::Approx(1.0));
  }
}

TEST_CASE("curve exports") {
  tbtest::TempDir dir("curves");
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const auto files = export_curves(s, y, dir.path(), "msi_resnet18", "AUROC 0.750", "AUPRC 0.833");
  CHECK(read_text(files.roc_csv).rfind("fpr,tpr\n", 0) == 0);
  CHECK(read_text(files.pr_csv).rfind("recall,precision\n", 0) == 0);
  const auto svg = read_text(files.roc_svg);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("AUROC 0.750") != std::string::npos);
}

TEST_CASE("report json round trip and summary") {
  ModelReport r;
  r.task = Task::BRAF;
  r.family = nn::Family::SwinT;
  r.parameter_count = 1234;
  r.reference_parameter_count = 48838796;
  r.seed = 7;
  MetricReport m;
  m.point_estimate = 0.8125;
  m.ci_low = 0.7;
  m.ci_high = 0.9;
  m.n_bootstrap = 1000;
  m.n_patients = 50;
  r.auroc = m;
  m.metric = Metric::AUPRC;
  r.auprc = m;
  const auto back = parse_report_json(report_json(r));
  CHECK(back.task == Task::BRAF);
  CHECK(back.family == nn::Family::SwinT);
  CHECK(back.auroc->point_estimate == 0.8125);
  CHECK(back.auprc->metric == Metric::AUPRC);
  CHECK(!back.timing);
  CHECK(report_json(back) == report_json(r));
  CHECK(report_file_name(Task::BRAF, nn::Family::SwinT) == "braf_swin_t.json");

  ModelReport f;
  f.family = nn::Family::ResNet50;
  f.mode = "forward_only";
  f.reference_parameter_count = 23512130;
  const auto table = summary_table({r, f});
  CHECK(table.find("Swin-T") != std::string::npos);
  CHECK(table.find("0.812 (0.700-0.900)") != std::string::npos);
  CHECK(table.find("n/a") != std::string::npos);
  CHECK(table.find("23.51") != std::string::npos);
  const auto csv = summary_csv({r, f});
  CHECK(csv.rfind(std::string(kSummaryHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK_THROWS_AS(sorted_reports({r, r}), InvariantViolation);
  CHECK_THROWS_AS(parse_report_json("{"), ParseError);
}

}  // TEST_SUITE

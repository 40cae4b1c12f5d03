#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tilebench::metrics {

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

// One point per distinct score (descending), preceded by (0, 0) and ending at
// (1, 1). Tied scores move diagonally, so the trapezoid area equals auroc.
std::vector<CurvePoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);
// (recall, precision), one point per distinct score, highest score first.
std::vector<CurvePoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

double trapezoid_area(const std::vector<CurvePoint>& curve);

// "<x_name>,<y_name>" header, one point per line.
std::string curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name, const std::string& y_name);

// Standalone SVG line plot on the unit square; `caption` is printed below the
// axes (used for the point estimate and CI).
std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::string& caption, bool diagonal);

struct CurveFiles {
  std::filesystem::path roc_csv, pr_csv, roc_svg, pr_svg;
};

// Writes <stem>_roc.csv, <stem>_pr.csv and the two SVGs into `dir`.
CurveFiles export_curves(const std::vector<double>& scores, const std::vector<int>& labels,
                         const std::filesystem::path& dir, const std::string& stem, const std::string& roc_caption,
                         const std::string& pr_caption);

}  // namespace tilebench::metrics

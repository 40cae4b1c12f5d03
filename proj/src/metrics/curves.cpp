#include "tilebench/metrics/curves.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/score_table.hpp"

namespace tilebench::metrics {

namespace {

struct Group {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

// Tie groups in descending score order, plus class totals.
std::vector<Group> descending_groups(const std::vector<double>& scores, const std::vector<int>& labels, Group& total) {
  if (scores.size() != labels.size()) throw InvariantViolation("scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Group> groups;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i == 0 || scores[idx[i]] != scores[idx[i - 1]]) groups.emplace_back();
    (labels[idx[i]] ? groups.back().pos : groups.back().neg)++;
    (labels[idx[i]] ? total.pos : total.neg)++;
  }
  return groups;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<CurvePoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  Group total;
  const auto groups = descending_groups(scores, labels, total);
  if (total.pos == 0 || total.neg == 0) throw SingleClass("ROC curve needs both classes");
  std::vector<CurvePoint> out{{0.0, 0.0}};
  std::int64_t tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    out.push_back({static_cast<double>(fp) / static_cast<double>(total.neg),
                   static_cast<double>(tp) / static_cast<double>(total.pos)});
  }
  return out;
}

std::vector<CurvePoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  Group total;
  const auto groups = descending_groups(scores, labels, total);
  if (total.pos == 0 || total.neg == 0) throw SingleClass("PR curve needs both classes");
  std::vector<CurvePoint> out;
  std::int64_t tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    out.push_back({static_cast<double>(tp) / static_cast<double>(total.pos),
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return out;
}

double trapezoid_area(const std::vector<CurvePoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
  }
  return area;
}

std::string curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name, const std::string& y_name) {
  std::string out = x_name + "," + y_name + "\n";
  for (const auto& p : curve) out += format_double(p.x) + "," + format_double(p.y) + "\n";
  return out;
}

std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::string& caption, bool diagonal) {
  // 400x400 plot area at (60, 40).
  constexpr double ox = 60, oy = 40, size = 400;
  auto px = [&](double x) { return fixed(ox + x * size, 2); };
  auto py = [&](double y) { return fixed(oy + (1.0 - y) * size, 2); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"530\" viewBox=\"0 0 500 530\" "
         "font-family=\"sans-serif\" font-size=\"13\">\n";
  svg << "<rect width=\"500\" height=\"530\" fill=\"white\"/>\n";
  svg << "<text x=\"260\" y=\"25\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  svg << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg << "<text x=\"" << px(v) << "\" y=\"" << fixed(oy + size + 16, 2) << "\" text-anchor=\"middle\">"
        << fixed(v, 2) << "</text>\n";
    svg << "<text x=\"" << fixed(ox - 6, 2) << "\" y=\"" << py(v) << "\" text-anchor=\"end\" dy=\"4\">" << fixed(v, 2)
        << "</text>\n";
  }
  if (diagonal) {
    svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i) svg << (i ? " " : "") << px(curve[i].x) << "," << py(curve[i].y);
  svg << "\"/>\n";
  svg << "<text x=\"260\" y=\"" << fixed(oy + size + 36, 2) << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fixed(oy + size / 2, 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fixed(oy + size / 2, 2) << ")\">" << escape(y_label) << "</text>\n";
  svg << "<text x=\"260\" y=\"" << fixed(oy + size + 62, 2) << "\" text-anchor=\"middle\">" << escape(caption)
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

CurveFiles export_curves(const std::vector<double>& scores, const std::vector<int>& labels,
                         const std::filesystem::path& dir, const std::string& stem, const std::string& roc_caption,
                         const std::string& pr_caption) {
  const auto roc = roc_curve(scores, labels);
  const auto pr = pr_curve(scores, labels);
  std::filesystem::create_directories(dir);
  CurveFiles f{dir / (stem + "_roc.csv"), dir / (stem + "_pr.csv"), dir / (stem + "_roc.svg"), dir / (stem + "_pr.svg")};
  write_text_atomic(f.roc_csv, curve_csv(roc, "fpr", "tpr"));
  write_text_atomic(f.pr_csv, curve_csv(pr, "recall", "precision"));
  write_text_atomic(f.roc_svg, curve_svg(roc, stem + " ROC", "False positive rate", "True positive rate", roc_caption, true));
  write_text_atomic(f.pr_svg, curve_svg(pr, stem + " precision-recall", "Recall", "Precision", pr_caption, false));
  return f;
}

}  // namespace tilebench::metrics

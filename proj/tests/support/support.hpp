#pragma once

// Shared by the unit suites and the acceptance binary: independent oracles,
// a finite-difference gradient checker and small fixtures.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "tilebench/core/rng.hpp"
#include "tilebench/nn/ops.hpp"
#include "tilebench/preprocess/image.hpp"

namespace tbtest {

namespace fs = std::filesystem;
using tilebench::Rng;
using DTensor = tilebench::nn::Tensor<double>;

// ---- metric oracles ------------------------------------------------------

// Pairwise count over every (positive, negative) pair.
inline double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  std::int64_t pos = 0, neg = 0;
  for (int v : y) (v ? pos : neg)++;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Every distinct score as a ">= cutoff" rule, highest first; precision at the
// cutoff weighted by the recall it adds.
inline double brute_auprc(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> cutoffs(s.begin(), s.end());
  std::int64_t n_pos = 0;
  for (int v : y) n_pos += v;
  double ap = 0.0;
  std::int64_t prev_tp = 0;
  for (double t : cutoffs) {
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp)++;
    }
    if (tp > prev_tp) {
      ap += (static_cast<double>(tp) / static_cast<double>(tp + fp)) *
            (static_cast<double>(tp - prev_tp) / static_cast<double>(n_pos));
    }
    prev_tp = tp;
  }
  return ap;
}

// Random instance with ties: scores drawn from a small set of levels.
inline std::pair<std::vector<double>, std::vector<int>> random_instance(Rng& rng, std::size_t max_n = 200) {
  const std::size_t n = 2 + tilebench::uniform_index(rng, max_n - 1);
  const int levels = 2 + static_cast<int>(tilebench::uniform_index(rng, 40));
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = tilebench::uniform01(rng) < 0.4 ? 1 : 0;
    const double shift = y[i] ? 0.15 : 0.0;
    s[i] = std::floor((tilebench::uniform01(rng) + shift) * levels) / levels;
  }
  y[0] = 1;
  y[1] = 0;
  return {s, y};
}

// Patient cohort with scores N(0, 1) for negatives and N(1, 1) for positives,
// half of each class.
inline std::pair<std::vector<double>, std::vector<int>> normal_cohort(std::size_t n, Rng& rng) {
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    s[i] = tilebench::standard_normal(rng) + y[i];
  }
  return {s, y};
}

// ---- gradient check ------------------------------------------------------

struct GradCheck {
  double rel_error = 0.0;   // |analytic - numeric| / max(|analytic|, |numeric|), 2-norms over probed entries
  std::size_t probed = 0;
};

inline std::vector<std::size_t> probe_indices(std::size_t size, std::size_t per_tensor, Rng& rng) {
  std::vector<std::size_t> idx;
  if (size <= per_tensor) {
    for (std::size_t i = 0; i < size; ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < per_tensor; ++i) idx.push_back(tilebench::uniform_index(rng, size));
  }
  return idx;
}

// Central differences on `wrt`. `loss` must rebuild the graph from the current
// values each call and return a scalar.
template <typename Loss>
GradCheck gradcheck(std::vector<DTensor> wrt, Loss&& loss, Rng& rng, std::size_t per_tensor = 10, double h = 1e-6) {
  for (auto& t : wrt) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : wrt) {
    analytic.emplace_back(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.back().begin());
  }
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  GradCheck out;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto& v = wrt[k].values();
    for (std::size_t i : probe_indices(v.size(), per_tensor, rng)) {
      const double saved = v[i];
      double lp, lm;
      {
        tilebench::nn::NoGradGuard guard;
        v[i] = saved + h;
        lp = loss().item();
        v[i] = saved - h;
        lm = loss().item();
      }
      v[i] = saved;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = analytic[k][i];
      diff2 += (num - ana) * (num - ana);
      a2 += ana * ana;
      n2 += num * num;
      ++out.probed;
    }
  }
  out.rel_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return out;
}

inline DTensor random_tensor(tilebench::nn::Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(tilebench::nn::numel(shape)));
  for (auto& x : v) x = scale * tilebench::standard_normal(rng);
  return DTensor::from(std::move(shape), std::move(v));
}

// sum(out * R) with a fixed random R, so every output entry matters.
inline DTensor project(const DTensor& out, const DTensor& r) {
  return tilebench::nn::ops::sum(tilebench::nn::ops::mul(out, r));
}

// ---- stain fixtures ------------------------------------------------------

// Renders concentrations (H, E) per pixel through `stains` into an 8-bit RGB
// tile: OD = S c, v = I0 10^-OD - 1.
inline tilebench::preprocess::Image render_stains(const Eigen::Matrix<double, 3, 2>& stains,
                                                  const std::vector<Eigen::Vector2d>& conc, int side,
                                                  int i0 = 255) {
  tilebench::preprocess::Image img(side, side, CV_8UC3);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Eigen::Vector3d od = stains * conc[static_cast<std::size_t>(r * side + c)];
      auto& px = img.at<cv::Vec3b>(r, c);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = i0 * std::pow(10.0, -od[ch]) - 1.0;
        px[ch] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

// Pure hematoxylin, pure eosin and mixed pixels; every channel of every
// pixel has OD >= min_od. Pure concentrations run up to `max_conc`, which is
// near the usual H&E maxima by default.
inline std::vector<Eigen::Vector2d> stain_concentrations(const Eigen::Matrix<double, 3, 2>& stains, int side,
                                                         Rng& rng, double min_od = 0.17,
                                                         Eigen::Vector2d max_conc = {2.0, 1.2}) {
  const double lo_h = min_od / stains.col(0).minCoeff();
  const double lo_e = min_od / stains.col(1).minCoeff();
  std::vector<Eigen::Vector2d> conc(static_cast<std::size_t>(side * side));
  for (auto& c : conc) {
    const double u = tilebench::uniform01(rng);
    const double h = lo_h + (std::max(max_conc[0], lo_h) - lo_h) * tilebench::uniform01(rng);
    const double e = lo_e + (std::max(max_conc[1], lo_e) - lo_e) * tilebench::uniform01(rng);
    if (u < 0.25) {
      c = {h, 0.0};
    } else if (u < 0.5) {
      c = {0.0, e};
    } else {
      // convex mix of a pure H and a pure E pixel, so it clears the threshold too
      const double t = tilebench::uniform01(rng);
      c = {t * h, (1.0 - t) * e};
    }
  }
  return conc;
}

inline Eigen::Matrix<double, 3, 2> unit_stains(Eigen::Vector3d h, Eigen::Vector3d e) {
  Eigen::Matrix<double, 3, 2> m;
  m.col(0) = h.normalized();
  m.col(1) = e.normalized();
  return m;
}

inline double angle_degrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::acos(c) * 180.0 / 3.14159265358979323846;
}

inline int max_channel_diff(const tilebench::preprocess::Image& a, const tilebench::preprocess::Image& b) {
  cv::Mat d;
  cv::absdiff(a, b, d);
  double mx = 0.0;
  cv::minMaxLoc(d.reshape(1), nullptr, &mx);
  return static_cast<int>(mx);
}

inline double fraction_over(const tilebench::preprocess::Image& a, const tilebench::preprocess::Image& b, int tol) {
  cv::Mat d;
  cv::absdiff(a, b, d);
  const auto flat = d.reshape(1);
  return static_cast<double>(cv::countNonZero(flat > tol)) / static_cast<double>(flat.total());
}

// ---- files ---------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("tilebench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace tbtest

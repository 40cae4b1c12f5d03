#include "tilebench/preprocess/macenko.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "tilebench/core/errors.hpp"
#include "tilebench/preprocess/config.hpp"

namespace tilebench::preprocess {

namespace {

constexpr std::size_t kMinTissuePixels = 100;
constexpr double kDegenerateRatio = 1e-8;

// Lookup table: OD for each 8-bit value.
std::array<double, 256> od_table(int transmitted_light) {
  std::array<double, 256> table{};
  for (int v = 0; v < 256; ++v) table[v] = optical_density(v, transmitted_light);
  return table;
}

void require_rgb(const Image& tile) {
  if (tile.empty() || tile.type() != CV_8UC3) throw UnreadableImage("expected a non-empty 8-bit RGB image");
}

}  // namespace

StainProfile StainProfile::reference() {
  StainProfile p;
  p.stain_matrix << 0.5626, 0.2159,
                    0.7201, 0.8012,
                    0.4062, 0.5581;
  p.stain_matrix.col(0).normalize();
  p.stain_matrix.col(1).normalize();
  p.max_concentrations << 1.9705, 1.0308;
  return p;
}

void StainProfile::validate() const {
  for (int c = 0; c < 2; ++c) {
    if (std::abs(stain_matrix.col(c).norm() - 1.0) > 1e-6) {
      throw InvariantViolation("stain column " + std::to_string(c) + " is not unit length");
    }
    if (!(max_concentrations[c] > 0.0)) throw InvariantViolation("max concentrations must be positive");
  }
  if (stain_matrix.col(0).cross(stain_matrix.col(1)).norm() < 1e-6) {
    throw InvariantViolation("stain columns are linearly dependent");
  }
}

double optical_density(int value, int transmitted_light) {
  return -std::log10((value + 1.0) / transmitted_light);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

Eigen::Vector2d nnls2(const Eigen::Matrix<double, 3, 2>& a, const Eigen::Vector3d& b) {
  const Eigen::Matrix2d gram = a.transpose() * a;
  const Eigen::Vector2d rhs = a.transpose() * b;
  const Eigen::Vector2d unconstrained = gram.inverse() * rhs;
  if (unconstrained[0] >= 0.0 && unconstrained[1] >= 0.0) return unconstrained;
  // KKT: at most one variable active; try each single-column fit and zero.
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  double best_cost = b.squaredNorm();
  for (int k = 0; k < 2; ++k) {
    const double ck = std::max(0.0, rhs[k] / gram(k, k));
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    c[k] = ck;
    const double cost = (a * c - b).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = c;
    }
  }
  return best;
}

StainProfile macenko_fit(const Image& tile, const PreprocessConfig& cfg) {
  require_rgb(tile);
  const auto od = od_table(cfg.transmitted_light);
  const double beta = cfg.od_background_threshold;

  std::vector<Eigen::Vector3d> tissue;
  tissue.reserve(static_cast<std::size_t>(tile.total()));
  for (int r = 0; r < tile.rows; ++r) {
    const auto* row = tile.ptr<cv::Vec3b>(r);
    for (int c = 0; c < tile.cols; ++c) {
      const Eigen::Vector3d v(od[row[c][0]], od[row[c][1]], od[row[c][2]]);
      if (v.minCoeff() >= beta) tissue.push_back(v);
    }
  }
  if (tissue.size() < kMinTissuePixels) {
    throw InsufficientTissue(std::to_string(tissue.size()) + " pixels above OD threshold, need " +
                             std::to_string(kMinTissuePixels));
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : tissue) mean += v;
  mean /= static_cast<double>(tissue.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& v : tissue) {
    const Eigen::Vector3d d = v - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(tissue.size() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Eigenvalues ascend; the plane is spanned by the last two eigenvectors.
  const double lambda1 = eig.eigenvalues()[2];
  const double lambda2 = eig.eigenvalues()[1];
  if (!(lambda1 > 0.0) || lambda2 < kDegenerateRatio * lambda1) {
    throw DegenerateStains("OD cloud is rank-1 (eigenvalue ratio " + std::to_string(lambda2 / lambda1) + ")");
  }
  Eigen::Vector3d e1 = eig.eigenvectors().col(2);
  Eigen::Vector3d e2 = eig.eigenvectors().col(1);
  // Orient the principal axis along the (positive) OD cloud so angles stay in (-pi/2, pi/2).
  if (e1.dot(mean) < 0.0) e1 = -e1;
  if (e2.sum() < 0.0) e2 = -e2;

  std::vector<double> angles;
  angles.reserve(tissue.size());
  for (const auto& v : tissue) angles.push_back(std::atan2(v.dot(e2), v.dot(e1)));
  const double phi_lo = percentile(angles, cfg.angle_percentile);
  const double phi_hi = percentile(angles, 100.0 - cfg.angle_percentile);

  Eigen::Vector3d a = (std::cos(phi_lo) * e1 + std::sin(phi_lo) * e2).normalized();
  Eigen::Vector3d b = (std::cos(phi_hi) * e1 + std::sin(phi_hi) * e2).normalized();
  if (b[0] > a[0]) std::swap(a, b);

  StainProfile profile;
  profile.stain_matrix.col(0) = a;
  profile.stain_matrix.col(1) = b;

  std::vector<double> conc_h;
  std::vector<double> conc_e;
  conc_h.reserve(static_cast<std::size_t>(tile.total()));
  conc_e.reserve(static_cast<std::size_t>(tile.total()));
  for (int r = 0; r < tile.rows; ++r) {
    const auto* row = tile.ptr<cv::Vec3b>(r);
    for (int c = 0; c < tile.cols; ++c) {
      const Eigen::Vector3d v(od[row[c][0]], od[row[c][1]], od[row[c][2]]);
      const Eigen::Vector2d conc = nnls2(profile.stain_matrix, v);
      conc_h.push_back(conc[0]);
      conc_e.push_back(conc[1]);
    }
  }
  profile.max_concentrations << percentile(std::move(conc_h), cfg.concentration_percentile),
      percentile(std::move(conc_e), cfg.concentration_percentile);
  if (!(profile.max_concentrations.minCoeff() > 0.0)) {
    throw DegenerateStains("a stain has no positive concentration at the configured percentile");
  }
  return profile;
}

Image macenko_normalize(const Image& tile, const StainProfile& source, const PreprocessConfig& cfg) {
  require_rgb(tile);
  const auto od = od_table(cfg.transmitted_light);
  const auto& ref = cfg.reference_profile;
  const Eigen::Vector2d scale = ref.max_concentrations.cwiseQuotient(source.max_concentrations);
  const double i0 = cfg.transmitted_light;

  Image out(tile.rows, tile.cols, CV_8UC3);
  for (int r = 0; r < tile.rows; ++r) {
    const auto* in_row = tile.ptr<cv::Vec3b>(r);
    auto* out_row = out.ptr<cv::Vec3b>(r);
    for (int c = 0; c < tile.cols; ++c) {
      const Eigen::Vector3d v(od[in_row[c][0]], od[in_row[c][1]], od[in_row[c][2]]);
      const Eigen::Vector2d conc = nnls2(source.stain_matrix, v).cwiseProduct(scale);
      const Eigen::Vector3d od_out = ref.stain_matrix * conc;
      for (int ch = 0; ch < 3; ++ch) {
        const double value = i0 * std::pow(10.0, -od_out[ch]) - 1.0;
        out_row[c][ch] = static_cast<unsigned char>(std::lround(std::clamp(value, 0.0, std::min(i0, 255.0))));
      }
    }
  }
  return out;
}

Image macenko_normalize(const Image& tile, const PreprocessConfig& cfg) {
  return macenko_normalize(tile, macenko_fit(tile, cfg), cfg);
}

}  // namespace tilebench::preprocess

#include "tilebench/preprocess/image.hpp"

#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"

namespace tilebench::preprocess {

Image read_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw UnreadableImage("cannot decode " + path.string());
  Image rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

void write_rgb_png(const std::filesystem::path& path, const Image& image) {
  cv::Mat bgr;
  cv::cvtColor(image, bgr, cv::COLOR_RGB2BGR);
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".png", bgr, bytes)) throw IoError("PNG encoding failed for " + path.string());
  write_file_atomic(
      path, [&](std::ostream& out) { out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size()); },
      true);
}

Image white_image(int rows, int cols) { return Image(rows, cols, CV_8UC3, cv::Scalar(255, 255, 255)); }

}  // namespace tilebench::preprocess

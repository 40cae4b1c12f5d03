#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

namespace tilebench::preprocess {

// 8-bit, 3-channel, RGB channel order (OpenCV's native order is BGR; the
// conversion happens only at the file boundary).
using Image = cv::Mat;

Image read_rgb(const std::filesystem::path& path);
// PNG via temp-then-rename.
void write_rgb_png(const std::filesystem::path& path, const Image& image);

// Pure white tile (every channel 255).
Image white_image(int rows, int cols);

}  // namespace tilebench::preprocess

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qenc {

struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major

  double& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
  double mean_brightness() const;
};

enum class Split : uint8_t { Train = 0, Val = 1, Test = 2 };

struct Dataset {
  int height = 0;
  int width = 0;
  std::vector<Image> images;
  std::vector<uint8_t> labels;  // binary {0,1}
  std::vector<Split> splits;
  // Declared range of the current pixel values; [-1, 1] once normalized.
  double range_min = -1.0;
  double range_max = 1.0;

  size_t size() const { return images.size(); }
  std::vector<int> indices_of(Split split) const;
  size_t count_label(uint8_t label) const;
  bool is_normalized() const { return range_min == -1.0 && range_max == 1.0; }
  // Content hash used as the feature-cache key component.
  uint64_t fingerprint() const;
};

// qimg binary and CSV (+ sidecar "<path>.json" meta) readers/writers.
// Format is chosen by file extension (.qimg / .csv).
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

Dataset load_qimg(const std::string& path);
void save_qimg(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

// Affine map of the declared source range onto [-1, 1], exact at endpoints.
// Identity when the dataset is already normalized.
Dataset normalize(const Dataset& ds);

// Proportional per-class subsample (largest-remainder rounding), uniform
// within class.
Dataset stratified_subsample(const Dataset& ds, int target, uint64_t seed);

// Per class: sort the split's images by mean brightness and take evenly
// spaced quantile positions ceil((i+0.5)*M/count), i = 0..count-1.
// Returns image indices into ds. The seed only breaks exact brightness ties.
std::vector<int> balanced_sample(const Dataset& ds, int per_class, uint64_t seed,
                                 Split split = Split::Train);

// Synthetic binary tasks on [-1, 1] pixels with stratified 60/20/20 splits:
//   blobs      - class-dependent mean brightness (linearly separable)
//   xor_pixels - label = sign of paired-pixel products per 2x2 patch,
//                zero class-conditional mean per pixel
//   stripes    - class-dependent spatial frequency
Dataset synth(const std::string& task, int count, int height, int width, uint64_t seed);

}  // namespace qenc

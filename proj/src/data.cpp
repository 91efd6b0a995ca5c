#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace qenc {

double Image::mean_brightness() const {
  double s = std::accumulate(pixels.begin(), pixels.end(), 0.0);
  return pixels.empty() ? 0.0 : s / static_cast<double>(pixels.size());
}

std::vector<int> Dataset::indices_of(Split split) const {
  std::vector<int> out;
  for (size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

size_t Dataset::count_label(uint8_t label) const {
  return static_cast<size_t>(std::count(labels.begin(), labels.end(), label));
}

uint64_t Dataset::fingerprint() const {
  uint64_t h = fnv1a(&height, sizeof(height));
  h = fnv1a(&width, sizeof(width), h);
  h = fnv1a(&range_min, sizeof(range_min), h);
  h = fnv1a(&range_max, sizeof(range_max), h);
  for (size_t i = 0; i < images.size(); ++i) {
    h = fnv1a(images[i].pixels.data(), images[i].pixels.size() * sizeof(double), h);
    h = fnv1a(&labels[i], 1, h);
    h = fnv1a(&splits[i], 1, h);
  }
  return h;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void check_dataset(const Dataset& ds, const std::string& origin) {
  if (ds.images.empty()) throw_data(origin + ": empty dataset");
  if (ds.range_max <= ds.range_min) throw_data(origin + ": degenerate pixel range");
  for (size_t i = 0; i < ds.images.size(); ++i) {
    if (ds.labels[i] > 1) {
      throw_data(origin + ": label outside {0,1} at image " + std::to_string(i));
    }
    for (double p : ds.images[i].pixels) {
      if (!std::isfinite(p) || p < ds.range_min || p > ds.range_max) {
        throw_data(origin + ": pixel value " + format_double(p) +
                   " outside declared range [" + format_double(ds.range_min) + ", " +
                   format_double(ds.range_max) + "] at image " + std::to_string(i));
      }
    }
  }
}

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw_data("qimg: truncated file while reading " + what);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

Split split_from_tag(unsigned tag, const std::string& origin) {
  if (tag > 2) throw_data(origin + ": split tag outside {0,1,2}");
  return static_cast<Split>(tag);
}

Split split_from_token(const std::string& tok, const std::string& origin) {
  if (tok == "0" || tok == "train") return Split::Train;
  if (tok == "1" || tok == "val") return Split::Val;
  if (tok == "2" || tok == "test") return Split::Test;
  throw_data(origin + ": bad split token '" + tok + "'");
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  if (ends_with(path, ".csv")) return load_csv(path);
  return load_qimg(path);
}

void save_dataset(const Dataset& ds, const std::string& path) {
  if (ends_with(path, ".csv")) {
    save_csv(ds, path);
  } else {
    save_qimg(ds, path);
  }
}

Dataset load_qimg(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_data("cannot open dataset file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "QIMG", 4) != 0) {
    throw_data("qimg: bad magic in " + path);
  }
  const auto count = read_le<uint32_t>(is, "count");
  const auto h = read_le<uint32_t>(is, "height");
  const auto w = read_le<uint32_t>(is, "width");
  const float rmin = read_le<float>(is, "range_min");
  const float rmax = read_le<float>(is, "range_max");
  if (count == 0) throw_data("qimg: empty dataset in " + path);
  if (h == 0 || w == 0 || h > 4096 || w > 4096) throw_data("qimg: bad dimensions");

  Dataset ds;
  ds.height = static_cast<int>(h);
  ds.width = static_cast<int>(w);
  ds.range_min = rmin;
  ds.range_max = rmax;
  const size_t npix = static_cast<size_t>(h) * w;
  ds.images.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Image img;
    img.height = ds.height;
    img.width = ds.width;
    img.pixels.resize(npix);
    for (size_t p = 0; p < npix; ++p) {
      img.pixels[p] = read_le<float>(is, "pixel");
    }
    ds.images.push_back(std::move(img));
    const auto label = read_le<uint8_t>(is, "label");
    const auto split = read_le<uint8_t>(is, "split");
    ds.labels.push_back(label);
    ds.splits.push_back(split_from_tag(split, path));
  }
  check_dataset(ds, path);
  return ds;
}

void save_qimg(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_data("cannot write dataset file: " + path);
  os.write("QIMG", 4);
  write_le<uint32_t>(os, static_cast<uint32_t>(ds.images.size()));
  write_le<uint32_t>(os, static_cast<uint32_t>(ds.height));
  write_le<uint32_t>(os, static_cast<uint32_t>(ds.width));
  write_le<float>(os, static_cast<float>(ds.range_min));
  write_le<float>(os, static_cast<float>(ds.range_max));
  for (size_t i = 0; i < ds.images.size(); ++i) {
    for (double p : ds.images[i].pixels) write_le<float>(os, static_cast<float>(p));
    write_le<uint8_t>(os, ds.labels[i]);
    write_le<uint8_t>(os, static_cast<uint8_t>(ds.splits[i]));
  }
  if (!os) throw_data("short write to " + path);
}

Dataset load_csv(const std::string& path) {
  const std::string meta_path = path + ".json";
  std::ifstream meta_is(meta_path);
  if (!meta_is) throw_data("cannot open CSV sidecar meta: " + meta_path);
  nlohmann::json meta;
  try {
    meta_is >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw_data("bad CSV sidecar meta " + meta_path + ": " + e.what());
  }

  Dataset ds;
  try {
    ds.height = meta.at("height").get<int>();
    ds.width = meta.at("width").get<int>();
    ds.range_min = meta.at("range_min").get<double>();
    ds.range_max = meta.at("range_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_data("CSV sidecar meta missing field: " + std::string(e.what()));
  }
  if (ds.height <= 0 || ds.width <= 0) throw_data(meta_path + ": bad dimensions");

  std::ifstream is(path);
  if (!is) throw_data("cannot open dataset file: " + path);
  const size_t npix = static_cast<size_t>(ds.height) * ds.width;

  std::string line;
  if (!std::getline(is, line)) throw_data(path + ": missing header row");
  size_t row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != npix + 2) {
      throw_data(path + ": row " + std::to_string(row_no) + " has " +
                 std::to_string(cells.size()) + " cells, expected " +
                 std::to_string(npix + 2));
    }
    Image img;
    img.height = ds.height;
    img.width = ds.width;
    img.pixels.resize(npix);
    try {
      for (size_t p = 0; p < npix; ++p) img.pixels[p] = std::stod(cells[p]);
    } catch (const std::exception&) {
      throw_data(path + ": malformed pixel at row " + std::to_string(row_no));
    }
    int label;
    try {
      label = std::stoi(cells[npix]);
    } catch (const std::exception&) {
      throw_data(path + ": malformed label at row " + std::to_string(row_no));
    }
    if (label < 0 || label > 1) {
      throw_data(path + ": label outside {0,1} at row " + std::to_string(row_no));
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(static_cast<uint8_t>(label));
    ds.splits.push_back(split_from_token(cells[npix + 1], path));
  }
  check_dataset(ds, path);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw_data("cannot write dataset file: " + path);
  const size_t npix = static_cast<size_t>(ds.height) * ds.width;
  for (size_t p = 0; p < npix; ++p) {
    os << "pixel_" << p << ",";
  }
  os << "label,split\n";
  static const char* kSplitNames[] = {"train", "val", "test"};
  for (size_t i = 0; i < ds.images.size(); ++i) {
    for (double p : ds.images[i].pixels) os << format_double(p) << ",";
    os << int(ds.labels[i]) << "," << kSplitNames[static_cast<int>(ds.splits[i])] << "\n";
  }

  nlohmann::ordered_json meta;
  meta["height"] = ds.height;
  meta["width"] = ds.width;
  meta["range_min"] = ds.range_min;
  meta["range_max"] = ds.range_max;
  std::ofstream meta_os(path + ".json");
  if (!meta_os) throw_data("cannot write CSV sidecar meta: " + path + ".json");
  meta_os << meta.dump(2) << "\n";
}

Dataset normalize(const Dataset& ds) {
  if (ds.range_max <= ds.range_min) throw_data("normalize: degenerate source range");
  Dataset out = ds;
  if (ds.is_normalized()) return out;  // affine map is the identity
  const double span = ds.range_max - ds.range_min;
  for (Image& img : out.images) {
    for (double& p : img.pixels) {
      p = -1.0 + 2.0 * (p - ds.range_min) / span;
    }
  }
  out.range_min = -1.0;
  out.range_max = 1.0;
  return out;
}

Dataset stratified_subsample(const Dataset& ds, int target, uint64_t seed) {
  const int n = static_cast<int>(ds.size());
  if (target > n) throw_data("subsample target exceeds dataset size");
  if (target <= 0) throw_data("subsample target must be positive");

  std::vector<int> by_class[2];
  for (int i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);

  // Largest-remainder quotas; ties go to the larger class, then lower label.
  double quota[2];
  int take[2];
  for (int c = 0; c < 2; ++c) {
    quota[c] = static_cast<double>(target) * by_class[c].size() / n;
    take[c] = static_cast<int>(std::floor(quota[c]));
  }
  int leftover = target - take[0] - take[1];
  std::vector<int> order = {0, 1};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = quota[a] - std::floor(quota[a]);
    const double fb = quota[b] - std::floor(quota[b]);
    if (fa != fb) return fa > fb;
    if (by_class[a].size() != by_class[b].size()) {
      return by_class[a].size() > by_class[b].size();
    }
    return a < b;
  });
  for (int i = 0; leftover > 0; ++i, --leftover) take[order[i % 2]] += 1;
  for (int c = 0; c < 2; ++c) {
    take[c] = std::min(take[c], static_cast<int>(by_class[c].size()));
  }

  Rng rng = make_rng(derive_seed(seed, 0x5b5a));
  std::vector<int> chosen;
  for (int c = 0; c < 2; ++c) {
    std::vector<int> pool = by_class[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + take[c]);
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.height = ds.height;
  out.width = ds.width;
  out.range_min = ds.range_min;
  out.range_max = ds.range_max;
  for (int i : chosen) {
    out.images.push_back(ds.images[i]);
    out.labels.push_back(ds.labels[i]);
    out.splits.push_back(ds.splits[i]);
  }
  return out;
}

std::vector<int> balanced_sample(const Dataset& ds, int per_class, uint64_t seed,
                                 Split split) {
  if (per_class <= 0) throw_config("per-class count must be positive");
  Rng rng = make_rng(derive_seed(seed, 0xba1a));
  std::vector<int> out;
  for (int c = 0; c < 2; ++c) {
    std::vector<int> pool;
    for (size_t i = 0; i < ds.size(); ++i) {
      if (ds.splits[i] == split && ds.labels[i] == c) pool.push_back(static_cast<int>(i));
    }
    const int m = static_cast<int>(pool.size());
    if (m < per_class) {
      throw_data("class " + std::to_string(c) + " has " + std::to_string(m) +
                 " images in split, need " + std::to_string(per_class));
    }
    std::vector<double> tiebreak(pool.size());
    for (double& t : tiebreak) t = uniform_real(rng, 0.0, 1.0);
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double ba = ds.images[pool[a]].mean_brightness();
      const double bb = ds.images[pool[b]].mean_brightness();
      if (ba != bb) return ba < bb;
      return tiebreak[a] < tiebreak[b];
    });
    for (int i = 0; i < per_class; ++i) {
      const int pos = static_cast<int>(
          std::ceil((i + 0.5) * static_cast<double>(m) / per_class));
      out.push_back(pool[order[pos - 1]]);  // quantile positions are 1-based
    }
  }
  return out;
}

namespace {

void assign_splits(Dataset& ds, Rng& rng) {
  // 60/20/20 per class, largest remainder, shuffled within class.
  const double frac[3] = {0.6, 0.2, 0.2};
  for (int c = 0; c < 2; ++c) {
    std::vector<int> idx;
    for (size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == c) idx.push_back(static_cast<int>(i));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const int m = static_cast<int>(idx.size());
    int take[3];
    double rem[3];
    int used = 0;
    for (int s = 0; s < 3; ++s) {
      const double q = frac[s] * m;
      take[s] = static_cast<int>(std::floor(q));
      rem[s] = q - take[s];
      used += take[s];
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
      if (rem[a] != rem[b]) return rem[a] > rem[b];
      return a < b;
    });
    for (int i = 0; used < m; ++i, ++used) take[order[i % 3]] += 1;
    int at = 0;
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < take[s]; ++i) ds.splits[idx[at++]] = static_cast<Split>(s);
    }
  }
}

std::vector<uint8_t> balanced_labels(int count, Rng& rng) {
  std::vector<uint8_t> labels(count);
  for (int i = 0; i < count; ++i) labels[i] = static_cast<uint8_t>(i % 2);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

double clamp_pixel(double v) { return std::clamp(v, -1.0, 1.0); }

Dataset synth_blobs(int count, int h, int w, Rng& rng) {
  Dataset ds;
  ds.height = h;
  ds.width = w;
  ds.labels = balanced_labels(count, rng);
  std::normal_distribution<double> noise(0.0, 0.35);
  for (int i = 0; i < count; ++i) {
    Image img;
    img.height = h;
    img.width = w;
    img.pixels.resize(static_cast<size_t>(h) * w);
    const double mean = ds.labels[i] ? 0.3 : -0.3;
    for (double& p : img.pixels) p = clamp_pixel(mean + noise(rng));
    ds.images.push_back(std::move(img));
  }
  return ds;
}

Dataset synth_xor_pixels(int count, int h, int w, Rng& rng) {
  if (h % 2 != 0 || w % 2 != 0) {
    throw_config("xor_pixels requires even image dimensions");
  }
  Dataset ds;
  ds.height = h;
  ds.width = w;
  ds.labels = balanced_labels(count, rng);
  for (int i = 0; i < count; ++i) {
    Image img;
    img.height = h;
    img.width = w;
    img.pixels.assign(static_cast<size_t>(h) * w, 0.0);
    // Paired pixels are the two horizontal pairs of each 2x2 patch; the sign
    // of each pair's product encodes the label, magnitudes and the pair's
    // overall sign are random so every pixel has zero class-conditional mean.
    const double product_sign = ds.labels[i] ? 1.0 : -1.0;
    for (int pr = 0; pr < h / 2; ++pr) {
      for (int pc = 0; pc < w / 2; ++pc) {
        for (int pair = 0; pair < 2; ++pair) {
          const int r = 2 * pr + pair;
          const int c = 2 * pc;
          const double u0 = uniform_real(rng, 0.35, 0.95);
          const double u1 = uniform_real(rng, 0.35, 0.95);
          const double s0 = uniform_index(rng, 2) ? 1.0 : -1.0;
          img.at(r, c) = s0 * u0;
          img.at(r, c + 1) = s0 * product_sign * u1;
        }
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

Dataset synth_stripes(int count, int h, int w, Rng& rng) {
  Dataset ds;
  ds.height = h;
  ds.width = w;
  ds.labels = balanced_labels(count, rng);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < count; ++i) {
    Image img;
    img.height = h;
    img.width = w;
    img.pixels.resize(static_cast<size_t>(h) * w);
    const double period = ds.labels[i] ? 2.0 : 4.0;
    const double phase = uniform_real(rng, 0.0, 2.0 * M_PI);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        img.at(r, c) =
            clamp_pixel(0.8 * std::sin(2.0 * M_PI * r / period + phase) + noise(rng));
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

}  // namespace

Dataset synth(const std::string& task, int count, int height, int width, uint64_t seed) {
  if (count < 10) throw_config("synthetic datasets need at least 10 samples");
  if (height < 2 || width < 2) throw_config("synthetic images must be at least 2x2");
  Rng rng = make_rng(derive_seed(seed, fnv1a(task.data(), task.size())));
  Dataset ds;
  if (task == "blobs") {
    ds = synth_blobs(count, height, width, rng);
  } else if (task == "xor_pixels") {
    ds = synth_xor_pixels(count, height, width, rng);
  } else if (task == "stripes") {
    ds = synth_stripes(count, height, width, rng);
  } else {
    throw_config("unknown synthetic task: " + task);
  }
  ds.splits.assign(ds.size(), Split::Train);
  assign_splits(ds, rng);
  ds.range_min = -1.0;
  ds.range_max = 1.0;
  return ds;
}

}  // namespace qenc

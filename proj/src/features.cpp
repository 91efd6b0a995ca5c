#include "features.hpp"

#include <cstring>
#include <fstream>
#include <thread>

#include "common.hpp"
#include "simulator.hpp"

namespace qenc {

std::vector<Patch> patchify(const Image& image, int k) {
  if (k != 2 && k != 3) throw_config("patch size must be 2 or 3");
  if (image.height < k || image.width < k) {
    throw_data("image " + std::to_string(image.height) + "x" +
               std::to_string(image.width) + " smaller than one " + std::to_string(k) +
               "x" + std::to_string(k) + " patch");
  }
  const int rows = image.height / k;
  const int cols = image.width / k;
  std::vector<Patch> out;
  out.reserve(static_cast<size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Patch patch;
      patch.row = r;
      patch.col = c;
      patch.values.reserve(static_cast<size_t>(k) * k);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          patch.values.push_back(image.at(r * k + i, c * k + j));
        }
      }
      out.push_back(std::move(patch));
    }
  }
  return out;
}

FeatureMaps extract(const Image& image, const EncodingCircuit& circuit, int k) {
  if (circuit.n_qubits != k * k) {
    throw_config("circuit has " + std::to_string(circuit.n_qubits) +
                 " qubits, patch size " + std::to_string(k) + " needs " +
                 std::to_string(k * k));
  }
  FeatureMaps maps;
  maps.channels = k * k;
  maps.height = image.height / k;
  maps.width = image.width / k;
  maps.values.assign(
      static_cast<size_t>(maps.channels) * maps.height * maps.width, 0.0);
  for (const Patch& patch : patchify(image, k)) {
    const StateVector state = run(circuit, patch.values);
    const std::vector<double> z = z_expectations(state);
    for (int q = 0; q < maps.channels; ++q) {
      maps.values[(static_cast<size_t>(q) * maps.height + patch.row) * maps.width +
                  patch.col] = z[q];
    }
  }
  return maps;
}

Eigen::MatrixXd extract_dataset(const Dataset& ds, const EncodingCircuit& circuit,
                                int k, int jobs) {
  if (ds.images.empty()) throw_data("empty dataset");
  const int rows = ds.height / k;
  const int cols = ds.width / k;
  const Eigen::Index dim = static_cast<Eigen::Index>(k) * k * rows * cols;
  Eigen::MatrixXd features(ds.images.size(), dim);

  auto worker = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const FeatureMaps maps = extract(ds.images[i], circuit, k);
      for (Eigen::Index j = 0; j < dim; ++j) {
        features(static_cast<Eigen::Index>(i), j) = maps.values[j];
      }
    }
  };

  const size_t n = ds.images.size();
  if (jobs <= 1 || n < 2) {
    worker(0, n);
  } else {
    const size_t workers = std::min<size_t>(jobs, n);
    std::vector<std::thread> threads;
    const size_t chunk = (n + workers - 1) / workers;
    for (size_t t = 0; t < workers; ++t) {
      const size_t begin = t * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(worker, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  return features;
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "angle_rx") return BaselineKind::AngleRx;
  if (name == "angle_ry") return BaselineKind::AngleRy;
  if (name == "higher_order") return BaselineKind::HigherOrder;
  throw_config("unknown baseline encoding: " + name);
}

EncodingCircuit baseline_circuit(BaselineKind kind, int k, int layers, double scale) {
  if (k != 2 && k != 3) throw_config("patch size must be 2 or 3");
  if (layers < 1 || layers > 3) throw_config("layers must be in 1..3");
  const int n = k * k;
  EncodingCircuit circuit = make_circuit(n, scale);
  for (int layer = 0; layer < layers; ++layer) {
    switch (kind) {
      case BaselineKind::AngleRx:
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::rx(q, q));
        break;
      case BaselineKind::AngleRy:
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::ry(q, q));
        break;
      case BaselineKind::HigherOrder:
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::h(q));
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::rz(q, q));
        for (int q = 0; q + 1 < n; ++q) {
          circuit.gates.push_back(Gate::rzz(q, q + 1, q, q + 1));
        }
        break;
    }
  }
  circuit.max_gates = std::max(circuit.max_gates, static_cast<int>(circuit.gates.size()));
  return circuit;
}

std::shared_ptr<const Eigen::MatrixXd> FeatureCache::get(const Dataset& ds,
                                                         const EncodingCircuit& circuit,
                                                         int k, int jobs) {
  std::string key = std::to_string(ds.fingerprint()) + "|k" + std::to_string(k) + "|" +
                    serialize(circuit);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  auto computed =
      std::make_shared<const Eigen::MatrixXd>(extract_dataset(ds, circuit, k, jobs));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = entries_.emplace(std::move(key), std::move(computed));
  return it->second;
}

size_t FeatureCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) throw_data(std::string("qfmp: truncated file while reading ") + what);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void write_qfmp(const std::string& path, const std::vector<FeatureMaps>& maps) {
  if (maps.empty()) throw_data("no feature maps to export");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_data("cannot write feature file: " + path);
  os.write("QFMP", 4);
  write_le<uint32_t>(os, static_cast<uint32_t>(maps[0].channels));
  write_le<uint32_t>(os, static_cast<uint32_t>(maps[0].height));
  write_le<uint32_t>(os, static_cast<uint32_t>(maps[0].width));
  write_le<uint32_t>(os, static_cast<uint32_t>(maps.size()));
  for (const FeatureMaps& m : maps) {
    for (double v : m.values) write_le<double>(os, v);
  }
  if (!os) throw_data("short write to " + path);
}

std::vector<FeatureMaps> read_qfmp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_data("cannot open feature file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "QFMP", 4) != 0) throw_data("qfmp: bad magic");
  const auto c = read_le<uint32_t>(is, "channels");
  const auto h = read_le<uint32_t>(is, "height");
  const auto w = read_le<uint32_t>(is, "width");
  const auto count = read_le<uint32_t>(is, "count");
  std::vector<FeatureMaps> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    FeatureMaps m;
    m.channels = static_cast<int>(c);
    m.height = static_cast<int>(h);
    m.width = static_cast<int>(w);
    m.values.resize(static_cast<size_t>(c) * h * w);
    for (double& v : m.values) v = read_le<double>(is, "value");
    out.push_back(std::move(m));
  }
  return out;
}

void write_features_csv(const std::string& path, const std::vector<FeatureMaps>& maps) {
  if (maps.empty()) throw_data("no feature maps to export");
  std::ofstream os(path);
  if (!os) throw_data("cannot write feature file: " + path);
  const size_t dim = maps[0].values.size();
  for (size_t j = 0; j < dim; ++j) {
    os << "f_" << j << (j + 1 < dim ? "," : "\n");
  }
  for (const FeatureMaps& m : maps) {
    for (size_t j = 0; j < dim; ++j) {
      os << format_double(m.values[j]) << (j + 1 < dim ? "," : "\n");
    }
  }
}

}  // namespace qenc

#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "circuit.hpp"
#include "data.hpp"

namespace qenc {

// Z-expectation tensor produced by sliding the encoding over one image:
// channels = k^2 qubits, spatial dims = patch-grid dims.
struct FeatureMaps {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;  // [c][r][col] row-major

  double at(int c, int r, int col) const {
    return values[(static_cast<size_t>(c) * height + r) * width + col];
  }
  // View as channels x (height*width) for rank analysis.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  as_matrix() const {
    return {values.data(), channels, static_cast<Eigen::Index>(height) * width};
  }
};

struct Patch {
  int row = 0;
  int col = 0;
  std::vector<double> values;  // row-major within the patch
};

// Non-overlapping k x k patches with stride k, row-major order; trailing
// rows/columns that do not fill a whole patch are dropped. k must be 2 or 3.
std::vector<Patch> patchify(const Image& image, int k);

FeatureMaps extract(const Image& image, const EncodingCircuit& circuit, int k);

// One row per image: the flattened C*H*W feature tensor. jobs > 1 evaluates
// images in parallel; the result does not depend on the schedule.
Eigen::MatrixXd extract_dataset(const Dataset& ds, const EncodingCircuit& circuit,
                                int k, int jobs = 1);

enum class BaselineKind { AngleRx, AngleRy, HigherOrder };

BaselineKind baseline_from_name(const std::string& name);

// angle_rx / angle_ry: `layers` repetitions of one rotation per qubit
// (pixel q -> qubit q). higher_order per layer: H on all qubits, RZ(x_q) on
// all qubits, RZZ(x_i*x_j) on each adjacent pair.
EncodingCircuit baseline_circuit(BaselineKind kind, int k, int layers, double scale = 1.0);

// Memoizes extract_dataset keyed by (dataset fingerprint, circuit text, k) so
// repeated evaluations of one circuit never re-simulate.
class FeatureCache {
 public:
  std::shared_ptr<const Eigen::MatrixXd> get(const Dataset& ds,
                                             const EncodingCircuit& circuit, int k,
                                             int jobs = 1);
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const Eigen::MatrixXd>> entries_;
};

// Flat binary export: magic "QFMP", u32 C, H, W, count, then count*C*H*W
// float64 values, little endian.
void write_qfmp(const std::string& path, const std::vector<FeatureMaps>& maps);
std::vector<FeatureMaps> read_qfmp(const std::string& path);

// CSV export: one row per image, flattened row-major, with a header row.
void write_features_csv(const std::string& path, const std::vector<FeatureMaps>& maps);

}  // namespace qenc

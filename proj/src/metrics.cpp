#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "features.hpp"
#include "simulator.hpp"

namespace qenc {

std::vector<std::vector<double>> sample_entanglement_inputs(int n_qubits, int count,
                                                            uint64_t seed) {
  if (count < 1) throw_config("entanglement sample count must be >= 1");
  Rng rng = make_rng(derive_seed(seed, 0xe47));
  std::vector<std::vector<double>> inputs(count);
  for (auto& v : inputs) {
    v.resize(n_qubits);
    for (double& x : v) x = uniform_real(rng, -1.0, 1.0);
  }
  return inputs;
}

EntanglementReport entanglement_capability(const EncodingCircuit& circuit,
                                           const std::vector<std::vector<double>>& inputs) {
  if (inputs.empty()) throw_config("entanglement capability needs at least one input");
  EntanglementReport report;
  report.sample_inputs = inputs;
  for (const auto& input : inputs) {
    const StateVector state = run(circuit, input);
    const std::vector<double> purity = single_qubit_purities(state);
    const double mean_purity =
        std::accumulate(purity.begin(), purity.end(), 0.0) / purity.size();
    report.per_sample.push_back(2.0 * (1.0 - mean_purity));
  }
  report.mean = std::accumulate(report.per_sample.begin(), report.per_sample.end(), 0.0) /
                report.per_sample.size();
  return report;
}

std::vector<double> fourier_signal(const EncodingCircuit& circuit, int qubit,
                                   std::vector<double> inputs, int grid_n, double lo,
                                   double hi) {
  if (qubit < 0 || qubit >= circuit.n_qubits) throw_config("qubit index out of range");
  if (static_cast<int>(inputs.size()) != circuit.n_qubits) {
    throw_config("fourier input vector length mismatch");
  }
  if (grid_n < 2 || hi <= lo) throw_config("bad fourier sweep grid");
  std::vector<double> signal(grid_n);
  const double step = (hi - lo) / grid_n;  // endpoint excluded
  for (int t = 0; t < grid_n; ++t) {
    inputs[qubit] = lo + t * step;
    const StateVector state = run(circuit, inputs);
    signal[t] = z_expectations(state)[qubit];
  }
  return signal;
}

std::array<std::complex<double>, kFourierCoeffs> fourier_coefficients(
    std::span<const double> signal, double lo, double hi) {
  const int n = static_cast<int>(signal.size());
  std::array<std::complex<double>, kFourierCoeffs> coeffs;
  const double step = (hi - lo) / n;
  for (int k = 0; k < kFourierCoeffs; ++k) {
    const double omega = 2.0 * M_PI * k / (hi - lo);
    std::complex<double> acc{0.0, 0.0};
    for (int t = 0; t < n; ++t) {
      const double x = lo + t * step;
      acc += signal[t] * std::polar(1.0, -omega * x);
    }
    coeffs[k] = acc / static_cast<double>(n);
  }
  return coeffs;
}

FourierReport fourier_spectrum(const EncodingCircuit& circuit, int qubit, uint64_t seed,
                               int reps, int grid_n, double lo, double hi) {
  if (reps < 1) throw_config("fourier repetitions must be >= 1");
  FourierReport report;
  report.qubit = qubit;
  report.grid_n = grid_n;
  report.sweep_lo = lo;
  report.sweep_hi = hi;
  Rng rng = make_rng(derive_seed(seed, 0xf012));
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> inputs(circuit.n_qubits);
    for (double& x : inputs) x = uniform_real(rng, -1.0, 1.0);
    const std::vector<double> signal =
        fourier_signal(circuit, qubit, std::move(inputs), grid_n, lo, hi);
    report.reps.push_back(fourier_coefficients(signal, lo, hi));
  }
  return report;
}

namespace {

// Singular values via the C x C Gram matrix; negative eigenvalues from
// rounding are clamped to zero before the square root.
std::vector<double> singular_values(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd gram = a * a.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw_runtime("Gram eigendecomposition failed");
  std::vector<double> sigma;
  sigma.reserve(gram.rows());
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    sigma.push_back(std::sqrt(std::max(0.0, solver.eigenvalues()(i))));
  }
  return sigma;
}

double erank_of_sigma(const std::vector<double>& sigma) {
  const double total = std::accumulate(sigma.begin(), sigma.end(), 0.0);
  if (total <= 0.0) throw_data("effective rank of an all-zero matrix is undefined");
  double entropy = 0.0;
  for (double s : sigma) {
    const double p = s / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

}  // namespace

double effective_rank(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) throw_data("effective rank of an empty matrix");
  return erank_of_sigma(singular_values(a));
}

double normalized_effective_rank(const Eigen::MatrixXd& a, int m) {
  if (m < 2) throw_config("normalized effective rank needs m >= 2 channels");
  if (a.isZero(0.0)) return 0.0;  // maximal redundancy by convention
  return (effective_rank(a) - 1.0) / (m - 1);
}

ErankReport mean_erank(const EncodingCircuit& circuit, const Dataset& ds, int k,
                       int per_class, uint64_t seed) {
  ErankReport report;
  report.image_indices = balanced_sample(ds, per_class, seed, Split::Train);
  for (int idx : report.image_indices) {
    const FeatureMaps maps = extract(ds.images[idx], circuit, k);
    const Eigen::MatrixXd matrix = maps.as_matrix();
    if (matrix.isZero(0.0)) report.any_zero_matrix = true;
    report.per_image.push_back(normalized_effective_rank(matrix, maps.channels));
  }
  const double n = static_cast<double>(report.per_image.size());
  report.mean =
      std::accumulate(report.per_image.begin(), report.per_image.end(), 0.0) / n;
  double var = 0.0;
  for (double v : report.per_image) var += (v - report.mean) * (v - report.mean);
  report.stddev = std::sqrt(var / n);
  return report;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw_data("pearson needs two equal-length series of >= 2 points");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw_data("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::array<double, 4> quartile_correlations(
    const std::vector<std::pair<double, double>>& erank_auc) {
  const size_t n = erank_auc.size();
  if (n < 12) throw_data("quartile correlation needs >= 3 points per quartile");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return erank_auc[a].second < erank_auc[b].second;
  });

  size_t bounds[5] = {0, n / 4, n / 2, 3 * n / 4, n};
  for (int b = 1; b < 4; ++b) {
    // Ties on the AUC value stay with the lower quartile.
    size_t pos = std::max(bounds[b], bounds[b - 1]);
    while (pos < n && pos > 0 &&
           erank_auc[order[pos]].second == erank_auc[order[pos - 1]].second) {
      ++pos;
    }
    bounds[b] = pos;
  }

  std::array<double, 4> out;
  for (int q = 0; q < 4; ++q) {
    const size_t lo = bounds[q];
    const size_t hi = bounds[q + 1];
    if (hi - lo < 3) throw_data("quartile " + std::to_string(q + 1) + " has fewer than 3 points");
    std::vector<double> xs;
    std::vector<double> ys;
    for (size_t i = lo; i < hi; ++i) {
      xs.push_back(erank_auc[order[i]].first);
      ys.push_back(erank_auc[order[i]].second);
    }
    out[q] = pearson(xs, ys);
  }
  return out;
}

std::vector<double> filter_recall_curve(
    const std::vector<std::pair<double, double>>& erank_auc,
    std::span<const double> fractions) {
  const size_t n = erank_auc.size();
  if (n < 10) throw_data("recall curve needs at least 10 pairs");

  std::vector<size_t> by_auc(n);
  std::iota(by_auc.begin(), by_auc.end(), size_t{0});
  std::stable_sort(by_auc.begin(), by_auc.end(), [&](size_t a, size_t b) {
    return erank_auc[a].second > erank_auc[b].second;
  });
  const size_t top_count = (n + 9) / 10;  // ceil(N/10)
  std::vector<char> is_top(n, 0);
  for (size_t i = 0; i < top_count; ++i) is_top[by_auc[i]] = 1;

  std::vector<size_t> by_erank(n);
  std::iota(by_erank.begin(), by_erank.end(), size_t{0});
  std::stable_sort(by_erank.begin(), by_erank.end(), [&](size_t a, size_t b) {
    return erank_auc[a].first < erank_auc[b].first;
  });

  std::vector<double> out;
  for (double phi : fractions) {
    if (phi < 0.0 || phi > 1.0) throw_config("recall fraction must be in [0, 1]");
    const size_t dropped = static_cast<size_t>(std::floor(phi * n));
    size_t surviving_top = 0;
    for (size_t i = dropped; i < n; ++i) surviving_top += is_top[by_erank[i]];
    out.push_back(static_cast<double>(surviving_top) / static_cast<double>(top_count));
  }
  return out;
}

std::vector<PairLogRow> read_pair_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_data("cannot open pair log: " + path);
  std::string line;
  if (!std::getline(is, line)) throw_data("pair log missing header: " + path);
  if (line != "circuit_id,erank_mean,erank_std,val_auc") {
    throw_data("pair log has unexpected header: " + line);
  }
  std::vector<PairLogRow> rows;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      throw_data("pair log row " + std::to_string(line_no) + " has " +
                 std::to_string(cells.size()) + " cells");
    }
    try {
      rows.push_back({std::stoll(cells[0]), std::stod(cells[1]), std::stod(cells[2]),
                      std::stod(cells[3])});
    } catch (const std::exception&) {
      throw_data("pair log row " + std::to_string(line_no) + " is malformed");
    }
  }
  return rows;
}

void write_pair_log(const std::string& path, const std::vector<PairLogRow>& rows) {
  std::ofstream os(path);
  if (!os) throw_data("cannot write pair log: " + path);
  os << "circuit_id,erank_mean,erank_std,val_auc\n";
  for (const PairLogRow& r : rows) {
    os << r.circuit_id << "," << format_double(r.erank_mean) << ","
       << format_double(r.erank_std) << "," << format_double(r.val_auc) << "\n";
  }
}

std::string entanglement_report_to_json(const EntanglementReport& report) {
  nlohmann::ordered_json j;
  j["mean"] = report.mean;
  j["per_sample"] = report.per_sample;
  j["sample_inputs"] = report.sample_inputs;
  return j.dump(2);
}

std::string fourier_report_to_json(const FourierReport& report) {
  nlohmann::ordered_json j;
  j["qubit"] = report.qubit;
  j["grid_n"] = report.grid_n;
  j["sweep_lo"] = report.sweep_lo;
  j["sweep_hi"] = report.sweep_hi;
  nlohmann::ordered_json reps = nlohmann::ordered_json::array();
  for (const auto& coeffs : report.reps) {
    nlohmann::ordered_json rep = nlohmann::ordered_json::array();
    for (const auto& c : coeffs) {
      rep.push_back({{"re", c.real()}, {"im", c.imag()}});
    }
    reps.push_back(std::move(rep));
  }
  j["coefficients"] = std::move(reps);
  return j.dump(2);
}

std::string erank_report_to_json(const ErankReport& report) {
  nlohmann::ordered_json j;
  j["mean"] = report.mean;
  j["stddev"] = report.stddev;
  j["per_image"] = report.per_image;
  j["image_indices"] = report.image_indices;
  j["any_zero_matrix"] = report.any_zero_matrix;
  return j.dump(2);
}

}  // namespace qenc

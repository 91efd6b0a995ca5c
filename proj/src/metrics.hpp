#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "circuit.hpp"
#include "data.hpp"

namespace qenc {

struct EntanglementReport {
  double mean = 0.0;
  std::vector<double> per_sample;               // Meyer-Wallach Q per input
  std::vector<std::vector<double>> sample_inputs;
};

std::vector<std::vector<double>> sample_entanglement_inputs(int n_qubits, int count,
                                                            uint64_t seed);

// Q = 2*(1 - mean single-qubit purity) per input, averaged over the set.
EntanglementReport entanglement_capability(const EncodingCircuit& circuit,
                                           const std::vector<std::vector<double>>& inputs);

constexpr int kFourierCoeffs = 6;  // c_0 .. c_5
constexpr int kFourierGrid = 50;
constexpr int kFourierReps = 100;

struct FourierReport {
  int qubit = 0;
  int grid_n = kFourierGrid;
  double sweep_lo = -1.0;
  double sweep_hi = 1.0;  // endpoint excluded
  std::vector<std::array<std::complex<double>, kFourierCoeffs>> reps;
};

// Per repetition: fix the other inputs uniform in [-1, 1], sweep x_q over
// grid_n points in [lo, hi), record <Z_q>, and take DFT coefficients at
// omega_k = 2*pi*k/(hi-lo) referenced to the physical sweep coordinate, so a
// unit cosine at bin 1 yields c_1 = 0.5 and c_0 is the signal mean.
FourierReport fourier_spectrum(const EncodingCircuit& circuit, int qubit, uint64_t seed,
                               int reps = kFourierReps, int grid_n = kFourierGrid,
                               double lo = -1.0, double hi = 1.0);

// Sampled signal for one fixed input vector (test hook and building block).
std::vector<double> fourier_signal(const EncodingCircuit& circuit, int qubit,
                                   std::vector<double> inputs, int grid_n, double lo,
                                   double hi);

std::array<std::complex<double>, kFourierCoeffs> fourier_coefficients(
    std::span<const double> signal, double lo, double hi);

// exp of the Shannon entropy of the singular value distribution; singular
// values come from the C x C Gram matrix eigenvalues. Throws on an all-zero
// matrix.
double effective_rank(const Eigen::MatrixXd& a);

// (erank - 1) / (m - 1); defined as 0 for an all-zero matrix (flag reported
// through ErankReport). Requires m >= 2.
double normalized_effective_rank(const Eigen::MatrixXd& a, int m);

struct ErankReport {
  double mean = 0.0;
  double stddev = 0.0;  // population std across sampled images
  std::vector<double> per_image;
  std::vector<int> image_indices;
  bool any_zero_matrix = false;
};

// Average normalized effective rank of the per-image C x (H*W) feature
// matrices over a brightness-balanced image sample from the train split.
ErankReport mean_erank(const EncodingCircuit& circuit, const Dataset& ds, int k,
                       int per_class = 10, uint64_t seed = 0);

double pearson(std::span<const double> xs, std::span<const double> ys);

// Quartiles by AUC value (ties stay in the lower quartile); returns the
// within-quartile Pearson r of erank vs AUC, Q1 (lowest AUC) first.
std::array<double, 4> quartile_correlations(
    const std::vector<std::pair<double, double>>& erank_auc);

// For each fraction phi: drop the floor(phi*N) lowest-erank entries and
// report the surviving share of the top-10%-by-AUC set.
std::vector<double> filter_recall_curve(
    const std::vector<std::pair<double, double>>& erank_auc,
    std::span<const double> fractions);

// Pair log as produced by the search: circuit_id,erank_mean,erank_std,val_auc.
struct PairLogRow {
  int64_t circuit_id = 0;
  double erank_mean = 0.0;
  double erank_std = 0.0;
  double val_auc = 0.0;
};
std::vector<PairLogRow> read_pair_log(const std::string& path);
void write_pair_log(const std::string& path, const std::vector<PairLogRow>& rows);

std::string entanglement_report_to_json(const EntanglementReport& report);
std::string fourier_report_to_json(const FourierReport& report);
std::string erank_report_to_json(const ErankReport& report);

}  // namespace qenc

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "circuit.hpp"

namespace qenc {

constexpr int kMaxQubits = 12;

// Dense statevector over n <= 12 qubits. Basis convention: qubit 0 is the
// most significant bit of the amplitude index. Rotation convention is
// R_A(theta) = exp(-i*theta*A/2) for A in {X, Y, Z, Z(x)Z}.
class StateVector {
 public:
  explicit StateVector(int n_qubits);

  int num_qubits() const { return n_; }
  std::span<const std::complex<double>> amplitudes() const { return amp_; }
  double norm_sq() const;

  void apply_rx(int q, double theta);
  void apply_ry(int q, double theta);
  void apply_rz(int q, double theta);
  void apply_rzz(int q0, int q1, double theta);
  void apply_h(int q);
  void apply_cnot(int control, int target);

  // Dispatches on gate.kind; angle is ignored for H/CNOT.
  void apply(const Gate& gate, double angle);

 private:
  void apply_single(int q, std::complex<double> m00, std::complex<double> m01,
                    std::complex<double> m10, std::complex<double> m11);
  size_t qubit_mask(int q) const { return size_t{1} << (n_ - 1 - q); }

  int n_;
  std::vector<std::complex<double>> amp_;
};

// Resolves the angle encoded by a parameterized gate for a given patch:
// scale*x[d] for single-qubit rotations, scale*x[d0]*x[d1] for RZZ.
double gate_angle(const Gate& gate, double scale, std::span<const double> patch);

// Simulates the circuit from |0...0> on a patch of length n_qubits.
// Throws Error(Data) on length mismatch or non-finite input.
StateVector run(const EncodingCircuit& circuit, std::span<const double> patch);

// Exact <Z_q> per qubit, each in [-1, 1].
std::vector<double> z_expectations(const StateVector& state);

// Tr(rho_q^2) per qubit, each in [1/2, 1].
std::vector<double> single_qubit_purities(const StateVector& state);

}  // namespace qenc

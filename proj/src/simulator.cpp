#include "simulator.hpp"

#include <cmath>

#include "common.hpp"

namespace qenc {

namespace {
constexpr std::complex<double> kImag{0.0, 1.0};
constexpr double kInvSqrt2 = 0.70710678118654752440;
}  // namespace

StateVector::StateVector(int n_qubits) : n_(n_qubits) {
  if (n_qubits <= 0 || n_qubits > kMaxQubits) {
    throw_config("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  amp_.assign(size_t{1} << n_, {0.0, 0.0});
  amp_[0] = {1.0, 0.0};
}

double StateVector::norm_sq() const {
  double s = 0.0;
  for (const auto& a : amp_) s += std::norm(a);
  return s;
}

void StateVector::apply_single(int q, std::complex<double> m00, std::complex<double> m01,
                               std::complex<double> m10, std::complex<double> m11) {
  const size_t mask = qubit_mask(q);
  const size_t dim = amp_.size();
  for (size_t base = 0; base < dim; base += 2 * mask) {
    for (size_t i = base; i < base + mask; ++i) {
      const std::complex<double> a0 = amp_[i];
      const std::complex<double> a1 = amp_[i | mask];
      amp_[i] = m00 * a0 + m01 * a1;
      amp_[i | mask] = m10 * a0 + m11 * a1;
    }
  }
}

void StateVector::apply_rx(int q, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  apply_single(q, c, -kImag * s, -kImag * s, c);
}

void StateVector::apply_ry(int q, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  apply_single(q, c, -s, s, c);
}

void StateVector::apply_rz(int q, double theta) {
  const std::complex<double> p0 = std::polar(1.0, -theta / 2.0);
  const std::complex<double> p1 = std::polar(1.0, theta / 2.0);
  const size_t mask = qubit_mask(q);
  for (size_t i = 0; i < amp_.size(); ++i) {
    amp_[i] *= (i & mask) ? p1 : p0;
  }
}

void StateVector::apply_rzz(int q0, int q1, double theta) {
  const std::complex<double> even = std::polar(1.0, -theta / 2.0);  // Z(x)Z = +1
  const std::complex<double> odd = std::polar(1.0, theta / 2.0);    // Z(x)Z = -1
  const size_t m0 = qubit_mask(q0);
  const size_t m1 = qubit_mask(q1);
  for (size_t i = 0; i < amp_.size(); ++i) {
    const bool parity = ((i & m0) != 0) != ((i & m1) != 0);
    amp_[i] *= parity ? odd : even;
  }
}

void StateVector::apply_h(int q) {
  apply_single(q, kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2);
}

void StateVector::apply_cnot(int control, int target) {
  const size_t cm = qubit_mask(control);
  const size_t tm = qubit_mask(target);
  for (size_t i = 0; i < amp_.size(); ++i) {
    if ((i & cm) && !(i & tm)) {
      std::swap(amp_[i], amp_[i | tm]);
    }
  }
}

void StateVector::apply(const Gate& gate, double angle) {
  switch (gate.kind) {
    case GateKind::RX: apply_rx(gate.qubits[0], angle); break;
    case GateKind::RY: apply_ry(gate.qubits[0], angle); break;
    case GateKind::RZ: apply_rz(gate.qubits[0], angle); break;
    case GateKind::RZZ: apply_rzz(gate.qubits[0], gate.qubits[1], angle); break;
    case GateKind::H: apply_h(gate.qubits[0]); break;
    case GateKind::CNOT: apply_cnot(gate.qubits[0], gate.qubits[1]); break;
  }
}

double gate_angle(const Gate& gate, double scale, std::span<const double> patch) {
  switch (gate_num_data(gate.kind)) {
    case 1:
      return scale * patch[gate.data[0]];
    case 2:
      return scale * patch[gate.data[0]] * patch[gate.data[1]];
    default:
      return 0.0;
  }
}

StateVector run(const EncodingCircuit& circuit, std::span<const double> patch) {
  if (static_cast<int>(patch.size()) != circuit.n_qubits) {
    throw_data("patch length " + std::to_string(patch.size()) +
               " does not match circuit qubit count " + std::to_string(circuit.n_qubits));
  }
  for (double x : patch) {
    if (!std::isfinite(x)) throw_data("non-finite patch value");
  }
  StateVector state(circuit.n_qubits);
  for (const Gate& gate : circuit.gates) {
    state.apply(gate, gate_angle(gate, circuit.scale, patch));
  }
  return state;
}

std::vector<double> z_expectations(const StateVector& state) {
  const int n = state.num_qubits();
  const auto amps = state.amplitudes();
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p == 0.0) continue;
    for (int q = 0; q < n; ++q) {
      const size_t mask = size_t{1} << (n - 1 - q);
      out[q] += (i & mask) ? -p : p;
    }
  }
  return out;
}

std::vector<double> single_qubit_purities(const StateVector& state) {
  const int n = state.num_qubits();
  const auto amps = state.amplitudes();
  std::vector<double> out(n);
  for (int q = 0; q < n; ++q) {
    const size_t mask = size_t{1} << (n - 1 - q);
    double p0 = 0.0;
    double p1 = 0.0;
    std::complex<double> coh{0.0, 0.0};  // rho_01 = sum a_i conj(a_{i|mask})
    for (size_t base = 0; base < amps.size(); base += 2 * mask) {
      for (size_t i = base; i < base + mask; ++i) {
        p0 += std::norm(amps[i]);
        p1 += std::norm(amps[i | mask]);
        coh += amps[i] * std::conj(amps[i | mask]);
      }
    }
    out[q] = p0 * p0 + p1 * p1 + 2.0 * std::norm(coh);
  }
  return out;
}

}  // namespace qenc

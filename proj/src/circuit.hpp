#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qenc {

enum class GateKind { RX, RY, RZ, RZZ, H, CNOT };

constexpr GateKind kGatePool[] = {GateKind::RX, GateKind::RY, GateKind::RZ,
                                  GateKind::RZZ, GateKind::H, GateKind::CNOT};

int gate_num_qubits(GateKind kind);
int gate_num_data(GateKind kind);
bool gate_is_parameterized(GateKind kind);
std::string_view gate_name(GateKind kind);
std::optional<GateKind> gate_from_name(std::string_view name);

struct Gate {
  GateKind kind;
  std::vector<int> qubits;  // targets, 0-based; (control, target) for CNOT
  std::vector<int> data;    // pixel indices into the flattened patch

  static Gate rx(int q, int d) { return {GateKind::RX, {q}, {d}}; }
  static Gate ry(int q, int d) { return {GateKind::RY, {q}, {d}}; }
  static Gate rz(int q, int d) { return {GateKind::RZ, {q}, {d}}; }
  static Gate rzz(int q0, int q1, int d0, int d1) {
    return {GateKind::RZZ, {q0, q1}, {d0, d1}};
  }
  static Gate h(int q) { return {GateKind::H, {q}, {}}; }
  static Gate cnot(int control, int target) {
    return {GateKind::CNOT, {control, target}, {}};
  }

  bool operator==(const Gate&) const = default;
};

// Fixed data-encoding circuit: gate order is execution order and is never
// canonicalized. Angles at run time are scale*x[d] for rotations and
// scale*x[d0]*x[d1] for RZZ.
struct EncodingCircuit {
  int n_qubits = 0;
  double scale = 1.0;
  int max_gates = 0;
  std::vector<Gate> gates;

  size_t size() const { return gates.size(); }

  // Equality is over the serialized content (n_qubits, scale, gates);
  // max_gates is a caller policy, not part of the text format.
  friend bool operator==(const EncodingCircuit& a, const EncodingCircuit& b) {
    return a.n_qubits == b.n_qubits && a.scale == b.scale && a.gates == b.gates;
  }
};

inline int default_max_gates(int n_qubits) { return 5 * n_qubits; }

EncodingCircuit make_circuit(int n_qubits, double scale = 1.0, int max_gates = 0);

struct AddAction {
  Gate gate;
  int position;  // insertion index in [0, size]
  bool operator==(const AddAction&) const = default;
};
struct RemoveAction {
  int position;  // existing gate index
  bool operator==(const RemoveAction&) const = default;
};
struct ReplaceAction {
  int position;
  Gate gate;
  bool operator==(const ReplaceAction&) const = default;
};

using Action = std::variant<AddAction, RemoveAction, ReplaceAction>;

struct Violation {
  int gate_index;  // -1 for circuit-level violations
  std::string message;
};

// Returns every violated invariant; empty result means the circuit is valid.
std::vector<Violation> validate(const EncodingCircuit& circuit);

// Value semantics: returns a new circuit, the input is untouched.
// Throws Error(Config) on out-of-range positions or a full circuit.
EncodingCircuit apply_action(const EncodingCircuit& circuit, const Action& action);

// Line-based text format:
//   qubits <n>
//   scale <f>
//   RX q<i> x<d> | RY q<i> x<d> | RZ q<i> x<d>
//   RZZ q<i> q<j> x<d0> x<d1> | H q<i> | CNOT q<i> q<j>
// '#' starts a comment, blank lines are ignored.
std::string serialize(const EncodingCircuit& circuit);

// Throws Error(Data) with line number and offending token on malformed input.
// max_gates defaults to max(5*n, parsed gate count) since the format does not
// carry it.
EncodingCircuit parse_circuit(const std::string& text, int max_gates = 0);

std::string gate_to_string(const Gate& gate);
std::string action_to_string(const Action& action);
Action action_from_string(const std::string& text);

}  // namespace qenc

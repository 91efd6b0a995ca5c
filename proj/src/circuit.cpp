#include "circuit.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "common.hpp"

namespace qenc {

int gate_num_qubits(GateKind kind) {
  switch (kind) {
    case GateKind::RZZ:
    case GateKind::CNOT:
      return 2;
    default:
      return 1;
  }
}

int gate_num_data(GateKind kind) {
  switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
      return 1;
    case GateKind::RZZ:
      return 2;
    default:
      return 0;
  }
}

bool gate_is_parameterized(GateKind kind) { return gate_num_data(kind) > 0; }

std::string_view gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::RZZ: return "RZZ";
    case GateKind::H: return "H";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

std::optional<GateKind> gate_from_name(std::string_view name) {
  for (GateKind kind : kGatePool) {
    if (gate_name(kind) == name) return kind;
  }
  return std::nullopt;
}

EncodingCircuit make_circuit(int n_qubits, double scale, int max_gates) {
  if (n_qubits <= 0) throw_config("n_qubits must be positive");
  EncodingCircuit c;
  c.n_qubits = n_qubits;
  c.scale = scale;
  c.max_gates = max_gates > 0 ? max_gates : default_max_gates(n_qubits);
  return c;
}

namespace {

void check_gate(const Gate& g, int n_qubits, int index, std::vector<Violation>& out) {
  auto add = [&](std::string msg) { out.push_back({index, std::move(msg)}); };
  const int nq = gate_num_qubits(g.kind);
  const int nd = gate_num_data(g.kind);
  const std::string name(gate_name(g.kind));
  if (static_cast<int>(g.qubits.size()) != nq) {
    add(name + " requires " + std::to_string(nq) + " qubit(s), has " +
        std::to_string(g.qubits.size()));
  }
  if (static_cast<int>(g.data.size()) != nd) {
    add(name + " requires " + std::to_string(nd) + " data index(es), has " +
        std::to_string(g.data.size()));
  }
  for (int q : g.qubits) {
    if (q < 0 || q >= n_qubits) add("qubit index out of range: q" + std::to_string(q));
  }
  for (int d : g.data) {
    if (d < 0 || d >= n_qubits) add("data index out of range: x" + std::to_string(d));
  }
  if (g.qubits.size() == 2 && g.qubits[0] == g.qubits[1]) {
    add("duplicate qubit: q" + std::to_string(g.qubits[0]));
  }
}

}  // namespace

std::vector<Violation> validate(const EncodingCircuit& circuit) {
  std::vector<Violation> out;
  if (circuit.n_qubits <= 0) out.push_back({-1, "n_qubits must be positive"});
  if (circuit.max_gates <= 0) out.push_back({-1, "max_gates must be positive"});
  if (circuit.max_gates > 0 &&
      circuit.gates.size() > static_cast<size_t>(circuit.max_gates)) {
    out.push_back({-1, "gate count " + std::to_string(circuit.gates.size()) +
                           " exceeds max_gates " + std::to_string(circuit.max_gates)});
  }
  for (size_t i = 0; i < circuit.gates.size(); ++i) {
    check_gate(circuit.gates[i], circuit.n_qubits, static_cast<int>(i), out);
  }
  return out;
}

EncodingCircuit apply_action(const EncodingCircuit& circuit, const Action& action) {
  EncodingCircuit next = circuit;
  const int len = static_cast<int>(circuit.gates.size());
  if (const auto* add = std::get_if<AddAction>(&action)) {
    if (add->position < 0 || add->position > len) {
      throw_config("add position out of range: " + std::to_string(add->position));
    }
    if (len + 1 > circuit.max_gates) {
      throw_config("add would exceed max_gates " + std::to_string(circuit.max_gates));
    }
    next.gates.insert(next.gates.begin() + add->position, add->gate);
  } else if (const auto* rem = std::get_if<RemoveAction>(&action)) {
    if (rem->position < 0 || rem->position >= len) {
      throw_config("remove position out of range: " + std::to_string(rem->position));
    }
    next.gates.erase(next.gates.begin() + rem->position);
  } else {
    const auto& rep = std::get<ReplaceAction>(action);
    if (rep.position < 0 || rep.position >= len) {
      throw_config("replace position out of range: " + std::to_string(rep.position));
    }
    next.gates[rep.position] = rep.gate;
  }
  return next;
}

std::string gate_to_string(const Gate& gate) {
  std::string line(gate_name(gate.kind));
  for (int q : gate.qubits) line += " q" + std::to_string(q);
  for (int d : gate.data) line += " x" + std::to_string(d);
  return line;
}

std::string serialize(const EncodingCircuit& circuit) {
  std::string out;
  out += "qubits " + std::to_string(circuit.n_qubits) + "\n";
  out += "scale " + format_double(circuit.scale) + "\n";
  for (const Gate& g : circuit.gates) {
    out += gate_to_string(g) + "\n";
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& token, const std::string& why) {
  throw_data("circuit parse error at line " + std::to_string(line_no) + ", token '" +
             token + "': " + why);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') break;
    toks.push_back(tok);
  }
  return toks;
}

int parse_indexed(const std::string& token, char prefix, int limit, int line_no,
                  const char* what) {
  if (token.size() < 2 || token[0] != prefix) {
    parse_fail(line_no, token, std::string("expected ") + prefix + "<index>");
  }
  int value = 0;
  auto res = std::from_chars(token.data() + 1, token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    parse_fail(line_no, token, std::string("malformed ") + what + " index");
  }
  if (value < 0 || value >= limit) {
    parse_fail(line_no, token, std::string(what) + " index out of range");
  }
  return value;
}

}  // namespace

EncodingCircuit parse_circuit(const std::string& text, int max_gates) {
  EncodingCircuit circuit;
  bool have_qubits = false;
  bool have_scale = false;

  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;

    if (!have_qubits) {
      if (toks[0] != "qubits" || toks.size() != 2) {
        parse_fail(line_no, toks[0], "expected 'qubits <n>' header");
      }
      int n = 0;
      auto res = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), n);
      if (res.ec != std::errc() || n <= 0) {
        parse_fail(line_no, toks[1], "qubit count must be a positive integer");
      }
      circuit.n_qubits = n;
      have_qubits = true;
      continue;
    }
    if (!have_scale) {
      if (toks[0] != "scale" || toks.size() != 2) {
        parse_fail(line_no, toks[0], "expected 'scale <f>' header");
      }
      try {
        size_t used = 0;
        circuit.scale = std::stod(toks[1], &used);
        if (used != toks[1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        parse_fail(line_no, toks[1], "malformed scale value");
      }
      have_scale = true;
      continue;
    }

    auto kind = gate_from_name(toks[0]);
    if (!kind) parse_fail(line_no, toks[0], "unknown gate");
    Gate gate;
    gate.kind = *kind;
    const int nq = gate_num_qubits(*kind);
    const int nd = gate_num_data(*kind);
    if (static_cast<int>(toks.size()) != 1 + nq + nd) {
      parse_fail(line_no, toks[0], "expected " + std::to_string(nq) + " qubit and " +
                                       std::to_string(nd) + " data token(s)");
    }
    for (int i = 0; i < nq; ++i) {
      gate.qubits.push_back(
          parse_indexed(toks[1 + i], 'q', circuit.n_qubits, line_no, "qubit"));
    }
    for (int i = 0; i < nd; ++i) {
      gate.data.push_back(
          parse_indexed(toks[1 + nq + i], 'x', circuit.n_qubits, line_no, "data"));
    }
    if (nq == 2 && gate.qubits[0] == gate.qubits[1]) {
      parse_fail(line_no, toks[1], "duplicate qubit");
    }
    circuit.gates.push_back(std::move(gate));
  }

  if (!have_qubits) throw_data("circuit parse error: missing 'qubits <n>' header");
  if (!have_scale) throw_data("circuit parse error: missing 'scale <f>' header");
  circuit.max_gates = std::max(max_gates > 0 ? max_gates : default_max_gates(circuit.n_qubits),
                               static_cast<int>(circuit.gates.size()));
  return circuit;
}

std::string action_to_string(const Action& action) {
  if (const auto* add = std::get_if<AddAction>(&action)) {
    return "add " + std::to_string(add->position) + " " + gate_to_string(add->gate);
  }
  if (const auto* rem = std::get_if<RemoveAction>(&action)) {
    return "remove " + std::to_string(rem->position);
  }
  const auto& rep = std::get<ReplaceAction>(action);
  return "replace " + std::to_string(rep.position) + " " + gate_to_string(rep.gate);
}

namespace {

Gate gate_from_tokens(const std::vector<std::string>& toks, size_t start) {
  // Token layout mirrors gate_to_string; indices are trusted to be small,
  // range checks happen in validate().
  auto kind = gate_from_name(toks.at(start));
  if (!kind) throw_data("unknown gate in action: " + toks.at(start));
  Gate gate;
  gate.kind = *kind;
  const int nq = gate_num_qubits(*kind);
  const int nd = gate_num_data(*kind);
  if (toks.size() != start + 1 + nq + nd) throw_data("malformed gate in action");
  for (int i = 0; i < nq; ++i) gate.qubits.push_back(std::stoi(toks[start + 1 + i].substr(1)));
  for (int i = 0; i < nd; ++i) gate.data.push_back(std::stoi(toks[start + 1 + nq + i].substr(1)));
  return gate;
}

}  // namespace

Action action_from_string(const std::string& text) {
  auto toks = tokenize(text);
  if (toks.size() < 2) throw_data("malformed action: " + text);
  const int position = std::stoi(toks[1]);
  if (toks[0] == "add") return AddAction{gate_from_tokens(toks, 2), position};
  if (toks[0] == "remove") return RemoveAction{position};
  if (toks[0] == "replace") return ReplaceAction{position, gate_from_tokens(toks, 2)};
  throw_data("unknown action kind: " + toks[0]);
}

}  // namespace qenc

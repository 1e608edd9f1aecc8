#include "seqtag/recurrent.hpp"

#include <utility>

#include "seqtag/error.hpp"

namespace seqtag {

namespace {

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};

void check_dims(const Parameter& p, std::size_t rows, std::size_t cols) {
  if (p.value().rows() != rows || p.value().cols() != cols) {
    throw ShapeError("parameter " + p.name() + " has shape " + to_string(p.value().shape()) +
                     ", expected " + to_string(Shape{rows, cols}));
  }
}

}  // namespace

std::string to_string(CellKind kind) { return kind == CellKind::lstm ? "lstm" : "simple_rnn"; }

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::lstm;
  if (s == "simple_rnn" || s == "rnn") return CellKind::simple_rnn;
  throw Error("unknown cell kind: " + s);
}

Cell Cell::create(ParameterStore& store, const std::string& prefix, CellKind kind,
                  std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  Cell cell;
  cell.kind_ = kind;
  cell.input_dim_ = input_dim;
  cell.hidden_dim_ = hidden_dim;
  for (std::size_t k = 0; k < cell.gate_count(); ++k) {
    const std::string gate = kind == CellKind::lstm ? kGateNames[k] : "";
    auto& g = cell.gates_[k];
    g.wx = &store.add_glorot(prefix + ".Wx" + gate, hidden_dim, input_dim, rng);
    g.wh = &store.add_glorot(prefix + ".Wh" + gate, hidden_dim, hidden_dim, rng);
    g.b = &store.add_zeros(prefix + ".b" + gate, hidden_dim);
  }
  return cell;
}

Cell Cell::bind(ParameterStore& store, const std::string& prefix, CellKind kind,
                std::size_t input_dim, std::size_t hidden_dim) {
  Cell cell;
  cell.kind_ = kind;
  cell.input_dim_ = input_dim;
  cell.hidden_dim_ = hidden_dim;
  for (std::size_t k = 0; k < cell.gate_count(); ++k) {
    const std::string gate = kind == CellKind::lstm ? kGateNames[k] : "";
    auto& g = cell.gates_[k];
    g.wx = &store.at(prefix + ".Wx" + gate);
    g.wh = &store.at(prefix + ".Wh" + gate);
    g.b = &store.at(prefix + ".b" + gate);
    check_dims(*g.wx, hidden_dim, input_dim);
    check_dims(*g.wh, hidden_dim, hidden_dim);
    check_dims(*g.b, hidden_dim, 1);
  }
  return cell;
}

RnnState zero_state(Tape& tape, const Cell& cell) {
  Var z = tape.zeros(cell.hidden_dim());
  return {z, z};
}

RnnState cell_step(Tape& tape, const Cell& cell, Var x, const RnnState& state) {
  const Shape xs = tape.shape(x);
  if (!xs.is_vector() || xs.rows != cell.input_dim()) {
    throw ShapeError("cell_step: input " + to_string(xs) + " but cell expects " +
                     std::to_string(cell.input_dim()));
  }
  auto preactivation = [&](std::size_t k) {
    const auto& g = cell.gate(k);
    const std::pair<Var, Var> terms[] = {{tape.param(*g.wx), x}, {tape.param(*g.wh), state.h}};
    return tape.affine(tape.param(*g.b), terms);
  };
  if (cell.kind() == CellKind::simple_rnn) {
    Var h = tape.tanh(preactivation(0));
    return {h, h};
  }
  Var i = tape.logistic(preactivation(0));
  Var f = tape.logistic(preactivation(1));
  Var o = tape.logistic(preactivation(2));
  Var g = tape.tanh(preactivation(3));
  Var c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

std::vector<RnnState> run(Tape& tape, const Cell& cell, std::span<const Var> xs,
                          Direction direction) {
  if (xs.empty()) throw ShapeError("run: empty input sequence");
  std::vector<RnnState> states;
  states.reserve(xs.size());
  RnnState state = zero_state(tape, cell);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::size_t t = direction == Direction::forward ? k : xs.size() - 1 - k;
    state = cell_step(tape, cell, xs[t], state);
    states.push_back(state);
  }
  return states;
}

Var birnn_seq(Tape& tape, const Cell& forward, const Cell& reverse, std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("birnn_seq: empty input sequence");
  const Var halves[] = {run(tape, forward, xs, Direction::forward).back().h,
                        run(tape, reverse, xs, Direction::reverse).back().h};
  return tape.concat(halves);
}

std::vector<Var> birnn_ctx(Tape& tape, const Cell& forward, const Cell& reverse,
                           std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("birnn_ctx: empty input sequence");
  const auto fwd = run(tape, forward, xs, Direction::forward);
  const auto rev = run(tape, reverse, xs, Direction::reverse);
  const std::size_t n = xs.size();
  std::vector<Var> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Var halves[] = {fwd[i].h, rev[n - 1 - i].h};
    out.push_back(tape.concat(halves));
  }
  return out;
}

}  // namespace seqtag

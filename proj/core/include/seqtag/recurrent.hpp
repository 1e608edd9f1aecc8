#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqtag/rng.hpp"
#include "seqtag/tape.hpp"
#include "seqtag/tensor.hpp"

namespace seqtag {

enum class CellKind { lstm, simple_rnn };
enum class Direction { forward, reverse };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& s);

// Weights of one recurrent cell. Parameters live in a ParameterStore; the
// cell only points at them.
//
// LSTM (no peepholes), gates in order i, f, o, g:
//   i = logistic(Wxi x + Whi h + bi)   f = logistic(Wxf x + Whf h + bf)
//   o = logistic(Wxo x + Who h + bo)   g = tanh(Wxg x + Whg h + bg)
//   c' = f * c + i * g                 h' = o * tanh(c')
// Simple RNN uses gate slot 0 only:  h' = tanh(Wx x + Wh h + b).
class Cell {
 public:
  struct Gate {
    Parameter* wx = nullptr;  // hidden x input
    Parameter* wh = nullptr;  // hidden x hidden
    Parameter* b = nullptr;   // hidden
  };

  // Glorot-initialized weights, zero biases, registered under `prefix`.
  static Cell create(ParameterStore& store, const std::string& prefix, CellKind kind,
                     std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
  // Re-attaches to parameters previously created under `prefix`.
  static Cell bind(ParameterStore& store, const std::string& prefix, CellKind kind,
                   std::size_t input_dim, std::size_t hidden_dim);

  CellKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t gate_count() const { return kind_ == CellKind::lstm ? 4 : 1; }
  const Gate& gate(std::size_t k) const { return gates_[k]; }

 private:
  CellKind kind_ = CellKind::lstm;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::array<Gate, 4> gates_{};
};

struct RnnState {
  Var h;
  Var c;  // unused by simple_rnn
};

RnnState zero_state(Tape& tape, const Cell& cell);

RnnState cell_step(Tape& tape, const Cell& cell, Var x, const RnnState& state);

// States after each consumed input, starting from the zero state. For
// Direction::reverse the first state is the one after reading xs.back().
std::vector<RnnState> run(Tape& tape, const Cell& cell, std::span<const Var> xs,
                          Direction direction);

// Final forward state concatenated with final reverse state (2 * hidden).
Var birnn_seq(Tape& tape, const Cell& forward, const Cell& reverse, std::span<const Var> xs);

// One vector per position i: forward state after x_1..x_i concatenated with
// reverse state after x_n..x_i.
std::vector<Var> birnn_ctx(Tape& tape, const Cell& forward, const Cell& reverse,
                           std::span<const Var> xs);

}  // namespace seqtag

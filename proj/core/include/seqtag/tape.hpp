#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "seqtag/rng.hpp"
#include "seqtag/tensor.hpp"

namespace seqtag {

// Handle to a node on a Tape. Only meaningful together with the tape that
// produced it.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

enum class Op : std::uint8_t {
  input,
  parameter,
  add,
  mul,
  matvec,
  affine,
  concat,
  tanh,
  logistic,
  lookup_row,
  softmax_xent,
  gaussian_noise,
};

std::string_view op_name(Op op);

// Records primitive evaluations in topological order for reverse-mode
// differentiation. Forward values are computed eagerly and kept on the tape.
// Gradients w.r.t. Parameter leaves accumulate straight into the Parameter;
// lookup_row touches only the looked-up row.
//
// In inference mode the tape computes identical values but refuses
// backward(). A tape is single-threaded.
class Tape {
 public:
  enum class Mode { train, inference };

  explicit Tape(Mode mode = Mode::train) : mode_(mode) {}

  Mode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  Var input(Tensor value);
  Var input(std::span<const double> vector_values);
  Var zeros(std::size_t n);
  Var param(Parameter& p);

  // Elementwise sum of same-shaped operands.
  Var add(Var a, Var b);
  Var add(std::span<const Var> terms);
  Var mul(Var a, Var b);
  Var matvec(Var matrix, Var x);
  // bias + sum_k W_k x_k. Each pair is (W_k, x_k).
  Var affine(Var bias, std::span<const std::pair<Var, Var>> terms);
  Var affine(Var matrix, Var x, Var bias);
  Var concat(std::span<const Var> parts);
  Var tanh(Var x);
  Var logistic(Var x);
  Var lookup_row(Parameter& table, std::size_t row);
  // -log softmax(logits)[gold]; a scalar.
  Var softmax_xent(Var logits, std::size_t gold);
  // x + eps with eps ~ N(0, sigma^2) elementwise; gradient is the identity.
  // An inference tape passes x through without drawing from rng.
  Var gaussian_noise(Var x, double sigma, Rng& rng);

  std::span<const double> value(Var v) const;
  Shape shape(Var v) const;
  double scalar(Var v) const;
  // Empty span when no gradient reached the node.
  std::span<const double> gradient(Var v) const;

  void backward(Var loss);

 private:
  struct Node {
    Op op;
    Shape shape;
    Parameter* param = nullptr;  // leaf parameter
    Parameter* table = nullptr;  // lookup_row source
    std::size_t aux = 0;
    std::uint32_t first_parent = 0;
    std::uint32_t parent_count = 0;
    std::vector<double> value;
    std::vector<double> cache;
    std::vector<double> grad;
  };

  const Node& node(Var v) const;
  std::span<const double> value_of(std::uint32_t id) const;
  std::span<double> grad_of(std::uint32_t id);
  std::span<const std::uint32_t> parents(const Node& n) const {
    return {parents_.data() + n.first_parent, n.parent_count};
  }
  Var push(Op op, Shape shape, std::vector<double> value,
           std::initializer_list<std::uint32_t> parents);
  Var push(Op op, Shape shape, std::vector<double> value, std::span<const std::uint32_t> parents);
  void backprop_node(std::uint32_t id);

  Mode mode_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> parents_;
};

inline void backward(Tape& tape, Var loss) { tape.backward(loss); }

// Builds a scalar loss on the supplied tape from the current parameter values.
using ScalarFunction = std::function<Var(Tape&)>;

// Max over every scalar of every parameter of
//   |analytic - central| / max(1e-8, |analytic| + |central|)
// where central = (f(p + h) - f(p - h)) / 2h. The function must be
// deterministic. Leaves all gradients cleared and parameter values intact.
double gradient_check(const ScalarFunction& f, std::span<Parameter* const> params, double h);

}  // namespace seqtag

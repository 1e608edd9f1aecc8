#include "seqtag/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqtag/error.hpp"

namespace seqtag {

namespace {

void require_finite(Op op, std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + std::string(op_name(op)));
    }
  }
}

void require_same(Op op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

void require_vector(Op op, const Shape& s) {
  if (!s.is_vector()) {
    throw ShapeError(std::string(op_name(op)) + ": expected a column vector, got " + to_string(s));
  }
}

// y += W x
void matvec_accumulate(std::span<const double> w, std::size_t rows, std::size_t cols,
                       std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

// gW += g x^T, gx += W^T g
void matvec_backward(std::span<const double> w, std::size_t rows, std::size_t cols,
                     std::span<const double> x, std::span<const double> g,
                     std::span<double> gw, std::span<double> gx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* wr = w.data() + r * cols;
    double* gwr = gw.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      gwr[c] += gr * x[c];
      gx[c] += gr * wr[c];
    }
  }
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::input: return "input";
    case Op::parameter: return "parameter";
    case Op::add: return "add";
    case Op::mul: return "pointwise_mul";
    case Op::matvec: return "matvec";
    case Op::affine: return "affine";
    case Op::concat: return "concat";
    case Op::tanh: return "tanh";
    case Op::logistic: return "logistic";
    case Op::lookup_row: return "lookup_row";
    case Op::softmax_xent: return "softmax_xent";
    case Op::gaussian_noise: return "gaussian_noise";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("variable does not belong to this tape");
  return nodes_[v.id];
}

std::span<const double> Tape::value_of(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.param) return n.param->value().values();
  return n.value;
}

std::span<double> Tape::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.op == Op::parameter) return n.param->dense_gradient();
  if (n.grad.size() != n.shape.size()) n.grad.assign(n.shape.size(), 0.0);
  return n.grad;
}

Var Tape::push(Op op, Shape shape, std::vector<double> value,
               std::initializer_list<std::uint32_t> parents) {
  return push(op, shape, std::move(value),
              std::span<const std::uint32_t>(parents.begin(), parents.size()));
}

Var Tape::push(Op op, Shape shape, std::vector<double> value,
               std::span<const std::uint32_t> parents) {
  if (op != Op::parameter) require_finite(op, value);
  Node n;
  n.op = op;
  n.shape = shape;
  n.first_parent = static_cast<std::uint32_t>(parents_.size());
  n.parent_count = static_cast<std::uint32_t>(parents.size());
  n.value = std::move(value);
  parents_.insert(parents_.end(), parents.begin(), parents.end());
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::input(Tensor value) {
  const Shape shape = value.shape();
  return push(Op::input, shape, {value.values().begin(), value.values().end()}, {});
}

Var Tape::input(std::span<const double> vector_values) {
  return push(Op::input, {vector_values.size(), 1},
              {vector_values.begin(), vector_values.end()}, {});
}

Var Tape::zeros(std::size_t n) { return push(Op::input, {n, 1}, std::vector<double>(n, 0.0), {}); }

Var Tape::param(Parameter& p) {
  Var v = push(Op::parameter, p.value().shape(), {}, {});
  nodes_.back().param = &p;
  return v;
}

Var Tape::add(Var a, Var b) {
  const Var terms[] = {a, b};
  return add(terms);
}

Var Tape::add(std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("add: no operands");
  const Shape shape = node(terms[0]).shape;
  std::vector<double> out(shape.size(), 0.0);
  std::vector<std::uint32_t> ids;
  ids.reserve(terms.size());
  for (Var t : terms) {
    require_same(Op::add, shape, node(t).shape);
    auto v = value_of(t.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    ids.push_back(t.id);
  }
  return push(Op::add, shape, std::move(out), ids);
}

Var Tape::mul(Var a, Var b) {
  const Shape shape = node(a).shape;
  require_same(Op::mul, shape, node(b).shape);
  auto va = value_of(a.id);
  auto vb = value_of(b.id);
  std::vector<double> out(shape.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return push(Op::mul, shape, std::move(out), {a.id, b.id});
}

Var Tape::matvec(Var matrix, Var x) {
  const Shape ws = node(matrix).shape;
  const Shape xs = node(x).shape;
  require_vector(Op::matvec, xs);
  if (ws.cols != xs.rows) {
    throw ShapeError("matvec: " + to_string(ws) + " times " + to_string(xs));
  }
  std::vector<double> out(ws.rows, 0.0);
  matvec_accumulate(value_of(matrix.id), ws.rows, ws.cols, value_of(x.id), out);
  return push(Op::matvec, {ws.rows, 1}, std::move(out), {matrix.id, x.id});
}

Var Tape::affine(Var bias, std::span<const std::pair<Var, Var>> terms) {
  const Shape bs = node(bias).shape;
  require_vector(Op::affine, bs);
  std::vector<double> out(value_of(bias.id).begin(), value_of(bias.id).end());
  std::vector<std::uint32_t> ids;
  ids.reserve(1 + 2 * terms.size());
  ids.push_back(bias.id);
  for (const auto& [w, x] : terms) {
    const Shape ws = node(w).shape;
    const Shape xs = node(x).shape;
    require_vector(Op::affine, xs);
    if (ws.cols != xs.rows || ws.rows != bs.rows) {
      throw ShapeError("affine: " + to_string(ws) + " times " + to_string(xs) + " plus " +
                       to_string(bs));
    }
    matvec_accumulate(value_of(w.id), ws.rows, ws.cols, value_of(x.id), out);
    ids.push_back(w.id);
    ids.push_back(x.id);
  }
  return push(Op::affine, bs, std::move(out), ids);
}

Var Tape::affine(Var matrix, Var x, Var bias) {
  const std::pair<Var, Var> term[] = {{matrix, x}};
  return affine(bias, term);
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  std::vector<double> out;
  std::vector<std::uint32_t> ids;
  for (Var p : parts) {
    require_vector(Op::concat, node(p).shape);
    auto v = value_of(p.id);
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  const std::size_t n = out.size();
  return push(Op::concat, {n, 1}, std::move(out), ids);
}

Var Tape::tanh(Var x) {
  auto v = value_of(x.id);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(v[i]);
  return push(Op::tanh, node(x).shape, std::move(out), {x.id});
}

Var Tape::logistic(Var x) {
  auto v = value_of(x.id);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return push(Op::logistic, node(x).shape, std::move(out), {x.id});
}

Var Tape::lookup_row(Parameter& table, std::size_t row) {
  const Tensor& t = table.value();
  if (row >= t.rows()) {
    throw ShapeError("lookup_row: row " + std::to_string(row) + " out of range for " +
                     table.name() + " " + to_string(t.shape()));
  }
  auto r = t.row(row);
  Var v = push(Op::lookup_row, {t.cols(), 1}, {r.begin(), r.end()}, {});
  nodes_.back().table = &table;
  nodes_.back().aux = row;
  return v;
}

Var Tape::softmax_xent(Var logits, std::size_t gold) {
  const Shape s = node(logits).shape;
  require_vector(Op::softmax_xent, s);
  if (gold >= s.rows) {
    throw ShapeError("softmax_xent: gold index " + std::to_string(gold) + " out of range for " +
                     std::to_string(s.rows) + " classes");
  }
  auto z = value_of(logits.id);
  require_finite(Op::softmax_xent, z);
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> probs(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    probs[i] = std::exp(z[i] - zmax);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  const double loss = -(z[gold] - zmax - std::log(total));
  Var v = push(Op::softmax_xent, {1, 1}, {loss}, {logits.id});
  nodes_.back().aux = gold;
  nodes_.back().cache = std::move(probs);
  return v;
}

Var Tape::gaussian_noise(Var x, double sigma, Rng& rng) {
  auto v = value_of(x.id);
  std::vector<double> out(v.begin(), v.end());
  if (mode_ == Mode::train) {
    for (double& o : out) o += rng.gaussian(sigma);
  }
  return push(Op::gaussian_noise, node(x).shape, std::move(out), {x.id});
}

std::span<const double> Tape::value(Var v) const {
  node(v);
  return value_of(v.id);
}

Shape Tape::shape(Var v) const { return node(v).shape; }

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (!n.shape.is_scalar()) throw ShapeError("scalar: node has shape " + to_string(n.shape));
  return value_of(v.id)[0];
}

std::span<const double> Tape::gradient(Var v) const {
  const Node& n = node(v);
  if (n.op == Op::parameter) return n.param->gradient();
  return n.grad;
}

void Tape::backward(Var loss) {
  if (mode_ == Mode::inference) throw Error("backward: tape was created in inference mode");
  if (!loss.valid() || loss.id >= nodes_.size()) {
    throw Error("backward: loss is not on this tape (forward not run?)");
  }
  if (!nodes_[loss.id].shape.is_scalar()) {
    throw ShapeError("backward: loss must be a scalar, got " + to_string(nodes_[loss.id].shape));
  }
  grad_of(loss.id)[0] += 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.op == Op::parameter || n.grad.empty()) continue;
    backprop_node(id);
  }
}

void Tape::backprop_node(std::uint32_t id) {
  // grad_of() on a parent only resizes that parent's buffer, so `g` stays valid.
  const Node& n = nodes_[id];
  std::span<const double> g = n.grad;
  auto ps = parents(n);
  switch (n.op) {
    case Op::input:
    case Op::parameter:
      break;
    case Op::add:
      for (std::uint32_t p : ps) {
        auto gp = grad_of(p);
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
      }
      break;
    case Op::mul: {
      auto va = value_of(ps[0]);
      auto vb = value_of(ps[1]);
      {
        auto ga = grad_of(ps[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      auto gb = grad_of(ps[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      break;
    }
    case Op::matvec: {
      const Shape ws = nodes_[ps[0]].shape;
      matvec_backward(value_of(ps[0]), ws.rows, ws.cols, value_of(ps[1]), g, grad_of(ps[0]),
                      grad_of(ps[1]));
      break;
    }
    case Op::affine: {
      auto gb = grad_of(ps[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      for (std::size_t k = 1; k + 1 < ps.size(); k += 2) {
        const Shape ws = nodes_[ps[k]].shape;
        matvec_backward(value_of(ps[k]), ws.rows, ws.cols, value_of(ps[k + 1]), g,
                        grad_of(ps[k]), grad_of(ps[k + 1]));
      }
      break;
    }
    case Op::concat: {
      std::size_t offset = 0;
      for (std::uint32_t p : ps) {
        auto gp = grad_of(p);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        offset += gp.size();
      }
      break;
    }
    case Op::tanh: {
      auto gx = grad_of(ps[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::logistic: {
      auto gx = grad_of(ps[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::lookup_row: {
      auto gr = n.table->row_gradient(n.aux);
      for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i];
      break;
    }
    case Op::softmax_xent: {
      auto gz = grad_of(ps[0]);
      for (std::size_t i = 0; i < gz.size(); ++i) {
        gz[i] += g[0] * (n.cache[i] - (i == n.aux ? 1.0 : 0.0));
      }
      break;
    }
    case Op::gaussian_noise: {
      auto gx = grad_of(ps[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      break;
    }
  }
}

double gradient_check(const ScalarFunction& f, std::span<Parameter* const> params, double h) {
  if (!(h > 0.0)) throw Error("gradient_check: step must be positive");
  for (Parameter* p : params) p->clear_gradient();

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Var loss = f(tape);
    if (!std::isfinite(tape.scalar(loss))) throw NumericError("gradient_check: non-finite loss");
    tape.backward(loss);
    for (Parameter* p : params) {
      auto g = p->gradient();
      if (g.size() == p->value().size()) {
        analytic.emplace_back(g.begin(), g.end());
      } else {
        analytic.emplace_back(p->value().size(), 0.0);
      }
    }
  }
  for (Parameter* p : params) p->clear_gradient();

  auto evaluate = [&] {
    Tape tape;
    const double v = tape.scalar(f(tape));
    if (!std::isfinite(v)) throw NumericError("gradient_check: non-finite evaluation");
    return v;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k]->value().values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = evaluate();
      values[i] = saved - h;
      const double minus = evaluate();
      values[i] = saved;
      const double central = (plus - minus) / (2.0 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - central) / std::max(1e-8, std::abs(a) + std::abs(central));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace seqtag

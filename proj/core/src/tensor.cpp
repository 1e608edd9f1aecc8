#include "seqtag/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "seqtag/error.hpp"

namespace seqtag {

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.size() != values_.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " does not match " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values));
}

Tensor Tensor::vector(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> row_major) {
  return Tensor({rows, cols}, std::vector<double>(row_major));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Parameter::ensure_grad() {
  if (grad_.size() != value_.size()) {
    grad_.assign(value_.size(), 0.0);
    row_marked_.assign(value_.rows(), 0);
    dirty_rows_.clear();
    dense_dirty_ = false;
  }
}

std::span<double> Parameter::dense_gradient() {
  ensure_grad();
  dense_dirty_ = true;
  return grad_;
}

std::span<double> Parameter::row_gradient(std::size_t row) {
  ensure_grad();
  if (row >= value_.rows()) {
    throw ShapeError("row " + std::to_string(row) + " out of range for parameter " + name_);
  }
  if (!row_marked_[row]) {
    row_marked_[row] = 1;
    dirty_rows_.push_back(row);
  }
  return {grad_.data() + row * value_.cols(), value_.cols()};
}

void Parameter::clear_gradient() {
  if (dense_dirty_) {
    std::fill(grad_.begin(), grad_.end(), 0.0);
  } else {
    const std::size_t cols = value_.cols();
    for (std::size_t r : dirty_rows_) {
      std::fill_n(grad_.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, 0.0);
    }
  }
  for (std::size_t r : dirty_rows_) row_marked_[r] = 0;
  dirty_rows_.clear();
  dense_dirty_ = false;
}

void Parameter::reset(Tensor value) {
  value_ = std::move(value);
  grad_.clear();
  row_marked_.clear();
  dirty_rows_.clear();
  dense_dirty_ = false;
}

Parameter& ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.contains(name)) throw Error("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  return params_.emplace_back(std::move(name), std::move(value), trainable);
}

Parameter& ParameterStore::add_glorot(std::string name, std::size_t rows, std::size_t cols,
                                      Rng& rng) {
  Tensor t({rows, cols});
  glorot_fill(t, rng);
  return add(std::move(name), std::move(t));
}

Parameter& ParameterStore::add_zeros(std::string name, std::size_t rows, std::size_t cols) {
  return add(std::move(name), Tensor({rows, cols}));
}

Parameter* ParameterStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParameterStore::at(std::string_view name) {
  Parameter* p = find(name);
  if (!p) throw Error("no parameter named " + std::string(name));
  return *p;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().size();
  return n;
}

void ParameterStore::clear_gradients() {
  for (auto& p : params_) p.clear_gradient();
}

void glorot_fill(Tensor& t, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

void sgd_step(ParameterStore& params, double lr) {
  for (auto& p : params) {
    if (p.trainable() && !p.has_gradient()) {
      throw Error("missing gradient for trainable parameter " + p.name());
    }
  }
  for (auto& p : params) {
    if (!p.trainable()) continue;
    auto& value = p.value_;
    const auto& grad = p.grad_;
    if (p.dense_dirty_) {
      for (std::size_t i = 0; i < grad.size(); ++i) value[i] -= lr * grad[i];
    } else {
      const std::size_t cols = value.cols();
      for (std::size_t r : p.dirty_rows_) {
        for (std::size_t c = 0; c < cols; ++c) value[r * cols + c] -= lr * grad[r * cols + c];
      }
    }
  }
  params.clear_gradients();
}

}  // namespace seqtag

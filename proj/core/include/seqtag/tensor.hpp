#pragma once

#include <cstddef>
#include <deque>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqtag/rng.hpp"

namespace seqtag {

class ParameterStore;

// Row-major shape of rank <= 2. Vectors are (n x 1).
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool is_vector() const { return cols == 1; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

// Dense float64 array. product(shape) == values.size() always holds.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::span<const double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> row_major);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * shape_.cols, shape_.cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * shape_.cols, shape_.cols};
  }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

// A named trainable tensor with a lazily allocated gradient buffer. Rows
// touched through sparse lookups are tracked so an update of a large
// embedding table only visits those rows.
class Parameter {
 public:
  Parameter(std::string name, Tensor value, bool trainable = true)
      : name_(std::move(name)), value_(std::move(value)), trainable_(trainable) {}

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }

  bool has_gradient() const { return dense_dirty_ || !dirty_rows_.empty(); }
  // Whole-gradient access; marks every row as touched.
  std::span<double> dense_gradient();
  // Single-row access for sparse accumulation.
  std::span<double> row_gradient(std::size_t row);
  std::span<const double> gradient() const { return grad_; }
  void clear_gradient();

  // Replaces the value with a tensor of a new shape and drops the gradient.
  void reset(Tensor value);

 private:
  friend void sgd_step(ParameterStore&, double);
  void ensure_grad();

  std::string name_;
  Tensor value_;
  bool trainable_;
  std::vector<double> grad_;
  bool dense_dirty_ = false;
  std::vector<std::size_t> dirty_rows_;
  std::vector<char> row_marked_;
};

// Owns parameters in creation order with stable addresses.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Throws Error if the name is taken.
  Parameter& add(std::string name, Tensor value, bool trainable = true);
  // Glorot-uniform matrix in +-sqrt(6 / (rows + cols)).
  Parameter& add_glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng);
  Parameter& add_zeros(std::string name, std::size_t rows, std::size_t cols = 1);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void clear_gradients();

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

void glorot_fill(Tensor& t, Rng& rng);

// p <- p - lr * grad for every trainable parameter, then clears all
// gradients. Throws Error if a trainable parameter has no gradient.
void sgd_step(ParameterStore& params, double lr);

}  // namespace seqtag

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lica {

// Dense row-major tensor of 64-bit floats with optional linkage to a
// gradient tape. Copies are shallow: data and gradient buffers are shared,
// so a gradient written by Tape::backward is visible through every copy.
//
// Threading contract: a tape and every tensor recorded on it stay on one
// thread. Untracked tensors are immutable-after-construction by convention
// and may be read from many threads (rollout workers share frozen params).

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int shape_numel(const Shape& s);

struct TensorStorage {
  std::vector<double> data;
  std::vector<double> grad;  // empty until backward touches it
};

class Tape;

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double v);
  static Tensor scalar(double v);  // shape {1}

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int numel() const { return static_cast<int>(storage_->data.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }

  const std::vector<double>& data() const { return storage_->data; }
  std::vector<double>& data() { return storage_->data; }
  double value() const;  // requires numel() == 1
  double at(int i) const { return storage_->data[static_cast<std::size_t>(i)]; }
  double at(int i, int j) const;

  bool has_grad() const { return !storage_->grad.empty(); }
  const std::vector<double>& grad() const;
  void clear_grad() { storage_->grad.clear(); }

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }

  // Value copy with no tape linkage.
  Tensor detached() const;

  // Internal (ops, optimizers): gradient buffer, allocated zeroed on first
  // access; shared storage handle.
  std::vector<double>& grad_buffer();
  const std::shared_ptr<TensorStorage>& storage() const { return storage_; }

 private:
  Shape shape_;
  std::shared_ptr<TensorStorage> storage_;
  Tape* tape_ = nullptr;
  friend class Tape;
};

// Records operations in execution order; backward() replays them in exact
// reverse order. One tape per training step, discarded afterwards.
class Tape {
 public:
  // Marks a tensor as a differentiable leaf of this tape and clears any
  // stale gradient. Returns a tracked view sharing the same storage.
  Tensor watch(const Tensor& t);

  // Backpropagates from a scalar tracked loss. Populates grad buffers of
  // every tensor that participated (leaves included).
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }

  // Internal: used by ops.
  void record(Tensor& out, std::function<void()> backward_fn);

 private:
  std::vector<std::function<void()>> nodes_;
};

// ---- forward ops -----------------------------------------------------
// All ops require exact shape conformance; there is no implicit
// broadcasting (scale() multiplies by a host scalar). A result is recorded
// on the active tape whenever any input is tracked.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x, int axis);
Tensor log(const Tensor& x);  // clamps input at 1e-12 (the single numerical guard)
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, int axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, int axis);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice(const Tensor& x, int axis, int begin, int end);
Tensor square(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor reshape(const Tensor& x, const Shape& shape);
Tensor stop_gradient(const Tensor& x);

// Per-row generated-weight product: treats row b of `w_flat` (B x in*cols)
// as an (in x cols) matrix and multiplies it by row b of `a` (B x in),
// yielding (B x cols). This is how state-generated hypernetwork weights
// are applied per sample.
Tensor row_matmul(const Tensor& a, const Tensor& w_flat, int cols);

constexpr double kLogClamp = 1e-12;

}  // namespace lica

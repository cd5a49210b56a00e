#include "lica/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace lica {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

int shape_numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

namespace {

[[noreturn]] void op_error(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": " + detail);
}

void check_shape_valid(const std::string& op, const Shape& s) {
  if (s.empty()) op_error(op, "empty shape");
  for (int d : s)
    if (d < 1) op_error(op, "dimension < 1 in shape " + shape_str(s));
}

void check_same_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    op_error(op, "shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

void check_axis(const std::string& op, const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank())
    op_error(op, "axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(x.shape()));
}

// Single tape shared by all tracked inputs, or null when untracked.
Tape* common_tape(const std::string& op, std::initializer_list<const Tensor*> ts) {
  Tape* t = nullptr;
  for (const Tensor* x : ts) {
    if (!x->tracked()) continue;
    if (t == nullptr) t = x->tape();
    else if (t != x->tape()) op_error(op, "inputs recorded on different tapes");
  }
  return t;
}

using StoragePtr = std::shared_ptr<TensorStorage>;

std::vector<double>& acc(const StoragePtr& s) {
  if (s->grad.empty()) s->grad.assign(s->data.size(), 0.0);
  return s->grad;
}

// Strides for iterating one axis: index = (o*len + l)*inner + in.
struct AxisSplit {
  int outer, len, inner;
};
AxisSplit axis_split(const Shape& s, int axis) {
  AxisSplit a{1, s[static_cast<std::size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) a.outer *= s[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i)
    a.inner *= s[i];
  return a;
}

// ---- GEMM kernels (row-major, C += op(A) * op(B)) ----------------------
// i-k-j loop order keeps the inner loop contiguous so it vectorizes.

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::ptrdiff_t>(i) * k;
    double* crow = c + static_cast<std::ptrdiff_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<std::ptrdiff_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(m x k) += A(m x n) * B(k x n)^T
void gemm_nt(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::ptrdiff_t>(i) * n;
    double* crow = c + static_cast<std::ptrdiff_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<std::ptrdiff_t>(p) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += arow[j] * brow[j];
      crow[p] += dot;
    }
  }
}

// C(k x n) += A(m x k)^T * B(m x n)
void gemm_tn(int k, int n, int m, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::ptrdiff_t>(i) * k;
    const double* brow = b + static_cast<std::ptrdiff_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + static_cast<std::ptrdiff_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Unary elementwise op plus backward rule df(x, y, g) -> dx contribution.
template <typename Fwd, typename Bwd>
Tensor unary_op(const std::string& name, const Tensor& x, Fwd fwd, Bwd bwd) {
  Tape* tape = common_tape(name, {&x});
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x.data()[i]);
  Tensor y(x.shape(), std::move(out));
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys, bwd]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      for (std::size_t i = 0; i < gx.size(); ++i)
        gx[i] += bwd(xs->data[i], ys->data[i], ys->grad[i]);
    });
  }
  return y;
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  check_shape_valid("Tensor", shape_);
  if (shape_numel(shape_) != static_cast<int>(data.size()))
    throw std::invalid_argument("Tensor: shape " + shape_str(shape_) +
                                " does not match data length " +
                                std::to_string(data.size()));
  storage_ = std::make_shared<TensorStorage>();
  storage_->data = std::move(data);
}

Tensor Tensor::zeros(const Shape& shape) {
  return Tensor(shape,
                std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), 0.0));
}

Tensor Tensor::full(const Shape& shape, double v) {
  return Tensor(shape,
                std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

double Tensor::value() const {
  if (numel() != 1)
    throw std::invalid_argument("Tensor::value: tensor of shape " +
                                shape_str(shape_) + " is not scalar");
  return storage_->data[0];
}

double Tensor::at(int i, int j) const {
  return storage_->data[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_.back()) +
                        static_cast<std::size_t>(j)];
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw std::runtime_error("Tensor::grad: no gradient present (run backward first)");
  return storage_->grad;
}

std::vector<double>& Tensor::grad_buffer() { return acc(storage_); }

Tensor Tensor::detached() const {
  Tensor t;
  t.shape_ = shape_;
  t.storage_ = std::make_shared<TensorStorage>();
  t.storage_->data = storage_->data;
  return t;
}

Tensor Tape::watch(const Tensor& t) {
  if (t.tracked() && t.tape() != this)
    throw std::invalid_argument("Tape::watch: tensor already tracked on another tape");
  Tensor w = t;
  w.tape_ = this;
  w.storage_->grad.clear();
  return w;
}

void Tape::record(Tensor& out, std::function<void()> backward_fn) {
  out.tape_ = this;
  nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw std::invalid_argument("Tape::backward: loss must be scalar, got shape " +
                                shape_str(loss.shape()));
  if (!loss.tracked() || loss.tape() != this)
    throw std::invalid_argument("Tape::backward: loss is not tracked on this tape");
  loss.storage()->grad.assign(1, 1.0);
  for (std::size_t i = nodes_.size(); i-- > 0;) nodes_[i]();
}

// ---- ops ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    op_error("matmul", "shape mismatch " + shape_str(a.shape()) + " x " +
                           shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tape* tape = common_tape("matmul", {&a, &b});
  Tensor out = Tensor::zeros({m, n});
  gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data().data());
  if (tape) {
    StoragePtr as = a.storage(), bs = b.storage(), os = out.storage();
    const bool ta = a.tracked(), tb = b.tracked();
    tape->record(out, [as, bs, os, ta, tb, m, n, k]() {
      if (os->grad.empty()) return;
      const double* g = os->grad.data();
      if (ta) gemm_nt(m, k, n, g, bs->data.data(), acc(as).data());
      if (tb) gemm_tn(k, n, m, as->data.data(), g, acc(bs).data());
    });
  }
  return out;
}

Tensor row_matmul(const Tensor& a, const Tensor& w_flat, int cols) {
  if (a.rank() != 2 || w_flat.rank() != 2 || a.dim(0) != w_flat.dim(0) ||
      cols < 1 || w_flat.dim(1) != a.dim(1) * cols)
    op_error("row_matmul", "shape mismatch " + shape_str(a.shape()) + " x " +
                               shape_str(w_flat.shape()) + " with cols=" +
                               std::to_string(cols));
  const int rows = a.dim(0), in = a.dim(1);
  Tape* tape = common_tape("row_matmul", {&a, &w_flat});
  Tensor out = Tensor::zeros({rows, cols});
  {
    const double* ap = a.data().data();
    const double* wp = w_flat.data().data();
    double* op = out.data().data();
    for (int r = 0; r < rows; ++r)
      gemm_nn(1, cols, in, ap + static_cast<std::ptrdiff_t>(r) * in,
              wp + static_cast<std::ptrdiff_t>(r) * in * cols,
              op + static_cast<std::ptrdiff_t>(r) * cols);
  }
  if (tape) {
    StoragePtr as = a.storage(), ws = w_flat.storage(), os = out.storage();
    const bool ta = a.tracked(), tw = w_flat.tracked();
    tape->record(out, [as, ws, os, ta, tw, rows, in, cols]() {
      if (os->grad.empty()) return;
      const double* g = os->grad.data();
      for (int r = 0; r < rows; ++r) {
        const std::ptrdiff_t ao = static_cast<std::ptrdiff_t>(r) * in;
        const std::ptrdiff_t wo = static_cast<std::ptrdiff_t>(r) * in * cols;
        const std::ptrdiff_t go = static_cast<std::ptrdiff_t>(r) * cols;
        if (ta)
          gemm_nt(1, in, cols, g + go, ws->data.data() + wo, acc(as).data() + ao);
        if (tw)
          gemm_tn(in, cols, 1, as->data.data() + ao, g + go, acc(ws).data() + wo);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tape* tape = common_tape("add", {&a, &b});
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  Tensor y(a.shape(), std::move(out));
  if (tape) {
    StoragePtr as = a.storage(), bs = b.storage(), ys = y.storage();
    const bool ta = a.tracked(), tb = b.tracked();
    tape->record(y, [as, bs, ys, ta, tb]() {
      if (ys->grad.empty()) return;
      const auto& g = ys->grad;
      if (ta) {
        auto& ga = acc(as);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (tb) {
        auto& gb = acc(bs);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tape* tape = common_tape("mul", {&a, &b});
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Tensor y(a.shape(), std::move(out));
  if (tape) {
    StoragePtr as = a.storage(), bs = b.storage(), ys = y.storage();
    const bool ta = a.tracked(), tb = b.tracked();
    tape->record(y, [as, bs, ys, ta, tb]() {
      if (ys->grad.empty()) return;
      const auto& g = ys->grad;
      if (ta) {
        auto& ga = acc(as);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += bs->data[i] * g[i];
      }
      if (tb) {
        auto& gb = acc(bs);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += as->data[i] * g[i];
      }
    });
  }
  return y;
}

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double, double g) { return v > 0.0 ? g : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y, double g) { return (1.0 - y * y) * g; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y, double g) { return y * (1.0 - y) * g; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      "log", x,
      [](double v) { return std::log(v < kLogClamp ? kLogClamp : v); },
      [](double v, double, double g) { return g / (v < kLogClamp ? kLogClamp : v); });
}

Tensor square(const Tensor& x) {
  return unary_op(
      "square", x, [](double v) { return v * v; },
      [](double v, double, double g) { return 2.0 * v * g; });
}

Tensor scale(const Tensor& x, double c) {
  return unary_op(
      "scale", x, [c](double v) { return c * v; },
      [c](double, double, double g) { return c * g; });
}

Tensor softmax(const Tensor& x, int axis) {
  check_axis("softmax", x, axis);
  Tape* tape = common_tape("softmax", {&x});
  const AxisSplit sp = axis_split(x.shape(), axis);
  std::vector<double> out(x.data().size());
  const double* xd = x.data().data();
  for (int o = 0; o < sp.outer; ++o)
    for (int in = 0; in < sp.inner; ++in) {
      double mx = -1e300;
      for (int l = 0; l < sp.len; ++l)
        mx = std::max(mx, xd[(static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in]);
      double z = 0.0;
      for (int l = 0; l < sp.len; ++l) {
        const std::size_t idx = (static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in;
        out[idx] = std::exp(xd[idx] - mx);
        z += out[idx];
      }
      for (int l = 0; l < sp.len; ++l)
        out[(static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in] /= z;
    }
  Tensor y(x.shape(), std::move(out));
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys, sp]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      const auto& g = ys->grad;
      const auto& yv = ys->data;
      for (int o = 0; o < sp.outer; ++o)
        for (int in = 0; in < sp.inner; ++in) {
          double dot = 0.0;
          for (int l = 0; l < sp.len; ++l) {
            const std::size_t idx =
                (static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in;
            dot += g[idx] * yv[idx];
          }
          for (int l = 0; l < sp.len; ++l) {
            const std::size_t idx =
                (static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in;
            gx[idx] += yv[idx] * (g[idx] - dot);
          }
        }
    });
  }
  return y;
}

namespace {

Shape reduced_shape(const Shape& s, int axis) {
  Shape r;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != axis) r.push_back(s[static_cast<std::size_t>(i)]);
  if (r.empty()) r.push_back(1);
  return r;
}

Tensor reduce(const std::string& name, const Tensor& x, int axis, double denom) {
  check_axis(name, x, axis);
  Tape* tape = common_tape(name, {&x});
  const AxisSplit sp = axis_split(x.shape(), axis);
  std::vector<double> out(static_cast<std::size_t>(sp.outer) * sp.inner, 0.0);
  const double* xd = x.data().data();
  for (int o = 0; o < sp.outer; ++o)
    for (int l = 0; l < sp.len; ++l)
      for (int in = 0; in < sp.inner; ++in)
        out[static_cast<std::size_t>(o) * sp.inner + in] +=
            xd[(static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in];
  if (denom != 1.0)
    for (auto& v : out) v /= denom;
  Tensor y(reduced_shape(x.shape(), axis), std::move(out));
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys, sp, denom]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      const auto& g = ys->grad;
      for (int o = 0; o < sp.outer; ++o)
        for (int l = 0; l < sp.len; ++l)
          for (int in = 0; in < sp.inner; ++in)
            gx[(static_cast<std::size_t>(o) * sp.len + l) * sp.inner + in] +=
                g[static_cast<std::size_t>(o) * sp.inner + in] / denom;
    });
  }
  return y;
}

Tensor reduce_all(const std::string& name, const Tensor& x, double denom) {
  Tape* tape = common_tape(name, {&x});
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor y = Tensor::scalar(total / denom);
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys, denom]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      const double g = ys->grad[0] / denom;
      for (auto& v : gx) v += g;
    });
  }
  return y;
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_all("sum", x, 1.0); }
Tensor sum(const Tensor& x, int axis) { return reduce("sum", x, axis, 1.0); }
Tensor mean(const Tensor& x) { return reduce_all("mean", x, static_cast<double>(x.numel())); }
Tensor mean(const Tensor& x, int axis) {
  check_axis("mean", x, axis);
  return reduce("mean", x, axis, static_cast<double>(x.dim(axis)));
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) op_error("concat", "empty input list");
  const int rank = xs[0].rank();
  check_axis("concat", xs[0], axis);
  int total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != rank) op_error("concat", "rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis && t.dim(i) != xs[0].dim(i))
        op_error("concat", "shape mismatch " + shape_str(t.shape()) + " vs " +
                               shape_str(xs[0].shape()));
    total += t.dim(axis);
  }
  Shape out_shape = xs[0].shape();
  out_shape[static_cast<std::size_t>(axis)] = total;
  Tape* tape = nullptr;
  for (const Tensor& t : xs) {
    if (!t.tracked()) continue;
    if (!tape) tape = t.tape();
    else if (tape != t.tape()) op_error("concat", "inputs recorded on different tapes");
  }
  const AxisSplit osp = axis_split(out_shape, axis);
  Tensor y = Tensor::zeros(out_shape);
  double* yd = y.data().data();
  int off = 0;
  for (const Tensor& t : xs) {
    const int len = t.dim(axis);
    const double* td = t.data().data();
    for (int o = 0; o < osp.outer; ++o)
      for (int l = 0; l < len; ++l)
        for (int in = 0; in < osp.inner; ++in)
          yd[(static_cast<std::size_t>(o) * osp.len + off + l) * osp.inner + in] =
              td[(static_cast<std::size_t>(o) * len + l) * osp.inner + in];
    off += len;
  }
  if (tape) {
    struct Part {
      StoragePtr s;
      int off, len;
      bool tracked;
    };
    std::vector<Part> parts;
    int o2 = 0;
    for (const Tensor& t : xs) {
      parts.push_back({t.storage(), o2, t.dim(axis), t.tracked()});
      o2 += t.dim(axis);
    }
    StoragePtr ys = y.storage();
    tape->record(y, [parts, ys, osp]() {
      if (ys->grad.empty()) return;
      const auto& g = ys->grad;
      for (const auto& p : parts) {
        if (!p.tracked) continue;
        auto& gp = acc(p.s);
        for (int o = 0; o < osp.outer; ++o)
          for (int l = 0; l < p.len; ++l)
            for (int in = 0; in < osp.inner; ++in)
              gp[(static_cast<std::size_t>(o) * p.len + l) * osp.inner + in] +=
                  g[(static_cast<std::size_t>(o) * osp.len + p.off + l) * osp.inner + in];
      }
    });
  }
  return y;
}

Tensor slice(const Tensor& x, int axis, int begin, int end) {
  check_axis("slice", x, axis);
  if (begin < 0 || end > x.dim(axis) || begin >= end)
    op_error("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") invalid for axis " + std::to_string(axis) + " of shape " +
                          shape_str(x.shape()));
  Tape* tape = common_tape("slice", {&x});
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = end - begin;
  const AxisSplit sp = axis_split(x.shape(), axis);
  const int len = end - begin;
  Tensor y = Tensor::zeros(out_shape);
  double* yd = y.data().data();
  const double* xd = x.data().data();
  for (int o = 0; o < sp.outer; ++o)
    for (int l = 0; l < len; ++l)
      for (int in = 0; in < sp.inner; ++in)
        yd[(static_cast<std::size_t>(o) * len + l) * sp.inner + in] =
            xd[(static_cast<std::size_t>(o) * sp.len + begin + l) * sp.inner + in];
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys, sp, begin, len]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      const auto& g = ys->grad;
      for (int o = 0; o < sp.outer; ++o)
        for (int l = 0; l < len; ++l)
          for (int in = 0; in < sp.inner; ++in)
            gx[(static_cast<std::size_t>(o) * sp.len + begin + l) * sp.inner + in] +=
                g[(static_cast<std::size_t>(o) * len + l) * sp.inner + in];
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, const Shape& shape) {
  check_shape_valid("reshape", shape);
  if (shape_numel(shape) != x.numel())
    op_error("reshape", "cannot reshape " + shape_str(x.shape()) + " to " +
                            shape_str(shape));
  Tape* tape = common_tape("reshape", {&x});
  Tensor y(shape, x.data());
  if (tape) {
    StoragePtr xs = x.storage(), ys = y.storage();
    tape->record(y, [xs, ys]() {
      if (ys->grad.empty()) return;
      auto& gx = acc(xs);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += ys->grad[i];
    });
  }
  return y;
}

Tensor stop_gradient(const Tensor& x) { return x.detached(); }

}  // namespace lica

#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation in creation order, which is also a valid
// topological order, so backward() is a single reverse sweep. Parameters live
// outside the tape and receive accumulated gradients when a sweep finishes.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace larson {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace larson

namespace larson::ag {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn fn);

  const Matrix& value(const Var& v) const { return nodes_[static_cast<size_t>(v.id())].value; }
  bool needs_grad(const Var& v) const { return nodes_[static_cast<size_t>(v.id())].needs_grad; }

  // Adds `delta` into v's gradient buffer; no-op for nodes that need none.
  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& delta) {
    Node& n = nodes_[static_cast<size_t>(v.id())];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.grad += delta;
  }
  // Mutable access to the gradient buffer for sparse updates.
  Matrix* grad_buffer(const Var& v);

  // Seeds d(root)/d(root) = 1 and sweeps. root must be 1x1. Parameter
  // gradients are added to Parameter::grad.
  void backward(const Var& root);

  // Gradient of the last sweep w.r.t. v (zeros when v received none).
  Matrix gradient(const Var& v) const;

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// ---- elementwise and linear algebra -------------------------------------

Var matmul(const Var& a, const Var& b);
// a * b^T, the usual "rows times weight" form.
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
// Adds a 1 x c row to every row of a.
Var add_row(const Var& a, const Var& row);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, const Var& s);
Var transpose(const Var& a);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var gelu(const Var& a);

Var sum(const Var& a);
Var softmax_rows(const Var& a);
// Divides every row by (row sum + eps).
Var normalize_rows(const Var& a, double eps);

// ---- row selection and pooling ------------------------------------------

Var gather_rows(const Var& a, std::span<const Index> rows);
// Rows drawn from several sources: refs[k] = (source index, row).
Var gather_from(std::span<const Var> sources, std::span<const std::pair<int, Index>> refs);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, Index start, Index count);
Var slice_cols(const Var& a, Index start, Index count);
// Elementwise logsumexp across the listed rows -> 1 x c.
Var logsumexp_rows(const Var& a, std::span<const Index> rows);
// Mean of the listed rows -> 1 x c.
Var mean_rows(const Var& a, std::span<const Index> rows);
// Row i multiplied by weights(i, 0).
Var mul_rows(const Var& a, const Var& weights);
// out(segment[i]) += a(i) for every row i.
Var segment_sum(const Var& a, std::span<const Index> segment, Index segments);
// Softmax of an E x 1 column within each segment.
Var segment_softmax(const Var& scores, std::span<const Index> segment, Index segments);

// ---- fused attention/bilinear kernels -----------------------------------

// out(p, i) = w^T tanh(left(p) + right(i)); left P x k, right B x k, w k x 1.
Var additive_scores(const Var& left, const Var& right, const Var& w);
// out(p, c) = zs(p) * W_c * zo(p)^T with W stored as d x (C*d) column blocks.
Var bilinear_forms(const Var& zs, const Var& weight, const Var& zo, Index classes);
// Per-row block outer products: out(p, g*k*k + i*k + j) = zs(p, g*k+i) * zo(p, g*k+j).
Var grouped_outer(const Var& zs, const Var& zo, Index block);

}  // namespace larson::ag

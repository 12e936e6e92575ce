#include "larson/autograd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace larson::ag {

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw Error("Var::scalar on a non-1x1 value");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw Error("operand recorded on a different tape");
    needs = needs || nodes_[static_cast<size_t>(in.id())].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix* Tape::grad_buffer(const Var& v) {
  Node& n = nodes_[static_cast<size_t>(v.id())];
  if (!n.needs_grad) return nullptr;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return &n.grad;
}

void Tape::backward(const Var& root) {
  if (root.tape_ != this) throw Error("backward root belongs to a different tape");
  Node& r = nodes_[static_cast<size_t>(root.id())];
  if (r.value.rows() != 1 || r.value.cols() != 1) throw Error("backward root must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!r.needs_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (size_t i = static_cast<size_t>(root.id()) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(n.grad);
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

Matrix Tape::gradient(const Var& v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id())];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("shape mismatch in ") + what);
}

template <size_t N>
std::span<const Var> ins(const std::array<Var, N>& a) {
  return std::span<const Var>(a.data(), a.size());
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, b};
  return t.record(a.value() * b.value(), ins(in), [&t, a, b](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, b};
  return t.record(a.value() * b.value().transpose(), ins(in), [&t, a, b](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value());
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, b};
  return t.record(a.value() + b.value(), ins(in), [&t, a, b](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, row};
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), ins(in), [&t, a, row](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(row, g.colwise().sum());
  });
}

Var sub(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, b};
  return t.record(a.value() - b.value(), ins(in), [&t, a, b](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, b};
  return t.record(a.value().cwiseProduct(b.value()), ins(in), [&t, a, b](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(const Var& a, double s) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  return t.record(a.value() * s, ins(in), [&t, a, s](const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_scalar(const Var& a, const Var& s) {
  require(s.rows() == 1 && s.cols() == 1, "add_scalar");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, s};
  Matrix out = a.value().array() + s.value()(0, 0);
  return t.record(std::move(out), ins(in), [&t, a, s](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(s, Matrix::Constant(1, 1, g.sum()));
  });
}

Var transpose(const Var& a) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  return t.record(a.value().transpose(), ins(in), [&t, a](const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var tanh(const Var& a) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = a.value().array().tanh();
  Matrix y = out;
  return t.record(std::move(out), ins(in), [&t, a, y = std::move(y)](const Matrix& g) {
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
  Matrix y = out;
  return t.record(std::move(out), ins(in), [&t, a, y = std::move(y)](const Matrix& g) {
    t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var leaky_relu(const Var& a, double slope) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return t.record(std::move(out), ins(in), [&t, a, slope](const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var gelu(const Var& a) {
  // tanh approximation
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = a.value().unaryExpr([](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); });
  return t.record(std::move(out), ins(in), [&t, a](const Matrix& g) {
    Matrix d = a.value().unaryExpr([](double x) {
      const double u = c * (x + k * x * x * x);
      const double th = std::tanh(u);
      return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
    });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var sum(const Var& a) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  return t.record(Matrix::Constant(1, 1, a.value().sum()), ins(in), [&t, a](const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var softmax_rows(const Var& a) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const double m = a.value().row(r).maxCoeff();
    out.row(r) = (a.value().row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Matrix y = out;
  return t.record(std::move(out), ins(in), [&t, a, y = std::move(y)](const Matrix& g) {
    Matrix gy = g.cwiseProduct(y);
    Eigen::VectorXd dots = gy.rowwise().sum();
    Matrix d = gy - (y.array().colwise() * dots.array()).matrix();
    t.accumulate(a, d);
  });
}

Var normalize_rows(const Var& a, double eps) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Eigen::VectorXd denom = a.value().rowwise().sum().array() + eps;
  Matrix out = a.value().array().colwise() / denom.array();
  Matrix y = out;
  return t.record(std::move(out), ins(in), [&t, a, y = std::move(y), denom = std::move(denom)](const Matrix& g) {
    // d out_j / d a_k = (delta_jk - out_j) / denom
    Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix d = (g.colwise() - dots).array().colwise() / denom.array();
    t.accumulate(a, d);
  });
}

Var gather_rows(const Var& a, std::span<const Index> rows) {
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw Error("gather_rows index out of range");
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return t.record(std::move(out), ins(in), [&t, a, idx = std::move(idx)](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf == nullptr) return;
    for (size_t i = 0; i < idx.size(); ++i) buf->row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

Var gather_from(std::span<const Var> sources, std::span<const std::pair<int, Index>> refs) {
  if (sources.empty()) throw Error("gather_from needs at least one source");
  Tape& t = sources.front().tape();
  const Index cols = sources.front().cols();
  for (const Var& s : sources) require(s.cols() == cols, "gather_from");
  Matrix out(static_cast<Index>(refs.size()), cols);
  for (size_t i = 0; i < refs.size(); ++i) {
    const auto [src, row] = refs[i];
    if (src < 0 || static_cast<size_t>(src) >= sources.size() || row < 0 || row >= sources[static_cast<size_t>(src)].rows())
      throw Error("gather_from reference out of range");
    out.row(static_cast<Index>(i)) = sources[static_cast<size_t>(src)].value().row(row);
  }
  std::vector<Var> srcs(sources.begin(), sources.end());
  std::vector<std::pair<int, Index>> r(refs.begin(), refs.end());
  return t.record(std::move(out), sources, [&t, srcs = std::move(srcs), r = std::move(r)](const Matrix& g) {
    std::vector<Matrix*> bufs;
    bufs.reserve(srcs.size());
    for (const Var& s : srcs) bufs.push_back(t.grad_buffer(s));
    for (size_t i = 0; i < r.size(); ++i) {
      Matrix* b = bufs[static_cast<size_t>(r[i].first)];
      if (b != nullptr) b->row(r[i].second) += g.row(static_cast<Index>(i));
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_rows of nothing");
  Tape& t = parts.front().tape();
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [&t, ps = std::move(ps)](const Matrix& g) {
    Index off = 0;
    for (const Var& p : ps) {
      t.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols of nothing");
  Tape& t = parts.front().tape();
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [&t, ps = std::move(ps)](const Matrix& g) {
    Index off = 0;
    for (const Var& p : ps) {
      t.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var slice_rows(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows");
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  return t.record(a.value().middleRows(start, count), ins(in), [&t, a, start, count](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf != nullptr) buf->middleRows(start, count) += g;
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols");
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  return t.record(a.value().middleCols(start, count), ins(in), [&t, a, start, count](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf != nullptr) buf->middleCols(start, count) += g;
  });
}

Var logsumexp_rows(const Var& a, std::span<const Index> rows) {
  if (rows.empty()) throw Error("logsumexp over zero rows");
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  const Index c = a.cols();
  Eigen::RowVectorXd m = Eigen::RowVectorXd::Constant(c, -std::numeric_limits<double>::infinity());
  for (Index r : rows) {
    if (r < 0 || r >= a.rows()) throw Error("logsumexp row out of range");
    m = m.cwiseMax(a.value().row(r));
  }
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
  for (Index r : rows) acc += (a.value().row(r) - m).array().exp().matrix();
  Matrix out = (m.array() + acc.array().log()).matrix();
  Eigen::RowVectorXd y = out.row(0);
  std::vector<Index> idx(rows.begin(), rows.end());
  return t.record(std::move(out), ins(in), [&t, a, idx = std::move(idx), y = std::move(y)](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf == nullptr) return;
    for (Index r : idx) buf->row(r) += g.row(0).cwiseProduct((a.value().row(r) - y).array().exp().matrix());
  });
}

Var mean_rows(const Var& a, std::span<const Index> rows) {
  if (rows.empty()) throw Error("mean over zero rows");
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = Matrix::Zero(1, a.cols());
  for (Index r : rows) {
    if (r < 0 || r >= a.rows()) throw Error("mean row out of range");
    out.row(0) += a.value().row(r);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  out *= inv;
  std::vector<Index> idx(rows.begin(), rows.end());
  return t.record(std::move(out), ins(in), [&t, a, idx = std::move(idx), inv](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf == nullptr) return;
    for (Index r : idx) buf->row(r) += g.row(0) * inv;
  });
}

Var mul_rows(const Var& a, const Var& weights) {
  require(weights.cols() == 1 && weights.rows() == a.rows(), "mul_rows");
  Tape& t = a.tape();
  std::array<Var, 2> in{a, weights};
  Matrix out = a.value().array().colwise() * weights.value().col(0).array();
  return t.record(std::move(out), ins(in), [&t, a, weights](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, (g.array().colwise() * weights.value().col(0).array()).matrix());
    if (t.needs_grad(weights)) t.accumulate(weights, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var segment_sum(const Var& a, std::span<const Index> segment, Index segments) {
  require(static_cast<Index>(segment.size()) == a.rows(), "segment_sum");
  Tape& t = a.tape();
  std::array<Var, 1> in{a};
  Matrix out = Matrix::Zero(segments, a.cols());
  for (size_t i = 0; i < segment.size(); ++i) {
    if (segment[i] < 0 || segment[i] >= segments) throw Error("segment id out of range");
    out.row(segment[i]) += a.value().row(static_cast<Index>(i));
  }
  std::vector<Index> seg(segment.begin(), segment.end());
  return t.record(std::move(out), ins(in), [&t, a, seg = std::move(seg)](const Matrix& g) {
    Matrix* buf = t.grad_buffer(a);
    if (buf == nullptr) return;
    for (size_t i = 0; i < seg.size(); ++i) buf->row(static_cast<Index>(i)) += g.row(seg[i]);
  });
}

Var segment_softmax(const Var& scores, std::span<const Index> segment, Index segments) {
  require(scores.cols() == 1 && static_cast<Index>(segment.size()) == scores.rows(), "segment_softmax");
  Tape& t = scores.tape();
  std::array<Var, 1> in{scores};
  const Matrix& s = scores.value();
  Eigen::VectorXd m = Eigen::VectorXd::Constant(segments, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < segment.size(); ++i) {
    if (segment[i] < 0 || segment[i] >= segments) throw Error("segment id out of range");
    m(segment[i]) = std::max(m(segment[i]), s(static_cast<Index>(i), 0));
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(segments);
  Matrix out(s.rows(), 1);
  for (size_t i = 0; i < segment.size(); ++i) {
    out(static_cast<Index>(i), 0) = std::exp(s(static_cast<Index>(i), 0) - m(segment[i]));
    z(segment[i]) += out(static_cast<Index>(i), 0);
  }
  for (size_t i = 0; i < segment.size(); ++i) out(static_cast<Index>(i), 0) /= z(segment[i]);
  Matrix y = out;
  std::vector<Index> seg(segment.begin(), segment.end());
  return t.record(std::move(out), ins(in), [&t, scores, y = std::move(y), seg = std::move(seg), segments](const Matrix& g) {
    Eigen::VectorXd dots = Eigen::VectorXd::Zero(segments);
    for (size_t i = 0; i < seg.size(); ++i) dots(seg[i]) += g(static_cast<Index>(i), 0) * y(static_cast<Index>(i), 0);
    Matrix d(y.rows(), 1);
    for (size_t i = 0; i < seg.size(); ++i) {
      const auto k = static_cast<Index>(i);
      d(k, 0) = y(k, 0) * (g(k, 0) - dots(seg[i]));
    }
    t.accumulate(scores, d);
  });
}

Var additive_scores(const Var& left, const Var& right, const Var& w) {
  require(left.cols() == right.cols() && w.rows() == left.cols() && w.cols() == 1, "additive_scores");
  Tape& t = left.tape();
  std::array<Var, 3> in{left, right, w};
  const Index P = left.rows();
  const Index B = right.rows();
  Matrix out(P, B);
  const Eigen::VectorXd wv = w.value().col(0);
  for (Index p = 0; p < P; ++p)
    for (Index i = 0; i < B; ++i)
      out(p, i) = (left.value().row(p) + right.value().row(i)).array().tanh().matrix().dot(wv.transpose());
  return t.record(std::move(out), ins(in), [&t, left, right, w, P, B](const Matrix& g) {
    const Index k = left.cols();
    Matrix gl = Matrix::Zero(P, k);
    Matrix gr = Matrix::Zero(B, k);
    Eigen::RowVectorXd gw = Eigen::RowVectorXd::Zero(k);
    const Eigen::RowVectorXd wv = w.value().col(0).transpose();
    for (Index p = 0; p < P; ++p) {
      for (Index i = 0; i < B; ++i) {
        const double gp = g(p, i);
        if (gp == 0.0) continue;
        Eigen::RowVectorXd th = (left.value().row(p) + right.value().row(i)).array().tanh();
        gw += gp * th;
        Eigen::RowVectorXd dz = gp * wv.cwiseProduct((1.0 - th.array().square()).matrix());
        gl.row(p) += dz;
        gr.row(i) += dz;
      }
    }
    t.accumulate(left, gl);
    t.accumulate(right, gr);
    t.accumulate(w, gw.transpose());
  });
}

Var bilinear_forms(const Var& zs, const Var& weight, const Var& zo, Index classes) {
  const Index d = zs.cols();
  require(zo.cols() == d && zo.rows() == zs.rows() && weight.rows() == d && weight.cols() == classes * d, "bilinear_forms");
  Tape& t = zs.tape();
  std::array<Var, 3> in{zs, weight, zo};
  Matrix y = zs.value() * weight.value();  // P x (C*d)
  const Index P = zs.rows();
  Matrix out(P, classes);
  for (Index p = 0; p < P; ++p)
    for (Index c = 0; c < classes; ++c) out(p, c) = y.row(p).segment(c * d, d).dot(zo.value().row(p));
  return t.record(std::move(out), ins(in), [&t, zs, weight, zo, classes, d, P, y = std::move(y)](const Matrix& g) {
    Matrix dy(P, classes * d);
    Matrix dzo = Matrix::Zero(P, d);
    for (Index p = 0; p < P; ++p) {
      for (Index c = 0; c < classes; ++c) {
        dy.row(p).segment(c * d, d) = g(p, c) * zo.value().row(p);
        dzo.row(p) += g(p, c) * y.row(p).segment(c * d, d);
      }
    }
    if (t.needs_grad(zs)) t.accumulate(zs, dy * weight.value().transpose());
    if (t.needs_grad(weight)) t.accumulate(weight, zs.value().transpose() * dy);
    t.accumulate(zo, dzo);
  });
}

Var grouped_outer(const Var& zs, const Var& zo, Index block) {
  const Index d = zs.cols();
  require(block > 0 && d % block == 0 && zo.cols() == d && zo.rows() == zs.rows(), "grouped_outer");
  Tape& t = zs.tape();
  std::array<Var, 2> in{zs, zo};
  const Index P = zs.rows();
  const Index groups = d / block;
  Matrix out(P, d * block);
  for (Index p = 0; p < P; ++p)
    for (Index gi = 0; gi < groups; ++gi)
      for (Index i = 0; i < block; ++i)
        for (Index j = 0; j < block; ++j)
          out(p, gi * block * block + i * block + j) = zs.value()(p, gi * block + i) * zo.value()(p, gi * block + j);
  return t.record(std::move(out), ins(in), [&t, zs, zo, block, groups, P, d](const Matrix& g) {
    Matrix gs = Matrix::Zero(P, d);
    Matrix go = Matrix::Zero(P, d);
    for (Index p = 0; p < P; ++p)
      for (Index gi = 0; gi < groups; ++gi)
        for (Index i = 0; i < block; ++i)
          for (Index j = 0; j < block; ++j) {
            const double gv = g(p, gi * block * block + i * block + j);
            gs(p, gi * block + i) += gv * zo.value()(p, gi * block + j);
            go(p, gi * block + j) += gv * zs.value()(p, gi * block + i);
          }
    t.accumulate(zs, gs);
    t.accumulate(zo, go);
  });
}

}  // namespace larson::ag

#include "hint/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace hint {

namespace {

double stable_softplus(double x) {
  // log(1 + e^x) without overflow.
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::Add: return "add";
    case Op::AddRow: return "add_row";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Softmax: return "softmax";
    case Op::LogSumExp: return "logsumexp";
    case Op::Concat: return "concat";
    case Op::Pick: return "pick";
    case Op::PickRow: return "pick_row";
    case Op::Reshape: return "reshape";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::MeanRows: return "mean_rows";
    case Op::Dot: return "dot";
  }
  return "?";
}

Tape::Var Tape::push(Node n, const char* what) {
  if (!n.val.all_finite()) throw NonFiniteError(what);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Constant;
  n.val = std::move(t);
  return push(std::move(n), "constant");
}

Tape::Var Tape::param(const std::string& name) {
  if (!params_) throw std::invalid_argument("Tape: no ParamSet bound");
  Node n;
  n.op = Op::Param;
  n.pname = name;
  n.val = params_->get(name);
  Var v = push(std::move(n), name.c_str());
  param_uses_[name].push_back(v);
  return v;
}

Tape::Var Tape::add(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  Node n;
  n.a = a; n.b = b;
  if (ta.same_shape(tb)) {
    n.op = Op::Add;
    n.val = ta;
    for (std::size_t i = 0; i < ta.size(); ++i) n.val.data[i] += tb.data[i];
  } else if (ta.rank() == 2 && tb.rank() == 1 && ta.cols() == tb.size()) {
    n.op = Op::AddRow;
    n.val = ta;
    for (std::size_t r = 0; r < ta.rows(); ++r)
      for (std::size_t c = 0; c < ta.cols(); ++c)
        n.val.at(r, c) += tb.data[c];
  } else {
    throw ShapeError("add", shape_string(ta) + " vs " + shape_string(tb));
  }
  return push(std::move(n), "add");
}

Tape::Var Tape::sub(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (!ta.same_shape(tb))
    throw ShapeError("sub", shape_string(ta) + " vs " + shape_string(tb));
  Node n;
  n.op = Op::Sub;
  n.a = a; n.b = b;
  n.val = ta;
  for (std::size_t i = 0; i < ta.size(); ++i) n.val.data[i] -= tb.data[i];
  return push(std::move(n), "sub");
}

Tape::Var Tape::mul(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (!ta.same_shape(tb))
    throw ShapeError("mul", shape_string(ta) + " vs " + shape_string(tb));
  Node n;
  n.op = Op::Mul;
  n.a = a; n.b = b;
  n.val = ta;
  for (std::size_t i = 0; i < ta.size(); ++i) n.val.data[i] *= tb.data[i];
  return push(std::move(n), "mul");
}

Tape::Var Tape::scale(Var a, double s) {
  check(a);
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.aux = s;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v *= s;
  return push(std::move(n), "scale");
}

Tape::Var Tape::add_scalar(Var a, double s) {
  check(a);
  Node n;
  n.op = Op::AddScalar;
  n.a = a;
  n.aux = s;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v += s;
  return push(std::move(n), "add_scalar");
}

Tape::Var Tape::matmul(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (ta.rank() != 2)
    throw ShapeError("matmul", "lhs must be rank 2, got " + shape_string(ta));
  const std::size_t nrows = ta.rows(), k = ta.cols();
  Node n;
  n.op = Op::MatMul;
  n.a = a; n.b = b;
  if (tb.rank() == 1) {
    if (tb.size() != k)
      throw ShapeError("matmul", shape_string(ta) + " x " + shape_string(tb));
    n.val = Tensor::zeros({nrows});
    for (std::size_t r = 0; r < nrows; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += ta.at(r, j) * tb.data[j];
      n.val.data[r] = acc;
    }
  } else {
    if (tb.rows() != k)
      throw ShapeError("matmul", shape_string(ta) + " x " + shape_string(tb));
    const std::size_t m = tb.cols();
    n.val = Tensor::zeros({nrows, m});
    for (std::size_t r = 0; r < nrows; ++r)
      for (std::size_t j = 0; j < k; ++j) {
        const double av = ta.at(r, j);
        if (av == 0.0) continue;
        for (std::size_t c = 0; c < m; ++c)
          n.val.at(r, c) += av * tb.at(j, c);
      }
  }
  return push(std::move(n), "matmul");
}

Tape::Var Tape::transpose(Var a) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2)
    throw ShapeError("transpose", "rank 2 required, got " + shape_string(ta));
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.val = Tensor::zeros({ta.cols(), ta.rows()});
  for (std::size_t r = 0; r < ta.rows(); ++r)
    for (std::size_t c = 0; c < ta.cols(); ++c)
      n.val.at(c, r) = ta.at(r, c);
  return push(std::move(n), "transpose");
}

#define HINT_UNARY(NAME, OP, EXPR)                     \
  Tape::Var Tape::NAME(Var a) {                        \
    check(a);                                          \
    Node n;                                            \
    n.op = OP;                                         \
    n.a = a;                                           \
    n.val = nodes_[a].val;                             \
    for (double& x : n.val.data) x = (EXPR);           \
    return push(std::move(n), op_name(OP));            \
  }

HINT_UNARY(tanh_, Op::Tanh, std::tanh(x))
HINT_UNARY(relu, Op::Relu, x > 0.0 ? x : 0.0)
HINT_UNARY(sigmoid, Op::Sigmoid, 1.0 / (1.0 + std::exp(-x)))
HINT_UNARY(softplus, Op::Softplus, stable_softplus(x))
HINT_UNARY(log_, Op::Log, std::log(x))
HINT_UNARY(exp_, Op::Exp, std::exp(x))

#undef HINT_UNARY

Tape::Var Tape::softmax(Var a) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  Node n;
  n.op = Op::Softmax;
  n.a = a;
  n.val = ta;
  const std::size_t cols = ta.rank() == 2 ? ta.cols() : ta.size();
  const std::size_t rows = n.val.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = n.val.data.data() + r * cols;
    double mx = row[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= z;
  }
  return push(std::move(n), "softmax");
}

Tape::Var Tape::logsumexp(Var a) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  double mx = ta.data[0];
  for (double v : ta.data) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : ta.data) z += std::exp(v - mx);
  Node n;
  n.op = Op::LogSumExp;
  n.a = a;
  n.val = Tensor::scalar(mx + std::log(z));
  return push(std::move(n), "logsumexp");
}

Tape::Var Tape::concat(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  Node n;
  n.op = Op::Concat;
  n.a = a; n.b = b;
  n.index = ta.size();
  n.val = Tensor::zeros({ta.size() + tb.size()});
  std::copy(ta.data.begin(), ta.data.end(), n.val.data.begin());
  std::copy(tb.data.begin(), tb.data.end(), n.val.data.begin() + ta.size());
  return push(std::move(n), "concat");
}

Tape::Var Tape::pick(Var a, std::size_t index) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  if (index >= ta.size())
    throw ShapeError("pick", "index " + std::to_string(index) +
                                 " out of range for " + shape_string(ta));
  Node n;
  n.op = Op::Pick;
  n.a = a;
  n.index = index;
  n.val = Tensor::scalar(ta.data[index]);
  return push(std::move(n), "pick");
}

Tape::Var Tape::pick_row(Var a, std::size_t row) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2 || row >= ta.rows())
    throw ShapeError("pick_row", "row " + std::to_string(row) + " of " +
                                     shape_string(ta));
  Node n;
  n.op = Op::PickRow;
  n.a = a;
  n.index = row;
  n.val = Tensor::zeros({ta.cols()});
  for (std::size_t c = 0; c < ta.cols(); ++c) n.val.data[c] = ta.at(row, c);
  return push(std::move(n), "pick_row");
}

Tape::Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  if (Tensor::count(shape) != ta.size())
    throw ShapeError("reshape", "cannot reshape " + shape_string(ta));
  Node n;
  n.op = Op::Reshape;
  n.a = a;
  n.val = ta;
  n.val.shape = std::move(shape);
  return push(std::move(n), "reshape");
}

Tape::Var Tape::sum(Var a) {
  check(a);
  double acc = 0.0;
  for (double v : nodes_[a].val.data) acc += v;
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.val = Tensor::scalar(acc);
  return push(std::move(n), "sum");
}

Tape::Var Tape::mean(Var a) {
  check(a);
  double acc = 0.0;
  for (double v : nodes_[a].val.data) acc += v;
  Node n;
  n.op = Op::Mean;
  n.a = a;
  n.val = Tensor::scalar(acc / static_cast<double>(nodes_[a].val.size()));
  return push(std::move(n), "mean");
}

Tape::Var Tape::mean_rows(Var a) {
  check(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2)
    throw ShapeError("mean_rows", "rank 2 required, got " + shape_string(ta));
  Node n;
  n.op = Op::MeanRows;
  n.a = a;
  n.val = Tensor::zeros({ta.cols()});
  for (std::size_t r = 0; r < ta.rows(); ++r)
    for (std::size_t c = 0; c < ta.cols(); ++c)
      n.val.data[c] += ta.at(r, c);
  for (double& v : n.val.data) v /= static_cast<double>(ta.rows());
  return push(std::move(n), "mean_rows");
}

Tape::Var Tape::dot(Var a, Var b) {
  check(a); check(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (ta.size() != tb.size())
    throw ShapeError("dot", shape_string(ta) + " vs " + shape_string(tb));
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i)
    acc += ta.data[i] * tb.data[i];
  Node n;
  n.op = Op::Dot;
  n.a = a; n.b = b;
  n.val = Tensor::scalar(acc);
  return push(std::move(n), "dot");
}

Tape::Var Tape::affine(const std::string& prefix, Var x) {
  Var w = param(prefix + ".w");
  Var b = param(prefix + ".b");
  return add(matmul(w, x), b);
}

Tape::Var Tape::attention_weights(Var q, Var keys) {
  const double d = static_cast<double>(value(q).size());
  Var scores = scale(matmul(keys, q), 1.0 / std::sqrt(d));
  return softmax(scores);
}

Tape::Var Tape::attention(Var q, Var keys, Var values) {
  Var alpha = attention_weights(q, keys);
  return matmul(transpose(values), alpha);
}

Tape::Var Tape::gru_cell(const std::string& prefix, Var x, Var h) {
  Var z = sigmoid(add(add(matmul(param(prefix + ".wz"), x),
                          matmul(param(prefix + ".uz"), h)),
                      param(prefix + ".bz")));
  Var r = sigmoid(add(add(matmul(param(prefix + ".wr"), x),
                          matmul(param(prefix + ".ur"), h)),
                      param(prefix + ".br")));
  Var hc = tanh_(add(add(matmul(param(prefix + ".wh"), x),
                         matmul(param(prefix + ".uh"), mul(r, h))),
                     param(prefix + ".bh")));
  // h' = (1-z)*h + z*hc
  Var one_minus_z = add_scalar(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, h), mul(z, hc));
}

Tape::Var Tape::log_prob(Var logits, std::size_t index) {
  return sub(pick(logits, index), logsumexp(logits));
}

Tape::Var Tape::entropy(Var logits) {
  Var p = softmax(logits);
  return sub(logsumexp(logits), dot(p, logits));
}

Tape::Var Tape::bernoulli_log_prob(Var logit_scalar, bool bit) {
  // log sigmoid(z) = -softplus(-z); log(1 - sigmoid(z)) = -softplus(z)
  Var z = bit ? scale(logit_scalar, -1.0) : logit_scalar;
  return scale(softplus(z), -1.0);
}

double Tape::scalar(Var v) const {
  check(v);
  const Tensor& t = nodes_[v].val;
  if (t.size() != 1)
    throw ShapeError("scalar", "not a scalar: " + shape_string(t));
  return t.data[0];
}

void Tape::backward(Var output) {
  check(output);
  if (nodes_[output].val.size() != 1)
    throw ShapeError("backward", "output must be scalar");
  for (auto& n : nodes_) n.grad = Tensor();  // lazily allocated
  auto g = [&](Var v) -> Tensor& {
    Node& n = nodes_[v];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(n.val.shape);
    return n.grad;
  };
  g(output).data[0] = 1.0;

  for (Var v = output; v >= 0; --v) {
    Node& n = nodes_[v];
    if (n.grad.data.empty()) continue;  // not on the path to the output
    const Tensor& go = n.grad;
    switch (n.op) {
      case Op::Constant:
      case Op::Param:
        break;
      case Op::Add: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.data[i] += go.data[i];
          gb.data[i] += go.data[i];
        }
        break;
      }
      case Op::AddRow: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        const std::size_t cols = n.val.cols();
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.data[i] += go.data[i];
          gb.data[i % cols] += go.data[i];
        }
        break;
      }
      case Op::Sub: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.data[i] += go.data[i];
          gb.data[i] -= go.data[i];
        }
        break;
      }
      case Op::Mul: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        const Tensor& va = nodes_[n.a].val;
        const Tensor& vb = nodes_[n.b].val;
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.data[i] += go.data[i] * vb.data[i];
          gb.data[i] += go.data[i] * va.data[i];
        }
        break;
      }
      case Op::Scale: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] * n.aux;
        break;
      }
      case Op::AddScalar: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i) ga.data[i] += go.data[i];
        break;
      }
      case Op::MatMul: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        const Tensor& va = nodes_[n.a].val;
        const Tensor& vb = nodes_[n.b].val;
        const std::size_t nr = va.rows(), k = va.cols();
        if (vb.rank() == 1) {
          for (std::size_t r = 0; r < nr; ++r) {
            const double gr = go.data[r];
            if (gr == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
              ga.at(r, j) += gr * vb.data[j];
              gb.data[j] += gr * va.at(r, j);
            }
          }
        } else {
          const std::size_t m = vb.cols();
          for (std::size_t r = 0; r < nr; ++r)
            for (std::size_t c = 0; c < m; ++c) {
              const double gr = go.at(r, c);
              if (gr == 0.0) continue;
              for (std::size_t j = 0; j < k; ++j) {
                ga.at(r, j) += gr * vb.at(j, c);
                gb.at(j, c) += gr * va.at(r, j);
              }
            }
        }
        break;
      }
      case Op::Transpose: {
        Tensor& ga = g(n.a);
        for (std::size_t r = 0; r < n.val.rows(); ++r)
          for (std::size_t c = 0; c < n.val.cols(); ++c)
            ga.at(c, r) += go.at(r, c);
        break;
      }
      case Op::Tanh: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] * (1.0 - n.val.data[i] * n.val.data[i]);
        break;
      }
      case Op::Relu: {
        Tensor& ga = g(n.a);
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < go.size(); ++i)
          if (va.data[i] > 0.0) ga.data[i] += go.data[i];
        break;
      }
      case Op::Sigmoid: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] * n.val.data[i] * (1.0 - n.val.data[i]);
        break;
      }
      case Op::Softplus: {
        Tensor& ga = g(n.a);
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] / (1.0 + std::exp(-va.data[i]));
        break;
      }
      case Op::Log: {
        Tensor& ga = g(n.a);
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] / va.data[i];
        break;
      }
      case Op::Exp: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += go.data[i] * n.val.data[i];
        break;
      }
      case Op::Softmax: {
        Tensor& ga = g(n.a);
        const std::size_t cols =
            n.val.rank() == 2 ? n.val.cols() : n.val.size();
        const std::size_t rows = n.val.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = n.val.data.data() + r * cols;
          const double* gy = go.data.data() + r * cols;
          double inner = 0.0;
          for (std::size_t c = 0; c < cols; ++c) inner += gy[c] * y[c];
          for (std::size_t c = 0; c < cols; ++c)
            ga.data[r * cols + c] += (gy[c] - inner) * y[c];
        }
        break;
      }
      case Op::LogSumExp: {
        Tensor& ga = g(n.a);
        const Tensor& va = nodes_[n.a].val;
        const double lse = n.val.data[0];
        for (std::size_t i = 0; i < va.size(); ++i)
          ga.data[i] += go.data[0] * std::exp(va.data[i] - lse);
        break;
      }
      case Op::Concat: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        for (std::size_t i = 0; i < n.index; ++i) ga.data[i] += go.data[i];
        for (std::size_t i = n.index; i < go.size(); ++i)
          gb.data[i - n.index] += go.data[i];
        break;
      }
      case Op::Pick: {
        g(n.a).data[n.index] += go.data[0];
        break;
      }
      case Op::PickRow: {
        Tensor& ga = g(n.a);
        const std::size_t cols = nodes_[n.a].val.cols();
        for (std::size_t c = 0; c < cols; ++c)
          ga.data[n.index * cols + c] += go.data[c];
        break;
      }
      case Op::Reshape: {
        Tensor& ga = g(n.a);
        for (std::size_t i = 0; i < go.size(); ++i) ga.data[i] += go.data[i];
        break;
      }
      case Op::Sum: {
        Tensor& ga = g(n.a);
        for (double& v : ga.data) v += go.data[0];
        break;
      }
      case Op::Mean: {
        Tensor& ga = g(n.a);
        const double s = go.data[0] / static_cast<double>(ga.size());
        for (double& v : ga.data) v += s;
        break;
      }
      case Op::MeanRows: {
        Tensor& ga = g(n.a);
        const Tensor& va = nodes_[n.a].val;
        const double inv = 1.0 / static_cast<double>(va.rows());
        for (std::size_t r = 0; r < va.rows(); ++r)
          for (std::size_t c = 0; c < va.cols(); ++c)
            ga.at(r, c) += go.data[c] * inv;
        break;
      }
      case Op::Dot: {
        Tensor& ga = g(n.a);
        Tensor& gb = g(n.b);
        const Tensor& va = nodes_[n.a].val;
        const Tensor& vb = nodes_[n.b].val;
        for (std::size_t i = 0; i < va.size(); ++i) {
          ga.data[i] += go.data[0] * vb.data[i];
          gb.data[i] += go.data[0] * va.data[i];
        }
        break;
      }
    }
  }
}

std::map<std::string, Tensor> Tape::param_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, uses] : param_uses_) {
    Tensor acc = Tensor::zeros(nodes_[uses.front()].val.shape);
    for (Var v : uses) {
      const Tensor& gv = nodes_[v].grad;
      if (gv.data.empty()) continue;
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += gv.data[i];
    }
    out.emplace(name, std::move(acc));
  }
  return out;
}

void adam_step(ParamSet& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Tensor& gt = it->second;
    if (!gt.same_shape(p))
      throw std::invalid_argument("adam_step: grad shape mismatch for " + name);
    if (!gt.all_finite()) {
      ++state.skipped;
      continue;
    }
    Tensor& m = state.m.try_emplace(name, Tensor::zeros(p.shape)).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor::zeros(p.shape)).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gt.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double grad_check(const std::function<Tape::Var(Tape&)>& build,
                  ParamSet& params, double h) {
  if (h <= 0.0 || h > 1e-2)
    throw std::invalid_argument("grad_check: h must be in (0, 1e-2]");
  Tape tape(&params);
  Tape::Var out = build(tape);
  tape.backward(out);
  auto grads = tape.param_grads();

  double max_rel = 0.0;
  for (const std::string& name : params.names()) {
    Tensor& p = params.get(name);
    const Tensor& g = grads.count(name) ? grads.at(name)
                                        : Tensor::zeros(p.shape);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.data[i];
      p.data[i] = orig + h;
      Tape tp(&params);
      const double fp = tp.scalar(build(tp));
      p.data[i] = orig - h;
      Tape tm(&params);
      const double fm = tm.scalar(build(tm));
      p.data[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double denom =
          std::max({std::fabs(g.data[i]), std::fabs(fd), 1e-8});
      max_rel = std::max(max_rel, std::fabs(g.data[i] - fd) / denom);
    }
  }
  return max_rel;
}

}  // namespace hint

#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hint/paramset.hpp"
#include "hint/tensor.hpp"

namespace hint {

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& node)
      : std::runtime_error("non-finite value produced by node: " + node) {}
};

struct ShapeError : std::invalid_argument {
  ShapeError(const std::string& node, const std::string& detail)
      : std::invalid_argument("shape mismatch at node " + node + ": " +
                              detail) {}
};

// Reverse-mode tape. Values are computed eagerly as the graph is built;
// backward() fills per-node gradients in one reverse sweep.
//
// Rank-1 tensors are treated as single rows by the row-wise ops (softmax,
// logsumexp). Parameters referenced through param() are tracked per name and
// their gradients are collected by param_grads().
class Tape {
 public:
  using Var = int;

  explicit Tape(const ParamSet* params = nullptr) : params_(params) {}

  Var constant(Tensor t);
  Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }
  Var param(const std::string& name);

  Var add(Var a, Var b);            // same shape, or matrix + row vector
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);            // elementwise
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var matmul(Var a, Var b);         // [n,k]x[k,m] -> [n,m]; [n,k]x[k] -> [n]
  Var transpose(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var log_(Var a);
  Var exp_(Var a);
  Var softmax(Var a);               // row-wise
  Var logsumexp(Var a);             // vector -> scalar
  Var concat(Var a, Var b);         // flattened
  Var pick(Var a, std::size_t index);
  Var pick_row(Var a, std::size_t row);
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var sum(Var a);
  Var mean(Var a);
  Var mean_rows(Var a);             // [n,m] -> [m]
  Var dot(Var a, Var b);
  Var square(Var a) { return mul(a, a); }

  // Composite blocks built from the primitives above.
  Var affine(const std::string& prefix, Var x);  // uses prefix.w, prefix.b
  // q:[d], keys:[n,d], values:[n,m] -> [m]; scaled dot-product attention.
  Var attention(Var q, Var keys, Var values);
  Var attention_weights(Var q, Var keys);        // softmax scores, [n]
  // Gated recurrent cell; uses prefix.{wz,uz,bz,wr,ur,br,wh,uh,bh}.
  Var gru_cell(const std::string& prefix, Var x, Var h);

  // log softmax(logits)[index], computed as logits[i] - logsumexp(logits).
  Var log_prob(Var logits, std::size_t index);
  // Entropy of the categorical given by logits.
  Var entropy(Var logits);
  // log Bernoulli(bit | sigmoid(logit)).
  Var bernoulli_log_prob(Var logit_scalar, bool bit);

  const Tensor& value(Var v) const { return nodes_[v].val; }
  double scalar(Var v) const;

  void backward(Var output);        // output must be scalar
  const Tensor& grad(Var v) const { return nodes_[v].grad; }
  std::map<std::string, Tensor> param_grads() const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    Constant, Param, Add, AddRow, Sub, Mul, Scale, AddScalar, MatMul,
    Transpose, Tanh, Relu, Sigmoid, Softplus, Log, Exp, Softmax, LogSumExp,
    Concat, Pick, PickRow, Reshape, Sum, Mean, MeanRows, Dot
  };

  struct Node {
    Op op;
    Var a = -1;
    Var b = -1;
    double aux = 0.0;
    std::size_t index = 0;
    Tensor val;
    Tensor grad;
    std::string pname;
  };

  Var push(Node n, const char* what);
  void check(Var v) const {
    if (v < 0 || v >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument("Tape: invalid var");
  }
  static const char* op_name(Op op);

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::map<std::string, std::vector<Var>> param_uses_;
};

// Single Adam accumulator pair per parameter entry.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t skipped = 0;  // entries skipped due to non-finite gradients
};

// Standard Adam update. Entries with non-finite gradients are skipped and
// counted in state.skipped.
void adam_step(ParamSet& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, double lr);

// Max relative error between analytic gradients and central finite
// differences for a scalar-valued graph builder.
double grad_check(const std::function<Tape::Var(Tape&)>& build,
                  ParamSet& params, double h);

}  // namespace hint

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "linkrec/matrix.hpp"

namespace linkrec {

// Leaf parameter name -> gradient of the loss, same shape as the parameter.
using GradientMap = std::map<std::string, Mat>;
using ParamMap = std::map<std::string, Mat>;

// Append-only record of matrix operations for one forward pass, replayed in
// reverse for gradients. Single-use: one backward() per tape, first-order only.
class Tape {
 public:
  using NodeRef = int;

  // Trainable leaf; names must be unique within a tape.
  NodeRef leaf(const std::string& name, Mat value);
  // Input that needs no gradient.
  NodeRef constant(Mat value);

  NodeRef matmul(NodeRef a, NodeRef b);
  NodeRef transpose(NodeRef a);
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef sub(NodeRef a, NodeRef b);
  NodeRef scalar_mul(double s, NodeRef a);
  NodeRef sigmoid(NodeRef a);
  NodeRef relu(NodeRef a);
  // Inverted dropout: zero with probability rate, scale survivors by
  // 1/(1-rate). Identity in inference mode.
  NodeRef dropout(NodeRef a, double rate, uint64_t seed, bool training);
  NodeRef concat_columns(std::span<const NodeRef> parts);
  // Row-major reinterpretation; rows*cols must match the operand.
  NodeRef reshape(NodeRef a, Eigen::Index rows, Eigen::Index cols);
  // Broadcast add of a 1 x c row vector to every row of x.
  NodeRef add_row(NodeRef x, NodeRef row);
  // Inverse of a symmetric positive definite matrix via Cholesky; the input
  // is symmetrized as (M + M^T)/2 before factorization.
  NodeRef spd_inverse(NodeRef m);
  // Mean binary cross-entropy against fixed 0/1 labels, probabilities
  // clamped to [eps, 1-eps] with eps = 1e-12. Produces a 1x1 node.
  NodeRef bce_mean(NodeRef probs, const Mat& labels);
  // Sum of all entries as a 1x1 node.
  NodeRef sum(NodeRef a);

  const Mat& value(NodeRef node) const;
  size_t size() const { return nodes_.size(); }

  // Reverse accumulation from a scalar loss node. Gradients of unreached
  // leaves are zero-filled so the map always covers every leaf.
  GradientMap backward(NodeRef loss);

  // JSON description of the recorded graph (op kinds, shapes, operands).
  std::string debug_dump() const;

 private:
  enum class Op : uint8_t {
    kLeaf,
    kConstant,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kScalarMul,
    kSigmoid,
    kRelu,
    kDropout,
    kConcat,
    kReshape,
    kAddRow,
    kSpdInverse,
    kBceMean,
    kSum,
  };

  struct Node {
    Op op;
    NodeRef a = -1;
    NodeRef b = -1;
    std::vector<NodeRef> parts;
    Mat value;
    Mat aux;   // bce: clamped probabilities
    Mat aux2;  // bce: labels
    double scalar = 0.0;    // scalar_mul factor; dropout rate
    uint64_t seed = 0;      // dropout mask stream
    bool flag = false;      // dropout training mode
    std::string name;
  };

  NodeRef push(Node node);
  const Node& at(NodeRef ref) const;

  // Deque keeps value() references stable while further ops are recorded.
  std::deque<Node> nodes_;
  std::map<std::string, NodeRef> leaves_;
  bool consumed_ = false;
};

// Central-difference check of an analytic gradient map against a scalar
// function of the parameters. Returns the max over entries of
// |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
double finite_diff_check(const std::function<double(const ParamMap&)>& f,
                         const ParamMap& params, const GradientMap& analytic,
                         double step);

}  // namespace linkrec

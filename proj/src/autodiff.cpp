#include "linkrec/autodiff.hpp"

#include <Eigen/Cholesky>
#include <sstream>
#include <stdexcept>

#include "linkrec/error.hpp"
#include "linkrec/rng.hpp"

namespace linkrec {

namespace {

constexpr double kBceEps = 1e-12;

void check_shapes_equal(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

const char* op_name(int op) {
  static const char* names[] = {
      "leaf",   "constant", "matmul",  "transpose", "add",         "sub",
      "smul",   "sigmoid",  "relu",    "dropout",   "concat",      "reshape",
      "addrow", "spdinv",   "bcemean", "sum"};
  return names[op];
}

}  // namespace

Tape::NodeRef Tape::push(Node node) {
  require_finite(node.value, op_name(static_cast<int>(node.op)));
  nodes_.push_back(std::move(node));
  return static_cast<NodeRef>(nodes_.size() - 1);
}

const Tape::Node& Tape::at(NodeRef ref) const {
  if (ref < 0 || static_cast<size_t>(ref) >= nodes_.size())
    throw std::invalid_argument("bad tape node reference");
  return nodes_[static_cast<size_t>(ref)];
}

Tape::NodeRef Tape::leaf(const std::string& name, Mat value) {
  if (leaves_.count(name))
    throw std::invalid_argument("duplicate leaf name: " + name);
  Node n{Op::kLeaf};
  n.value = std::move(value);
  n.name = name;
  const NodeRef ref = push(std::move(n));
  leaves_.emplace(name, ref);
  return ref;
}

Tape::NodeRef Tape::constant(Mat value) {
  Node n{Op::kConstant};
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeRef Tape::matmul(NodeRef a, NodeRef b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  if (va.cols() != vb.rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  Node n{Op::kMatmul, a, b};
  n.value.noalias() = va * vb;
  return push(std::move(n));
}

Tape::NodeRef Tape::transpose(NodeRef a) {
  Node n{Op::kTranspose, a};
  n.value = at(a).value.transpose();
  return push(std::move(n));
}

Tape::NodeRef Tape::add(NodeRef a, NodeRef b) {
  check_shapes_equal(at(a).value, at(b).value, "add");
  Node n{Op::kAdd, a, b};
  n.value = at(a).value + at(b).value;
  return push(std::move(n));
}

Tape::NodeRef Tape::sub(NodeRef a, NodeRef b) {
  check_shapes_equal(at(a).value, at(b).value, "sub");
  Node n{Op::kSub, a, b};
  n.value = at(a).value - at(b).value;
  return push(std::move(n));
}

Tape::NodeRef Tape::scalar_mul(double s, NodeRef a) {
  Node n{Op::kScalarMul, a};
  n.scalar = s;
  n.value = s * at(a).value;
  return push(std::move(n));
}

Tape::NodeRef Tape::sigmoid(NodeRef a) {
  Node n{Op::kSigmoid, a};
  n.value = at(a).value.unaryExpr(
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

Tape::NodeRef Tape::relu(NodeRef a) {
  Node n{Op::kRelu, a};
  n.value = at(a).value.cwiseMax(0.0);
  return push(std::move(n));
}

namespace {

// Counter-based inverted-dropout mask: entry k keeps (scaled) iff the
// canonical double from mix64(seed + k) clears the rate. Recomputed in the
// backward pass instead of storing an n x m mask.
void apply_dropout_mask(const double* src, double* dst, Eigen::Index count,
                        uint64_t seed, double rate) {
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index k = 0; k < count; ++k) {
    const double u =
        static_cast<double>(mix64(seed + static_cast<uint64_t>(k)) >> 11) *
        0x1.0p-53;
    dst[k] = u >= rate ? src[k] * scale : 0.0;
  }
}

}  // namespace

Tape::NodeRef Tape::dropout(NodeRef a, double rate, uint64_t seed,
                            bool training) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  Node n{Op::kDropout, a};
  n.scalar = rate;
  n.seed = seed;
  n.flag = training;
  if (!training) {
    n.value = at(a).value;  // exact identity in inference mode
    return push(std::move(n));
  }
  const Mat& x = at(a).value;
  n.value.resize(x.rows(), x.cols());
  apply_dropout_mask(x.data(), n.value.data(), x.size(), seed, rate);
  return push(std::move(n));
}

Tape::NodeRef Tape::concat_columns(std::span<const NodeRef> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  const Eigen::Index rows = at(parts[0]).value.rows();
  Eigen::Index cols = 0;
  for (NodeRef p : parts) {
    if (at(p).value.rows() != rows)
      throw std::invalid_argument("concat: row-count mismatch");
    cols += at(p).value.cols();
  }
  Node n{Op::kConcat};
  n.parts.assign(parts.begin(), parts.end());
  n.value.resize(rows, cols);
  Eigen::Index off = 0;
  for (NodeRef p : parts) {
    const Mat& v = at(p).value;
    n.value.middleCols(off, v.cols()) = v;
    off += v.cols();
  }
  return push(std::move(n));
}

Tape::NodeRef Tape::reshape(NodeRef a, Eigen::Index rows, Eigen::Index cols) {
  const Mat& v = at(a).value;
  if (rows * cols != v.size())
    throw std::invalid_argument("reshape: element count differs");
  Node n{Op::kReshape, a};
  n.value = Eigen::Map<const Mat>(v.data(), rows, cols);
  return push(std::move(n));
}

Tape::NodeRef Tape::add_row(NodeRef x, NodeRef row) {
  const Mat& vx = at(x).value;
  const Mat& vr = at(row).value;
  if (vr.rows() != 1 || vr.cols() != vx.cols())
    throw std::invalid_argument("add_row: expected a 1 x cols row vector");
  Node n{Op::kAddRow, x, row};
  n.value = vx + vr.replicate(vx.rows(), 1);
  return push(std::move(n));
}

Tape::NodeRef Tape::spd_inverse(NodeRef m) {
  const Mat& v = at(m).value;
  if (v.rows() != v.cols())
    throw std::invalid_argument("spd_inverse: matrix not square");
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  const double asym = (v - v.transpose().eval()).cwiseAbs().maxCoeff();
  if (asym > 1e-3 * scale)
    throw std::invalid_argument("spd_inverse: input is not symmetric");
  Mat sym = symmetrized(v);
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() != Eigen::Success)
    throw NumericError("spd_inverse: Cholesky failed, input not positive definite");
  Node n{Op::kSpdInverse, m};
  Mat inv = llt.solve(Mat::Identity(v.rows(), v.cols()));
  n.value = symmetrized(inv);
  return push(std::move(n));
}

Tape::NodeRef Tape::bce_mean(NodeRef probs, const Mat& labels) {
  const Mat& o = at(probs).value;
  check_shapes_equal(o, labels, "bce_mean");
  if (((labels.array() != 0.0) && (labels.array() != 1.0)).any())
    throw std::invalid_argument("bce_mean: labels must be 0 or 1");
  Node n{Op::kBceMean, probs};
  n.aux = o.cwiseMax(kBceEps).cwiseMin(1.0 - kBceEps);
  n.aux2 = labels;
  const double total =
      (n.aux2.array() * n.aux.array().log() +
       (1.0 - n.aux2.array()) * (1.0 - n.aux.array()).log())
          .sum();
  n.value = Mat::Constant(1, 1, -total / static_cast<double>(o.size()));
  return push(std::move(n));
}

Tape::NodeRef Tape::sum(NodeRef a) {
  Node n{Op::kSum, a};
  n.value = Mat::Constant(1, 1, at(a).value.sum());
  return push(std::move(n));
}

const Mat& Tape::value(NodeRef node) const { return at(node).value; }

GradientMap Tape::backward(NodeRef loss) {
  if (nodes_.empty()) throw std::invalid_argument("backward: empty tape");
  if (consumed_) throw std::invalid_argument("backward: tape already consumed");
  const Node& top = at(loss);
  if (top.value.rows() != 1 || top.value.cols() != 1)
    throw std::invalid_argument("backward: loss node is not scalar");
  consumed_ = true;

  std::vector<Mat> grad(nodes_.size());
  auto accumulate = [&](NodeRef ref, const Mat& g) {
    Mat& slot = grad[static_cast<size_t>(ref)];
    if (slot.size() == 0)
      slot = g;
    else
      slot += g;
  };

  grad[static_cast<size_t>(loss)] = Mat::Ones(1, 1);

  for (NodeRef i = loss; i >= 0; --i) {
    Mat& g = grad[static_cast<size_t>(i)];
    if (g.size() == 0) continue;  // node does not feed the loss
    const Node& node = nodes_[static_cast<size_t>(i)];
    switch (node.op) {
      case Op::kLeaf:
      case Op::kConstant:
        continue;  // keep leaf gradients; constants never need them
      case Op::kMatmul:
        accumulate(node.a, g * at(node.b).value.transpose());
        accumulate(node.b, at(node.a).value.transpose() * g);
        break;
      case Op::kTranspose:
        accumulate(node.a, g.transpose());
        break;
      case Op::kAdd:
        accumulate(node.a, g);
        accumulate(node.b, g);
        break;
      case Op::kSub:
        accumulate(node.a, g);
        accumulate(node.b, -g);
        break;
      case Op::kScalarMul:
        accumulate(node.a, node.scalar * g);
        break;
      case Op::kSigmoid: {
        const Mat& y = node.value;
        accumulate(node.a,
                   (g.array() * y.array() * (1.0 - y.array())).matrix());
        break;
      }
      case Op::kRelu: {
        const Mat& x = at(node.a).value;
        accumulate(node.a,
                   (g.array() * (x.array() > 0.0).cast<double>()).matrix());
        break;
      }
      case Op::kDropout:
        if (!node.flag) {
          accumulate(node.a, g);  // inference mode
        } else {
          Mat masked(g.rows(), g.cols());
          apply_dropout_mask(g.data(), masked.data(), g.size(), node.seed,
                             node.scalar);
          accumulate(node.a, masked);
        }
        break;
      case Op::kConcat: {
        Eigen::Index off = 0;
        for (NodeRef p : node.parts) {
          const Eigen::Index w = at(p).value.cols();
          accumulate(p, g.middleCols(off, w));
          off += w;
        }
        break;
      }
      case Op::kReshape: {
        const Mat& src = at(node.a).value;
        accumulate(node.a,
                   Eigen::Map<const Mat>(g.data(), src.rows(), src.cols()));
        break;
      }
      case Op::kAddRow:
        accumulate(node.a, g);
        accumulate(node.b, g.colwise().sum());
        break;
      case Op::kSpdInverse: {
        // d inv(sym(M)) pulled back through the symmetrization:
        // grad_M = -inv * (g + g^T)/2 * inv, with inv symmetric.
        const Mat& inv = node.value;
        accumulate(node.a, Mat(-inv * symmetrized(g) * inv));
        break;
      }
      case Op::kBceMean: {
        const double gs = g(0, 0) / static_cast<double>(node.aux.size());
        const Mat& c = node.aux;
        const Mat& y = node.aux2;
        accumulate(node.a, (gs * (c.array() - y.array()) /
                            (c.array() * (1.0 - c.array())))
                               .matrix());
        break;
      }
      case Op::kSum:
        accumulate(node.a,
                   Mat::Constant(at(node.a).value.rows(),
                                 at(node.a).value.cols(), g(0, 0)));
        break;
    }
    g.resize(0, 0);  // free intermediate gradients as soon as consumed
  }

  GradientMap out;
  for (const auto& [name, ref] : leaves_) {
    Mat& g = grad[static_cast<size_t>(ref)];
    if (g.size() == 0)
      out.emplace(name, Mat::Zero(at(ref).value.rows(), at(ref).value.cols()));
    else
      out.emplace(name, std::move(g));
  }
  return out;
}

std::string Tape::debug_dump() const {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (i) out << ",";
    out << "{\"id\":" << i << ",\"op\":\"" << op_name(static_cast<int>(n.op))
        << "\",\"rows\":" << n.value.rows() << ",\"cols\":" << n.value.cols();
    if (!n.name.empty()) out << ",\"name\":\"" << n.name << "\"";
    out << ",\"operands\":[";
    bool first = true;
    auto emit = [&](NodeRef r) {
      if (r < 0) return;
      if (!first) out << ",";
      out << r;
      first = false;
    };
    emit(n.a);
    emit(n.b);
    for (NodeRef p : n.parts) emit(p);
    out << "]}";
  }
  out << "]";
  return out.str();
}

double finite_diff_check(const std::function<double(const ParamMap&)>& f,
                         const ParamMap& params, const GradientMap& analytic,
                         double step) {
  ParamMap probe = params;
  double worst = 0.0;
  for (const auto& [name, mat] : params) {
    const auto it = analytic.find(name);
    if (it == analytic.end())
      throw std::invalid_argument("finite_diff_check: missing gradient for " +
                                  name);
    Mat& p = probe[name];
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        const double saved = p(i, j);
        p(i, j) = saved + step;
        const double hi = f(probe);
        p(i, j) = saved - step;
        const double lo = f(probe);
        p(i, j) = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        const double a = it->second(i, j);
        const double err =
            std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

}  // namespace linkrec

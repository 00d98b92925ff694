#include "linkrec/model.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "linkrec/error.hpp"
#include "linkrec/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes little-endian f64 payloads");

namespace linkrec {

void ModelParams::validate() const {
  if (layer_weights.empty()) throw ConfigError("model needs at least one layer");
  const Eigen::Index n = layer_weights.front().rows();
  if (n < 2) throw ConfigError("model needs at least two nodes");
  for (const Mat& w : layer_weights)
    if (w.rows() != n || w.cols() != n)
      throw ConfigError("layer weights must all be n x n");
  const auto width = static_cast<Eigen::Index>(2 * (layer_weights.size() + 1));
  if (mlp_w1.rows() != width)
    throw ConfigError("mlp_w1 must have 2*(L+1) input rows");
  const Eigen::Index h = mlp_w1.cols();
  if (h < 1 || mlp_b1.rows() != 1 || mlp_b1.cols() != h ||
      mlp_w2.rows() != h || mlp_w2.cols() != 1 || mlp_b2.rows() != 1 ||
      mlp_b2.cols() != 1)
    throw ConfigError("inconsistent MLP shapes");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout rate must be in [0, 1)");
}

ParamMap params_to_map(const ModelParams& p) {
  ParamMap out;
  for_each_param(p, [&](const std::string& name, const Mat& m) {
    out.emplace(name, m);
  });
  return out;
}

void params_from_map(ModelParams& p, const ParamMap& values) {
  for_each_param(p, [&](const std::string& name, Mat& m) {
    m = values.at(name);
  });
}

Mat normalized_adjacency(const Mat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("normalized_adjacency: matrix not square");
  if ((a - a.transpose().eval()).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("normalized_adjacency: matrix not symmetric");
  if (a.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("normalized_adjacency: nonzero diagonal");
  if (a.minCoeff() < 0.0)
    throw std::invalid_argument("normalized_adjacency: negative entries");
  const Eigen::Index n = a.rows();
  Mat ahat = a + Mat::Identity(n, n);
  Eigen::VectorXd dinv_sqrt =
      ahat.rowwise().sum().array().sqrt().inverse().matrix();
  return dinv_sqrt.asDiagonal() * ahat * dinv_sqrt.asDiagonal();
}

Tape::NodeRef collaborative_inference(Tape& tape, Tape::NodeRef h,
                                      double lambda) {
  const Eigen::Index n = tape.value(h).rows();
  if (n != tape.value(h).cols())
    throw std::invalid_argument("collaborative_inference: matrix not square");
  if (!(lambda > 0.0))
    throw std::invalid_argument("collaborative_inference: lambda must be > 0");
  const auto gram = tape.matmul(tape.transpose(h), h);
  const auto shifted = tape.add(tape.scalar_mul(lambda, gram),
                                tape.constant(Mat::Identity(n, n)));
  const auto inv = tape.spd_inverse(shifted);
  return tape.scalar_mul(lambda, tape.matmul(h, tape.matmul(inv, gram)));
}

Tape::NodeRef high_order_connectivity(Tape& tape, Tape::NodeRef anorm,
                                      Tape::NodeRef ci) {
  return tape.matmul(anorm, ci);
}

Tape::NodeRef propagate(Tape& tape, Tape::NodeRef anorm, Tape::NodeRef h,
                        Tape::NodeRef w, double lambda, bool relu_layer) {
  const auto hcc =
      high_order_connectivity(tape, anorm, collaborative_inference(tape, h, lambda));
  const auto out = tape.matmul(hcc, w);
  return relu_layer ? tape.relu(out) : out;
}

Tape::NodeRef fuse(Tape& tape, std::span<const Tape::NodeRef> ci,
                   std::span<const Tape::NodeRef> hcc, const MlpRefs& mlp,
                   double dropout_rate, uint64_t dropout_seed, bool training) {
  if (ci.size() != hcc.size() || ci.empty())
    throw std::invalid_argument("fuse: need matching CI/HCC lists");
  const Eigen::Index n = tape.value(ci[0]).rows();
  std::vector<Tape::NodeRef> columns;
  columns.reserve(2 * ci.size());
  for (size_t l = 0; l < ci.size(); ++l) {
    columns.push_back(tape.reshape(ci[l], n * n, 1));
    columns.push_back(tape.reshape(hcc[l], n * n, 1));
  }
  const auto features = tape.concat_columns(columns);
  const auto hidden =
      tape.relu(tape.add_row(tape.matmul(features, mlp.w1), mlp.b1));
  const auto dropped = tape.dropout(hidden, dropout_rate, dropout_seed, training);
  const auto probs =
      tape.sigmoid(tape.add_row(tape.matmul(dropped, mlp.w2), mlp.b2));
  return tape.reshape(probs, n, n);
}

ForwardArtifacts forward(Tape& tape, const Mat& a_input,
                         const ModelParams& params, bool training,
                         uint64_t dropout_seed) {
  params.validate();
  if (a_input.rows() != params.node_count())
    throw DataError("input graph size does not match model parameters");

  const auto anorm = tape.constant(normalized_adjacency(a_input));

  std::vector<Tape::NodeRef> weights;
  weights.reserve(params.layer_weights.size());
  for (size_t l = 0; l < params.layer_weights.size(); ++l)
    weights.push_back(tape.leaf("W" + std::to_string(l), params.layer_weights[l]));
  const MlpRefs mlp{tape.leaf("mlp_w1", params.mlp_w1),
                    tape.leaf("mlp_b1", params.mlp_b1),
                    tape.leaf("mlp_w2", params.mlp_w2),
                    tape.leaf("mlp_b2", params.mlp_b2)};

  ForwardArtifacts art;
  auto h = tape.constant(a_input);
  for (int l = 0; l < params.layer_count(); ++l) {
    const auto ci = collaborative_inference(tape, h, params.lambda);
    const auto hcc = high_order_connectivity(tape, anorm, ci);
    art.ci.push_back(ci);
    art.hcc.push_back(hcc);
    h = tape.matmul(hcc, weights[static_cast<size_t>(l)]);
    if (params.layer_relu) h = tape.relu(h);
  }
  const auto ci_last = collaborative_inference(tape, h, params.lambda);
  art.ci.push_back(ci_last);
  art.hcc.push_back(high_order_connectivity(tape, anorm, ci_last));

  art.scores = fuse(tape, art.ci, art.hcc, mlp, params.dropout_rate,
                    dropout_seed, training);
  return art;
}

Mat score_matrix(const Mat& a_input, const ModelParams& params) {
  Tape tape;
  return tape.value(forward(tape, a_input, params, /*training=*/false, 0).scores);
}

namespace {

constexpr char kMagic[8] = {'L', 'N', 'K', 'R', 'C', 'K', 'P', '1'};

template <class T>
void put(std::string* out, T v) {
  out->append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(const std::string& in, size_t* pos) {
  if (*pos + sizeof(T) > in.size()) throw DataError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + *pos, sizeof(T));
  *pos += sizeof(T);
  return v;
}

void put_matrix(std::string* out, const std::string& name, const Mat& m) {
  put<uint32_t>(out, static_cast<uint32_t>(name.size()));
  out->append(name);
  put<int64_t>(out, m.rows());
  put<int64_t>(out, m.cols());
  out->append(reinterpret_cast<const char*>(m.data()),
              static_cast<size_t>(m.size()) * sizeof(double));
}

}  // namespace

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  params.validate();
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint32_t>(&out, 1);  // container version
  put<int64_t>(&out, params.node_count());
  put<int32_t>(&out, params.layer_count());
  put<int64_t>(&out, params.hidden());
  put<double>(&out, params.lambda);
  put<double>(&out, params.dropout_rate);
  put<uint8_t>(&out, params.layer_relu ? 1 : 0);
  uint32_t count = 0;
  for_each_param(params, [&](const std::string&, const Mat&) { ++count; });
  put<uint32_t>(&out, count);
  for_each_param(params, [&](const std::string& name, const Mat& m) {
    put_matrix(&out, name, m);
  });
  atomic_write(path, out);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  size_t pos = 0;
  if (in.size() < sizeof(kMagic) ||
      std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path.string());
  pos += sizeof(kMagic);
  if (take<uint32_t>(in, &pos) != 1)
    throw DataError("unsupported checkpoint version");
  const auto n = take<int64_t>(in, &pos);
  const auto layers = take<int32_t>(in, &pos);
  const auto hidden = take<int64_t>(in, &pos);
  (void)n;
  (void)hidden;

  ModelParams p;
  p.layer_weights.resize(static_cast<size_t>(layers));
  p.lambda = take<double>(in, &pos);
  p.dropout_rate = take<double>(in, &pos);
  p.layer_relu = take<uint8_t>(in, &pos) != 0;

  const auto count = take<uint32_t>(in, &pos);
  ParamMap values;
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<uint32_t>(in, &pos);
    if (pos + name_len > in.size()) throw DataError("checkpoint truncated");
    std::string name = in.substr(pos, name_len);
    pos += name_len;
    const auto rows = take<int64_t>(in, &pos);
    const auto cols = take<int64_t>(in, &pos);
    if (rows < 1 || cols < 1) throw DataError("bad checkpoint matrix shape");
    const size_t bytes = static_cast<size_t>(rows * cols) * sizeof(double);
    if (pos + bytes > in.size()) throw DataError("checkpoint truncated");
    Mat m(rows, cols);
    std::memcpy(m.data(), in.data() + pos, bytes);
    pos += bytes;
    values.emplace(std::move(name), std::move(m));
  }
  try {
    params_from_map(p, values);
  } catch (const std::out_of_range&) {
    throw DataError("checkpoint is missing parameters");
  }
  p.validate();
  return p;
}

}  // namespace linkrec

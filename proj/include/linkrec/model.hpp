#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "linkrec/autodiff.hpp"
#include "linkrec/matrix.hpp"

namespace linkrec {

// Trainable state. Layer weights are n x n: the collaborative-inference
// operator needs square features, so a trained model is tied to the node set
// it was trained on.
struct ModelParams {
  std::vector<Mat> layer_weights;  // W0..W(L-1), each n x n
  Mat mlp_w1;                      // 2(L+1) x hidden
  Mat mlp_b1;                      // 1 x hidden
  Mat mlp_w2;                      // hidden x 1
  Mat mlp_b2;                      // 1 x 1
  double lambda = 0.13;
  double dropout_rate = 0.2;
  bool layer_relu = false;  // optional nonlinearity after each propagation

  int layer_count() const { return static_cast<int>(layer_weights.size()); }
  Eigen::Index node_count() const { return layer_weights.front().rows(); }
  Eigen::Index hidden() const { return mlp_w1.cols(); }

  void validate() const;
};

// Stable iteration over named parameters: W0..W(L-1), then the MLP.
template <class Params, class F>
void for_each_param(Params& p, F&& f) {
  for (size_t l = 0; l < p.layer_weights.size(); ++l)
    f("W" + std::to_string(l), p.layer_weights[l]);
  f(std::string("mlp_w1"), p.mlp_w1);
  f(std::string("mlp_b1"), p.mlp_b1);
  f(std::string("mlp_w2"), p.mlp_w2);
  f(std::string("mlp_b2"), p.mlp_b2);
}

ParamMap params_to_map(const ModelParams& p);
void params_from_map(ModelParams& p, const ParamMap& values);

struct ForwardArtifacts {
  std::vector<Tape::NodeRef> ci;   // collaborative inference per layer, L+1
  std::vector<Tape::NodeRef> hcc;  // high-order connectivity per layer, L+1
  Tape::NodeRef scores = -1;       // n x n link probabilities
};

// Symmetrically normalized adjacency with self-connections:
// D^(-1/2) (A + I) D^(-1/2), D = diag of (A + I) row sums. Not taped.
Mat normalized_adjacency(const Mat& a);

// lambda * H * (lambda * H^T H + I)^(-1) * H^T H, differentiable.
Tape::NodeRef collaborative_inference(Tape& tape, Tape::NodeRef h,
                                      double lambda);

Tape::NodeRef high_order_connectivity(Tape& tape, Tape::NodeRef anorm,
                                      Tape::NodeRef ci);

// One propagation layer: anorm * CI(h) * w, with optional ReLU.
Tape::NodeRef propagate(Tape& tape, Tape::NodeRef anorm, Tape::NodeRef h,
                        Tape::NodeRef w, double lambda, bool relu_layer);

struct MlpRefs {
  Tape::NodeRef w1, b1, w2, b2;
};

// Per-pair feature rows [CI(H^l)_ij, HCC(H^l)_ij] for l = 0..L through a
// two-layer MLP; returns n x n probabilities.
Tape::NodeRef fuse(Tape& tape, std::span<const Tape::NodeRef> ci,
                   std::span<const Tape::NodeRef> hcc, const MlpRefs& mlp,
                   double dropout_rate, uint64_t dropout_seed, bool training);

// Full pipeline on one input adjacency matrix. Registers every parameter as
// a tape leaf, so backward() on a loss over the scores yields all gradients.
ForwardArtifacts forward(Tape& tape, const Mat& a_input,
                         const ModelParams& params, bool training,
                         uint64_t dropout_seed);

// Inference-only convenience: scores for an input graph adjacency.
Mat score_matrix(const Mat& a_input, const ModelParams& params);

// Versioned binary container; f64 payloads round-trip bit-exactly.
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace linkrec

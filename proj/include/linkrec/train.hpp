#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "linkrec/autodiff.hpp"
#include "linkrec/graph.hpp"
#include "linkrec/model.hpp"

namespace linkrec {

struct TrainConfig {
  double learning_rate = 5e-4;
  double weight_decay = 0.0;
  int epochs = 200;
  double dropout_rate = 0.2;
  double lambda = 0.13;
  int layers = 3;
  int hidden = 64;
  int batch = 1;  // samples accumulated per optimizer step
  uint64_t seed = 42;
  bool layer_relu = false;

  void validate() const;
};

struct AdamState {
  struct Moments {
    Mat m;
    Mat v;
  };
  std::map<std::string, Moments> moments;
  int64_t step = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;
  double val_ap = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  std::string to_csv() const;  // epoch,train_loss,val_loss,val_auc,val_ap
};

struct TrainResult {
  ModelParams best;
  TrainHistory history;
  int best_epoch = 0;  // epoch whose validation AUC selected the checkpoint
};

// Mean binary cross-entropy of predicted probabilities against 0/1 labels.
Tape::NodeRef bce_loss(Tape& tape, Tape::NodeRef scores, const Mat& labels);

// Layer weights start at I plus +-0.01 uniform noise so early features stay
// adjacency-like; MLP weights are symmetric-uniform scaled by 1/sqrt(fan_in).
ModelParams init_params(Eigen::Index n, const TrainConfig& config,
                        uint64_t seed);

AdamState init_adam(const ModelParams& params);

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction);
// weight decay enters as an additive wd * theta gradient term.
void adam_step(ModelParams& params, const GradientMap& grads, AdamState& state,
               double learning_rate, double weight_decay);

// Full training loop over the augmented graphs, labels fixed to the observed
// graph's adjacency. Returns the checkpoint with the best validation AUC.
// on_epoch, when set, observes each completed epoch and the current weights.
using EpochCallback =
    std::function<void(const EpochRecord&, const ModelParams&)>;
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace linkrec

#include "linkrec/train.hpp"

#include <cmath>
#include <sstream>

#include "linkrec/error.hpp"
#include "linkrec/metrics.hpp"
#include "linkrec/rng.hpp"

namespace linkrec {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout_rate must be in [0, 1)");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_auc,val_ap\n";
  out.precision(17);
  for (const EpochRecord& r : records)
    out << r.epoch << "," << r.train_loss << "," << r.val_loss << ","
        << r.val_auc << "," << r.val_ap << "\n";
  return out.str();
}

Tape::NodeRef bce_loss(Tape& tape, Tape::NodeRef scores, const Mat& labels) {
  return tape.bce_mean(scores, labels);
}

ModelParams init_params(Eigen::Index n, const TrainConfig& config,
                        uint64_t seed) {
  config.validate();
  if (n < 2) throw ConfigError("need at least two nodes");
  Rng rng(seed);
  auto uniform_matrix = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        m(i, j) = rng.uniform(-bound, bound);
    return m;
  };

  ModelParams p;
  p.lambda = config.lambda;
  p.dropout_rate = config.dropout_rate;
  p.layer_relu = config.layer_relu;
  p.layer_weights.reserve(static_cast<size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l)
    p.layer_weights.push_back(Mat::Identity(n, n) + uniform_matrix(n, n, 0.01));

  const auto width = static_cast<Eigen::Index>(2 * (config.layers + 1));
  p.mlp_w1 = uniform_matrix(width, config.hidden,
                            1.0 / std::sqrt(static_cast<double>(width)));
  p.mlp_b1 = Mat::Zero(1, config.hidden);
  p.mlp_w2 = uniform_matrix(config.hidden, 1,
                            1.0 / std::sqrt(static_cast<double>(config.hidden)));
  p.mlp_b2 = Mat::Zero(1, 1);
  p.validate();
  return p;
}

AdamState init_adam(const ModelParams& params) {
  AdamState state;
  for_each_param(params, [&](const std::string& name, const Mat& m) {
    state.moments[name] = {Mat::Zero(m.rows(), m.cols()),
                           Mat::Zero(m.rows(), m.cols())};
  });
  return state;
}

void adam_step(ModelParams& params, const GradientMap& grads, AdamState& state,
               double learning_rate, double weight_decay) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(kBeta1, t);
  const double correction2 = 1.0 - std::pow(kBeta2, t);

  for_each_param(params, [&](const std::string& name, Mat& theta) {
    const auto it = grads.find(name);
    if (it == grads.end())
      throw ConfigError("adam_step: missing gradient for " + name);
    AdamState::Moments& mo = state.moments.at(name);
    const Mat g = it->second + weight_decay * theta;
    mo.m = kBeta1 * mo.m + (1.0 - kBeta1) * g;
    mo.v = kBeta2 * mo.v + (1.0 - kBeta2) * g.cwiseProduct(g);
    const Mat m_hat = mo.m / correction1;
    const Mat v_hat = mo.v / correction2;
    theta.array() -=
        learning_rate * m_hat.array() / (v_hat.array().sqrt() + kEps);
  });
}

namespace {

struct ValidationMetrics {
  double loss = 0.0;
  double auc_value = 0.0;
  double ap_value = 0.0;
};

double pair_score(const Mat& s, const Edge& e) {
  return 0.5 * (s(e.u, e.v) + s(e.v, e.u));
}

ValidationMetrics validate_epoch(const Dataset& dataset,
                                 const ModelParams& params, const Mat& labels) {
  ValidationMetrics out;
  std::vector<double> pos, neg;
  std::vector<ScoredLabel> labeled;
  for (const PerturbationResult& pr : dataset.val) {
    Tape tape;
    const auto art =
        forward(tape, to_adjacency(pr.graph), params, /*training=*/false, 0);
    out.loss += tape.value(bce_loss(tape, art.scores, labels))(0, 0);
    const Mat& s = tape.value(art.scores);
    for (const Edge& e : pr.deleted) {
      pos.push_back(pair_score(s, e));
      labeled.push_back({pos.back(), 1});
    }
    for (const Edge& e : pr.added) {
      neg.push_back(pair_score(s, e));
      labeled.push_back({neg.back(), 0});
    }
  }
  out.loss /= static_cast<double>(dataset.val.size());
  if (!pos.empty() && !neg.empty()) {
    out.auc_value = auc(pos, neg);
    out.ap_value = average_precision(labeled);
  } else {
    // Degenerate perturbations (no deletions or no additions): fall back to
    // a neutral score so history stays well-defined.
    out.auc_value = 0.5;
    out.ap_value = pos.empty() ? 0.0 : 1.0;
  }
  return out;
}

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.train.empty()) throw DataError("train: no training graphs");
  if (dataset.val.empty()) throw DataError("train: no validation graphs");

  const Mat labels = to_adjacency(dataset.observed);
  const Eigen::Index n = dataset.observed.node_count();

  ModelParams params = init_params(n, config, derive_seed(config.seed, 0));
  AdamState state = init_adam(params);

  TrainResult result;
  result.best = params;
  result.best_epoch = 0;
  double best_auc = -1.0;

  GradientMap accum;
  int accum_count = 0;
  auto flush_step = [&]() {
    if (accum_count == 0) return;
    if (accum_count > 1)
      for (auto& [name, g] : accum) g /= static_cast<double>(accum_count);
    adam_step(params, accum, state, config.learning_rate, config.weight_decay);
    accum.clear();
    accum_count = 0;
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng order_rng(derive_seed(config.seed, 0x10000 + epoch));
    const auto order = shuffled_indices(dataset.train.size(), order_rng);

    double loss_sum = 0.0;
    for (size_t k = 0; k < order.size(); ++k) {
      const PerturbationResult& sample = dataset.train[order[k]];
      Tape tape;
      const uint64_t dropout_seed =
          derive_seed(config.seed, 0x0D000000ULL +
                                       static_cast<uint64_t>(epoch) * 65536 +
                                       order[k]);
      const auto art = forward(tape, to_adjacency(sample.graph), params,
                               /*training=*/true, dropout_seed);
      const auto loss = bce_loss(tape, art.scores, labels);
      const double loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      loss_sum += loss_value;

      GradientMap grads = tape.backward(loss);
      if (accum.empty()) {
        accum = std::move(grads);
      } else {
        for (auto& [name, g] : grads) accum.at(name) += g;
      }
      if (++accum_count == config.batch) flush_step();
    }
    flush_step();  // partial batch at epoch end

    const ValidationMetrics vm = validate_epoch(dataset, params, labels);
    result.history.records.push_back({epoch,
                                      loss_sum / static_cast<double>(order.size()),
                                      vm.loss, vm.auc_value, vm.ap_value});
    if (on_epoch) on_epoch(result.history.records.back(), params);
    if (vm.auc_value > best_auc) {
      best_auc = vm.auc_value;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace linkrec

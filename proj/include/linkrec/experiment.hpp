#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "linkrec/metrics.hpp"
#include "linkrec/train.hpp"

namespace linkrec {

inline constexpr const char* kVersion = "0.1.0";

// One JSON document drives a whole run; every field has a default so a
// config may pin only what it cares about. CLI flags override file keys.
struct RunConfig {
  std::filesystem::path dataset;     // original edge list
  std::filesystem::path output_dir;
  double keep_fraction = 0.9;
  double del_fraction = 0.1;
  double add_fraction = 0.1;
  int t = 100;  // augmented graphs
  TrainConfig train;
  bool write_augmented = true;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::filesystem::path& path);
  std::string to_json_text() const;
  void validate() const;
};

// Persisted description of one materialized dataset; all paths are stored
// relative to the manifest and resolved against it on load.
struct DatasetManifest {
  int64_t n = 0;
  std::filesystem::path original;
  std::filesystem::path observed;
  std::filesystem::path holdout;        // missing-link ground truth
  std::filesystem::path spurious_test;  // observed + injected fake edges
  std::vector<std::filesystem::path> augmented;
  double keep_fraction = 0.0;
  double del_fraction = 0.0;
  double add_fraction = 0.0;
  int t = 0;
  uint64_t seed = 0;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SplitArgs {
  std::filesystem::path input;
  double keep_fraction = 0.9;
  uint64_t seed = 42;
  std::filesystem::path output_dir;
};

// Writes observed + holdout edge lists and a manifest. Arbitrary integer
// node labels are remapped to dense ids with a nodemap.tsv sidecar.
DatasetManifest cmd_split(const SplitArgs& args);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  std::filesystem::path manifest;
  std::filesystem::path record;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double final_train_loss = 0.0;
};

// Builds the dataset, trains, writes checkpoint/history/manifest/record.
TrainOutputs cmd_train(const RunConfig& config);

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
};

// Scores the observed graph in inference mode, runs the missing and
// spurious protocols, writes metrics.json and the full ranked scores CSV.
MetricsReport cmd_eval(const EvalArgs& args);

struct BaselineArgs {
  std::string kind;  // CN, RA, LP
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  double epsilon = 1e-3;  // LP three-hop weight
};

MetricsReport cmd_baseline(const BaselineArgs& args);

struct SweepArgs {
  std::string param;  // "lambda" or "depth"
  std::vector<double> values;
  RunConfig base;
  std::filesystem::path output_dir;
  int jobs = 1;
};

// One training + evaluation per value; emits summary.csv (value,auc,ap,...).
void cmd_sweep(const SweepArgs& args);

}  // namespace linkrec

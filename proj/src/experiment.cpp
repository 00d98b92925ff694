#include "linkrec/experiment.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "linkrec/error.hpp"
#include "linkrec/io.hpp"
#include "linkrec/rng.hpp"

namespace linkrec {

namespace {

using nlohmann::json;

// Seed streams for the stages derived from one run seed.
constexpr uint64_t kStreamDataset = 0;
constexpr uint64_t kStreamSpurious = 0xADDED;

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + what);
  return j;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void write_record(const std::filesystem::path& path, json record) {
  record["version"] = kVersion;
  atomic_write(path, record.dump(2) + "\n");
}

json metrics_json(const MetricsReport& report) {
  return parse_json(report.to_json(), "metrics");
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = parse_json(text, "run config");
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dataset")
        cfg.dataset = value.get<std::string>();
      else if (key == "output_dir")
        cfg.output_dir = value.get<std::string>();
      else if (key == "keep_fraction")
        cfg.keep_fraction = value.get<double>();
      else if (key == "del_fraction")
        cfg.del_fraction = value.get<double>();
      else if (key == "add_fraction")
        cfg.add_fraction = value.get<double>();
      else if (key == "t")
        cfg.t = value.get<int>();
      else if (key == "learning_rate")
        cfg.train.learning_rate = value.get<double>();
      else if (key == "weight_decay")
        cfg.train.weight_decay = value.get<double>();
      else if (key == "epochs")
        cfg.train.epochs = value.get<int>();
      else if (key == "dropout")
        cfg.train.dropout_rate = value.get<double>();
      else if (key == "lambda")
        cfg.train.lambda = value.get<double>();
      else if (key == "layers")
        cfg.train.layers = value.get<int>();
      else if (key == "hidden")
        cfg.train.hidden = value.get<int>();
      else if (key == "batch")
        cfg.train.batch = value.get<int>();
      else if (key == "seed")
        cfg.train.seed = value.get<uint64_t>();
      else if (key == "layer_relu")
        cfg.train.layer_relu = value.get<bool>();
      else if (key == "write_augmented")
        cfg.write_augmented = value.get<bool>();
      else
        throw ConfigError("unknown config key: " + key);
    } catch (const json::exception&) {
      throw ConfigError("bad value for config key: " + key);
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_json_text(read_file(path));
}

std::string RunConfig::to_json_text() const {
  const json j{{"dataset", dataset.string()},
               {"output_dir", output_dir.string()},
               {"keep_fraction", keep_fraction},
               {"del_fraction", del_fraction},
               {"add_fraction", add_fraction},
               {"t", t},
               {"learning_rate", train.learning_rate},
               {"weight_decay", train.weight_decay},
               {"epochs", train.epochs},
               {"dropout", train.dropout_rate},
               {"lambda", train.lambda},
               {"layers", train.layers},
               {"hidden", train.hidden},
               {"batch", train.batch},
               {"seed", train.seed},
               {"layer_relu", train.layer_relu},
               {"write_augmented", write_augmented}};
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: dataset path is required");
  if (!std::filesystem::exists(dataset))
    throw DataError("dataset not found: " + dataset.string());
  if (output_dir.empty())
    throw ConfigError("config: output_dir is required");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must be in (0, 1]");
  if (del_fraction < 0.0 || del_fraction > 1.0 || add_fraction < 0.0 ||
      add_fraction > 1.0)
    throw ConfigError("del/add fractions must be in [0, 1]");
  if (t < 2) throw ConfigError("t must be >= 2");
  train.validate();
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), path.string());
  DatasetManifest m;
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  auto resolve = [&](const std::string& rel) { return base / rel; };
  try {
    m.n = j.at("n").get<int64_t>();
    m.original = resolve(j.at("original").get<std::string>());
    m.observed = resolve(j.at("observed").get<std::string>());
    if (j.contains("holdout"))
      m.holdout = resolve(j.at("holdout").get<std::string>());
    if (j.contains("spurious_test"))
      m.spurious_test = resolve(j.at("spurious_test").get<std::string>());
    for (const auto& p : j.value("augmented", json::array()))
      m.augmented.push_back(resolve(p.get<std::string>()));
    m.keep_fraction = j.value("keep_fraction", 0.0);
    m.del_fraction = j.value("del_fraction", 0.0);
    m.add_fraction = j.value("add_fraction", 0.0);
    m.t = j.value("t", 0);
    m.seed = j.value("seed", uint64_t{0});
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  auto rel = [&](const std::filesystem::path& p) {
    return p.empty() ? std::string()
                     : std::filesystem::relative(p, base).generic_string();
  };
  json j{{"n", n},
         {"original", rel(original)},
         {"observed", rel(observed)},
         {"keep_fraction", keep_fraction},
         {"del_fraction", del_fraction},
         {"add_fraction", add_fraction},
         {"t", t},
         {"seed", seed}};
  if (!holdout.empty()) j["holdout"] = rel(holdout);
  if (!spurious_test.empty()) j["spurious_test"] = rel(spurious_test);
  json aug = json::array();
  for (const auto& p : augmented) aug.push_back(rel(p));
  j["augmented"] = aug;
  atomic_write(path, j.dump(2) + "\n");
}

namespace {

// Writes the dense-id -> original-label table when ingestion remapped ids.
void maybe_write_nodemap(const std::vector<int64_t>& labels,
                         const std::filesystem::path& path) {
  bool identity = true;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != static_cast<int64_t>(i)) {
      identity = false;
      break;
    }
  if (identity) return;
  std::ostringstream out;
  out << "dense_id\toriginal_label\n";
  for (size_t i = 0; i < labels.size(); ++i)
    out << i << "\t" << labels[i] << "\n";
  atomic_write(path, out.str());
}

Graph save_holdout(const Graph& original, const Graph& observed,
                   const std::filesystem::path& path) {
  Graph holdout(original.node_count(),
                edge_difference(original.edges(), observed.edges()));
  std::ostringstream out;
  out << "# nodes: " << holdout.node_count() << "\n";
  for (const Edge& e : holdout.edges()) out << e.u << " " << e.v << "\n";
  atomic_write(path, out.str());
  return holdout;
}

}  // namespace

DatasetManifest cmd_split(const SplitArgs& args) {
  if (!(args.keep_fraction > 0.0 && args.keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must be in (0, 1]");
  const auto start = std::chrono::steady_clock::now();
  auto [original, labels] = load_edge_list_remapped(args.input);
  const Graph observed =
      split_observed(original, args.keep_fraction, args.seed);

  const auto& dir = args.output_dir;
  std::filesystem::create_directories(dir);
  maybe_write_nodemap(labels, dir / "nodemap.tsv");
  save_edge_list(original, dir / "original.edges");
  save_edge_list(observed, dir / "observed.edges");
  save_holdout(original, observed, dir / "holdout.edges");

  DatasetManifest m;
  m.n = original.node_count();
  m.original = dir / "original.edges";
  m.observed = dir / "observed.edges";
  m.holdout = dir / "holdout.edges";
  m.keep_fraction = args.keep_fraction;
  m.seed = args.seed;
  m.save(dir / "manifest.json");

  write_record(dir / "record.json",
               json{{"command", "split"},
                    {"input", args.input.string()},
                    {"input_checksum", file_checksum(args.input)},
                    {"keep_fraction", args.keep_fraction},
                    {"seed", args.seed},
                    {"nodes", original.node_count()},
                    {"edges_original", original.edge_count()},
                    {"edges_observed", observed.edge_count()},
                    {"seconds", elapsed_seconds(start)}});
  return m;
}

TrainOutputs cmd_train(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Graph original = load_edge_list(config.dataset);
  Dataset ds = build_dataset(original, config.keep_fraction, config.t,
                             config.del_fraction, config.add_fraction,
                             derive_seed(config.train.seed, kStreamDataset));
  // Spurious-link test input: the observed graph plus injected fake edges.
  const PerturbationResult spurious =
      perturb(ds.observed, 0.0, config.add_fraction,
              derive_seed(config.train.seed, kStreamSpurious));
  const double data_seconds = elapsed_seconds(start);

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  save_edge_list(ds.original, dir / "original.edges");
  save_edge_list(ds.observed, dir / "observed.edges");
  save_holdout(ds.original, ds.observed, dir / "holdout.edges");
  save_edge_list(spurious.graph, dir / "spurious_test.edges");

  DatasetManifest manifest;
  manifest.n = ds.observed.node_count();
  manifest.original = dir / "original.edges";
  manifest.observed = dir / "observed.edges";
  manifest.holdout = dir / "holdout.edges";
  manifest.spurious_test = dir / "spurious_test.edges";
  manifest.keep_fraction = config.keep_fraction;
  manifest.del_fraction = config.del_fraction;
  manifest.add_fraction = config.add_fraction;
  manifest.t = config.t;
  manifest.seed = config.train.seed;
  if (config.write_augmented) {
    const auto aug_dir = dir / "augmented";
    std::filesystem::create_directories(aug_dir);
    char name[32];
    size_t index = 0;
    for (const auto* split : {&ds.train, &ds.val}) {
      for (const PerturbationResult& pr : *split) {
        std::snprintf(name, sizeof(name), "g%04zu.edges", index++);
        save_edge_list(pr.graph, aug_dir / name);
        manifest.augmented.push_back(aug_dir / name);
      }
    }
  }
  manifest.save(dir / "manifest.json");

  const auto train_start = std::chrono::steady_clock::now();
  TrainOutputs out;
  out.checkpoint = dir / "checkpoint.bin";
  out.history = dir / "history.csv";
  out.manifest = dir / "manifest.json";
  out.record = dir / "record.json";

  // Flush the history after every epoch so long runs can be watched and a
  // crash still leaves the curve on disk.
  TrainHistory live;
  const auto on_epoch = [&](const EpochRecord& r, const ModelParams&) {
    live.records.push_back(r);
    atomic_write(out.history, live.to_csv());
    std::fprintf(stderr,
                 "epoch %d/%d  train_loss %.4f  val_loss %.4f  val_auc %.4f\n",
                 r.epoch, config.train.epochs, r.train_loss, r.val_loss,
                 r.val_auc);
  };
  TrainResult result = train(ds, config.train, on_epoch);
  const double train_seconds = elapsed_seconds(train_start);

  save_checkpoint(result.best, out.checkpoint);
  atomic_write(out.history, result.history.to_csv());

  out.best_epoch = result.best_epoch;
  const auto& records = result.history.records;
  for (const EpochRecord& r : records)
    if (r.epoch == result.best_epoch) out.best_val_auc = r.val_auc;
  out.final_train_loss = records.back().train_loss;

  write_record(out.record,
               json{{"command", "train"},
                    {"config", parse_json(config.to_json_text(), "config")},
                    {"dataset_checksum", file_checksum(config.dataset)},
                    {"best_epoch", result.best_epoch},
                    {"best_val_auc", out.best_val_auc},
                    {"final_train_loss", out.final_train_loss},
                    {"val_overlap", ds.val_overlap},
                    {"timings", json{{"dataset_seconds", data_seconds},
                                     {"train_seconds", train_seconds}}}});
  return out;
}

namespace {

PerturbationResult spurious_from_files(const Graph& observed,
                                       const std::filesystem::path& path) {
  const Graph test_graph = load_edge_list(path);
  if (test_graph.node_count() != observed.node_count())
    throw DataError("spurious test graph node count differs from observed");
  std::vector<Edge> added =
      edge_difference(test_graph.edges(), observed.edges());
  std::vector<Edge> deleted =
      edge_difference(observed.edges(), test_graph.edges());
  return {test_graph, std::move(deleted), std::move(added)};
}

MetricsReport evaluate_scores(const DatasetManifest& manifest,
                              const Mat& scores_observed,
                              const Mat& scores_spurious,
                              const Graph& original, const Graph& observed,
                              const PerturbationResult& spurious,
                              const std::filesystem::path& output_dir,
                              const std::string& record_name,
                              json extra_record) {
  const MetricsReport report = evaluate_reconstruction(
      scores_observed, original, observed, spurious, scores_spurious);

  std::filesystem::create_directories(output_dir);
  atomic_write(output_dir / "metrics.json", report.to_json());
  const std::vector<Edge> missing =
      edge_difference(original.edges(), observed.edges());
  write_scores_csv(output_dir / "scores.csv",
                   rank_pairs(symmetrize_scores(scores_observed), true),
                   missing);

  extra_record["command"] = record_name;
  extra_record["manifest_n"] = manifest.n;
  extra_record["metrics"] = metrics_json(report);
  write_record(output_dir / "record.json", std::move(extra_record));
  return report;
}

}  // namespace

MetricsReport cmd_eval(const EvalArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const DatasetManifest manifest = DatasetManifest::load(args.manifest);
  if (manifest.spurious_test.empty())
    throw DataError("manifest has no spurious_test entry");
  const ModelParams params = load_checkpoint(args.checkpoint);
  const Graph original = load_edge_list(manifest.original);
  const Graph observed = load_edge_list(manifest.observed);
  if (params.node_count() != observed.node_count())
    throw DataError("checkpoint node count differs from dataset");

  const PerturbationResult spurious =
      spurious_from_files(observed, manifest.spurious_test);
  const Mat scores_observed = score_matrix(to_adjacency(observed), params);
  const Mat scores_spurious = score_matrix(to_adjacency(spurious.graph), params);

  return evaluate_scores(
      manifest, scores_observed, scores_spurious, original, observed, spurious,
      args.output_dir, "eval",
      json{{"checkpoint", args.checkpoint.string()},
           {"checkpoint_checksum", file_checksum(args.checkpoint)},
           {"manifest", args.manifest.string()},
           {"seconds", elapsed_seconds(start)}});
}

namespace {

Mat pairs_to_matrix(const ScoredPairs& pairs, Eigen::Index n) {
  Mat s = Mat::Zero(n, n);
  for (const ScoredPair& sp : pairs) {
    s(sp.i, sp.j) = sp.score;
    s(sp.j, sp.i) = sp.score;
  }
  return s;
}

}  // namespace

MetricsReport cmd_baseline(const BaselineArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const BaselineKind kind = baseline_from_string(args.kind);
  const DatasetManifest manifest = DatasetManifest::load(args.manifest);
  if (manifest.spurious_test.empty())
    throw DataError("manifest has no spurious_test entry");
  const Graph original = load_edge_list(manifest.original);
  const Graph observed = load_edge_list(manifest.observed);
  const PerturbationResult spurious =
      spurious_from_files(observed, manifest.spurious_test);

  const Mat scores_observed =
      pairs_to_matrix(baseline_scores(kind, observed, args.epsilon),
                      observed.node_count());
  const Mat scores_spurious =
      pairs_to_matrix(baseline_scores(kind, spurious.graph, args.epsilon),
                      observed.node_count());

  return evaluate_scores(manifest, scores_observed, scores_spurious, original,
                         observed, spurious, args.output_dir, "baseline",
                         json{{"kind", args.kind},
                              {"epsilon", args.epsilon},
                              {"manifest", args.manifest.string()},
                              {"seconds", elapsed_seconds(start)}});
}

void cmd_sweep(const SweepArgs& args) {
  if (args.values.empty()) throw ConfigError("sweep: no values given");
  if (args.param != "lambda" && args.param != "depth")
    throw ConfigError("sweep: param must be 'lambda' or 'depth'");
  const int jobs = std::max(1, args.jobs);

  struct Row {
    double value;
    MetricsReport report;
  };
  std::vector<Row> rows(args.values.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < args.values.size();
         i = next.fetch_add(1)) {
      try {
        const double value = args.values[i];
        RunConfig cfg = args.base;
        std::ostringstream name;
        name << args.param << "_" << value;
        cfg.output_dir = args.output_dir / name.str();
        if (args.param == "lambda") {
          cfg.train.lambda = value;
        } else {
          if (value < 1.0 || value != std::floor(value))
            throw ConfigError("sweep: depth values must be positive integers");
          cfg.train.layers = static_cast<int>(value);
        }
        const TrainOutputs trained = cmd_train(cfg);
        rows[i] = {value, cmd_eval({trained.checkpoint, trained.manifest,
                                    cfg.output_dir / "eval"})};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  std::ostringstream csv;
  csv << "param,value,auc,ap,precision_missing,precision_spurious\n";
  csv.precision(17);
  for (const Row& row : rows)
    csv << args.param << "," << row.value << "," << row.report.auc << ","
        << row.report.ap << "," << row.report.precision_missing << ","
        << row.report.precision_spurious << "\n";
  std::filesystem::create_directories(args.output_dir);
  atomic_write(args.output_dir / "summary.csv", csv.str());
}

}  // namespace linkrec

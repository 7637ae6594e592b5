#include "spdnet/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "spdnet/checkpoint.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/parallel.hpp"

namespace fs = std::filesystem;

namespace spdnet {

namespace {

constexpr int kFeatureCheckpointEpoch = 20;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

std::vector<GestureSequence> prepare(std::vector<GestureSequence> seqs, const RunConfig& cfg,
                                     int sequence_length) {
  for (auto& s : seqs) {
    if (cfg.wrist_center) s = center_on_wrist(s);
    s = resample(s, sequence_length, cfg.resample);
  }
  return seqs;
}

FeatureSet extract_all(const std::vector<GestureSequence>& seqs, const Checkpoint& ck,
                       int threads) {
  FeatureSet fs;
  fs.features.resize(static_cast<Eigen::Index>(seqs.size()), ck.config.feature_dim());
  parallel_for(static_cast<int>(seqs.size()), threads, [&](int i) {
    fs.features.row(i) = extract_feature(seqs[static_cast<std::size_t>(i)], ck.params, ck.config)
                             .transpose();
  });
  for (const auto& s : seqs) {
    fs.label_14.push_back(s.label_14);
    fs.label_28.push_back(s.label_28);
  }
  return fs;
}

}  // namespace

int run_num_classes(const RunConfig& cfg) {
  if (cfg.synthetic) return cfg.synth_classes;
  if (cfg.mode != 14 && cfg.mode != 28) throw ConfigError("--mode: must be 14 or 28");
  return cfg.mode;
}

void validate_data_source(const RunConfig& cfg) {
  if (cfg.synthetic) {
    if (cfg.synth_classes < 2 || cfg.synth_classes > kNumSyntheticPrototypes)
      throw ConfigError("--classes: synthetic data supports 2.." +
                        std::to_string(kNumSyntheticPrototypes) + " classes");
    return;
  }
  if (!cfg.dhg_root.empty()) {
    if (!fs::is_directory(cfg.dhg_root))
      throw ConfigError("--dhg-root: directory does not exist: " + cfg.dhg_root);
    return;
  }
  if (cfg.train_data.empty())
    throw ConfigError("no data source: pass --dhg-root, --train-data or --synthetic");
  if (!fs::exists(cfg.train_data))
    throw ConfigError("--train-data: file does not exist: " + cfg.train_data);
  if (!cfg.test_data.empty() && !fs::exists(cfg.test_data))
    throw ConfigError("--test-data: file does not exist: " + cfg.test_data);
}

DatasetSplit load_run_data(const RunConfig& cfg, int sequence_length) {
  validate_data_source(cfg);
  DatasetSplit split;
  if (cfg.synthetic) {
    split.train = synth_generate(cfg.synth_train_per_class, cfg.synth_classes, cfg.synth_noise,
                                 cfg.train.seed);
    split.test = synth_generate(cfg.synth_test_per_class, cfg.synth_classes, cfg.synth_noise,
                                cfg.train.seed + 1);
  } else if (!cfg.dhg_root.empty()) {
    DhgOptions opts;
    opts.threads = cfg.train.threads;
    split = load_dhg_split(cfg.dhg_root, opts);
  } else {
    split.train = load_dataset(cfg.train_data);
    if (!cfg.test_data.empty()) split.test = load_dataset(cfg.test_data);
  }
  split.train = prepare(std::move(split.train), cfg, sequence_length);
  split.test = prepare(std::move(split.test), cfg, sequence_length);
  return split;
}

std::vector<std::string> cmd_synth(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.synthetic = true;
  validate_data_source(c);
  const auto split = load_run_data(c, c.network.sequence_length);
  const std::string train = out_path(c, "synthetic_train.spds");
  const std::string test = out_path(c, "synthetic_test.spds");
  save_dataset(train, split.train);
  save_dataset(test, split.test);
  return {train, test};
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  NetworkConfig net = cfg.network;
  net.num_classes = run_num_classes(cfg);
  net.validate();
  cfg.train.validate();
  const DatasetSplit split = load_run_data(cfg, net.sequence_length);
  const auto hist = class_histogram(split.train, net.num_classes);
  log << "training on " << split.train.size() << " sequences, " << net.num_classes
      << " classes; per-class counts:";
  for (int k = 1; k <= net.num_classes; ++k) log << ' ' << hist[static_cast<std::size_t>(k)];
  log << '\n';

  std::ofstream metrics(out_path(cfg, "metrics.csv"));
  write_metrics_csv_header(metrics);
  TrainHooks hooks;
  hooks.after_epoch = [&](const EpochMetrics& m, const NetworkParams& p) {
    write_metrics_csv_row(metrics, m);
    metrics.flush();
    log << "epoch " << m.epoch << " loss " << std::setprecision(6) << m.mean_loss << " acc "
        << m.train_accuracy << "% (" << m.wall_seconds << " s)\n";
    if (m.epoch == kFeatureCheckpointEpoch)
      save_checkpoint(out_path(cfg, "checkpoint_epoch20.spdn"), {net, p, m.epoch});
  };
  TrainResult res = train(split.train, net, cfg.train, hooks);
  save_checkpoint(out_path(cfg, "checkpoint_final.spdn"), {net, res.params, cfg.train.epochs});
  return res;
}

namespace {

Checkpoint load_matching_checkpoint(const RunConfig& cfg, const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("--checkpoint: file does not exist: " + path);
  Checkpoint ck = load_checkpoint(path);
  const int classes = run_num_classes(cfg);
  if (ck.config.num_classes != classes)
    throw ConfigError("checkpoint has " + std::to_string(ck.config.num_classes) +
                      " classes but the run uses " + std::to_string(classes));
  return ck;
}

}  // namespace

void cmd_extract(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
  const Checkpoint ck = load_matching_checkpoint(cfg, checkpoint);
  const DatasetSplit split = load_run_data(cfg, ck.config.sequence_length);
  save_features(out_path(cfg, "features_train.spft"), extract_all(split.train, ck, cfg.train.threads));
  log << "extracted " << split.train.size() << " training features (dim "
      << ck.config.feature_dim() << ")\n";
  if (!split.test.empty()) {
    save_features(out_path(cfg, "features_test.spft"), extract_all(split.test, ck, cfg.train.threads));
    log << "extracted " << split.test.size() << " test features\n";
  }
}

SvmModel cmd_svm(const RunConfig& cfg, const std::string& features, std::ostream& log) {
  if (!fs::exists(features)) throw ConfigError("--features: file does not exist: " + features);
  const FeatureSet fs = load_features(features);
  const int classes = run_num_classes(cfg);
  SvmModel model = svm_train(fs.features, fs.labels(classes), classes, cfg.svm);
  save_svm_model(out_path(cfg, "svm_model.spsv"), model);
  log << "trained " << classes << "-class SVM on " << fs.features.rows() << " samples\n";
  return model;
}

EvalReport cmd_eval(const RunConfig& cfg, const std::string& model_path,
                    const std::string& features, std::ostream& out) {
  if (!fs::exists(model_path)) throw ConfigError("--model: file does not exist: " + model_path);
  if (!fs::exists(features)) throw ConfigError("--features: file does not exist: " + features);
  const SvmModel model = load_svm_model(model_path);
  const FeatureSet fs = load_features(features);
  if (fs.features.cols() != model.dim())
    throw ConfigError("features have dimension " + std::to_string(fs.features.cols()) +
                      " but the model expects " + std::to_string(model.dim()));
  const EvalReport r = evaluate(model, fs.features, fs.labels(model.num_classes()));
  const auto names = class_names(model.num_classes());
  std::ofstream report(out_path(cfg, "report.csv"));
  write_report_csv(report, r, names);
  std::ofstream confusion(out_path(cfg, "confusion.csv"));
  write_confusion_csv(confusion, r, names);
  print_confusion_table(out, r, names);
  return r;
}

EvalReport cmd_pipeline(const RunConfig& cfg, const std::string& checkpoint, std::ostream& out) {
  cmd_extract(cfg, checkpoint, out);
  const std::string train_features = out_path(cfg, "features_train.spft");
  const std::string test_features = out_path(cfg, "features_test.spft");
  if (!fs::exists(test_features)) throw ConfigError("pipeline: the data source has no test split");
  cmd_svm(cfg, train_features, out);
  const EvalReport r = cmd_eval(cfg, out_path(cfg, "svm_model.spsv"), test_features, out);
  if (!cfg.synthetic) {
    const double target = run_num_classes(cfg) == 14 ? 92.38 : 86.31;
    out << "reference accuracy for " << run_num_classes(cfg) << " classes: " << target
        << "% (difference " << std::showpos << std::fixed << std::setprecision(2)
        << r.accuracy - target << std::noshowpos << " points)\n";
  }
  return r;
}

bool cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out) {
  const auto rows = run_gradcheck(opts);
  bool ok = true;
  out << std::left << std::setw(20) << "layer" << std::setw(11) << "instances" << std::setw(16)
      << "max_rel_error" << "result\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(20) << r.layer << std::setw(11) << r.instances
        << std::setw(16) << std::scientific << std::setprecision(3) << r.max_rel_error
        << std::defaultfloat << (r.pass ? "PASS" : "FAIL") << '\n';
    ok = ok && r.pass;
  }
  out << std::right;
  return ok;
}

}  // namespace spdnet

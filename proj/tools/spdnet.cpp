// spdnet: train / extract / svm / eval / pipeline / gradcheck / synth.

#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "spdnet/commands.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/parallel.hpp"

using namespace spdnet;

namespace {

// Flag values; each is applied on top of the config file only if given.
struct Flags {
  std::string config;
  std::vector<std::function<void(RunConfig&)>> overrides;

  template <class T, class Apply>
  void add(CLI::App* app, const std::string& name, const std::string& help, Apply apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    overrides.push_back([opt, value, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
  }

  void flag(CLI::App* app, const std::string& name, const std::string& help,
            std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app->add_flag(name, help);
    overrides.push_back([opt, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c);
    });
  }

  RunConfig build() const {
    RunConfig cfg;
    cfg.train.threads = default_threads();
    if (!config.empty()) apply_config(parse_config_file(config), cfg);
    for (const auto& o : overrides) o(cfg);
    return cfg;
  }
};

void add_data_flags(CLI::App* app, Flags& f) {
  f.add<std::string>(app, "--dhg-root", "DHG dataset root (with train/test split lists)",
                     [](RunConfig& c, const std::string& v) { c.dhg_root = v; });
  f.add<std::string>(app, "--train-data", "training dataset cache (.spds)",
                     [](RunConfig& c, const std::string& v) { c.train_data = v; });
  f.add<std::string>(app, "--test-data", "test dataset cache (.spds)",
                     [](RunConfig& c, const std::string& v) { c.test_data = v; });
  f.flag(app, "--synthetic", "use generated synthetic gestures",
         [](RunConfig& c) { c.synthetic = true; });
  f.add<int>(app, "--classes", "number of synthetic classes (2..8)",
             [](RunConfig& c, int v) { c.synth_classes = v; });
  f.add<int>(app, "--train-per-class", "synthetic training sequences per class",
             [](RunConfig& c, int v) { c.synth_train_per_class = v; });
  f.add<int>(app, "--test-per-class", "synthetic test sequences per class",
             [](RunConfig& c, int v) { c.synth_test_per_class = v; });
  f.add<double>(app, "--noise", "synthetic coordinate noise sigma",
                [](RunConfig& c, double v) { c.synth_noise = v; });
  f.add<int>(app, "--mode", "DHG label set: 14 or 28",
             [](RunConfig& c, int v) { c.mode = v; });
  f.add<std::string>(app, "--resample", "length normalization: interpolate | pad-last",
                     [](RunConfig& c, const std::string& v) {
                       if (v == "interpolate") c.resample = ResampleMode::kInterpolate;
                       else if (v == "pad-last") c.resample = ResampleMode::kPadLast;
                       else throw ConfigError("--resample: expected interpolate or pad-last");
                     });
  f.flag(app, "--wrist-center", "subtract the wrist position from every joint",
         [](RunConfig& c) { c.wrist_center = true; });
}

void add_common_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "key=value config file (flags override it)");
  f.add<std::string>(app, "--out", "output directory",
                     [](RunConfig& c, const std::string& v) { c.output_dir = v; });
  f.add<std::uint64_t>(app, "--seed", "random seed",
                       [](RunConfig& c, std::uint64_t v) { c.train.seed = v; });
  f.add<int>(app, "--threads", "worker threads (default: hardware concurrency)",
             [](RunConfig& c, int v) { c.train.threads = v; });
}

void add_network_flags(CLI::App* app, Flags& f) {
  f.add<int>(app, "--channels", "graph-conv output channels",
             [](RunConfig& c, int v) { c.network.channels = v; });
  f.add<int>(app, "--levels", "temporal pyramid levels",
             [](RunConfig& c, int v) { c.network.pyramid_levels = v; });
  f.add<int>(app, "--spat-dim", "spatial aggregation output dimension",
             [](RunConfig& c, int v) { c.network.spat_out_dim = v; });
  f.add<double>(app, "--eps", "ReEig rectification threshold",
                [](RunConfig& c, double v) { c.network.rectify_eps = v; });
  f.add<int>(app, "--seq-len", "normalized sequence length",
             [](RunConfig& c, int v) { c.network.sequence_length = v; });
  f.add<double>(app, "--temporal-reg", "regularizer of the temporal Gaussian aggregation",
                [](RunConfig& c, double v) { c.network.temporal_regularizer = v; });
}

void add_train_flags(CLI::App* app, Flags& f) {
  f.add<int>(app, "--epochs", "training epochs",
             [](RunConfig& c, int v) { c.train.epochs = v; });
  f.add<int>(app, "--batch-size", "mini-batch size",
             [](RunConfig& c, int v) { c.train.batch_size = v; });
  f.add<double>(app, "--lr", "learning rate",
                [](RunConfig& c, double v) { c.train.learning_rate = v; });
  f.flag(app, "--no-shuffle", "keep dataset order", [](RunConfig& c) { c.train.shuffle = false; });
}

void add_svm_flags(CLI::App* app, Flags& f) {
  f.add<double>(app, "--C", "SVM cost", [](RunConfig& c, double v) { c.svm.C = v; });
  f.add<double>(app, "--tol", "SVM termination tolerance",
                [](RunConfig& c, double v) { c.svm.tol = v; });
  f.flag(app, "--standardize", "standardize features before the SVM",
         [](RunConfig& c) { c.svm.standardize = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPD-matrix network for skeleton-based hand gesture recognition"};
  app.require_subcommand(1);

  Flags f;
  std::string checkpoint, features, model;
  GradcheckOptions gc;

  auto* train = app.add_subcommand("train", "train the network");
  add_common_flags(train, f);
  add_data_flags(train, f);
  add_network_flags(train, f);
  add_train_flags(train, f);

  auto* extract = app.add_subcommand("extract", "extract features with a checkpoint");
  add_common_flags(extract, f);
  add_data_flags(extract, f);
  extract->add_option("--checkpoint", checkpoint, "network checkpoint (.spdn)")->required();

  auto* svm = app.add_subcommand("svm", "train the linear SVM on a features file");
  add_common_flags(svm, f);
  add_svm_flags(svm, f);
  f.add<int>(svm, "--mode", "label set of the features: 14 or 28",
             [](RunConfig& c, int v) { c.mode = v; });
  f.add<int>(svm, "--classes", "number of classes for synthetic features",
             [](RunConfig& c, int v) {
               c.synthetic = true;
               c.synth_classes = v;
             });
  svm->add_option("--features", features, "training features (.spft)")->required();

  auto* eval = app.add_subcommand("eval", "evaluate an SVM model on a features file");
  add_common_flags(eval, f);
  eval->add_option("--model", model, "SVM model (.spsv)")->required();
  eval->add_option("--features", features, "test features (.spft)")->required();

  auto* pipeline = app.add_subcommand("pipeline", "extract + svm + eval");
  add_common_flags(pipeline, f);
  add_data_flags(pipeline, f);
  add_svm_flags(pipeline, f);
  pipeline->add_option("--checkpoint", checkpoint, "network checkpoint (.spdn)")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer");
  gradcheck->add_option("--seed", gc.seed, "random seed");
  gradcheck->add_option("--layer", gc.layer, "restrict to one layer");
  gradcheck->add_option("--instances", gc.instances, "random instances per layer");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt, "perturb analytic gradients (negative control)")
      ->group("");

  auto* synth = app.add_subcommand("synth", "write synthetic train/test dataset caches");
  add_common_flags(synth, f);
  add_data_flags(synth, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gradcheck->parsed()) return cmd_gradcheck(gc, std::cout) ? kExitOk : kExitNumerical;

    const RunConfig cfg = f.build();
    if (train->parsed()) {
      cmd_train(cfg, std::cout);
    } else if (extract->parsed()) {
      cmd_extract(cfg, checkpoint, std::cout);
    } else if (svm->parsed()) {
      cmd_svm(cfg, features, std::cout);
    } else if (eval->parsed()) {
      cmd_eval(cfg, model, features, std::cout);
    } else if (pipeline->parsed()) {
      cmd_pipeline(cfg, checkpoint, std::cout);
    } else if (synth->parsed()) {
      for (const auto& p : cmd_synth(cfg)) std::cout << "wrote " << p << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

#pragma once

#include <map>
#include <string>

#include "spdnet/classify.hpp"
#include "spdnet/data.hpp"
#include "spdnet/network.hpp"
#include "spdnet/optim.hpp"

namespace spdnet {

// Everything a CLI run needs. Built from a config file, then overridden by
// command-line flags.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  SvmOptions svm;

  std::string dhg_root;     // DHG tree with split lists
  std::string train_data;   // dataset cache files (alternative to dhg_root)
  std::string test_data;
  bool synthetic = false;
  int synth_classes = 4;
  int synth_train_per_class = 50;
  int synth_test_per_class = 25;
  double synth_noise = 0.01;

  int mode = 14;  // 14 or 28 for DHG
  ResampleMode resample = ResampleMode::kInterpolate;
  bool wrist_center = false;
  std::string output_dir = "out";
};

// Flat "key = value" lines grouped under "[section]" headers; '#' and ';'
// start comments. Keys are returned as "section.key".
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& source = "<config>");
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Applies recognised keys to `cfg`. Unknown keys and malformed values throw
/// ConfigError.
void apply_config(const std::map<std::string, std::string>& kv, RunConfig& cfg);

}  // namespace spdnet

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spdnet/classify.hpp"
#include "spdnet/config.hpp"
#include "spdnet/data.hpp"
#include "spdnet/gradcheck.hpp"
#include "spdnet/optim.hpp"

// Workflows behind the command-line subcommands. Each writes its outputs
// into RunConfig::output_dir.
namespace spdnet {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

/// Number of classes of the run: the synthetic class count or the DHG mode.
int run_num_classes(const RunConfig& cfg);

/// Checks that a data source is selected and its paths exist. ConfigError
/// messages name the offending flag.
void validate_data_source(const RunConfig& cfg);

/// Train/test sequences resampled to `sequence_length` frames.
DatasetSplit load_run_data(const RunConfig& cfg, int sequence_length);

/// Writes synthetic train/test dataset caches; returns their paths.
std::vector<std::string> cmd_synth(const RunConfig& cfg);

/// Trains on the run's training split. Writes metrics.csv,
/// checkpoint_epoch20.spdn (when reached) and checkpoint_final.spdn.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);

/// Writes features_train.spft and features_test.spft.
void cmd_extract(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log);

/// Trains the SVM on a features file and writes svm_model.spsv.
SvmModel cmd_svm(const RunConfig& cfg, const std::string& features, std::ostream& log);

/// Evaluates a model on a features file; writes report.csv and
/// confusion.csv and prints the confusion table.
EvalReport cmd_eval(const RunConfig& cfg, const std::string& model, const std::string& features,
                    std::ostream& out);

/// extract + svm + eval.
EvalReport cmd_pipeline(const RunConfig& cfg, const std::string& checkpoint, std::ostream& out);

/// Prints one row per layer; returns true when every row passes.
bool cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out);

}  // namespace spdnet
